"""Cyclic elastoplasticity: stepped reference and separated space-time solvers.

The heavy lifting lives in the compiled extension ``cyclofem._core``; this
package decodes its JSON results into plain dicts.
"""

import json

from ._core import (
    __version__,
    builtin_scenario_json,
    builtin_scenarios,
    compare_json,
    config_fingerprint,
    cycle_boundary_jumps,
    dof_counts,
    load_decomposition,
    load_history,
    reconstruct,
    run_json,
    validate_scenario_json,
)

__all__ = [
    "__version__",
    "builtin_scenario",
    "builtin_scenario_json",
    "builtin_scenarios",
    "compare",
    "compare_json",
    "config_fingerprint",
    "cycle_boundary_jumps",
    "dof_counts",
    "load_decomposition",
    "load_history",
    "reconstruct",
    "run",
    "run_json",
    "validate_scenario",
    "validate_scenario_json",
]


def builtin_scenario(name):
    """Return a built-in scenario as a dict."""
    return json.loads(builtin_scenario_json(name))


def validate_scenario(scenario):
    """Validate a scenario (dict or JSON text) and return its canonical dict."""
    text = scenario if isinstance(scenario, str) else json.dumps(scenario)
    return json.loads(validate_scenario_json(text))


def run(scenario, out_dir="out", **kwargs):
    """Run a scenario (dict or JSON text); return the report as a dict.

    Keyword arguments mirror the CLI flags: solver, modes, cycles, scales,
    seed, threads, with_oracle, snapshot_every.
    """
    text = scenario if isinstance(scenario, str) else json.dumps(scenario)
    return json.loads(run_json(text, out_dir=out_dir, **kwargs))


def compare(reference, other, n_tau=0, dofs=()):
    """Error metrics between two displacement histories, as a dict."""
    return json.loads(compare_json(reference, other, n_tau=n_tau, dofs=list(dofs)))
