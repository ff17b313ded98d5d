"""Smoke tests for the python bindings: the pipelines run end to end and the
artifacts round-trip through the loaders."""

import numpy as np
import pytest

import cyclofem


def tiny_pile():
    s = cyclofem.builtin_scenario("monopile-paper")
    s["time"]["n_tau"] = 11
    s["time"]["scales"] = [3, 2]
    return s


def test_version_and_builtins():
    assert cyclofem.__version__
    names = cyclofem.builtin_scenarios()
    assert "plate-paper" in names and "monopile-paper" in names
    for name in names:
        s = cyclofem.validate_scenario(cyclofem.builtin_scenario(name))
        assert s["format"] == "cyclofem-scenario"


def test_dof_counts_bookkeeping():
    assert cyclofem.dof_counts(1640, 101, [5, 4], 3) == (3280000, 496947)
    assert cyclofem.dof_counts(92, 101, [200, 100], 3) == (184000000, 28776)


def test_bad_scenario_raises_value_error():
    with pytest.raises(ValueError):
        cyclofem.validate_scenario("{}")


def test_compare_trivial_cases():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 7))
    same = cyclofem.compare(a, a)
    assert same["rel_l2"] == 0.0
    assert same["max_pointwise"] == 0.0
    doubled = cyclofem.compare(a, 2.0 * a)
    assert doubled["rel_l2"] == pytest.approx(1.0)


def test_stepped_run_writes_bundle(tmp_path):
    out = tmp_path / "stepped"
    rep = cyclofem.run(tiny_pile(), out_dir=str(out), seed=3)
    assert rep["complete"] is True
    assert rep["solver"] == "incremental"
    assert rep["space_dofs"] == 92
    h = cyclofem.load_history(str(out / "history.cyfhist"))
    assert h["u"].shape == (92, rep["steps"])
    assert h["dissipation"][-1] >= 0.0
    fp = cyclofem.config_fingerprint((out / "config.json").read_text())
    assert fp == rep["config_hash"]


def test_separated_run_matches_its_oracle(tmp_path):
    out = tmp_path / "separated"
    rep = cyclofem.run(tiny_pile(), out_dir=str(out), solver="pgd", modes=2, seed=3)
    assert rep["complete"] is True
    assert rep["modes_built"] >= 1
    assert len(rep["zetas"]) == rep["modes_built"]
    assert rep["comparison"]["rel_l2"] <= 0.05

    u = cyclofem.reconstruct(str(out / "decomposition.cyfdec"))
    oracle = cyclofem.load_history(str(out / "oracle.cyfhist"))
    assert u.shape == oracle["u"].shape
    again = cyclofem.compare(oracle["u"], u, n_tau=11)
    assert again["rel_l2"] == pytest.approx(rep["comparison"]["rel_l2"], rel=1e-12)
    assert len(again["cycle_rel_l2"]) == 6

    dec = cyclofem.load_decomposition(str(out / "decomposition.cyfdec"))
    assert dec["n_tau"] == 11 and dec["scales"] == [3, 2]
    zetas = [m["zeta"] for m in dec["modes"]]
    assert zetas == pytest.approx(rep["zetas"])
    assert dec["modes"][0]["phi"].shape == (92, 11)
    jumps = cyclofem.cycle_boundary_jumps(str(out / "decomposition.cyfdec"))
    assert len(jumps) == 5
    assert all(j >= 0.0 for j in jumps)
