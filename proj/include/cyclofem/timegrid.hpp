#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cyclofem {

// Tensorized time discretization: one intra-cycle grid of n_tau nodes on
// [0, T] plus S cycle-counting scales of sizes N_1..N_S. Adjacent cycles
// share their boundary instant: the last node of one cycle and the first
// node of the next map to the same global step.
struct TimeGrid {
  int n_tau = 0;             // intra-cycle nodes, >= 2
  double period = 1.0;       // cycle duration T
  std::vector<int> scales;   // N_1..N_S, each >= 1
  std::vector<double> tau;   // node times, tau[0] = 0, tau[n_tau-1] = T
  std::vector<double> w;     // trapezoidal weights, all > 0, sum = T

  static TimeGrid uniform(int n_tau, double period, std::vector<int> scales);

  int scale_count() const { return static_cast<int>(scales.size()); }
  long long cycles() const;            // prod N_j
  long long steps() const;             // (n_tau - 1) * cycles() + 1
  void validate() const;
};

// Global step index of intra-cycle node h (1-based) in cycle multi-index n
// (1-based per scale): (n_tau - 1) * sum_j (n_j - 1) prod_{i<j} N_i + h.
long long time_index(const TimeGrid& g, int h, const std::vector<int>& n);

// Physical time of the same node.
double time_of(const TimeGrid& g, int h, const std::vector<int>& n);

// 0-based flat cycle number of a multi-index: sum_j (n_j - 1) prod_{i<j} N_i.
long long cycle_of(const TimeGrid& g, const std::vector<int>& n);

// Canonical preimage of a global step. Cycle-boundary steps are owned by the
// following cycle's first node; the final global step keeps h = n_tau.
std::pair<int, std::vector<int>> time_index_inverse(const TimeGrid& g, long long step);

struct DofCounts {
  long long incremental = 0;
  long long separated = 0;
};

// Unknown counts of the two solution paths for a spatial problem with n_dof
// free unknowns: full incremental stepping vs. the separated representation
// with `modes` modes.
DofCounts dof_counts(long long n_dof, int n_tau, const std::vector<int>& scales, int modes);

}  // namespace cyclofem
