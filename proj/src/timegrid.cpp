#include "cyclofem/timegrid.hpp"

#include <sstream>
#include <stdexcept>

namespace cyclofem {

TimeGrid TimeGrid::uniform(int n_tau, double period, std::vector<int> scales) {
  TimeGrid g;
  g.n_tau = n_tau;
  g.period = period;
  g.scales = std::move(scales);
  if (n_tau < 2) throw std::invalid_argument("time grid: n_tau must be >= 2");
  const double dt = period / (n_tau - 1);
  g.tau.resize(static_cast<std::size_t>(n_tau));
  g.w.resize(static_cast<std::size_t>(n_tau));
  for (int h = 0; h < n_tau; ++h) {
    g.tau[static_cast<std::size_t>(h)] = h * dt;
    g.w[static_cast<std::size_t>(h)] = (h == 0 || h == n_tau - 1) ? 0.5 * dt : dt;
  }
  g.tau.back() = period;
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (n_tau < 2) throw std::invalid_argument("time grid: n_tau must be >= 2");
  if (!(period > 0.0)) throw std::invalid_argument("time grid: period must be > 0");
  if (scales.empty()) throw std::invalid_argument("time grid: at least one scale required");
  for (int N : scales)
    if (N < 1) throw std::invalid_argument("time grid: scale sizes must be >= 1");
  if (tau.size() != static_cast<std::size_t>(n_tau) ||
      w.size() != static_cast<std::size_t>(n_tau))
    throw std::invalid_argument("time grid: node/weight arrays inconsistent with n_tau");
  if (tau.front() != 0.0 || tau.back() != period)
    throw std::invalid_argument("time grid: tau must span [0, period]");
  double sum = 0.0;
  for (double wh : w) {
    if (!(wh > 0.0)) throw std::invalid_argument("time grid: weights must be positive");
    sum += wh;
  }
  if (std::abs(sum - period) > 1e-12 * period)
    throw std::invalid_argument("time grid: weights must sum to the period");
}

long long TimeGrid::cycles() const {
  long long c = 1;
  for (int N : scales) c *= N;
  return c;
}

long long TimeGrid::steps() const {
  return static_cast<long long>(n_tau - 1) * cycles() + 1;
}

long long cycle_of(const TimeGrid& g, const std::vector<int>& n) {
  if (n.size() != g.scales.size())
    throw std::invalid_argument("time index: multi-index size mismatch");
  long long L = 0;
  long long stride = 1;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] < 1 || n[j] > g.scales[j]) {
      std::ostringstream msg;
      msg << "time index: n_" << (j + 1) << " = " << n[j] << " outside [1, "
          << g.scales[j] << "]";
      throw std::out_of_range(msg.str());
    }
    L += static_cast<long long>(n[j] - 1) * stride;
    stride *= g.scales[j];
  }
  return L;
}

long long time_index(const TimeGrid& g, int h, const std::vector<int>& n) {
  if (h < 1 || h > g.n_tau)
    throw std::out_of_range("time index: h outside [1, n_tau]");
  return static_cast<long long>(g.n_tau - 1) * cycle_of(g, n) + h;
}

double time_of(const TimeGrid& g, int h, const std::vector<int>& n) {
  if (h < 1 || h > g.n_tau)
    throw std::out_of_range("time index: h outside [1, n_tau]");
  return g.period * static_cast<double>(cycle_of(g, n)) +
         g.tau[static_cast<std::size_t>(h - 1)];
}

std::pair<int, std::vector<int>> time_index_inverse(const TimeGrid& g, long long step) {
  if (step < 1 || step > g.steps())
    throw std::out_of_range("time index: step outside [1, steps]");
  long long L;
  int h;
  if (step == g.steps()) {  // final step keeps the last node of the last cycle
    L = g.cycles() - 1;
    h = g.n_tau;
  } else {
    L = (step - 1) / (g.n_tau - 1);
    h = static_cast<int>((step - 1) % (g.n_tau - 1)) + 1;
  }
  std::vector<int> n(g.scales.size());
  for (std::size_t j = 0; j < n.size(); ++j) {
    n[j] = static_cast<int>(L % g.scales[j]) + 1;
    L /= g.scales[j];
  }
  return {h, n};
}

DofCounts dof_counts(long long n_dof, int n_tau, const std::vector<int>& scales, int modes) {
  if (n_dof < 1 || n_tau < 2 || modes < 1)
    throw std::invalid_argument("dof counts: invalid arguments");
  long long prod = 1, sum = 0;
  for (int N : scales) {
    if (N < 1) throw std::invalid_argument("dof counts: scale sizes must be >= 1");
    prod *= N;
    sum += N;
  }
  DofCounts d;
  d.incremental = n_dof * static_cast<long long>(n_tau - 1) * prod;
  d.separated = static_cast<long long>(modes) * n_dof * n_tau +
                static_cast<long long>(modes) * sum;
  return d;
}

}  // namespace cyclofem
