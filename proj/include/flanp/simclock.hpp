#pragma once

#include <cstdint>
#include <vector>

#include "flanp/rng.hpp"

namespace flanp {

// Memoized harmonic numbers H_1..H_n.
class HarmonicTable {
 public:
  double h(int n) const;

 private:
  mutable std::vector<double> memo_;  // memo_[k] = H_{k+1}
};

struct StageTime {
  int stage_n = 0;
  int rounds = 0;
  double time = 0.0;
};

// Per-stage accounting; stage time is rounds * round_cost so fixed-R traces
// match the closed-form sum bit for bit.
struct ClockLedger {
  std::vector<StageTime> stages;
  double total = 0.0;

  void add_stage(int stage_n, int rounds, double round_cost) {
    double t = static_cast<double>(rounds) * round_cost;
    stages.push_back({stage_n, rounds, t});
    total += t;
  }
};

// tau * max(participant times) + comm_cost
double round_duration(const std::vector<double>& participant_times, double tau,
                      double comm_cost);

// Doubling index set over sorted times: n0, 2n0, ..., N (clamped).
std::vector<int> doubling_indices(int n0, int n_total);

// R * tau * (T_{n0} + T_{2n0} + ... + T_N); requires sorted ascending input.
double expected_time_flanp(const std::vector<double>& sorted_times, int n0,
                           double rounds, double tau);

// 18 ln(6) c^-1 kappa s sigma^2 * (T_{n0} + ... + T_N)
double expected_time_flanp_closed(const std::vector<double>& sorted_times, int n0,
                                  double kappa, double s, double sigma2, double c);

// 7.5 c^-1 kappa s sigma^2 ln(5 c^-1 delta0 N s) T_N
double expected_time_fedgate(double t_slowest, double kappa, double s,
                             double sigma2, double c, double delta0, double n_total);

// E[T_(i)] = H_N - H_{N-i} for N i.i.d. exp(1) draws.
double order_stat_mean(int n_total, int i);

// (E[T_(n0)] + E[T_(2 n0)] + ... + E[T_(N)]) / E[T_(N)]
double doubling_ratio(int n_total, int n0);

// Empirical per-rank means of sorted exp(rate) fleets; oracle for the
// analytic identities above.
std::vector<double> monte_carlo_order_stats(int n_total, double rate, int trials,
                                            std::uint64_t seed);

}  // namespace flanp
