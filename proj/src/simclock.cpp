#include "flanp/simclock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flanp {

double HarmonicTable::h(int n) const {
  if (n < 0) throw std::invalid_argument("harmonic index must be >= 0");
  if (n == 0) return 0.0;
  while (static_cast<int>(memo_.size()) < n) {
    double prev = memo_.empty() ? 0.0 : memo_.back();
    memo_.push_back(prev + 1.0 / static_cast<double>(memo_.size() + 1));
  }
  return memo_[n - 1];
}

double round_duration(const std::vector<double>& participant_times, double tau,
                      double comm_cost) {
  if (participant_times.empty()) throw std::invalid_argument("no participants");
  double slowest = *std::max_element(participant_times.begin(), participant_times.end());
  return tau * slowest + comm_cost;
}

std::vector<int> doubling_indices(int n0, int n_total) {
  if (n0 < 1 || n0 > n_total) throw std::invalid_argument("n0 must be in [1, N]");
  std::vector<int> idx;
  int n = n0;
  while (true) {
    idx.push_back(n);
    if (n == n_total) break;
    n = std::min(2 * n, n_total);
  }
  return idx;
}

namespace {
void check_sorted(const std::vector<double>& times) {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] < times[i - 1]) throw std::invalid_argument("times must be sorted ascending");
}
}  // namespace

double expected_time_flanp(const std::vector<double>& sorted_times, int n0,
                           double rounds, double tau) {
  check_sorted(sorted_times);
  double acc = 0.0;
  // term shape matches the per-stage ledger (rounds * (tau * T + comm)) so
  // fixed-R traces with comm_cost = 0 agree exactly
  for (int i : doubling_indices(n0, static_cast<int>(sorted_times.size())))
    acc += rounds * (tau * sorted_times[i - 1] + 0.0);
  return acc;
}

double expected_time_flanp_closed(const std::vector<double>& sorted_times, int n0,
                                  double kappa, double s, double sigma2, double c) {
  check_sorted(sorted_times);
  if (!(c > 0)) throw std::invalid_argument("c must be > 0");
  double sum = 0.0;
  for (int i : doubling_indices(n0, static_cast<int>(sorted_times.size())))
    sum += sorted_times[i - 1];
  return 18.0 * std::log(6.0) * kappa * s * sigma2 / c * sum;
}

double expected_time_fedgate(double t_slowest, double kappa, double s,
                             double sigma2, double c, double delta0, double n_total) {
  if (!(c > 0)) throw std::invalid_argument("c must be > 0");
  const double log_arg = 5.0 * delta0 * n_total * s / c;
  if (log_arg <= 1.0)
    throw std::invalid_argument("log argument <= 1: c too large for delta0*N*s");
  return 7.5 * kappa * s * sigma2 / c * std::log(log_arg) * t_slowest;
}

double order_stat_mean(int n_total, int i) {
  if (i < 1 || i > n_total)
    throw std::invalid_argument("order statistic rank " + std::to_string(i) +
                                " out of range [1, " + std::to_string(n_total) + "]");
  static thread_local HarmonicTable table;
  return table.h(n_total) - table.h(n_total - i);
}

double doubling_ratio(int n_total, int n0) {
  double num = 0.0;
  for (int i : doubling_indices(n0, n_total)) num += order_stat_mean(n_total, i);
  return num / order_stat_mean(n_total, n_total);
}

std::vector<double> monte_carlo_order_stats(int n_total, double rate, int trials,
                                            std::uint64_t seed) {
  if (n_total < 1) throw std::invalid_argument("N must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(rate > 0)) throw std::invalid_argument("rate must be > 0");
  std::vector<double> means(n_total, 0.0);
  std::vector<double> draw(n_total);
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::exponential_distribution<double> dist(rate);
    for (double& v : draw) v = dist(rng);
    std::sort(draw.begin(), draw.end());
    for (int i = 0; i < n_total; ++i) means[i] += draw[i];
  }
  for (double& m : means) m /= static_cast<double>(trials);
  return means;
}

}  // namespace flanp
