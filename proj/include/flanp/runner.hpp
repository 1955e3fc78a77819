#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flanp/data.hpp"
#include "flanp/hetero.hpp"
#include "flanp/simclock.hpp"
#include "flanp/solvers.hpp"

namespace flanp {

struct StageSchedule {
  std::vector<int> sizes;  // n0, min(2n0,N), ..., N
};

enum class StopMode { criterion, fixed_rounds };
enum class SolverKind { fedgate, fedavg, fednova };

struct RunConfig {
  const Dataset* dataset = nullptr;
  const Fleet* fleet = nullptr;
  LossSpec loss;
  AccuracyBudget budget;
  int n0 = 1;
  StopMode mode = StopMode::criterion;
  SolverKind solver = SolverKind::fedgate;
  double comm_cost = 0.0;
  int max_rounds_per_stage = 100000;
  std::uint64_t seed = 0;
  int batch_size = 0;  // 0 = full local pass
  bool charge_criterion_check = false;  // bill the gradient upload as one local update
  bool record_subopt = true;            // per-stage optimum oracle in the trace
  std::optional<double> eta_override;   // escape hatch when theorem stepsizes are impractical
  std::optional<double> gamma_override;
  std::optional<std::vector<int>> local_taus;  // fednova only; defaults to tau_n everywhere
  Vector w0;  // empty = zeros

  void validate() const;
};

struct RoundRecord {
  int stage_n = 0;
  int round = 0;  // 1-based within the stage
  double sim_time = 0.0;
  double grad_norm_sq = 0.0;
  double subopt = std::numeric_limits<double>::quiet_NaN();
  int participants = 0;
};

struct Trace {
  std::vector<RoundRecord> records;
  Vector final_model;
  ClockLedger ledger;
  std::vector<int> stage_sizes;

  double total_time() const { return ledger.total; }
};

struct StageCapError : std::runtime_error {
  Trace partial;
  StageCapError(std::string msg, Trace t)
      : std::runtime_error(std::move(msg)), partial(std::move(t)) {}
};

// 2 mu c / (n s): the gradient-norm stopping level for n participants.
double accuracy_threshold(int n, int s, const AccuracyBudget& budget, double mu);

StageSchedule schedule(int n0, int n_total);

// The adaptive-participation meta-algorithm: doubling stages over the
// fastest clients, warm-started, each stage run to its gradient criterion
// (or for exactly R_n rounds in fixed_rounds mode).
Trace run_flanp(const RunConfig& config);

// All N nodes from the start, benchmark parameters.
Trace run_full_participation(const RunConfig& config, SolverKind solver);

enum class PartialPick { random, fastest };

// k participants per round; criterion evaluated at n = k.
Trace run_partial(const RunConfig& config, int k, PartialPick pick);

// Threshold-halving variant: stage exit at ||grad||^2 <= theta, theta halved
// at every doubling; needs no mu/c knowledge.
Trace run_heuristic(const RunConfig& config, double theta0);

struct WarmStartBounds {
  double subopt = 0.0;
  double global_grad = 0.0;
  double local_grad = 0.0;
};

// High-probability warm-start bounds for a model carried from m to n nodes.
WarmStartBounds warm_start_bounds(int n, int m, int s,
                                  const AccuracyBudget& budget, double mu);

// Calibration helper: c such that V_{ns} matches a measured suboptimality.
inline double calibrate_c(double measured_subopt, int n, int s) {
  return measured_subopt * static_cast<double>(n) * static_cast<double>(s);
}

}  // namespace flanp
