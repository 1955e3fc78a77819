#pragma once

#include <stdexcept>
#include <vector>

#include "flanp/losses.hpp"

namespace flanp {

struct SolverState {
  Vector w;
  std::vector<Vector> delta;  // gradient-tracking vector per participant
  long round = 0;
};

struct SolverParams {
  double eta = 0.0;    // local stepsize
  double gamma = 0.0;  // server stepsize
  double alpha = 0.0;
  int tau = 1;         // local updates per round
  int rounds = 1;      // R
  int batch_size = 0;  // 0 = full local pass (deterministic gradients)
};

struct AccuracyBudget {
  double c = 1.0;       // V_ns = c/(ns)
  double sigma2 = 0.0;  // gradient-noise variance bound
};

struct BenchmarkInit {
  double delta0 = 0.0;        // L_N(w0) - L_N(w*_N)
  double delta0_prime = 0.0;  // (1/N) sum_i ||grad L^i(w0)||^2
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SolverState make_state(const Vector& w0, int participants);

// One FedGATE round: tau corrected local steps per node, normalized
// displacement upload, server step eta*gamma, tracking-variable update.
SolverState fedgate_round(const SolverState& state,
                          const std::vector<Shard>& participants,
                          const SolverParams& params, const LossSpec& spec,
                          Rng& rng);

SolverState fedavg_round(const SolverState& state,
                         const std::vector<Shard>& participants,
                         const SolverParams& params, const LossSpec& spec,
                         Rng& rng);

// Normalized aggregation for heterogeneous local update counts.
SolverState fednova_round(const SolverState& state,
                          const std::vector<Shard>& participants,
                          const std::vector<int>& local_taus,
                          const SolverParams& params, const LossSpec& spec,
                          Rng& rng);

// Stage parameters for n participants: alpha is the min of the five
// feasibility terms; 2*eta*gamma*tau*lip = 1 holds by construction.
SolverParams theorem1_params(int n, int s, const CurvatureConstants& curv,
                             const AccuracyBudget& budget);

// Full-participation benchmark parameters (tau = ceil(1.25 sigma2 s / c),
// R = ceil(6 kappa ln(5 delta0 N s / c))).
SolverParams benchmark_params(int n_total, int s, const CurvatureConstants& curv,
                              const AccuracyBudget& budget,
                              const BenchmarkInit& init);

// Empirical stand-in for the sigma^2 bound: per-coordinate variance of the
// mini-batch gradient around the exact shard gradient.
double estimate_sigma2(const LossSpec& spec, const Shard& shard, const Vector& w,
                       int batch_size, int trials, Rng& rng);

}  // namespace flanp
