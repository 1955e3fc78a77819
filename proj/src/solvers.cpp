#include "flanp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flanp {

namespace {

void check_round_inputs(const SolverState& state,
                        const std::vector<Shard>& participants, bool need_delta) {
  if (participants.empty()) throw std::invalid_argument("no participants");
  if (need_delta && state.delta.size() != participants.size())
    throw std::invalid_argument("tracking vectors do not match participants: " +
                                std::to_string(state.delta.size()) + " vs " +
                                std::to_string(participants.size()));
}

void guard_finite(const Vector& w, long round) {
  if (!w.allFinite())
    throw DivergenceError("non-finite iterate at round " + std::to_string(round) +
                          ": step too large");
}

Vector local_grad(const LossSpec& spec, const Vector& w, const Shard& shard,
                  const SolverParams& params, Rng& rng) {
  if (params.batch_size == 0) return shard_gradient(spec, w, shard);
  return stochastic_gradient(spec, w, shard, params.batch_size, rng);
}

}  // namespace

SolverState make_state(const Vector& w0, int participants) {
  SolverState st;
  st.w = w0;
  st.delta.assign(participants, Vector::Zero(w0.size()));
  return st;
}

SolverState fedgate_round(const SolverState& state,
                          const std::vector<Shard>& participants,
                          const SolverParams& params, const LossSpec& spec,
                          Rng& rng) {
  check_round_inputs(state, participants, true);
  const std::size_t n = participants.size();
  const int d = static_cast<int>(state.w.size());

  // per-node child streams so the result is independent of execution order
  std::vector<std::uint64_t> child(n);
  for (std::size_t i = 0; i < n; ++i) child[i] = rng();

  std::vector<Vector> uploads(n, Vector::Zero(d));
  for (std::size_t i = 0; i < n; ++i) {
    Rng node_rng = make_rng(child[i]);
    Vector w_local = state.w;
    for (int c = 0; c < params.tau; ++c) {
      Vector dir = local_grad(spec, w_local, participants[i], params, node_rng) - state.delta[i];
      w_local -= params.eta * dir;
    }
    guard_finite(w_local, state.round);
    uploads[i] = (state.w - w_local) / params.eta;
  }

  Vector mean_upload = Vector::Zero(d);
  for (const Vector& u : uploads) mean_upload += u;
  mean_upload /= static_cast<double>(n);

  SolverState next;
  next.w = state.w - params.eta * params.gamma * mean_upload;
  guard_finite(next.w, state.round);
  next.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    next.delta[i] = state.delta[i] + (uploads[i] - mean_upload) / static_cast<double>(params.tau);
  next.round = state.round + 1;
  return next;
}

SolverState fedavg_round(const SolverState& state,
                         const std::vector<Shard>& participants,
                         const SolverParams& params, const LossSpec& spec,
                         Rng& rng) {
  check_round_inputs(state, participants, false);
  const std::size_t n = participants.size();
  const int d = static_cast<int>(state.w.size());

  std::vector<std::uint64_t> child(n);
  for (std::size_t i = 0; i < n; ++i) child[i] = rng();

  Vector mean_local = Vector::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    Rng node_rng = make_rng(child[i]);
    Vector w_local = state.w;
    for (int c = 0; c < params.tau; ++c)
      w_local -= params.eta * local_grad(spec, w_local, participants[i], params, node_rng);
    guard_finite(w_local, state.round);
    mean_local += w_local;
  }

  SolverState next;
  next.w = mean_local / static_cast<double>(n);
  next.delta = state.delta;
  next.round = state.round + 1;
  return next;
}

SolverState fednova_round(const SolverState& state,
                          const std::vector<Shard>& participants,
                          const std::vector<int>& local_taus,
                          const SolverParams& params, const LossSpec& spec,
                          Rng& rng) {
  check_round_inputs(state, participants, false);
  if (local_taus.size() != participants.size())
    throw std::invalid_argument("local_taus size does not match participants");
  for (int t : local_taus)
    if (t < 1) throw std::invalid_argument("local tau must be >= 1");
  const std::size_t n = participants.size();
  const int d = static_cast<int>(state.w.size());

  std::vector<std::uint64_t> child(n);
  for (std::size_t i = 0; i < n; ++i) child[i] = rng();

  Vector mean_dir = Vector::Zero(d);  // (1/n) sum Delta_i / (eta tau_i)
  double tau_eff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng node_rng = make_rng(child[i]);
    Vector w_local = state.w;
    for (int c = 0; c < local_taus[i]; ++c)
      w_local -= params.eta * local_grad(spec, w_local, participants[i], params, node_rng);
    guard_finite(w_local, state.round);
    mean_dir += (state.w - w_local) / (params.eta * static_cast<double>(local_taus[i]));
    tau_eff += static_cast<double>(local_taus[i]);
  }
  mean_dir /= static_cast<double>(n);
  tau_eff /= static_cast<double>(n);

  SolverState next;
  next.w = state.w - params.eta * tau_eff * mean_dir;
  guard_finite(next.w, state.round);
  next.delta = state.delta;
  next.round = state.round + 1;
  return next;
}

SolverParams theorem1_params(int n, int s, const CurvatureConstants& curv,
                             const AccuracyBudget& budget) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(budget.c > 0)) throw std::invalid_argument("accuracy constant c must be > 0");
  if (!(curv.mu > 0)) throw std::invalid_argument("mu must be > 0");

  const double kappa = curv.kappa;
  const double lip = curv.lip;
  const double mu = curv.mu;
  const double rn = std::sqrt(static_cast<double>(n));

  const double a1 = 1.0 / (12.0 * std::sqrt(3.0) * kappa * std::sqrt(kappa * lip));
  const double a2 = rn / (12.0 * std::sqrt(2.0 * (3.0 * kappa * kappa + 2.0) *
                                           (2.0 * mu + 1.0) * kappa * lip));
  const double a3 = std::cbrt(rn / (96.0 * kappa * kappa * lip * lip));
  const double a4 = rn / std::sqrt(15.0 * budget.c * kappa * lip);
  const double a5 = rn / (lip * std::sqrt(30.0));

  SolverParams p;
  p.alpha = std::min({a1, a2, a3, a4, a5});
  p.tau = std::max(1, static_cast<int>(std::ceil(1.5 * s * budget.sigma2 / budget.c)));
  p.rounds = static_cast<int>(std::ceil(12.0 * kappa * std::log(6.0)));
  p.eta = p.alpha / (p.tau * rn);
  p.gamma = rn / (2.0 * p.alpha * lip);
  return p;
}

SolverParams benchmark_params(int n_total, int s, const CurvatureConstants& curv,
                              const AccuracyBudget& budget,
                              const BenchmarkInit& init) {
  if (!(budget.c > 0)) throw std::invalid_argument("accuracy constant c must be > 0");
  if (!(init.delta0 > 0)) throw std::invalid_argument("delta0 must be > 0");
  const double kappa = curv.kappa;
  const double lip = curv.lip;
  const double ns = static_cast<double>(n_total) * static_cast<double>(s);
  const double log_arg = 5.0 * init.delta0 * ns / budget.c;
  if (log_arg <= 1.0)
    throw std::invalid_argument("c too large for delta0*N*s: log argument <= 1");
  const double rns = std::sqrt(ns);

  double alpha = std::min({std::cbrt(rns / (96.0 * kappa * kappa * lip * lip)),
                           rns / std::sqrt(15.0 * kappa * lip),
                           rns / (lip * std::sqrt(30.0))});
  if (init.delta0_prime > 0) {
    alpha = std::min(alpha, std::sqrt(budget.c) /
                                (2.0 * std::sqrt(30.0) *
                                 std::sqrt(kappa * (kappa * kappa + 1.0) * lip *
                                           init.delta0_prime)));
  }

  SolverParams p;
  p.alpha = alpha;
  p.tau = std::max(1, static_cast<int>(std::ceil(1.25 * budget.sigma2 * s / budget.c)));
  p.rounds = std::max(1, static_cast<int>(std::ceil(6.0 * kappa * std::log(log_arg))));
  p.eta = p.alpha / (p.tau * rns);
  p.gamma = rns / (2.0 * p.alpha * lip);
  return p;
}

double estimate_sigma2(const LossSpec& spec, const Shard& shard, const Vector& w,
                       int batch_size, int trials, Rng& rng) {
  if (trials < 2) throw std::invalid_argument("trials must be >= 2");
  const Vector exact = shard_gradient(spec, w, shard);
  if (batch_size == 0) return 0.0;  // full-pass deterministic mode
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vector g = stochastic_gradient(spec, w, shard, batch_size, rng);
    acc += (g - exact).squaredNorm();
  }
  return acc / (static_cast<double>(trials) * static_cast<double>(w.size()));
}

}  // namespace flanp
