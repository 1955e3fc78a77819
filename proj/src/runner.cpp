#include "flanp/runner.hpp"

#include <algorithm>
#include <cmath>

namespace flanp {

namespace {

std::vector<Shard> prefix_shards(const Dataset& ds, const Fleet& fleet, int n) {
  std::vector<Shard> out;
  out.reserve(n);
  for (int r = 0; r < n; ++r)
    out.push_back(ds.shards[fleet.profiles[r].node_id - 1]);
  return out;
}

std::vector<double> prefix_times(const Fleet& fleet, int n) {
  std::vector<double> out(n);
  for (int r = 0; r < n; ++r) out[r] = fleet.profiles[r].unit_time;
  return out;
}

SolverState dispatch_round(const RunConfig& cfg, SolverKind solver,
                           const SolverState& state,
                           const std::vector<Shard>& active,
                           const SolverParams& params, Rng& rng) {
  switch (solver) {
    case SolverKind::fedgate:
      return fedgate_round(state, active, params, cfg.loss, rng);
    case SolverKind::fedavg:
      return fedavg_round(state, active, params, cfg.loss, rng);
    case SolverKind::fednova: {
      std::vector<int> taus;
      if (cfg.local_taus && cfg.local_taus->size() == active.size())
        taus = *cfg.local_taus;
      else
        taus.assign(active.size(), params.tau);
      return fednova_round(state, active, taus, params, cfg.loss, rng);
    }
  }
  throw std::logic_error("unknown solver kind");
}

void apply_overrides(const RunConfig& cfg, SolverParams& params) {
  if (cfg.eta_override) params.eta = *cfg.eta_override;
  if (cfg.gamma_override) params.gamma = *cfg.gamma_override;
}

// Runs one stage of a run with a fixed participant set. Returns rounds used.
// threshold == nullopt means fixed-R mode (params.rounds rounds exactly).
int run_stage(const RunConfig& cfg, SolverKind solver,
              const std::vector<Shard>& active, const std::vector<double>& times,
              int stage_label, const SolverParams& params,
              std::optional<double> threshold, SolverState& state, Trace& trace,
              Rng& rng) {
  double round_cost =
      round_duration(times, static_cast<double>(params.tau), cfg.comm_cost);
  if (cfg.charge_criterion_check)
    round_cost += *std::max_element(times.begin(), times.end());

  double opt_risk = 0.0;
  if (cfg.record_subopt)
    opt_risk = empirical_risk(cfg.loss, optimum(cfg.loss, active).w, active);

  const double stage_base = trace.ledger.total;
  state = make_state(state.w, static_cast<int>(active.size()));  // reset tracking

  int rounds = 0;
  Vector grad = empirical_gradient(cfg.loss, state.w, active);
  while (true) {
    if (threshold) {
      if (grad.squaredNorm() <= *threshold) break;
      if (rounds >= cfg.max_rounds_per_stage) {
        Trace partial = trace;
        partial.final_model = state.w;
        partial.ledger.add_stage(stage_label, rounds, round_cost);
        throw StageCapError("stage with " + std::to_string(stage_label) +
                                " participants exceeded max_rounds_per_stage (" +
                                std::to_string(cfg.max_rounds_per_stage) + ")",
                            std::move(partial));
      }
    } else if (rounds >= params.rounds) {
      break;
    }
    state = dispatch_round(cfg, solver, state, active, params, rng);
    ++rounds;
    grad = empirical_gradient(cfg.loss, state.w, active);

    RoundRecord rec;
    rec.stage_n = stage_label;
    rec.round = rounds;
    rec.sim_time = stage_base + static_cast<double>(rounds) * round_cost;
    rec.grad_norm_sq = grad.squaredNorm();
    if (cfg.record_subopt)
      rec.subopt = empirical_risk(cfg.loss, state.w, active) - opt_risk;
    rec.participants = static_cast<int>(active.size());
    trace.records.push_back(rec);
  }
  trace.ledger.add_stage(stage_label, rounds, round_cost);
  return rounds;
}

Vector initial_model(const RunConfig& cfg) {
  if (cfg.w0.size() > 0) return cfg.w0;
  const int d = static_cast<int>(cfg.dataset->shards.front().samples.front().x.size());
  return Vector::Zero(d);
}

}  // namespace

void RunConfig::validate() const {
  if (dataset == nullptr || fleet == nullptr)
    throw std::invalid_argument("config needs dataset and fleet");
  if (dataset->shards.empty()) throw std::invalid_argument("dataset has no shards");
  const int n_total = static_cast<int>(dataset->shards.size());
  if (fleet->size() != n_total)
    throw std::invalid_argument("fleet size does not match dataset node count");
  if (n0 < 1) throw std::invalid_argument("n0 must be >= 1");
  if (n0 > n_total) throw std::invalid_argument("n0 exceeds N");
  if (max_rounds_per_stage < 1)
    throw std::invalid_argument("max_rounds_per_stage must be >= 1");
  if (comm_cost < 0) throw std::invalid_argument("comm_cost must be nonnegative");
  loss.validate();
  if (!(budget.c > 0)) throw std::invalid_argument("budget.c must be > 0");
  if (budget.sigma2 < 0) throw std::invalid_argument("budget.sigma2 must be >= 0");
}

double accuracy_threshold(int n, int s, const AccuracyBudget& budget, double mu) {
  if (n < 1 || s < 1) throw std::invalid_argument("n and s must be >= 1");
  if (!(budget.c > 0)) throw std::invalid_argument("budget.c must be > 0");
  return 2.0 * mu * budget.c / (static_cast<double>(n) * static_cast<double>(s));
}

StageSchedule schedule(int n0, int n_total) {
  return StageSchedule{doubling_indices(n0, n_total)};
}

Trace run_flanp(const RunConfig& cfg) {
  cfg.validate();
  const int n_total = static_cast<int>(cfg.dataset->shards.size());
  const int s = static_cast<int>(cfg.dataset->shards.front().samples.size());
  const CurvatureConstants curv = curvature(cfg.loss, cfg.dataset->shards);
  Rng rng = make_rng(cfg.seed);

  Trace trace;
  trace.stage_sizes = schedule(cfg.n0, n_total).sizes;
  SolverState state = make_state(initial_model(cfg), cfg.n0);

  for (int n : trace.stage_sizes) {
    std::vector<Shard> active = prefix_shards(*cfg.dataset, *cfg.fleet, n);
    std::vector<double> times = prefix_times(*cfg.fleet, n);
    SolverParams params = theorem1_params(n, s, curv, cfg.budget);
    params.batch_size = cfg.batch_size;
    apply_overrides(cfg, params);
    std::optional<double> threshold;
    if (cfg.mode == StopMode::criterion) {
      // the exit rule must use the active risk's own convexity modulus so
      // that firing implies statistical accuracy on that risk
      double stage_mu = (n == n_total) ? curv.mu : curvature(cfg.loss, active).mu;
      threshold = accuracy_threshold(n, s, cfg.budget, stage_mu);
    }
    run_stage(cfg, cfg.solver, active, times, n, params, threshold, state, trace, rng);
  }
  trace.final_model = state.w;
  return trace;
}

Trace run_full_participation(const RunConfig& cfg, SolverKind solver) {
  cfg.validate();
  const int n_total = static_cast<int>(cfg.dataset->shards.size());
  const int s = static_cast<int>(cfg.dataset->shards.front().samples.size());
  const CurvatureConstants curv = curvature(cfg.loss, cfg.dataset->shards);
  Rng rng = make_rng(cfg.seed);

  const Vector w0 = initial_model(cfg);
  BenchmarkInit init;
  {
    Model opt = optimum(cfg.loss, cfg.dataset->shards);
    init.delta0 = empirical_risk(cfg.loss, w0, cfg.dataset->shards) -
                  empirical_risk(cfg.loss, opt.w, cfg.dataset->shards);
    double acc = 0.0;
    for (const Shard& sh : cfg.dataset->shards)
      acc += shard_gradient(cfg.loss, w0, sh).squaredNorm();
    init.delta0_prime = acc / static_cast<double>(n_total);
  }
  SolverParams params = benchmark_params(n_total, s, curv, cfg.budget, init);
  params.batch_size = cfg.batch_size;
  apply_overrides(cfg, params);

  Trace trace;
  trace.stage_sizes = {n_total};
  SolverState state = make_state(w0, n_total);
  std::vector<Shard> active = prefix_shards(*cfg.dataset, *cfg.fleet, n_total);
  std::vector<double> times = prefix_times(*cfg.fleet, n_total);
  std::optional<double> threshold;
  if (cfg.mode == StopMode::criterion)
    threshold = accuracy_threshold(n_total, s, cfg.budget, curv.mu);
  run_stage(cfg, solver, active, times, n_total, params, threshold, state, trace, rng);
  trace.final_model = state.w;
  return trace;
}

Trace run_partial(const RunConfig& cfg, int k, PartialPick pick) {
  cfg.validate();
  const int n_total = static_cast<int>(cfg.dataset->shards.size());
  if (k < 1 || k > n_total) throw std::invalid_argument("k must be in [1, N]");
  const int s = static_cast<int>(cfg.dataset->shards.front().samples.size());
  const CurvatureConstants curv = curvature(cfg.loss, cfg.dataset->shards);
  Rng rng = make_rng(cfg.seed);

  SolverParams params = theorem1_params(k, s, curv, cfg.budget);
  params.batch_size = cfg.batch_size;
  apply_overrides(cfg, params);
  const double threshold = accuracy_threshold(k, s, cfg.budget, curv.mu);

  // per-node tracking vectors persist across participations
  const int d = static_cast<int>(cfg.dataset->shards.front().samples.front().x.size());
  std::vector<Vector> delta_all(n_total, Vector::Zero(d));
  Vector w = initial_model(cfg);

  Trace trace;
  trace.stage_sizes = {k};
  double stage_time = 0.0;
  int rounds = 0;
  std::vector<int> ranks(k);

  while (true) {
    if (pick == PartialPick::fastest) {
      for (int i = 0; i < k; ++i) ranks[i] = i;
    } else {
      std::vector<int> all(n_total);
      for (int i = 0; i < n_total; ++i) all[i] = i;
      std::shuffle(all.begin(), all.end(), rng);
      ranks.assign(all.begin(), all.begin() + k);
      std::sort(ranks.begin(), ranks.end());
    }
    std::vector<Shard> active;
    std::vector<double> times;
    active.reserve(k);
    times.reserve(k);
    for (int r : ranks) {
      active.push_back(cfg.dataset->shards[cfg.fleet->profiles[r].node_id - 1]);
      times.push_back(cfg.fleet->profiles[r].unit_time);
    }

    Vector grad = empirical_gradient(cfg.loss, w, active);
    bool done = false;
    if (cfg.mode == StopMode::criterion) {
      done = grad.squaredNorm() <= threshold;
    } else {
      done = rounds >= params.rounds;
    }
    if (done) break;
    if (rounds >= cfg.max_rounds_per_stage) {
      Trace partial = trace;
      partial.final_model = w;
      partial.ledger.add_stage(k, rounds, stage_time / std::max(rounds, 1));
      throw StageCapError("partial run with k=" + std::to_string(k) +
                              " exceeded max_rounds_per_stage",
                          std::move(partial));
    }

    SolverState st;
    st.w = w;
    st.round = rounds;
    for (int r : ranks) st.delta.push_back(delta_all[r]);
    st = dispatch_round(cfg, cfg.solver, st, active, params, rng);
    w = st.w;
    if (cfg.solver == SolverKind::fedgate)
      for (int i = 0; i < k; ++i) delta_all[ranks[i]] = st.delta[i];
    ++rounds;

    double cost = round_duration(times, static_cast<double>(params.tau), cfg.comm_cost);
    if (cfg.charge_criterion_check) cost += *std::max_element(times.begin(), times.end());
    stage_time += cost;

    RoundRecord rec;
    rec.stage_n = k;
    rec.round = rounds;
    rec.sim_time = stage_time;
    rec.grad_norm_sq = empirical_gradient(cfg.loss, w, active).squaredNorm();
    rec.participants = k;
    trace.records.push_back(rec);
  }
  trace.ledger.stages.push_back({k, rounds, stage_time});
  trace.ledger.total += stage_time;
  trace.final_model = w;
  return trace;
}

Trace run_heuristic(const RunConfig& cfg, double theta0) {
  cfg.validate();
  if (!(theta0 > 0)) throw std::invalid_argument("theta0 must be > 0");
  const int n_total = static_cast<int>(cfg.dataset->shards.size());
  const int s = static_cast<int>(cfg.dataset->shards.front().samples.size());
  const CurvatureConstants curv = curvature(cfg.loss, cfg.dataset->shards);
  Rng rng = make_rng(cfg.seed);

  Trace trace;
  trace.stage_sizes = schedule(cfg.n0, n_total).sizes;
  SolverState state = make_state(initial_model(cfg), cfg.n0);

  double theta = theta0;
  bool first = true;
  for (int n : trace.stage_sizes) {
    if (!first) theta /= 2.0;  // halve at each doubling
    first = false;
    std::vector<Shard> active = prefix_shards(*cfg.dataset, *cfg.fleet, n);
    std::vector<double> times = prefix_times(*cfg.fleet, n);
    SolverParams params = theorem1_params(n, s, curv, cfg.budget);
    params.batch_size = cfg.batch_size;
    apply_overrides(cfg, params);
    run_stage(cfg, cfg.solver, active, times, n, params, theta, state, trace, rng);
  }
  trace.final_model = state.w;
  return trace;
}

WarmStartBounds warm_start_bounds(int n, int m, int s,
                                  const AccuracyBudget& budget, double mu) {
  if (m < 1 || m > n) throw std::invalid_argument("need 1 <= m <= n");
  if (s < 1) throw std::invalid_argument("s must be >= 1");
  const double c = budget.c;
  const double v_ms = c / (static_cast<double>(m) * s);
  const double v_s = c / static_cast<double>(s);
  const double frac = static_cast<double>(n - m) / static_cast<double>(n);
  const double v_nm = (n > m) ? c / (static_cast<double>(n - m) * s) : 0.0;

  WarmStartBounds b;
  b.subopt = 2.0 * frac * (v_nm + v_ms) + v_ms;
  const double root_sum = std::sqrt(v_nm) + std::sqrt(v_ms);
  b.global_grad = 2.0 * frac * frac * root_sum * root_sum + 4.0 * mu * v_ms;
  b.local_grad = 3.0 * (2.0 * mu + 1.0) * v_ms + 3.0 * v_s;
  return b;
}

}  // namespace flanp
