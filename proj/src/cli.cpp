#include "flanp/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace flanp {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

template <typename T>
T require(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("missing field '" + ctx + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for field '" + ctx + key + "'");
  }
}

SolverKind parse_solver(const std::string& s) {
  if (s == "fedgate") return SolverKind::fedgate;
  if (s == "fedavg") return SolverKind::fedavg;
  if (s == "fednova") return SolverKind::fednova;
  throw ConfigError("unknown solver '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.id = get_or<std::string>(j, "id", "experiment");

  const json& jd = j.contains("dataset") ? j.at("dataset") : throw ConfigError("missing field 'dataset'");
  if (jd.contains("csv")) {
    cfg.dataset.csv_path = jd.at("csv").get<std::string>();
    cfg.dataset.label_column = require<int>(jd, "label_column", "dataset.");
    cfg.dataset.has_header = get_or<bool>(jd, "has_header", false);
  } else {
    cfg.dataset.dim = require<int>(jd, "dim", "dataset.");
    cfg.dataset.noise_std = get_or<double>(jd, "noise_std", 0.0);
    std::string kind = get_or<std::string>(jd, "kind", "regression");
    if (kind == "regression")
      cfg.dataset.kind = DataKind::regression;
    else if (kind == "classification")
      cfg.dataset.kind = DataKind::classification;
    else
      throw ConfigError("unknown dataset.kind '" + kind + "'");
  }
  cfg.dataset.nodes = require<int>(jd, "N", "dataset.");
  cfg.dataset.samples_per_node = require<int>(jd, "s", "dataset.");

  const json& jl = j.contains("loss") ? j.at("loss") : throw ConfigError("missing field 'loss'");
  std::string lk = require<std::string>(jl, "kind", "loss.");
  if (lk == "ridge_linear")
    cfg.loss.kind = LossKind::ridge_linear;
  else if (lk == "reg_logistic")
    cfg.loss.kind = LossKind::reg_logistic;
  else
    throw ConfigError("unknown loss.kind '" + lk + "'");
  cfg.loss.reg = get_or<double>(jl, "reg", 0.0);
  cfg.loss.dim = 0;  // filled from data

  const json& js = j.contains("speeds") ? j.at("speeds") : throw ConfigError("missing field 'speeds'");
  std::string sk = require<std::string>(js, "kind", "speeds.");
  if (sk == "uniform") {
    cfg.speeds.kind = SpeedKind::uniform_interval;
    cfg.speeds.lo = require<double>(js, "lo", "speeds.");
    cfg.speeds.hi = require<double>(js, "hi", "speeds.");
  } else if (sk == "exponential") {
    cfg.speeds.kind = SpeedKind::iid_exponential;
    cfg.speeds.rate = require<double>(js, "rate", "speeds.");
  } else if (sk == "explicit") {
    cfg.speeds.kind = SpeedKind::explicit_list;
    if (js.contains("path"))
      cfg.speeds.values = load_speeds_json(js.at("path").get<std::string>());
    else
      cfg.speeds.values = require<std::vector<double>>(js, "values", "speeds.");
  } else {
    throw ConfigError("unknown speeds.kind '" + sk + "'");
  }

  const json& jb = j.contains("budget") ? j.at("budget") : throw ConfigError("missing field 'budget'");
  cfg.budget.c = require<double>(jb, "c", "budget.");
  cfg.budget.sigma2 = get_or<double>(jb, "sigma2", 0.0);

  cfg.n0 = get_or<int>(j, "n0", 1);
  std::string mode = get_or<std::string>(j, "mode", "criterion");
  if (mode == "criterion")
    cfg.mode = StopMode::criterion;
  else if (mode == "fixed_R")
    cfg.mode = StopMode::fixed_rounds;
  else
    throw ConfigError("unknown mode '" + mode + "'");
  cfg.solver = parse_solver(get_or<std::string>(j, "solver", "fedgate"));
  cfg.comm_cost = get_or<double>(j, "comm_cost", 0.0);
  cfg.max_rounds_per_stage = get_or<int>(j, "max_rounds_per_stage", 100000);
  cfg.batch_size = get_or<int>(j, "batch_size", 0);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.replicas = get_or<int>(j, "replicas", 1);
  if (cfg.replicas < 1) throw ConfigError("replicas must be >= 1");
  cfg.out_dir = get_or<std::string>(j, "out", "out");

  if (j.contains("baselines")) {
    for (const json& b : j.at("baselines")) {
      if (b.is_string()) {
        std::string name = b.get<std::string>();
        if (name == "fedgate_full")
          cfg.baselines.push_back(FullBaseline{SolverKind::fedgate});
        else if (name == "fedavg_full")
          cfg.baselines.push_back(FullBaseline{SolverKind::fedavg});
        else if (name == "fednova_full")
          cfg.baselines.push_back(FullBaseline{SolverKind::fednova});
        else
          throw ConfigError("unknown baseline '" + name + "'");
      } else if (b.is_object()) {
        if (b.contains("partial_random"))
          cfg.baselines.push_back(PartialBaseline{PartialPick::random, b.at("partial_random").get<int>()});
        else if (b.contains("partial_fastest"))
          cfg.baselines.push_back(PartialBaseline{PartialPick::fastest, b.at("partial_fastest").get<int>()});
        else if (b.contains("heuristic"))
          cfg.baselines.push_back(HeuristicBaseline{b.at("heuristic").get<double>()});
        else
          throw ConfigError("unknown baseline object");
      } else {
        throw ConfigError("baseline entries must be strings or objects");
      }
    }
  }

  if (j.contains("sweep")) {
    SweepSpec sw;
    sw.axis = require<std::string>(j.at("sweep"), "axis", "sweep.");
    sw.values = require<std::vector<double>>(j.at("sweep"), "values", "sweep.");
    if (sw.axis != "s" && sw.axis != "N" && sw.axis != "lambda")
      throw ConfigError("sweep.axis must be 's', 'N' or 'lambda'");
    if (sw.values.empty()) throw ConfigError("sweep.values must be nonempty");
    cfg.sweep = sw;
  }
  return cfg;
}

std::string baseline_name(const Baseline& b) {
  if (const auto* f = std::get_if<FullBaseline>(&b)) {
    switch (f->solver) {
      case SolverKind::fedgate: return "fedgate_full";
      case SolverKind::fedavg: return "fedavg_full";
      case SolverKind::fednova: return "fednova_full";
    }
  }
  if (const auto* p = std::get_if<PartialBaseline>(&b))
    return (p->pick == PartialPick::random ? "partial_random_k" : "partial_fastest_k") +
           std::to_string(p->k);
  return "heuristic";
}

namespace {

struct Instance {
  Dataset dataset;
  Fleet fleet;
};

Instance build_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  Instance inst;
  if (cfg.dataset.csv_path) {
    auto samples = load_csv(*cfg.dataset.csv_path, cfg.dataset.label_column,
                            cfg.dataset.has_header);
    inst.dataset.shards = partition(samples, cfg.dataset.nodes,
                                    cfg.dataset.samples_per_node, seed).shards;
  } else {
    DatasetSpec spec;
    spec.dim = cfg.dataset.dim;
    spec.nodes = cfg.dataset.nodes;
    spec.samples_per_node = cfg.dataset.samples_per_node;
    spec.noise_std = cfg.dataset.noise_std;
    spec.seed = seed;
    inst.dataset = generate_synthetic(spec, cfg.dataset.kind);
  }
  SpeedModel sm = cfg.speeds;
  sm.seed = mix_seed(seed, 0x5eedULL);
  inst.fleet = sample_fleet(sm, cfg.dataset.nodes);
  return inst;
}

RunConfig make_run_config(const ExperimentConfig& cfg, const Instance& inst,
                          std::uint64_t seed, bool record_subopt) {
  RunConfig rc;
  rc.dataset = &inst.dataset;
  rc.fleet = &inst.fleet;
  rc.loss = cfg.loss;
  rc.loss.dim = static_cast<int>(inst.dataset.shards.front().samples.front().x.size());
  rc.budget = cfg.budget;
  rc.n0 = cfg.n0;
  rc.mode = cfg.mode;
  rc.solver = cfg.solver;
  rc.comm_cost = cfg.comm_cost;
  rc.max_rounds_per_stage = cfg.max_rounds_per_stage;
  rc.seed = seed;
  rc.batch_size = cfg.batch_size;
  rc.record_subopt = record_subopt;
  return rc;
}

Trace run_baseline(const RunConfig& rc, const Baseline& b) {
  if (const auto* f = std::get_if<FullBaseline>(&b))
    return run_full_participation(rc, f->solver);
  if (const auto* p = std::get_if<PartialBaseline>(&b))
    return run_partial(rc, p->k, p->pick);
  return run_heuristic(rc, std::get<HeuristicBaseline>(b).theta0);
}

void write_trace_csv(std::ostream& os, const std::string& experiment_id,
                     const std::string& algorithm, const Trace& trace) {
  for (const RoundRecord& r : trace.records) {
    os << experiment_id << ',' << algorithm << ',' << r.stage_n << ',' << r.round
       << ',' << fmt_double(r.sim_time) << ',' << fmt_double(r.grad_norm_sq) << ','
       << (std::isnan(r.subopt) ? "" : fmt_double(r.subopt)) << ','
       << r.participants << '\n';
  }
}

constexpr const char* kTraceHeader =
    "experiment_id,algorithm,stage_n,round,sim_time,grad_norm_sq,subopt,participants";

json trace_summary(const Trace& trace) {
  json stages = json::array();
  for (const StageTime& st : trace.ledger.stages)
    stages.push_back({{"n", st.stage_n}, {"rounds", st.rounds}, {"time", st.time}});
  return json{{"final_model_norm", trace.final_model.norm()},
              {"total_sim_time", trace.total_time()},
              {"stages", stages}};
}

// fixed-order parallel map; results independent of scheduling
std::vector<double> parallel_totals(const std::vector<std::function<double()>>& tasks,
                                    int jobs) {
  std::vector<double> out(tasks.size(), 0.0);
  if (jobs < 1) jobs = 1;
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex err_mu;
  for (int t = 0; t < jobs; ++t)
    workers.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          out[i] = tasks[i]();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lk(err_mu);
          failed = true;
          if (error.empty()) error = e.what();
        }
      }
    });
  for (auto& w : workers) w.join();
  if (failed) throw std::runtime_error(error);
  return out;
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  Instance inst = build_instance(cfg, cfg.seed);
  RunConfig rc = make_run_config(cfg, inst, cfg.seed, true);

  json summary;
  summary["experiment_id"] = cfg.id;
  summary["seed"] = cfg.seed;
  summary["n0"] = cfg.n0;
  summary["mode"] = (cfg.mode == StopMode::criterion ? "criterion" : "fixed_R");
  summary["budget"] = {{"c", cfg.budget.c}, {"sigma2", cfg.budget.sigma2}};

  Trace trace;
  bool failed = false;
  std::string failure;
  try {
    rc.validate();
    trace = run_flanp(rc);
  } catch (const StageCapError& e) {
    trace = e.partial;
    failed = true;
    failure = e.what();
  }

  std::ofstream csv(cfg.out_dir + "/trace.csv", std::ios::binary);
  csv << kTraceHeader << '\n';
  write_trace_csv(csv, cfg.id, "flanp", trace);

  summary.update(trace_summary(trace));
  if (failed) summary["failure"] = failure;
  std::ofstream js(cfg.out_dir + "/summary.json", std::ios::binary);
  js << summary.dump(2) << '\n';

  if (failed) {
    std::cerr << "run failed: " << failure << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << cfg.out_dir << "/trace.csv (" << trace.records.size()
            << " rounds, total sim time " << trace.total_time() << ")\n";
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& cfg, int jobs) {
  if (!cfg.sweep) {
    std::cerr << "config error: compare requires a 'sweep' section\n";
    return kExitConfig;
  }
  if (cfg.baselines.empty()) {
    std::cerr << "config error: compare requires at least one baseline\n";
    return kExitConfig;
  }
  std::filesystem::create_directories(cfg.out_dir);
  const SweepSpec& sw = *cfg.sweep;

  struct Cell {
    double value;
    std::string baseline;
    double t_flanp;
    double t_baseline;
    double ratio;
  };
  std::vector<Cell> cells;

  try {
    for (double value : sw.values) {
      ExperimentConfig point = cfg;
      if (sw.axis == "s")
        point.dataset.samples_per_node = static_cast<int>(value);
      else if (sw.axis == "N")
        point.dataset.nodes = static_cast<int>(value);
      else
        point.speeds.rate = value;

      // replica tasks in fixed order: flanp first, then each baseline
      std::vector<std::function<double()>> tasks;
      for (int r = 0; r < point.replicas; ++r) {
        std::uint64_t rseed = mix_seed(point.seed, static_cast<std::uint64_t>(r));
        tasks.push_back([point, rseed] {
          Instance inst = build_instance(point, rseed);
          RunConfig rc = make_run_config(point, inst, rseed, false);
          return run_flanp(rc).total_time();
        });
      }
      for (const Baseline& b : point.baselines)
        for (int r = 0; r < point.replicas; ++r) {
          std::uint64_t rseed = mix_seed(point.seed, static_cast<std::uint64_t>(r));
          tasks.push_back([point, b, rseed] {
            Instance inst = build_instance(point, rseed);
            RunConfig rc = make_run_config(point, inst, rseed, false);
            return run_baseline(rc, b).total_time();
          });
        }
      std::vector<double> totals = parallel_totals(tasks, jobs);

      auto mean_of = [&](std::size_t begin) {
        double acc = 0.0;
        for (int r = 0; r < point.replicas; ++r) acc += totals[begin + r];
        return acc / point.replicas;
      };
      double t_flanp = mean_of(0);
      for (std::size_t b = 0; b < point.baselines.size(); ++b) {
        double t_base = mean_of((b + 1) * point.replicas);
        cells.push_back({value, baseline_name(point.baselines[b]), t_flanp, t_base,
                         t_flanp / t_base});
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::ofstream csv(cfg.out_dir + "/comparison.csv", std::ios::binary);
  csv << "axis,value,baseline,t_flanp,t_baseline,ratio\n";
  for (const Cell& c : cells)
    csv << sw.axis << ',' << fmt_double(c.value) << ',' << c.baseline << ','
        << fmt_double(c.t_flanp) << ',' << fmt_double(c.t_baseline) << ','
        << fmt_double(c.ratio) << '\n';

  std::printf("%-8s %-22s %14s %14s %8s\n", sw.axis.c_str(), "baseline", "T_flanp",
              "T_baseline", "ratio");
  for (const Cell& c : cells)
    std::printf("%-8g %-22s %14.6g %14.6g %8.4f\n", c.value, c.baseline.c_str(),
                c.t_flanp, c.t_baseline, c.ratio);
  return kExitOk;
}

int cmd_oracle() {
  struct Check {
    std::string name;
    bool pass;
    double deviation;
  };
  std::vector<Check> checks;
  const double euler = 0.57721566490153286;
  HarmonicTable table;

  {
    // harmonic sandwich ln n + g <= H_n <= ln(n+1) + g
    bool ok = true;
    double worst = 0.0;
    for (int n = 2; n <= 1000000; n = (n < 1000 ? n + 1 : n * 2)) {
      double h = table.h(n);
      double lo = std::log(n) + euler, hi = std::log(n + 1.0) + euler;
      if (h < lo || h > hi) ok = false;
      worst = std::max(worst, std::max(lo - h, h - hi));
    }
    checks.push_back({"harmonic_sandwich", ok, worst});
  }
  {
    // telescoping order-stat means sum to H_N
    int n_total = 64;
    double acc = 0.0;
    for (int i = 1; i <= n_total; ++i)
      acc += order_stat_mean(n_total, i) - (i > 1 ? order_stat_mean(n_total, i - 1) : 0.0);
    double dev = std::abs(acc - table.h(n_total));
    checks.push_back({"telescoping_to_harmonic", dev <= 1e-12, dev});
  }
  {
    bool ok = true;
    double worst = 0.0;
    for (int k = 1; k <= 10; ++k) {
      int n_total = 1 << k;
      double ratio = doubling_ratio(n_total, 1);
      double bound = 2.0 + 1.0 / n_total;
      worst = std::max(worst, ratio - bound);
      if (ratio > bound) ok = false;
    }
    checks.push_back({"doubling_ratio_bound", ok, worst});
  }
  {
    double dev = std::abs(doubling_ratio(4, 1) - 1.4);
    checks.push_back({"doubling_ratio_4_1", dev <= 1e-9, dev});
  }
  {
    // Monte Carlo vs analytic order-stat means
    bool ok = true;
    double worst = 0.0;
    for (int n_total : {2, 8, 32}) {
      auto mc = monte_carlo_order_stats(n_total, 1.0, 100000, 20240901ULL);
      for (int i = 1; i <= n_total; ++i) {
        double exact = order_stat_mean(n_total, i);
        double dev = (exact < 0.5) ? std::abs(mc[i - 1] - exact)
                                   : std::abs(mc[i - 1] - exact) / exact;
        double tol = (exact < 0.5) ? 0.02 : 0.02;
        worst = std::max(worst, dev - tol);
        if (dev > tol) ok = false;
      }
    }
    checks.push_back({"monte_carlo_order_stats", ok, worst});
  }

  bool all = true;
  for (const Check& c : checks) {
    std::printf("%-28s %s  (deviation %.3e)\n", c.name.c_str(),
                c.pass ? "PASS" : "FAIL", c.deviation);
    all = all && c.pass;
  }
  return all ? kExitOk : kExitRuntime;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  Instance inst = build_instance(cfg, cfg.seed);

  std::ofstream csv(cfg.out_dir + "/data.csv", std::ios::binary);
  for (const Shard& sh : inst.dataset.shards)
    for (const Sample& z : sh.samples) {
      for (int k = 0; k < z.x.size(); ++k) csv << fmt_double(z.x[k]) << ',';
      csv << fmt_double(z.y) << '\n';
    }

  json speeds = json::array();
  for (int i = 1; i <= inst.fleet.size(); ++i)
    speeds.push_back(inst.fleet.time_of_rank(i));
  std::ofstream js(cfg.out_dir + "/speeds.json", std::ios::binary);
  js << speeds.dump() << '\n';

  std::cout << "wrote " << cfg.out_dir << "/data.csv and " << cfg.out_dir
            << "/speeds.json\n";
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"straggler-resilient federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON experiment config");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_option("--jobs", jobs, "parallel replicas");
  };

  CLI::App* run = app.add_subcommand("run", "run one FLANP experiment");
  add_common(run, true);
  CLI::App* compare = app.add_subcommand("compare", "sweep and compare against baselines");
  add_common(compare, true);
  CLI::App* sweep = app.add_subcommand("sweep", "alias of compare");
  add_common(sweep, true);
  CLI::App* oracle = app.add_subcommand("oracle", "analytic vs Monte Carlo identity checks");
  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset and speed file");
  add_common(gen, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (oracle->parsed()) return cmd_oracle();

  ExperimentConfig cfg;
  try {
    cfg = parse_config(config_path);
    // the environment may override the seed only
    if (const char* env = std::getenv("FLANP_SEED")) cfg.seed = std::stoull(env);
    if (seed_given) cfg.seed = seed_flag;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.n0 > cfg.dataset.nodes) throw ConfigError("n0 exceeds N");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(cfg);
    if (compare->parsed() || sweep->parsed()) return cmd_compare(cfg, jobs);
    if (gen->parsed()) return cmd_gen_data(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace flanp
