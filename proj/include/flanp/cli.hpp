#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flanp/runner.hpp"

namespace flanp {

// exit codes: 0 success, 1 runtime failure, 2 config error
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct PartialBaseline {
  PartialPick pick;
  int k;
};
struct HeuristicBaseline {
  double theta0;
};
struct FullBaseline {
  SolverKind solver;
};
using Baseline = std::variant<FullBaseline, PartialBaseline, HeuristicBaseline>;

struct SweepSpec {
  std::string axis;  // "s", "N" or "lambda"
  std::vector<double> values;
};

struct DatasetConfig {
  // synthetic
  int dim = 1;
  int nodes = 1;
  int samples_per_node = 1;
  double noise_std = 0.0;
  DataKind kind = DataKind::regression;
  // csv alternative
  std::optional<std::string> csv_path;
  int label_column = 0;
  bool has_header = false;
};

struct ExperimentConfig {
  std::string id = "experiment";
  DatasetConfig dataset;
  LossSpec loss;
  SpeedModel speeds;
  AccuracyBudget budget;
  int n0 = 1;
  StopMode mode = StopMode::criterion;
  SolverKind solver = SolverKind::fedgate;
  double comm_cost = 0.0;
  int max_rounds_per_stage = 100000;
  int batch_size = 0;
  std::uint64_t seed = 0;
  int replicas = 1;
  std::vector<Baseline> baselines;
  std::string out_dir = "out";
  std::optional<SweepSpec> sweep;
};

ExperimentConfig parse_config(const std::string& path);

std::string baseline_name(const Baseline& b);

int cmd_run(const ExperimentConfig& cfg);
int cmd_compare(const ExperimentConfig& cfg, int jobs);
int cmd_oracle();
int cmd_gen_data(const ExperimentConfig& cfg);

int run_cli(int argc, char** argv);

}  // namespace flanp
