#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flanp/losses.hpp"

namespace flanp {

struct DatasetSpec {
  int dim = 1;
  int nodes = 1;           // N
  int samples_per_node = 1;  // s
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class DataKind { regression, classification };

struct Dataset {
  std::vector<Shard> shards;
  std::optional<Model> w_true;  // synthetic only
};

// x ~ N(0, I_d); regression y = x.w_true + noise_std*eps,
// classification y = sign(.) in {-1,+1}; w_true uniform on the unit sphere.
Dataset generate_synthetic(const DatasetSpec& spec, DataKind kind);

// Rectangular numeric CSV; label_column is 0-based, remaining columns are
// features in order. Errors carry 1-based row/column diagnostics.
std::vector<Sample> load_csv(const std::string& path, int label_column,
                             bool has_header = false);

struct PartitionResult {
  std::vector<Shard> shards;
  std::size_t unused = 0;  // surplus samples beyond N*s
};

PartitionResult partition(const std::vector<Sample>& samples, int nodes,
                          int samples_per_node, std::uint64_t seed);

}  // namespace flanp
