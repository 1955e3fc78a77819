#include "flanp/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace flanp {

void DatasetSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("dataset dim must be >= 1");
  if (nodes < 1) throw std::invalid_argument("dataset N must be >= 1");
  if (samples_per_node < 1) throw std::invalid_argument("dataset s must be >= 1");
  if (noise_std < 0) throw std::invalid_argument("noise_std must be nonnegative");
}

Dataset generate_synthetic(const DatasetSpec& spec, DataKind kind) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector w_true(spec.dim);
  for (int i = 0; i < spec.dim; ++i) w_true[i] = normal(rng);
  w_true.normalize();

  Dataset ds;
  ds.w_true = Model{w_true};
  ds.shards.reserve(spec.nodes);
  for (int node = 0; node < spec.nodes; ++node) {
    Shard shard;
    shard.node_id = node + 1;
    shard.samples.reserve(spec.samples_per_node);
    for (int j = 0; j < spec.samples_per_node; ++j) {
      Sample z;
      z.x.resize(spec.dim);
      for (int k = 0; k < spec.dim; ++k) z.x[k] = normal(rng);
      double t = z.x.dot(w_true) + spec.noise_std * normal(rng);
      z.y = (kind == DataKind::regression) ? t : (t >= 0 ? 1.0 : -1.0);
      shard.samples.push_back(std::move(z));
    }
    ds.shards.push_back(std::move(shard));
  }
  return ds;
}

std::vector<Sample> load_csv(const std::string& path, int label_column,
                             bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  std::vector<Sample> out;
  std::string line;
  int row = 0;
  int ncols = -1;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (first && has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      char* end = nullptr;
      errno = 0;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
        throw std::runtime_error("CSV parse error at row " + std::to_string(row) +
                                 ", column " + std::to_string(col) + ": '" + cell + "'");
      cells.push_back(v);
    }
    if (ncols < 0) {
      ncols = static_cast<int>(cells.size());
      if (label_column < 0 || label_column >= ncols)
        throw std::runtime_error("label column " + std::to_string(label_column) +
                                 " out of range for " + std::to_string(ncols) + " columns");
    } else if (static_cast<int>(cells.size()) != ncols) {
      throw std::runtime_error("ragged CSV: row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " columns, expected " +
                               std::to_string(ncols));
    }
    Sample z;
    z.x.resize(ncols - 1);
    int k = 0;
    for (int c = 0; c < ncols; ++c) {
      if (c == label_column)
        z.y = cells[c];
      else
        z.x[k++] = cells[c];
    }
    out.push_back(std::move(z));
  }
  if (out.empty()) throw std::runtime_error("CSV has no rows: " + path);
  return out;
}

PartitionResult partition(const std::vector<Sample>& samples, int nodes,
                          int samples_per_node, std::uint64_t seed) {
  const std::size_t need =
      static_cast<std::size_t>(nodes) * static_cast<std::size_t>(samples_per_node);
  if (samples.size() < need)
    throw std::invalid_argument("insufficient samples: have " +
                                std::to_string(samples.size()) + ", need " +
                                std::to_string(need));
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  PartitionResult res;
  res.unused = samples.size() - need;
  res.shards.reserve(nodes);
  std::size_t p = 0;
  for (int node = 0; node < nodes; ++node) {
    Shard shard;
    shard.node_id = node + 1;
    shard.samples.reserve(samples_per_node);
    for (int j = 0; j < samples_per_node; ++j) shard.samples.push_back(samples[idx[p++]]);
    res.shards.push_back(std::move(shard));
  }
  return res;
}

}  // namespace flanp
