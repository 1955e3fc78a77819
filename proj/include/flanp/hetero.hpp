#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flanp/rng.hpp"

namespace flanp {

struct ClientProfile {
  int node_id = 0;     // original 1-based index
  double unit_time = 0.0;  // T_i, time for one local update
};

enum class SpeedKind { uniform_interval, iid_exponential, explicit_list };

struct SpeedModel {
  SpeedKind kind = SpeedKind::uniform_interval;
  double lo = 0.0, hi = 0.0;  // uniform_interval
  double rate = 1.0;          // iid_exponential
  std::vector<double> values; // explicit_list
  std::uint64_t seed = 0;

  void validate() const;
};

// Profiles sorted ascending by unit time; ties broken by original index.
struct Fleet {
  std::vector<ClientProfile> profiles;

  int size() const { return static_cast<int>(profiles.size()); }
  // T of the i-th fastest client, i 1-based
  double time_of_rank(int i) const { return profiles[i - 1].unit_time; }
};

Fleet sample_fleet(const SpeedModel& model, int n);

// JSON array of positive numbers, e.g. [3, 1, 2]
std::vector<double> load_speeds_json(const std::string& path);

}  // namespace flanp
