#include "flanp/hetero.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace flanp {

void SpeedModel::validate() const {
  switch (kind) {
    case SpeedKind::uniform_interval:
      if (!(lo > 0) || !(lo < hi))
        throw std::invalid_argument("uniform speed interval requires 0 < lo < hi");
      break;
    case SpeedKind::iid_exponential:
      if (!(rate > 0)) throw std::invalid_argument("exponential rate must be > 0");
      break;
    case SpeedKind::explicit_list:
      if (values.empty()) throw std::invalid_argument("explicit speed list is empty");
      for (double v : values)
        if (!(v > 0)) throw std::invalid_argument("explicit speeds must be > 0");
      break;
  }
}

Fleet sample_fleet(const SpeedModel& model, int n) {
  model.validate();
  if (n < 1) throw std::invalid_argument("fleet size must be >= 1");

  std::vector<double> times(n);
  switch (model.kind) {
    case SpeedKind::uniform_interval: {
      Rng rng = make_rng(model.seed);
      std::uniform_real_distribution<double> dist(model.lo, model.hi);
      for (double& t : times) t = dist(rng);
      break;
    }
    case SpeedKind::iid_exponential: {
      Rng rng = make_rng(model.seed);
      std::exponential_distribution<double> dist(model.rate);
      for (double& t : times) t = dist(rng);
      break;
    }
    case SpeedKind::explicit_list: {
      if (static_cast<int>(model.values.size()) != n)
        throw std::invalid_argument("explicit speed list size does not match N");
      times = model.values;
      break;
    }
  }

  Fleet fleet;
  fleet.profiles.resize(n);
  for (int i = 0; i < n; ++i) fleet.profiles[i] = {i + 1, times[i]};
  std::sort(fleet.profiles.begin(), fleet.profiles.end(),
            [](const ClientProfile& a, const ClientProfile& b) {
              if (a.unit_time != b.unit_time) return a.unit_time < b.unit_time;
              return a.node_id < b.node_id;
            });
  return fleet;
}

std::vector<double> load_speeds_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open speed file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (!j.is_array()) throw std::runtime_error("speed file must be a JSON array: " + path);
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

}  // namespace flanp
