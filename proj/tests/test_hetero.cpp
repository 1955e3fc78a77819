#include <doctest.h>

#include <set>
#include <stdexcept>

#include "flanp/hetero.hpp"

using namespace flanp;

TEST_CASE("explicit speeds are sorted with original-index permutation") {
  SpeedModel model;
  model.kind = SpeedKind::explicit_list;
  model.values = {3, 1, 2};
  Fleet fleet = sample_fleet(model, 3);
  CHECK(fleet.time_of_rank(1) == 1.0);
  CHECK(fleet.time_of_rank(2) == 2.0);
  CHECK(fleet.time_of_rank(3) == 3.0);
  CHECK(fleet.profiles[0].node_id == 2);
  CHECK(fleet.profiles[1].node_id == 3);
  CHECK(fleet.profiles[2].node_id == 1);
}

TEST_CASE("ties break by original index and permutation is a bijection") {
  SpeedModel model;
  model.kind = SpeedKind::explicit_list;
  model.values = {2, 2, 1, 2};
  Fleet fleet = sample_fleet(model, 4);
  CHECK(fleet.profiles[0].node_id == 3);
  CHECK(fleet.profiles[1].node_id == 1);
  CHECK(fleet.profiles[2].node_id == 2);
  CHECK(fleet.profiles[3].node_id == 4);
  std::set<int> ids;
  for (const auto& p : fleet.profiles) ids.insert(p.node_id);
  CHECK(ids.size() == 4);
}

TEST_CASE("uniform interval speeds stay in range and sorted") {
  SpeedModel model;
  model.kind = SpeedKind::uniform_interval;
  model.lo = 50;
  model.hi = 500;
  model.seed = 9;
  Fleet fleet = sample_fleet(model, 200);
  for (int i = 1; i <= 200; ++i) {
    CHECK(fleet.time_of_rank(i) >= 50.0);
    CHECK(fleet.time_of_rank(i) <= 500.0);
    if (i > 1) CHECK(fleet.time_of_rank(i) >= fleet.time_of_rank(i - 1));
  }
}

TEST_CASE("exponential fleet mean matches 1/rate") {
  SpeedModel model;
  model.kind = SpeedKind::iid_exponential;
  model.rate = 1.0;
  double acc = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    model.seed = static_cast<std::uint64_t>(t);
    acc += sample_fleet(model, 1).time_of_rank(1);
  }
  CHECK(acc / trials == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("invalid speed models are rejected") {
  SpeedModel bad;
  bad.kind = SpeedKind::uniform_interval;
  bad.lo = 0;
  bad.hi = 1;
  CHECK_THROWS_AS(sample_fleet(bad, 2), std::invalid_argument);
  bad.kind = SpeedKind::iid_exponential;
  bad.rate = 0;
  CHECK_THROWS_AS(sample_fleet(bad, 2), std::invalid_argument);
  bad.kind = SpeedKind::explicit_list;
  bad.values = {1.0, -1.0};
  CHECK_THROWS_AS(sample_fleet(bad, 2), std::invalid_argument);
}
