#include <doctest.h>

#include <cmath>

#include "flanp/data.hpp"
#include "flanp/losses.hpp"

using namespace flanp;

namespace {

Sample sample1d(double x, double y) {
  Sample z;
  z.x = Vector::Constant(1, x);
  z.y = y;
  return z;
}

LossSpec ridge(double reg, int dim = 1) { return {LossKind::ridge_linear, reg, dim}; }
LossSpec logistic(double reg, int dim = 1) { return {LossKind::reg_logistic, reg, dim}; }

// central finite differences, step 1e-5
Vector fd_gradient(const LossSpec& spec, const Vector& w, const Sample& z) {
  const double h = 1e-5;
  Vector g(w.size());
  for (int k = 0; k < w.size(); ++k) {
    Vector wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    g[k] = (loss_value(spec, wp, z) - loss_value(spec, wm, z)) / (2 * h);
  }
  return g;
}

Shard make_shard(int node_id, std::vector<Sample> samples) {
  return Shard{node_id, std::move(samples)};
}

Vector random_vector(int d, Rng& rng) {
  std::normal_distribution<double> n(0, 1);
  Vector v(d);
  for (int k = 0; k < d; ++k) v[k] = n(rng);
  return v;
}

Sample random_sample(int d, Rng& rng, bool binary_label) {
  std::normal_distribution<double> n(0, 1);
  Sample z;
  z.x = random_vector(d, rng);
  z.y = binary_label ? (n(rng) >= 0 ? 1.0 : -1.0) : n(rng);
  return z;
}

}  // namespace

TEST_CASE("loss values at reference points") {
  Vector w0 = Vector::Zero(1);
  CHECK(loss_value(ridge(0), w0, sample1d(1, 2)) == doctest::Approx(2.0));
  CHECK(loss_value(logistic(0), w0, sample1d(3, 1)) == doctest::Approx(std::log(2.0)));
  CHECK(loss_value(logistic(0), w0, sample1d(-2, -1)) == doctest::Approx(std::log(2.0)));
  Vector w1 = Vector::Constant(1, 1.0);
  CHECK(loss_value(ridge(1), w1, sample1d(1, 1)) == doctest::Approx(0.5));
}

TEST_CASE("gradients at reference points") {
  Vector w0 = Vector::Zero(1);
  CHECK(gradient(ridge(0), w0, sample1d(1, 2))[0] == doctest::Approx(-2.0));
  CHECK(gradient(logistic(0), w0, sample1d(1, 1))[0] == doctest::Approx(-0.5));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + trial % 5;
    bool logi = trial % 2 == 0;
    LossSpec spec = logi ? logistic(0.1, d) : ridge(0.3, d);
    Vector w = random_vector(d, rng);
    Sample z = random_sample(d, rng, logi);
    Vector g = gradient(spec, w, z);
    Vector fd = fd_gradient(spec, w, z);
    CHECK((g - fd).norm() <= 1e-6 * (1.0 + g.norm()));
  }
}

TEST_CASE("loss rejects dimension mismatch and non-finite input") {
  Vector w = Vector::Zero(2);
  CHECK_THROWS_AS(loss_value(ridge(0, 2), w, sample1d(1, 1)), std::invalid_argument);
  Sample bad = sample1d(std::numeric_limits<double>::quiet_NaN(), 1);
  Vector w1 = Vector::Zero(1);
  CHECK_THROWS_AS(loss_value(ridge(0), w1, bad), std::invalid_argument);
}

TEST_CASE("empirical risk averages node risks") {
  Vector w0 = Vector::Zero(1);
  LossSpec spec = ridge(0);
  // single node single sample
  std::vector<Shard> one = {make_shard(1, {sample1d(1, 2)})};
  CHECK(empirical_risk(spec, w0, one) == doctest::Approx(2.0));
  // two nodes with per-node losses 2 and 4
  std::vector<Shard> two = {make_shard(1, {sample1d(1, 2)}),
                            make_shard(2, {sample1d(1, std::sqrt(8.0))})};
  CHECK(empirical_risk(spec, w0, two) == doctest::Approx(3.0));
  CHECK_THROWS_AS(empirical_risk(spec, w0, {}), std::invalid_argument);
}

TEST_CASE("identical shards average bit-exactly (power-of-two fleets)") {
  Rng rng(7);
  LossSpec spec = ridge(0.1, 3);
  Shard base = make_shard(1, {random_sample(3, rng, false), random_sample(3, rng, false)});
  Vector w = random_vector(3, rng);
  double single = empirical_risk(spec, w, {base});
  for (int n : {2, 4, 8}) {
    std::vector<Shard> copies(n, base);
    CHECK(empirical_risk(spec, w, copies) == single);  // bitwise
  }
}

TEST_CASE("stochastic gradient: full pass, unbiasedness, determinism") {
  Rng rng(11);
  LossSpec spec = ridge(0.2, 2);
  Shard shard = make_shard(1, {random_sample(2, rng, false), random_sample(2, rng, false),
                               random_sample(2, rng, false)});
  Vector w = random_vector(2, rng);

  Rng r1(5);
  CHECK((stochastic_gradient(spec, w, shard, 3, r1, true) - shard_gradient(spec, w, shard))
            .norm() == 0.0);

  // Monte Carlo mean within 3 standard errors of the exact gradient
  const int draws = 100000;
  Vector mean = Vector::Zero(2);
  Vector second = Vector::Zero(2);
  Rng r2(6);
  for (int t = 0; t < draws; ++t) {
    Vector g = stochastic_gradient(spec, w, shard, 1, r2);
    mean += g;
    second += g.cwiseProduct(g);
  }
  mean /= draws;
  Vector exact = shard_gradient(spec, w, shard);
  for (int k = 0; k < 2; ++k) {
    double var = second[k] / draws - mean[k] * mean[k];
    double se = std::sqrt(var / draws);
    CHECK(std::abs(mean[k] - exact[k]) <= 3.0 * se + 1e-12);
  }

  Rng a(9), b(9);
  CHECK((stochastic_gradient(spec, w, shard, 2, a) -
         stochastic_gradient(spec, w, shard, 2, b)).norm() == 0.0);
  Rng c(9);
  CHECK_THROWS_AS(stochastic_gradient(spec, w, shard, 4, c), std::invalid_argument);
}

TEST_CASE("curvature constants") {
  // d=1, single sample x=1, ridge reg=0
  std::vector<Shard> one = {make_shard(1, {sample1d(1, 0)})};
  auto cc = curvature(ridge(0), one);
  CHECK(cc.mu == doctest::Approx(1.0));
  CHECK(cc.lip == doctest::Approx(1.0));
  CHECK(cc.kappa == doctest::Approx(1.0));

  // samples {e1, e2}: G = I/2
  Sample e1, e2;
  e1.x = Vector::Zero(2); e1.x[0] = 1; e1.y = 0;
  e2.x = Vector::Zero(2); e2.x[1] = 1; e2.y = 0;
  auto cc2 = curvature(ridge(0, 2), {make_shard(1, {e1, e2})});
  CHECK(cc2.mu == doctest::Approx(0.5));
  CHECK(cc2.lip == doctest::Approx(0.5));

  // logistic reg=0.1 with lambda_max(G) = 4
  auto cc3 = curvature(logistic(0.1), {make_shard(1, {sample1d(2, 1)})});
  CHECK(cc3.mu == doctest::Approx(0.1));
  CHECK(cc3.lip == doctest::Approx(1.1));
  CHECK(cc3.kappa == doctest::Approx(11.0));

  // rank-deficient unregularized design is rejected
  Sample flat;
  flat.x = Vector::Zero(2); flat.x[0] = 1; flat.y = 1;
  CHECK_THROWS_AS(curvature(ridge(0, 2), {make_shard(1, {flat})}), std::invalid_argument);
}

TEST_CASE("optimum oracle") {
  // ridge closed form 1/(1+reg)
  auto m = optimum(ridge(1), {make_shard(1, {sample1d(1, 1)})});
  CHECK(m.w[0] == doctest::Approx(0.5));

  // noiseless synthetic data interpolates w_true
  DatasetSpec spec{4, 3, 50, 0.0, 123};
  Dataset ds = generate_synthetic(spec, DataKind::regression);
  auto opt = optimum(ridge(0, 4), ds.shards);
  CHECK((opt.w - ds.w_true->w).norm() <= 1e-8);
  CHECK(empirical_gradient(ridge(0, 4), opt.w, ds.shards).norm() <= 1e-10);

  // label-symmetric logistic data has optimum 0
  Rng rng(3);
  std::vector<Sample> pairs;
  for (int i = 0; i < 10; ++i) {
    Sample z = random_sample(3, rng, true);
    Sample zneg = z;
    zneg.y = -z.y;
    pairs.push_back(z);
    pairs.push_back(zneg);
  }
  auto lopt = optimum(logistic(0.5, 3), {make_shard(1, pairs)});
  CHECK(lopt.w.norm() <= 1e-10);
}

TEST_CASE("strong convexity and smoothness hold with measured constants") {
  DatasetSpec dspec{3, 4, 25, 0.5, 99};
  Dataset ds = generate_synthetic(dspec, DataKind::regression);
  LossSpec spec = ridge(0.2, 3);
  auto cc = curvature(spec, ds.shards);
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    Vector w = random_vector(3, rng), v = random_vector(3, rng);
    double lw = empirical_risk(spec, w, ds.shards);
    double lv = empirical_risk(spec, v, ds.shards);
    Vector gw = empirical_gradient(spec, w, ds.shards);
    Vector gv = empirical_gradient(spec, v, ds.shards);
    CHECK(lv >= lw + gw.dot(v - w) + 0.5 * cc.mu * (v - w).squaredNorm() - 1e-9);
    CHECK((gv - gw).norm() <= cc.lip * (v - w).norm() * (1 + 1e-9));
  }
}

TEST_CASE("empirical gradient matches finite differences of empirical risk") {
  DatasetSpec dspec{2, 2, 10, 0.3, 5};
  Dataset ds = generate_synthetic(dspec, DataKind::classification);
  LossSpec spec = logistic(0.3, 2);
  Rng rng(8);
  Vector w = random_vector(2, rng);
  Vector g = empirical_gradient(spec, w, ds.shards);
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Vector wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    double fd = (empirical_risk(spec, wp, ds.shards) - empirical_risk(spec, wm, ds.shards)) / (2 * h);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
  }
}
