#include "flanp/losses.hpp"

#include <cmath>
#include <string>

namespace flanp {

namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

void check_dims(const LossSpec& spec, const Vector& w, const Sample& z) {
  if (w.size() != z.x.size())
    throw std::invalid_argument("dimension mismatch: model dim " + std::to_string(w.size()) +
                                " vs sample dim " + std::to_string(z.x.size()));
  if (spec.dim > 0 && w.size() != spec.dim)
    throw std::invalid_argument("dimension mismatch: model dim " + std::to_string(w.size()) +
                                " vs spec dim " + std::to_string(spec.dim));
  check_finite(w, "model");
  check_finite(z.x, "sample features");
  if (!std::isfinite(z.y)) throw std::invalid_argument("sample label is non-finite");
}

// log(1 + exp(t)) without overflow
double log1p_exp(double t) {
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

void check_shards(const std::vector<Shard>& shards) {
  if (shards.empty()) throw std::invalid_argument("empty shard list");
  const std::size_t s = shards.front().samples.size();
  for (const Shard& sh : shards) {
    if (sh.samples.empty()) throw std::invalid_argument("shard with no samples");
    if (sh.samples.size() != s) throw std::invalid_argument("shards differ in sample count");
  }
}

}  // namespace

void LossSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("loss dim must be >= 1");
  if (reg < 0) throw std::invalid_argument("regularization must be nonnegative");
  if (kind == LossKind::reg_logistic && reg <= 0)
    throw std::invalid_argument("reg_logistic requires reg > 0 for strong convexity");
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double loss_value(const LossSpec& spec, const Vector& w, const Sample& z) {
  check_dims(spec, w, z);
  const double m = w.dot(z.x);
  const double r = 0.5 * spec.reg * w.squaredNorm();
  switch (spec.kind) {
    case LossKind::ridge_linear: {
      const double e = z.y - m;
      return 0.5 * e * e + r;
    }
    case LossKind::reg_logistic:
      return log1p_exp(-z.y * m) + r;
  }
  throw std::logic_error("unknown loss kind");
}

Vector gradient(const LossSpec& spec, const Vector& w, const Sample& z) {
  check_dims(spec, w, z);
  const double m = w.dot(z.x);
  switch (spec.kind) {
    case LossKind::ridge_linear:
      return (m - z.y) * z.x + spec.reg * w;
    case LossKind::reg_logistic:
      return -z.y * sigmoid(-z.y * m) * z.x + spec.reg * w;
  }
  throw std::logic_error("unknown loss kind");
}

double empirical_risk(const LossSpec& spec, const Vector& w,
                      const std::vector<Shard>& shards) {
  check_shards(shards);
  std::vector<double> node_risk(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    double acc = 0.0;
    for (const Sample& z : shards[i].samples) acc += loss_value(spec, w, z);
    node_risk[i] = acc / static_cast<double>(shards[i].samples.size());
  }
  return pairwise_sum(node_risk.data(), node_risk.size()) /
         static_cast<double>(shards.size());
}

Vector shard_gradient(const LossSpec& spec, const Vector& w, const Shard& shard) {
  Vector acc = Vector::Zero(w.size());
  for (const Sample& z : shard.samples) acc += gradient(spec, w, z);
  return acc / static_cast<double>(shard.samples.size());
}

Vector empirical_gradient(const LossSpec& spec, const Vector& w,
                          const std::vector<Shard>& shards) {
  check_shards(shards);
  // same node-major reduction as empirical_risk, pairwise across nodes
  std::vector<Vector> node_grad(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i)
    node_grad[i] = shard_gradient(spec, w, shards[i]);
  // balanced tree over nodes
  std::size_t n = node_grad.size();
  while (n > 1) {
    std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) node_grad[i] += node_grad[i + half];
    n = half;
  }
  return node_grad[0] / static_cast<double>(shards.size());
}

Vector stochastic_gradient(const LossSpec& spec, const Vector& w,
                           const Shard& shard, int batch_size, Rng& rng,
                           bool full_pass) {
  if (full_pass) return shard_gradient(spec, w, shard);
  const int s = static_cast<int>(shard.samples.size());
  if (batch_size < 1 || batch_size > s)
    throw std::invalid_argument("batch_size out of range [1, " + std::to_string(s) + "]");
  std::uniform_int_distribution<int> pick(0, s - 1);
  Vector acc = Vector::Zero(w.size());
  for (int b = 0; b < batch_size; ++b)
    acc += gradient(spec, w, shard.samples[pick(rng)]);
  return acc / static_cast<double>(batch_size);
}

CurvatureConstants curvature(const LossSpec& spec,
                             const std::vector<Shard>& shards) {
  check_shards(shards);
  const int d = static_cast<int>(shards.front().samples.front().x.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  std::size_t total = 0;
  for (const Shard& sh : shards)
    for (const Sample& z : sh.samples) {
      gram.noalias() += z.x * z.x.transpose();
      ++total;
    }
  gram /= static_cast<double>(total);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lam_min = es.eigenvalues().minCoeff();
  const double lam_max = es.eigenvalues().maxCoeff();

  CurvatureConstants cc;
  if (spec.kind == LossKind::ridge_linear) {
    cc.mu = lam_min + spec.reg;
    cc.lip = lam_max + spec.reg;
  } else {
    cc.mu = spec.reg;
    cc.lip = spec.reg + 0.25 * lam_max;
  }
  if (cc.mu <= 0) throw std::invalid_argument("not strongly convex: mu = 0 (rank-deficient design without regularization)");
  cc.kappa = cc.lip / cc.mu;
  return cc;
}

Model optimum(const LossSpec& spec, const std::vector<Shard>& shards) {
  check_shards(shards);
  const int d = static_cast<int>(shards.front().samples.front().x.size());

  if (spec.kind == LossKind::ridge_linear) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    Vector b = Vector::Zero(d);
    std::size_t total = 0;
    for (const Shard& sh : shards)
      for (const Sample& z : sh.samples) {
        a.noalias() += z.x * z.x.transpose();
        b.noalias() += z.y * z.x;
        ++total;
      }
    a /= static_cast<double>(total);
    b /= static_cast<double>(total);
    a.diagonal().array() += spec.reg;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("singular normal equations (reg = 0 and rank-deficient design)");
    Vector w = ldlt.solve(b);
    if (!w.allFinite() || (a * w - b).norm() > 1e-8 * (1.0 + b.norm()))
      throw std::runtime_error("singular normal equations (reg = 0 and rank-deficient design)");
    // one refinement step; keeps the gradient-at-optimum check tight
    Vector g = empirical_gradient(spec, w, shards);
    w -= ldlt.solve(g);
    return Model{w};
  }

  // damped Newton for regularized logistic
  Vector w = Vector::Zero(d);
  const int cap = 200;
  for (int it = 0; it < cap; ++it) {
    Vector g = empirical_gradient(spec, w, shards);
    if (g.norm() <= 1e-12) return Model{w};
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    std::size_t total = 0;
    for (const Shard& sh : shards)
      for (const Sample& z : sh.samples) {
        const double p = 1.0 / (1.0 + std::exp(-w.dot(z.x) * z.y));
        // d/dw of -y x sigma(-y m); sigma'(t) = sigma(1-sigma)
        h.noalias() += (p * (1.0 - p)) * (z.x * z.x.transpose());
        ++total;
      }
    h /= static_cast<double>(total);
    h.diagonal().array() += spec.reg;
    Vector step = h.ldlt().solve(g);
    double t = 1.0;
    const double f0 = empirical_risk(spec, w, shards);
    while (t > 1e-8 && empirical_risk(spec, Vector(w - t * step), shards) > f0 - 1e-4 * t * g.dot(step))
      t *= 0.5;
    w -= t * step;
  }
  Vector g = empirical_gradient(spec, w, shards);
  if (g.norm() <= 1e-10) return Model{w};  // accept slightly looser on hard instances
  throw std::runtime_error("Newton did not converge within iteration cap");
}

}  // namespace flanp
