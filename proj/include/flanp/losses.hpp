#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flanp/rng.hpp"

namespace flanp {

using Vector = Eigen::VectorXd;

struct Sample {
  Vector x;
  double y = 0.0;
};

enum class LossKind { ridge_linear, reg_logistic };

struct LossSpec {
  LossKind kind = LossKind::ridge_linear;
  double reg = 0.0;  // regularization coefficient
  int dim = 0;

  void validate() const;
};

struct CurvatureConstants {
  double mu = 0.0;   // strong-convexity modulus
  double lip = 0.0;  // gradient Lipschitz constant
  double kappa = 1.0;
};

struct Shard {
  int node_id = 0;  // 1-based
  std::vector<Sample> samples;
};

struct Model {
  Vector w;
};

double loss_value(const LossSpec& spec, const Vector& w, const Sample& z);
Vector gradient(const LossSpec& spec, const Vector& w, const Sample& z);

// L_n(w) = (1/(ns)) sum_i sum_j loss(w, z_j^i). Node-major, sample-minor;
// the across-node reduction is pairwise so identical shards average bit-exactly.
double empirical_risk(const LossSpec& spec, const Vector& w,
                      const std::vector<Shard>& shards);
Vector empirical_gradient(const LossSpec& spec, const Vector& w,
                          const std::vector<Shard>& shards);

// Exact gradient of a single shard's local risk L^i.
Vector shard_gradient(const LossSpec& spec, const Vector& w, const Shard& shard);

// Mini-batch gradient, batch drawn uniformly with replacement.
// full_pass = true ignores batch_size and returns the exact shard gradient.
Vector stochastic_gradient(const LossSpec& spec, const Vector& w,
                           const Shard& shard, int batch_size, Rng& rng,
                           bool full_pass = false);

CurvatureConstants curvature(const LossSpec& spec,
                             const std::vector<Shard>& shards);

// argmin_w L_n(w): normal equations for ridge, damped Newton for logistic.
Model optimum(const LossSpec& spec, const std::vector<Shard>& shards);

// Stable pairwise reduction, exposed for reuse.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace flanp
