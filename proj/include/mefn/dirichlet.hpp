#pragma once

#include <Eigen/Core>

#include "mefn/rng.hpp"

namespace mefn {

/// Dirichlet distribution on the open region S = {s >= 0, sum s < 1} of
/// R^(d-1), parameterized by alpha in R^d (all positive). Points carry the
/// first d-1 coordinates; the implicit last coordinate is 1 - sum(s).
struct DirichletParams {
  Eigen::VectorXd alpha;

  explicit DirichletParams(Eigen::VectorXd a);
  int d() const { return static_cast<int>(alpha.size()); }
};

/// Log density at a strictly interior point s in R^(d-1).
double dirichlet_log_pdf(const DirichletParams& params, const Eigen::VectorXd& s);

/// Closed-form differential entropy.
double dirichlet_entropy(const DirichletParams& params);

/// Draws a point of S by normalizing independent Gamma(alpha_k) variates.
Eigen::VectorXd dirichlet_sample(const DirichletParams& params, Rng& rng);

/// KL(p || q) in closed form.
double dirichlet_kl(const DirichletParams& p, const DirichletParams& q);

/// Maximum likelihood alpha for points of S (rows of `samples`, each of
/// length d-1). Fixed-point iteration on the digamma stationarity condition.
DirichletParams dirichlet_fit_mle(const Eigen::MatrixXd& samples);

}  // namespace mefn
