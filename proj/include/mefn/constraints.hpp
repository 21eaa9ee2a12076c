#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace mefn {

/// Vector-valued moment function T with an analytic output-space Jacobian.
/// The fitted distribution must satisfy E[T(Z)] = 0.
struct ConstraintSet {
  enum class Domain { Generic, Simplex, PositiveHalfLine };

  int m = 0;        // number of components
  int dim = 0;      // dimension of the output points T is evaluated at
  Domain domain = Domain::Generic;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluate;
  // m x dim Jacobian of T; subgradient conventions at kinks.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> output_gradient;
};

/// European call chain for a single expiry.
struct OptionChain {
  double spot = 0.0;      // S0 > 0
  double discount = 1.0;  // D in (0, 1]
  Eigen::VectorXd strikes;  // ascending, > 0
  Eigen::VectorXd prices;   // same length, > 0

  void validate() const;  // throws std::invalid_argument when malformed
};

/// log-moment constraints whose maximum entropy solution on the open region
/// {s >= 0, sum s < 1} is a Dirichlet: T_k(s) = log s_k - kappa_k, with
/// s_d = 1 - sum(s).
ConstraintSet dirichlet_constraints(const Eigen::VectorXd& kappa);

/// kappa_k = psi(alpha_k) - psi(sum alpha).
Eigen::VectorXd kappa_from_alpha(const Eigen::VectorXd& alpha);

/// Risk-neutral pricing constraints: one discounted call payoff per strike
/// plus the discounted-mean (spot) constraint.
ConstraintSet option_constraints(const OptionChain& chain);

/// Reads a chain from CSV: metadata lines `spot=<v>` and `discount=<v>`,
/// a `strike,price` header, then one row per option.
OptionChain load_option_chain_csv(const std::string& path);
void save_option_chain_csv(const OptionChain& chain, const std::string& path);

}  // namespace mefn
