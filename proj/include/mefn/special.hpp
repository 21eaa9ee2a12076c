#pragma once

#include <Eigen/Core>

namespace mefn {

/// Digamma function for x > 0. Recurrence shift into x >= 10 followed by the
/// asymptotic expansion; absolute error below 1e-12 on (0, inf).
double digamma(double x);

/// Log of the multivariate Beta function, log B(alpha) for alpha > 0
/// componentwise.
double log_multivariate_beta(const Eigen::VectorXd& alpha);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// via the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with nu > 0 degrees of freedom.
double student_t_cdf(double t, double nu);

/// Numerically stable log(1 + e^x).
double softplus(double x);

/// Logistic sigmoid 1 / (1 + e^-x).
double sigmoid(double x);

}  // namespace mefn
