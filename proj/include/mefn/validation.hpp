#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "mefn/rng.hpp"

namespace mefn {

/// ANOVA-style diversity summary over a sample set, with coordinates playing
/// the role of groups; sst = ssw + ssb.
struct DiversityReport {
  double d_l2 = 0.0;  // mean squared pairwise distance over ordered pairs
  double sst = 0.0;
  double ssw = 0.0;
  double ssb = 0.0;
};

/// Median of pairwise Euclidean distances over the pooled rows of x and y;
/// throws "degenerate bandwidth" when all points coincide.
double median_heuristic_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Unbiased squared-MMD U-statistic with the RBF kernel
/// k(a, b) = exp(-|a - b|^2 / (2 sigma^2)); may be negative.
double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma);

/// Permutation two-sample test with add-one p-value
/// (1 + #{permuted >= observed}) / (1 + n_perm); the bandwidth comes from the
/// pooled sample and stays fixed across permutations.
double mmd_permutation_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int n_perm,
                            Rng& rng);

DiversityReport diversity_metrics(const Eigen::MatrixXd& samples);

/// Pairs (quantile of x at p, quantile of y at p) with linear interpolation
/// between order statistics.
std::vector<std::pair<double, double>> qq_points(const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& y,
                                                 const Eigen::VectorXd& probs);

/// Interpolated empirical quantile of a sample at probability p in (0, 1).
double empirical_quantile(const Eigen::VectorXd& sample, double p);

}  // namespace mefn
