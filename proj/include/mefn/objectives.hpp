#pragma once

#include <Eigen/Core>

#include "mefn/constraints.hpp"
#include "mefn/flow.hpp"
#include "mefn/rng.hpp"

namespace mefn {

/// A batch of base draws together with everything the estimators need:
/// transformed points, exact log densities, and per-sample constraint values.
struct SampleBatch {
  Eigen::MatrixXd base_points;        // n x dim
  Eigen::MatrixXd transformed;        // n x out_dim
  Eigen::VectorXd log_densities;      // n
  Eigen::MatrixXd constraint_values;  // n x m

  Eigen::Index size() const { return base_points.rows(); }
};

struct LagrangianState {
  Eigen::VectorXd lambda;
  double c = 1.0;
};

/// Draws n >= 2 i.i.d. standard normal base points and pushes them through
/// the stack.
SampleBatch draw_batch(const FlowStack& stack, const ConstraintSet& constraints, int n,
                       Rng& rng);

/// Unbiased entropy estimator: minus the mean log density.
double entropy_estimate(const SampleBatch& batch);

/// Columnwise mean of the constraint values (unbiased estimate of R).
Eigen::VectorXd moment_residual(const SampleBatch& batch);

/// L = -H + lambda'R + (c/2)|R|^2.
double aug_lagrangian_value(double entropy, const Eigen::VectorXd& residual,
                            const LagrangianState& state);

/// Stochastic gradient of the augmented Lagrangian. The penalty term pairs
/// the constraint Jacobian averaged over the first half of the batch with the
/// constraint values averaged over the second half, keeping the product
/// unbiased. Requires an even batch size.
ParamGradient aug_lagrangian_grad(const FlowStack& stack, const ConstraintSet& constraints,
                                  const LagrangianState& state, const SampleBatch& batch,
                                  bool entropy_enabled = true);

}  // namespace mefn
