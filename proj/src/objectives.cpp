#include "mefn/objectives.hpp"

#include <stdexcept>

namespace mefn {

SampleBatch draw_batch(const FlowStack& stack, const ConstraintSet& constraints, int n,
                       Rng& rng) {
  if (n < 2) throw std::invalid_argument("draw_batch: need n >= 2");
  const ProjectedStack proj = project(stack);
  SampleBatch batch;
  batch.base_points.resize(n, stack.dim);
  batch.log_densities.resize(n);
  batch.constraint_values.resize(n, constraints.m);
  Eigen::VectorXd z0(stack.dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < stack.dim; ++j) z0[j] = rng.normal();
    batch.base_points.row(i) = z0;
    const ForwardTrace trace = forward_traced(proj, z0);
    if (i == 0) batch.transformed.resize(n, trace.output.size());
    batch.transformed.row(i) = trace.output;
    batch.log_densities[i] = log_standard_normal(z0) - trace.log_det;
    batch.constraint_values.row(i) = constraints.evaluate(trace.output);
  }
  return batch;
}

double entropy_estimate(const SampleBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("entropy_estimate: empty batch");
  return -batch.log_densities.mean();
}

Eigen::VectorXd moment_residual(const SampleBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("moment_residual: empty batch");
  return batch.constraint_values.colwise().mean();
}

double aug_lagrangian_value(double entropy, const Eigen::VectorXd& residual,
                            const LagrangianState& state) {
  if (residual.size() != state.lambda.size()) {
    throw std::invalid_argument("aug_lagrangian_value: dimension mismatch");
  }
  return -entropy + state.lambda.dot(residual) + 0.5 * state.c * residual.squaredNorm();
}

ParamGradient aug_lagrangian_grad(const FlowStack& stack, const ConstraintSet& constraints,
                                  const LagrangianState& state, const SampleBatch& batch,
                                  bool entropy_enabled) {
  const Eigen::Index n = batch.size();
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("aug_lagrangian_grad: batch size must be even and >= 2");
  }
  if (state.lambda.size() != constraints.m) {
    throw std::invalid_argument("aug_lagrangian_grad: lambda dimension mismatch");
  }
  const ProjectedStack proj = project(stack);
  ParamGradient grad = ParamGradient::zeros_like(stack);

  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::Index half = n / 2;
  // Constraint mean over the second half; paired with first-half Jacobians so
  // the product of the two independent averages stays unbiased.
  const Eigen::VectorXd second_half_mean =
      batch.constraint_values.bottomRows(n - half).colwise().mean();

  const double cot_logdet = entropy_enabled ? -inv_n : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z0 = batch.base_points.row(i);
    const ForwardTrace trace = forward_traced(proj, z0);
    const Eigen::MatrixXd jac = constraints.output_gradient(trace.output);
    Eigen::VectorXd cot_out = inv_n * (jac.transpose() * state.lambda);
    if (i < half) {
      cot_out += (state.c * 2.0 * inv_n) * (jac.transpose() * second_half_mean);
    }
    stack_pullback(proj, trace, cot_out, cot_logdet, grad);
  }
  return grad;
}

}  // namespace mefn
