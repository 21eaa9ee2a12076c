#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "mefn/rng.hpp"

namespace mefn {

inline constexpr double kInvertibilityMargin = 1e-7;

/// Planar transformation z -> z + u * tanh(w'z + b). Stack evaluation treats
/// the stored u as raw and replaces it by the invertibility-constrained u_hat;
/// the layer-level functions below take u as already constrained.
struct PlanarLayer {
  Eigen::VectorXd u;
  Eigen::VectorXd w;
  double b = 0.0;
};

/// Radial transformation z -> z + beta * (z - z0) / (alpha + |z - z0|).
/// Stack evaluation derives effective alpha = softplus(alpha) > 0 and
/// effective beta = -alpha + softplus(beta) >= -alpha from the stored raw
/// scalars; the layer-level functions take alpha and beta as effective.
struct RadialLayer {
  Eigen::VectorXd z0;
  double alpha = 1.0;
  double beta = 0.0;
};

using FlowLayer = std::variant<PlanarLayer, RadialLayer>;

/// Final map from flow space onto the target support.
struct OutputMap {
  enum class Kind {
    Identity,        // R^d, no parameters
    Simplex,         // R^(d-1) -> interior of {s >= 0, sum s < 1}
    PositiveAffine,  // scalar z -> exp(a z + b), a and b trainable
  };
  Kind kind = Kind::Identity;
  double a = 1.0;
  double b = 0.0;

  static OutputMap identity() { return {Kind::Identity, 1.0, 0.0}; }
  static OutputMap simplex() { return {Kind::Simplex, 1.0, 0.0}; }
  static OutputMap positive_affine(double a, double b) {
    return {Kind::PositiveAffine, a, b};
  }
};

/// Ordered invertible layers plus an output map; owns all trainable
/// parameters. Layer parameters are stored raw and constrained at evaluation.
struct FlowStack {
  int dim = 1;
  std::vector<FlowLayer> layers;
  OutputMap output_map;

  int parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
};

/// Gradient with one slot per trainable parameter, mirroring a FlowStack.
struct PlanarGrad {
  Eigen::VectorXd u;
  Eigen::VectorXd w;
  double b = 0.0;
};
struct RadialGrad {
  Eigen::VectorXd z0;
  double alpha = 0.0;
  double beta = 0.0;
};
using LayerGrad = std::variant<PlanarGrad, RadialGrad>;

struct ParamGradient {
  std::vector<LayerGrad> layers;
  bool has_map_params = false;  // true iff the output map is trainable
  double map_a = 0.0;
  double map_b = 0.0;

  static ParamGradient zeros_like(const FlowStack& stack);
  void add(const ParamGradient& other);
  void scale(double factor);
  Eigen::VectorXd flatten() const;  // same ordering as FlowStack::parameters
};

/// Invertibility reparameterization for planar layers: returns u_hat with
/// w'u_hat = -1 + softplus(w'u) >= -1 + kInvertibilityMargin.
Eigen::VectorXd planar_constrain(const Eigen::VectorXd& u, const Eigen::VectorXd& w);

/// Single-layer forward map; parameters are taken as already constrained.
Eigen::VectorXd layer_forward(const FlowLayer& layer, const Eigen::VectorXd& z);

/// Log |det J| of layer_forward at z; parameters already constrained.
double layer_log_det(const FlowLayer& layer, const Eigen::VectorXd& z);

/// Applies the output map, returning the mapped point and its log |det J|.
struct MapResult {
  Eigen::VectorXd value;
  double log_det = 0.0;
};
MapResult output_map_apply(const OutputMap& map, const Eigen::VectorXd& z);

/// A stack with constrained (effective) layer parameters plus the scalars
/// needed to chain gradients back to the raw parameterization.
struct PlanarProjection {
  PlanarLayer layer;  // layer.u is the constrained u_hat
  double q = 0.0;     // w'u of the raw parameters
  double norm2 = 0.0; // |w|^2
  double m_q = 0.0;   // -1 + softplus(q)
  double m_prime = 0.0;
};
struct RadialProjection {
  RadialLayer layer;  // effective alpha, beta
  double sig_alpha = 0.0;
  double sig_beta = 0.0;
};
using LayerProjection = std::variant<PlanarProjection, RadialProjection>;

struct ProjectedStack {
  int dim = 1;
  std::vector<LayerProjection> layers;
  OutputMap output_map;
};

ProjectedStack project(const FlowStack& stack);

/// Cached forward pass: inputs to every layer, the output-map input, the
/// final point and the accumulated log-determinant.
struct ForwardTrace {
  std::vector<Eigen::VectorXd> inputs;  // inputs[i] feeds layer i; back() feeds the map
  Eigen::VectorXd output;
  double log_det = 0.0;
};

ForwardTrace forward_traced(const ProjectedStack& stack, const Eigen::VectorXd& z0);

struct StackResult {
  Eigen::VectorXd output;
  double log_det = 0.0;
};

/// Composes all layers then the output map, summing per-layer log-dets.
StackResult stack_forward(const FlowStack& stack, const Eigen::VectorXd& z0);

/// log p(f(z0)) at the transformed point, with a standard normal base.
double log_density(const FlowStack& stack, const Eigen::VectorXd& z0);

/// log of the standard normal density of dimension z.size().
double log_standard_normal(const Eigen::VectorXd& z);

/// Reverse accumulation of
///   d/dphi [ cotangent_out' f(z0) + cotangent_logdet * log_det(z0) ]
/// with respect to the raw parameters; the gradient is chained through the
/// invertibility reparameterization.
void stack_pullback(const ProjectedStack& stack, const ForwardTrace& trace,
                    const Eigen::VectorXd& cotangent_out, double cotangent_logdet,
                    ParamGradient& accum);
ParamGradient stack_pullback(const FlowStack& stack, const Eigen::VectorXd& z0,
                             const Eigen::VectorXd& cotangent_out,
                             double cotangent_logdet);

/// Solves f(z0) = y by bisection for a one-dimensional stack (the composite
/// map is strictly monotone by construction).
double invert_1d(const FlowStack& stack, double y);

/// Near-identity initialization: u, w ~ N(0, 0.01^2) i.i.d., b = 0.
FlowStack make_planar_stack(int dim, int n_layers, const OutputMap& map, Rng& rng);

/// Parameter serialization as a flat ordered list of named arrays; the
/// round-trip is bit-exact.
void save_parameters(const FlowStack& stack, std::ostream& out);
void save_parameters(const FlowStack& stack, const std::string& path);
FlowStack load_parameters(std::istream& in);
FlowStack load_parameters(const std::string& path);

}  // namespace mefn
