#include "mefn/flow.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mefn/special.hpp"

namespace mefn {

namespace {

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

struct PlanarCache {
  double s, t, h1, h2, uw, det;
};

PlanarCache planar_cache(const PlanarLayer& lay, const Eigen::VectorXd& z) {
  PlanarCache c;
  c.s = lay.w.dot(z) + lay.b;
  c.t = std::tanh(c.s);
  c.h1 = 1.0 - c.t * c.t;
  c.h2 = -2.0 * c.t * c.h1;
  c.uw = lay.u.dot(lay.w);
  c.det = 1.0 + c.uw * c.h1;
  return c;
}

struct RadialCache {
  Eigen::VectorXd v;
  double r, h, A, B;
};

RadialCache radial_cache(const RadialLayer& lay, const Eigen::VectorXd& z) {
  RadialCache c;
  c.v = z - lay.z0;
  c.r = c.v.norm();
  c.h = 1.0 / (lay.alpha + c.r);
  c.A = 1.0 + lay.beta * c.h;
  c.B = 1.0 + lay.beta * c.h - lay.beta * c.h * c.h * c.r;
  return c;
}

// Softmax over (z_1..z_p, 0) with max-subtraction; returns all p+1 components.
Eigen::VectorXd simplex_full(const Eigen::VectorXd& z) {
  const Eigen::Index p = z.size();
  double m = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) m = std::max(m, z[i]);
  Eigen::VectorXd e(p + 1);
  double denom = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    e[i] = std::exp(z[i] - m);
    denom += e[i];
  }
  e[p] = std::exp(-m);
  denom += e[p];
  return e / denom;
}

}  // namespace

Eigen::VectorXd planar_constrain(const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  const double norm2 = w.squaredNorm();
  if (!(norm2 > 0.0)) throw std::invalid_argument("degenerate projection vector");
  const double q = w.dot(u);
  const double m_q = -1.0 + softplus(q);
  return u + ((m_q - q) / norm2) * w;
}

Eigen::VectorXd layer_forward(const FlowLayer& layer, const Eigen::VectorXd& z) {
  if (const auto* p = std::get_if<PlanarLayer>(&layer)) {
    check_dim(z.size(), p->u.size(), "layer_forward");
    return z + p->u * std::tanh(p->w.dot(z) + p->b);
  }
  const auto& rl = std::get<RadialLayer>(layer);
  check_dim(z.size(), rl.z0.size(), "layer_forward");
  const Eigen::VectorXd v = z - rl.z0;
  return z + (rl.beta / (rl.alpha + v.norm())) * v;
}

double layer_log_det(const FlowLayer& layer, const Eigen::VectorXd& z) {
  if (const auto* p = std::get_if<PlanarLayer>(&layer)) {
    check_dim(z.size(), p->u.size(), "layer_log_det");
    const PlanarCache c = planar_cache(*p, z);
    return std::log(std::fabs(c.det));
  }
  const auto& rl = std::get<RadialLayer>(layer);
  check_dim(z.size(), rl.z0.size(), "layer_log_det");
  const RadialCache c = radial_cache(rl, z);
  const double d = static_cast<double>(z.size());
  return (d - 1.0) * std::log(std::fabs(c.A)) + std::log(std::fabs(c.B));
}

MapResult output_map_apply(const OutputMap& map, const Eigen::VectorXd& z) {
  switch (map.kind) {
    case OutputMap::Kind::Identity:
      return {z, 0.0};
    case OutputMap::Kind::Simplex: {
      const Eigen::Index p = z.size();
      const Eigen::VectorXd g = simplex_full(z);
      double m = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) m = std::max(m, z[i]);
      double denom = 0.0;
      for (Eigen::Index i = 0; i <= p; ++i) denom += std::exp((i < p ? z[i] : 0.0) - m);
      // sum_i log g_i over all p+1 components = sum z_i - (p+1) * logsumexp
      const double log_det = z.sum() - static_cast<double>(p + 1) * (m + std::log(denom));
      return {g.head(p), log_det};
    }
    case OutputMap::Kind::PositiveAffine: {
      if (map.a == 0.0) throw std::invalid_argument("non-invertible output map");
      check_dim(z.size(), 1, "output_map_apply");
      const double e = std::exp(map.a * z[0] + map.b);
      Eigen::VectorXd y(1);
      y[0] = e;
      return {y, std::log(std::fabs(map.a)) + map.a * z[0] + map.b};
    }
  }
  throw std::logic_error("output_map_apply: unknown kind");
}

ProjectedStack project(const FlowStack& stack) {
  ProjectedStack out;
  out.dim = stack.dim;
  out.output_map = stack.output_map;
  out.layers.reserve(stack.layers.size());
  for (const FlowLayer& lay : stack.layers) {
    if (const auto* p = std::get_if<PlanarLayer>(&lay)) {
      PlanarProjection proj;
      proj.norm2 = p->w.squaredNorm();
      if (!(proj.norm2 > 0.0)) throw std::invalid_argument("degenerate projection vector");
      proj.q = p->w.dot(p->u);
      proj.m_q = -1.0 + softplus(proj.q);
      proj.m_prime = sigmoid(proj.q);
      proj.layer.u = p->u + ((proj.m_q - proj.q) / proj.norm2) * p->w;
      proj.layer.w = p->w;
      proj.layer.b = p->b;
      out.layers.emplace_back(std::move(proj));
    } else {
      const auto& r = std::get<RadialLayer>(lay);
      RadialProjection proj;
      proj.layer.z0 = r.z0;
      proj.sig_alpha = sigmoid(r.alpha);
      proj.sig_beta = sigmoid(r.beta);
      proj.layer.alpha = softplus(r.alpha);
      proj.layer.beta = -proj.layer.alpha + softplus(r.beta);
      out.layers.emplace_back(std::move(proj));
    }
  }
  return out;
}

ForwardTrace forward_traced(const ProjectedStack& stack, const Eigen::VectorXd& z0) {
  check_dim(z0.size(), stack.dim, "forward_traced");
  ForwardTrace trace;
  trace.inputs.reserve(stack.layers.size() + 1);
  Eigen::VectorXd z = z0;
  double log_det = 0.0;
  for (const LayerProjection& proj : stack.layers) {
    trace.inputs.push_back(z);
    if (const auto* p = std::get_if<PlanarProjection>(&proj)) {
      const PlanarCache c = planar_cache(p->layer, z);
      z += p->layer.u * c.t;
      log_det += std::log(std::fabs(c.det));
    } else {
      const auto& r = std::get<RadialProjection>(proj);
      const RadialCache c = radial_cache(r.layer, z);
      z += (r.layer.beta * c.h) * c.v;
      const double d = static_cast<double>(z.size());
      log_det += (d - 1.0) * std::log(std::fabs(c.A)) + std::log(std::fabs(c.B));
    }
  }
  trace.inputs.push_back(z);
  MapResult mapped = output_map_apply(stack.output_map, z);
  trace.output = std::move(mapped.value);
  trace.log_det = log_det + mapped.log_det;
  return trace;
}

StackResult stack_forward(const FlowStack& stack, const Eigen::VectorXd& z0) {
  ForwardTrace trace = forward_traced(project(stack), z0);
  return {std::move(trace.output), trace.log_det};
}

double log_standard_normal(const Eigen::VectorXd& z) {
  const double d = static_cast<double>(z.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + z.squaredNorm());
}

double log_density(const FlowStack& stack, const Eigen::VectorXd& z0) {
  const StackResult res = stack_forward(stack, z0);
  return log_standard_normal(z0) - res.log_det;
}

namespace {

// Backward through the output map. Returns the cotangent of the map input and
// accumulates PositiveAffine parameter gradients.
Eigen::VectorXd output_map_pullback(const OutputMap& map, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& gy, double gl,
                                    ParamGradient& accum) {
  switch (map.kind) {
    case OutputMap::Kind::Identity:
      return gy;
    case OutputMap::Kind::Simplex: {
      const Eigen::Index p = z.size();
      const Eigen::VectorXd g = simplex_full(z);
      double dot = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) dot += gy[i] * g[i];
      Eigen::VectorXd gz(p);
      const double d = static_cast<double>(p + 1);
      for (Eigen::Index j = 0; j < p; ++j) {
        gz[j] = g[j] * (gy[j] - dot) + gl * (1.0 - d * g[j]);
      }
      return gz;
    }
    case OutputMap::Kind::PositiveAffine: {
      const double y = std::exp(map.a * z[0] + map.b);
      Eigen::VectorXd gz(1);
      gz[0] = map.a * (gy[0] * y + gl);
      accum.map_a += gy[0] * y * z[0] + gl * (1.0 / map.a + z[0]);
      accum.map_b += gy[0] * y + gl;
      return gz;
    }
  }
  throw std::logic_error("output_map_pullback: unknown kind");
}

// Backward through one planar layer, chaining through planar_constrain.
Eigen::VectorXd planar_pullback(const PlanarProjection& proj, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& gy, double gl, PlanarGrad& grad) {
  const PlanarLayer& lay = proj.layer;  // lay.u is u_hat
  const PlanarCache c = planar_cache(lay, z);

  const Eigen::VectorXd gu_hat = c.t * gy + (gl * c.h1 / c.det) * lay.w;
  const double gs = c.h1 * lay.u.dot(gy) + gl * c.uw * c.h2 / c.det;

  Eigen::VectorXd gz = gy + gs * lay.w;
  grad.b += gs;

  // Direct w dependence through s = w'z + b and det = 1 + (u_hat'w) h1.
  Eigen::VectorXd gw = gs * z + (gl * c.h1 / c.det) * lay.u;

  // Chain u_hat = u + a w back to the raw u and w,
  // a = (m(q) - q)/|w|^2, q = w'u.
  const double a = (proj.m_q - proj.q) / proj.norm2;
  const Eigen::VectorXd u_raw = lay.u - a * lay.w;
  const double k = gu_hat.dot(lay.w);
  const double aq = (proj.m_prime - 1.0) / proj.norm2;
  grad.u += gu_hat + (aq * k) * lay.w;
  gw += a * gu_hat + (aq * k) * u_raw - (2.0 * k * a / proj.norm2) * lay.w;
  grad.w += gw;
  return gz;
}

// Backward through one radial layer, chaining alpha = softplus(alpha_raw)
// and beta = -alpha + softplus(beta_raw).
Eigen::VectorXd radial_pullback(const RadialProjection& proj, const Eigen::VectorXd& z,
                                const Eigen::VectorXd& gy, double gl, RadialGrad& grad) {
  const RadialLayer& lay = proj.layer;  // effective alpha, beta
  const RadialCache c = radial_cache(lay, z);
  const double d = static_cast<double>(z.size());
  const double h = c.h;
  const double h2 = h * h;
  const double beta = lay.beta;
  const double gyv = gy.dot(c.v);

  // Cotangents along r, effective alpha, effective beta.
  double gr = beta * (-h2) * gyv;
  double ga = -beta * h2 * gyv;
  double gb = h * gyv;
  gr += gl * ((d - 1.0) * beta * (-h2) / c.A + 2.0 * beta * h2 * (h * c.r - 1.0) / c.B);
  ga += gl * (-(d - 1.0) * beta * h2 / c.A + beta * h2 * (2.0 * h * c.r - 1.0) / c.B);
  gb += gl * ((d - 1.0) * h / c.A + (h - h2 * c.r) / c.B);

  Eigen::VectorXd v_dir = Eigen::VectorXd::Zero(z.size());
  if (c.r > 1e-300) v_dir = c.v / c.r;

  const Eigen::VectorXd gz = (1.0 + beta * h) * gy + gr * v_dir;
  grad.z0 += -(beta * h) * gy - gr * v_dir;
  grad.alpha += (ga - gb) * proj.sig_alpha;
  grad.beta += gb * proj.sig_beta;
  return gz;
}

}  // namespace

void stack_pullback(const ProjectedStack& stack, const ForwardTrace& trace,
                    const Eigen::VectorXd& cotangent_out, double cotangent_logdet,
                    ParamGradient& accum) {
  Eigen::VectorXd gz = output_map_pullback(stack.output_map, trace.inputs.back(),
                                           cotangent_out, cotangent_logdet, accum);
  for (std::size_t i = stack.layers.size(); i-- > 0;) {
    const Eigen::VectorXd& z = trace.inputs[i];
    if (const auto* p = std::get_if<PlanarProjection>(&stack.layers[i])) {
      gz = planar_pullback(*p, z, gz, cotangent_logdet, std::get<PlanarGrad>(accum.layers[i]));
    } else {
      const auto& r = std::get<RadialProjection>(stack.layers[i]);
      gz = radial_pullback(r, z, gz, cotangent_logdet, std::get<RadialGrad>(accum.layers[i]));
    }
  }
}

ParamGradient stack_pullback(const FlowStack& stack, const Eigen::VectorXd& z0,
                             const Eigen::VectorXd& cotangent_out,
                             double cotangent_logdet) {
  const ProjectedStack proj = project(stack);
  const ForwardTrace trace = forward_traced(proj, z0);
  ParamGradient grad = ParamGradient::zeros_like(stack);
  stack_pullback(proj, trace, cotangent_out, cotangent_logdet, grad);
  return grad;
}

int FlowStack::parameter_count() const {
  int count = 0;
  for (const FlowLayer& lay : layers) {
    if (const auto* p = std::get_if<PlanarLayer>(&lay)) {
      count += static_cast<int>(p->u.size() + p->w.size()) + 1;
    } else {
      count += static_cast<int>(std::get<RadialLayer>(lay).z0.size()) + 2;
    }
  }
  if (output_map.kind == OutputMap::Kind::PositiveAffine) count += 2;
  return count;
}

Eigen::VectorXd FlowStack::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (const FlowLayer& lay : layers) {
    if (const auto* p = std::get_if<PlanarLayer>(&lay)) {
      flat.segment(at, p->u.size()) = p->u;
      at += p->u.size();
      flat.segment(at, p->w.size()) = p->w;
      at += p->w.size();
      flat[at++] = p->b;
    } else {
      const auto& r = std::get<RadialLayer>(lay);
      flat.segment(at, r.z0.size()) = r.z0;
      at += r.z0.size();
      flat[at++] = r.alpha;
      flat[at++] = r.beta;
    }
  }
  if (output_map.kind == OutputMap::Kind::PositiveAffine) {
    flat[at++] = output_map.a;
    flat[at++] = output_map.b;
  }
  return flat;
}

void FlowStack::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("set_parameters: wrong length");
  }
  Eigen::Index at = 0;
  for (FlowLayer& lay : layers) {
    if (auto* p = std::get_if<PlanarLayer>(&lay)) {
      p->u = flat.segment(at, p->u.size());
      at += p->u.size();
      p->w = flat.segment(at, p->w.size());
      at += p->w.size();
      p->b = flat[at++];
    } else {
      auto& r = std::get<RadialLayer>(lay);
      r.z0 = flat.segment(at, r.z0.size());
      at += r.z0.size();
      r.alpha = flat[at++];
      r.beta = flat[at++];
    }
  }
  if (output_map.kind == OutputMap::Kind::PositiveAffine) {
    output_map.a = flat[at++];
    output_map.b = flat[at++];
  }
}

ParamGradient ParamGradient::zeros_like(const FlowStack& stack) {
  ParamGradient grad;
  grad.has_map_params = stack.output_map.kind == OutputMap::Kind::PositiveAffine;
  grad.layers.reserve(stack.layers.size());
  for (const FlowLayer& lay : stack.layers) {
    if (const auto* p = std::get_if<PlanarLayer>(&lay)) {
      grad.layers.emplace_back(PlanarGrad{Eigen::VectorXd::Zero(p->u.size()),
                                          Eigen::VectorXd::Zero(p->w.size()), 0.0});
    } else {
      const auto& r = std::get<RadialLayer>(lay);
      grad.layers.emplace_back(RadialGrad{Eigen::VectorXd::Zero(r.z0.size()), 0.0, 0.0});
    }
  }
  return grad;
}

void ParamGradient::add(const ParamGradient& other) {
  if (other.layers.size() != layers.size()) {
    throw std::invalid_argument("ParamGradient::add: shape mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (auto* p = std::get_if<PlanarGrad>(&layers[i])) {
      const auto& q = std::get<PlanarGrad>(other.layers[i]);
      p->u += q.u;
      p->w += q.w;
      p->b += q.b;
    } else {
      auto& r = std::get<RadialGrad>(layers[i]);
      const auto& q = std::get<RadialGrad>(other.layers[i]);
      r.z0 += q.z0;
      r.alpha += q.alpha;
      r.beta += q.beta;
    }
  }
  map_a += other.map_a;
  map_b += other.map_b;
}

void ParamGradient::scale(double factor) {
  for (LayerGrad& lay : layers) {
    if (auto* p = std::get_if<PlanarGrad>(&lay)) {
      p->u *= factor;
      p->w *= factor;
      p->b *= factor;
    } else {
      auto& r = std::get<RadialGrad>(lay);
      r.z0 *= factor;
      r.alpha *= factor;
      r.beta *= factor;
    }
  }
  map_a *= factor;
  map_b *= factor;
}

Eigen::VectorXd ParamGradient::flatten() const {
  Eigen::Index count = 0;
  for (const LayerGrad& lay : layers) {
    if (const auto* p = std::get_if<PlanarGrad>(&lay)) {
      count += p->u.size() + p->w.size() + 1;
    } else {
      count += std::get<RadialGrad>(lay).z0.size() + 2;
    }
  }
  if (has_map_params) count += 2;
  Eigen::VectorXd flat(count);
  Eigen::Index at = 0;
  for (const LayerGrad& lay : layers) {
    if (const auto* p = std::get_if<PlanarGrad>(&lay)) {
      flat.segment(at, p->u.size()) = p->u;
      at += p->u.size();
      flat.segment(at, p->w.size()) = p->w;
      at += p->w.size();
      flat[at++] = p->b;
    } else {
      const auto& r = std::get<RadialGrad>(lay);
      flat.segment(at, r.z0.size()) = r.z0;
      at += r.z0.size();
      flat[at++] = r.alpha;
      flat[at++] = r.beta;
    }
  }
  if (has_map_params) {
    flat[at++] = map_a;
    flat[at++] = map_b;
  }
  return flat;
}

double invert_1d(const FlowStack& stack, double y) {
  if (stack.dim != 1) throw std::invalid_argument("invert_1d: stack must be 1-d");
  const ProjectedStack proj = project(stack);
  auto eval = [&](double z) {
    Eigen::VectorXd v(1);
    v[0] = z;
    return forward_traced(proj, v).output[0];
  };
  double lo = -60.0, hi = 60.0;
  double f_lo = eval(lo), f_hi = eval(hi);
  const bool increasing = f_hi > f_lo;
  for (int i = 0; i < 60 && ((increasing && (y < f_lo || y > f_hi)) ||
                             (!increasing && (y > f_lo || y < f_hi)));
       ++i) {
    lo *= 2.0;
    hi *= 2.0;
    f_lo = eval(lo);
    f_hi = eval(hi);
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f_mid = eval(mid);
    if ((f_mid < y) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

FlowStack make_planar_stack(int dim, int n_layers, const OutputMap& map, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("make_planar_stack: dim must be >= 1");
  FlowStack stack;
  stack.dim = dim;
  stack.output_map = map;
  stack.layers.reserve(static_cast<std::size_t>(n_layers));
  for (int i = 0; i < n_layers; ++i) {
    PlanarLayer lay;
    lay.u.resize(dim);
    lay.w.resize(dim);
    for (int j = 0; j < dim; ++j) lay.u[j] = 0.01 * rng.normal();
    for (int j = 0; j < dim; ++j) lay.w[j] = 0.01 * rng.normal();
    lay.b = 0.0;
    stack.layers.emplace_back(std::move(lay));
  }
  return stack;
}

namespace {

std::string hex_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str()) throw std::runtime_error("flow parameters: bad number '" + tok + "'");
  return v;
}

void write_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
  out << name;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << hex_double(v[i]);
  out << '\n';
}

Eigen::VectorXd read_vector(std::istringstream& line, Eigen::Index n) {
  Eigen::VectorXd v(n);
  std::string tok;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(line >> tok)) throw std::runtime_error("flow parameters: truncated vector");
    v[i] = parse_double(tok);
  }
  return v;
}

}  // namespace

void save_parameters(const FlowStack& stack, std::ostream& out) {
  out << "mefn_flow_params 1\n";
  out << "dim " << stack.dim << '\n';
  out << "layers " << stack.layers.size() << '\n';
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    if (const auto* p = std::get_if<PlanarLayer>(&stack.layers[i])) {
      out << "layer " << i << " planar\n";
      write_vector(out, "u", p->u);
      write_vector(out, "w", p->w);
      out << "b " << hex_double(p->b) << '\n';
    } else {
      const auto& r = std::get<RadialLayer>(stack.layers[i]);
      out << "layer " << i << " radial\n";
      write_vector(out, "z0", r.z0);
      out << "alpha " << hex_double(r.alpha) << '\n';
      out << "beta " << hex_double(r.beta) << '\n';
    }
  }
  switch (stack.output_map.kind) {
    case OutputMap::Kind::Identity:
      out << "output_map identity\n";
      break;
    case OutputMap::Kind::Simplex:
      out << "output_map simplex\n";
      break;
    case OutputMap::Kind::PositiveAffine:
      out << "output_map positive_affine\n";
      out << "a " << hex_double(stack.output_map.a) << '\n';
      out << "b " << hex_double(stack.output_map.b) << '\n';
      break;
  }
}

void save_parameters(const FlowStack& stack, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_parameters(stack, out);
}

FlowStack load_parameters(std::istream& in) {
  auto next_line = [&in](std::istringstream& line) {
    std::string raw;
    if (!std::getline(in, raw)) throw std::runtime_error("flow parameters: truncated file");
    line.clear();
    line.str(raw);
  };
  std::istringstream line;
  std::string tok;
  int version = 0;
  next_line(line);
  line >> tok >> version;
  if (tok != "mefn_flow_params" || version != 1) {
    throw std::runtime_error("flow parameters: unrecognized header");
  }
  FlowStack stack;
  std::size_t n_layers = 0;
  next_line(line);
  line >> tok >> stack.dim;
  if (tok != "dim") throw std::runtime_error("flow parameters: expected dim");
  next_line(line);
  line >> tok >> n_layers;
  if (tok != "layers") throw std::runtime_error("flow parameters: expected layers");
  for (std::size_t i = 0; i < n_layers; ++i) {
    std::size_t index = 0;
    std::string kind;
    next_line(line);
    line >> tok >> index >> kind;
    if (tok != "layer" || index != i) throw std::runtime_error("flow parameters: bad layer header");
    if (kind == "planar") {
      PlanarLayer lay;
      next_line(line);
      line >> tok;
      lay.u = read_vector(line, stack.dim);
      next_line(line);
      line >> tok;
      lay.w = read_vector(line, stack.dim);
      next_line(line);
      line >> tok >> tok;
      lay.b = parse_double(tok);
      stack.layers.emplace_back(std::move(lay));
    } else if (kind == "radial") {
      RadialLayer lay;
      next_line(line);
      line >> tok;
      lay.z0 = read_vector(line, stack.dim);
      next_line(line);
      line >> tok >> tok;
      lay.alpha = parse_double(tok);
      next_line(line);
      line >> tok >> tok;
      lay.beta = parse_double(tok);
      stack.layers.emplace_back(std::move(lay));
    } else {
      throw std::runtime_error("flow parameters: unknown layer kind '" + kind + "'");
    }
  }
  next_line(line);
  std::string kind;
  line >> tok >> kind;
  if (tok != "output_map") throw std::runtime_error("flow parameters: expected output_map");
  if (kind == "identity") {
    stack.output_map = OutputMap::identity();
  } else if (kind == "simplex") {
    stack.output_map = OutputMap::simplex();
  } else if (kind == "positive_affine") {
    double a, b;
    next_line(line);
    line >> tok >> tok;
    a = parse_double(tok);
    next_line(line);
    line >> tok >> tok;
    b = parse_double(tok);
    stack.output_map = OutputMap::positive_affine(a, b);
  } else {
    throw std::runtime_error("flow parameters: unknown output map '" + kind + "'");
  }
  return stack;
}

FlowStack load_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_parameters(in);
}

}  // namespace mefn
