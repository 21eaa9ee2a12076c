#include "mefn/gibbs_option.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mefn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Log density without the normalizer: eta_0 z + sum eta_i (z - K_i)_+.
double unnormalized_log_pdf(const Eigen::VectorXd& eta, const Eigen::VectorXd& strikes,
                            double z) {
  double v = eta[0] * z;
  for (Eigen::Index i = 0; i < strikes.size(); ++i) {
    if (z > strikes[i]) v += eta[i + 1] * (z - strikes[i]);
  }
  return v;
}

// Piecewise description: segment j covers [knots[j], knots[j+1]) with
// log density a[j] + b[j] z; the last segment extends to infinity.
struct Segments {
  std::vector<double> knots;  // m + 1 entries, starting at 0
  std::vector<double> a, b;   // m + 1 segments
  double shift = 0.0;         // max of the piecewise-linear log density
};

Segments build_segments(const Eigen::VectorXd& eta, const Eigen::VectorXd& strikes) {
  const int m = static_cast<int>(strikes.size());
  Segments seg;
  seg.knots.resize(m + 1);
  seg.a.resize(m + 1);
  seg.b.resize(m + 1);
  seg.knots[0] = 0.0;
  double slope = eta[0];
  double intercept = 0.0;
  seg.a[0] = intercept;
  seg.b[0] = slope;
  for (int i = 0; i < m; ++i) {
    seg.knots[i + 1] = strikes[i];
    slope += eta[i + 1];
    intercept -= eta[i + 1] * strikes[i];
    seg.a[i + 1] = intercept;
    seg.b[i + 1] = slope;
  }
  if (!(seg.b[m] < 0.0)) {
    throw std::runtime_error("gibbs model: non-integrable (tail slope >= 0)");
  }
  // Linear per segment, so the max lives at a knot.
  double shift = seg.a[0];  // value at z = 0
  for (int j = 0; j <= m; ++j) {
    shift = std::max(shift, seg.a[j] + seg.b[j] * seg.knots[j]);
    if (j < m) shift = std::max(shift, seg.a[j] + seg.b[j] * seg.knots[j + 1]);
  }
  seg.shift = shift;
  return seg;
}

// int_0^L t^k e^(b t) dt for k = 0, 1, 2; series near b L = 0.
void power_integrals(double b, double len, double out[3]) {
  if (std::isinf(len)) {
    // requires b < 0
    out[0] = -1.0 / b;
    out[1] = 1.0 / (b * b);
    out[2] = -2.0 / (b * b * b);
    return;
  }
  const double bl = b * len;
  if (std::fabs(bl) < 1e-3) {
    const double bl2 = bl * bl;
    const double bl3 = bl2 * bl;
    const double bl4 = bl2 * bl2;
    const double bl5 = bl4 * bl;
    out[0] = len * (1.0 + bl / 2.0 + bl2 / 6.0 + bl3 / 24.0 + bl4 / 120.0 + bl5 / 720.0);
    out[1] = len * len *
             (0.5 + bl / 3.0 + bl2 / 8.0 + bl3 / 30.0 + bl4 / 144.0 + bl5 / 840.0);
    out[2] = len * len * len *
             (1.0 / 3.0 + bl / 4.0 + bl2 / 10.0 + bl3 / 36.0 + bl4 / 168.0 + bl5 / 960.0);
    return;
  }
  const double e = std::exp(bl);
  out[0] = std::expm1(bl) / b;
  out[1] = (e * (bl - 1.0) + 1.0) / (b * b);
  out[2] = (e * (bl * bl - 2.0 * bl + 2.0) - 2.0) / (b * b * b);
}

// Shift-scaled moments int_lo^hi z^k exp(a + b z - shift) dz for k = 0, 1, 2.
struct MomentTriple {
  double i0 = 0.0, i1 = 0.0, i2 = 0.0;
};

MomentTriple scaled_moments(double lo, double hi, double a, double b, double shift) {
  const double scale = std::exp(a + b * lo - shift);
  double g[3];
  power_integrals(b, hi - lo, g);
  MomentTriple t;
  t.i0 = scale * g[0];
  t.i1 = scale * (lo * g[0] + g[1]);
  t.i2 = scale * (lo * lo * g[0] + 2.0 * lo * g[1] + g[2]);
  return t;
}

double segment_hi(const Segments& seg, int j) {
  return j + 1 < static_cast<int>(seg.knots.size()) ? seg.knots[j + 1] : kInf;
}

// Normalizer and the first two moments of the sufficient statistics
// phi = (z, (z - K_1)_+, ..., (z - K_m)_+).
struct GibbsMoments {
  double log_z = 0.0;
  Eigen::VectorXd first;    // E[phi]
  Eigen::MatrixXd second;   // E[phi phi']
};

GibbsMoments compute_moments(const Eigen::VectorXd& eta, const Eigen::VectorXd& strikes) {
  const int m = static_cast<int>(strikes.size());
  const Segments seg = build_segments(eta, strikes);
  std::vector<MomentTriple> per_segment(m + 1);
  double z_tilde = 0.0;
  for (int j = 0; j <= m; ++j) {
    per_segment[j] = scaled_moments(seg.knots[j], segment_hi(seg, j), seg.a[j], seg.b[j],
                                    seg.shift);
    z_tilde += per_segment[j].i0;
  }
  if (!(z_tilde > 0.0) || !std::isfinite(z_tilde)) {
    throw std::runtime_error("gibbs model: degenerate normalizer");
  }

  // Suffix sums over segments j..m; strike K_i coincides with knot i, so the
  // region above K_i is exactly segments i..m.
  std::vector<MomentTriple> suffix(m + 2);
  for (int j = m; j >= 0; --j) {
    suffix[j].i0 = suffix[j + 1].i0 + per_segment[j].i0;
    suffix[j].i1 = suffix[j + 1].i1 + per_segment[j].i1;
    suffix[j].i2 = suffix[j + 1].i2 + per_segment[j].i2;
  }

  GibbsMoments out;
  out.log_z = seg.shift + std::log(z_tilde);
  out.first.resize(m + 1);
  out.second.resize(m + 1, m + 1);
  out.first[0] = suffix[0].i1 / z_tilde;
  out.second(0, 0) = suffix[0].i2 / z_tilde;
  for (int i = 1; i <= m; ++i) {
    const double k_i = strikes[i - 1];
    const MomentTriple& s = suffix[i];
    out.first[i] = (s.i1 - k_i * s.i0) / z_tilde;
    out.second(0, i) = out.second(i, 0) = (s.i2 - k_i * s.i1) / z_tilde;
    for (int j = i; j <= m; ++j) {
      const double k_j = strikes[j - 1];
      const MomentTriple& sj = suffix[j];
      const double v = (sj.i2 - (k_i + k_j) * sj.i1 + k_i * k_j * sj.i0) / z_tilde;
      out.second(i, j) = out.second(j, i) = v;
    }
  }
  return out;
}

double log_normalizer(const Eigen::VectorXd& eta, const Eigen::VectorXd& strikes) {
  const Segments seg = build_segments(eta, strikes);
  double z_tilde = 0.0;
  for (int j = 0; j < static_cast<int>(seg.a.size()); ++j) {
    double g[3];
    power_integrals(seg.b[j], segment_hi(seg, j) - seg.knots[j], g);
    z_tilde += std::exp(seg.a[j] + seg.b[j] * seg.knots[j] - seg.shift) * g[0];
  }
  return seg.shift + std::log(z_tilde);
}

bool integrable(const Eigen::VectorXd& eta) { return eta.sum() < 0.0; }

}  // namespace

GibbsOptionModel make_gibbs_model(const Eigen::VectorXd& eta,
                                  const Eigen::VectorXd& strikes, double discount) {
  if (eta.size() != strikes.size() + 1) {
    throw std::invalid_argument("make_gibbs_model: eta must have one entry per strike plus one");
  }
  for (Eigen::Index i = 1; i < strikes.size(); ++i) {
    if (!(strikes[i] > strikes[i - 1])) {
      throw std::invalid_argument("make_gibbs_model: strikes must be strictly increasing");
    }
  }
  if (strikes.size() > 0 && !(strikes[0] > 0.0)) {
    throw std::invalid_argument("make_gibbs_model: strikes must be positive");
  }
  GibbsOptionModel model;
  model.eta = eta;
  model.strikes = strikes;
  model.discount = discount;
  model.log_z = log_normalizer(eta, strikes);
  return model;
}

GibbsOptionModel gibbs_option_fit(const OptionChain& chain) {
  chain.validate();
  const int m = static_cast<int>(chain.strikes.size());
  Eigen::VectorXd targets(m + 1);
  targets[0] = chain.spot / chain.discount;
  for (int i = 0; i < m; ++i) targets[i + 1] = chain.prices[i] / chain.discount;

  // Always-integrable start: the m = 0 analytic solution.
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(m + 1);
  eta[0] = -chain.discount / chain.spot;

  // Dual objective psi(eta) = log Z(eta) - eta' targets, smooth and convex on
  // the integrable region; Newton direction from the covariance Hessian.
  auto dual = [&](const Eigen::VectorXd& e) {
    return log_normalizer(e, chain.strikes) - e.dot(targets);
  };
  double psi = dual(eta);
  constexpr int kMaxIter = 200;
  double mismatch = kInf;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const GibbsMoments mom = compute_moments(eta, chain.strikes);
    const Eigen::VectorXd grad = mom.first - targets;
    mismatch = grad.cwiseAbs().maxCoeff();
    if (mismatch <= 1e-10) {
      return make_gibbs_model(eta, chain.strikes, chain.discount);
    }
    Eigen::MatrixXd hess = mom.second - mom.first * mom.first.transpose();
    Eigen::VectorXd step = -hess.ldlt().solve(grad);
    if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;

    double t = 1.0;
    bool accepted = false;
    const double slope = grad.dot(step);
    while (t >= 1e-14) {
      const Eigen::VectorXd candidate = eta + t * step;
      if (integrable(candidate)) {
        const double psi_new = dual(candidate);
        if (std::isfinite(psi_new) && psi_new <= psi + 1e-4 * t * slope) {
          eta = candidate;
          psi = psi_new;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "gibbs_option_fit: line search stalled at iteration " << iter
          << ", mismatch " << mismatch;
      throw std::runtime_error(msg.str());
    }
  }
  std::ostringstream msg;
  msg << "gibbs_option_fit: no convergence in " << kMaxIter << " iterations, mismatch "
      << mismatch;
  throw std::runtime_error(msg.str());
}

double gibbs_pdf(const GibbsOptionModel& model, double s) {
  if (s < 0.0) return 0.0;
  return std::exp(unnormalized_log_pdf(model.eta, model.strikes, s) - model.log_z);
}

double gibbs_cdf(const GibbsOptionModel& model, double s) {
  if (s <= 0.0) return 0.0;
  const Segments seg = build_segments(model.eta, model.strikes);
  double acc = 0.0;
  for (int j = 0; j < static_cast<int>(seg.a.size()); ++j) {
    const double lo = seg.knots[j];
    if (s <= lo) break;
    const double hi = std::min(s, segment_hi(seg, j));
    acc += scaled_moments(lo, hi, seg.a[j], seg.b[j], seg.shift).i0;
  }
  return std::min(1.0, acc * std::exp(seg.shift - model.log_z));
}

double gibbs_sample(const GibbsOptionModel& model, Rng& rng) {
  const Segments seg = build_segments(model.eta, model.strikes);
  const int n_seg = static_cast<int>(seg.a.size());
  std::vector<double> mass(n_seg);
  double total = 0.0;
  for (int j = 0; j < n_seg; ++j) {
    mass[j] = scaled_moments(seg.knots[j], segment_hi(seg, j), seg.a[j], seg.b[j],
                             seg.shift).i0;
    total += mass[j];
  }
  double remainder = rng.uniform01() * total;
  int j = 0;
  while (j + 1 < n_seg && remainder > mass[j]) {
    remainder -= mass[j];
    ++j;
  }
  // Invert int_{knot}^{x} exp(a + b z - shift) dz = remainder on segment j.
  const double b = seg.b[j];
  const double scale = std::exp(seg.a[j] + b * seg.knots[j] - seg.shift);
  double delta;
  if (std::fabs(b) < 1e-300) {
    delta = remainder / scale;
  } else {
    // remainder never exceeds the segment mass, so the argument stays > -1
    // up to rounding; clamp against that rounding.
    const double arg = std::max(remainder * b / scale, -1.0 + 1e-16);
    delta = std::log1p(arg) / b;
  }
  const double hi = segment_hi(seg, j);
  double x = seg.knots[j] + delta;
  if (!(x >= seg.knots[j])) x = seg.knots[j];
  if (x > hi) x = hi;
  return x;
}

double gibbs_price(const GibbsOptionModel& model, double strike) {
  if (strike < 0.0) strike = 0.0;
  const Segments seg = build_segments(model.eta, model.strikes);
  double num = 0.0;
  double z_tilde = 0.0;
  for (int j = 0; j < static_cast<int>(seg.a.size()); ++j) {
    const double hi = segment_hi(seg, j);
    z_tilde += scaled_moments(seg.knots[j], hi, seg.a[j], seg.b[j], seg.shift).i0;
    const double lo = std::max(seg.knots[j], strike);
    if (lo >= hi) continue;
    const MomentTriple t = scaled_moments(lo, hi, seg.a[j], seg.b[j], seg.shift);
    num += t.i1 - strike * t.i0;
  }
  return model.discount * num / z_tilde;
}

double gibbs_mean(const GibbsOptionModel& model) {
  return gibbs_price(model, 0.0) / model.discount;
}

void save_gibbs_model(const GibbsOptionModel& model, std::ostream& out) {
  char buf[40];
  out << "gibbs_option_model 1\n";
  out << "discount ";
  std::snprintf(buf, sizeof(buf), "%.17g", model.discount);
  out << buf << '\n';
  out << "log_z ";
  std::snprintf(buf, sizeof(buf), "%.17g", model.log_z);
  out << buf << '\n';
  out << "strikes";
  for (Eigen::Index i = 0; i < model.strikes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.strikes[i]);
    out << ' ' << buf;
  }
  out << '\n';
  out << "eta";
  for (Eigen::Index i = 0; i < model.eta.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.eta[i]);
    out << ' ' << buf;
  }
  out << '\n';
}

void save_gibbs_model(const GibbsOptionModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_gibbs_model(model, out);
}

}  // namespace mefn
