#include "mefn/dirichlet.hpp"

#include <cmath>
#include <stdexcept>

#include "mefn/special.hpp"

namespace mefn {

DirichletParams::DirichletParams(Eigen::VectorXd a) : alpha(std::move(a)) {
  if (alpha.size() < 2) throw std::invalid_argument("DirichletParams: need d >= 2");
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw std::invalid_argument("DirichletParams: alpha must be positive");
  }
}

double dirichlet_log_pdf(const DirichletParams& params, const Eigen::VectorXd& s) {
  const int d = params.d();
  if (s.size() != d - 1) throw std::invalid_argument("dirichlet_log_pdf: bad point size");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (!(s[k] > 0.0)) throw std::invalid_argument("dirichlet_log_pdf: point not interior");
    sum += s[k];
  }
  const double last = 1.0 - sum;
  if (!(last > 0.0)) throw std::invalid_argument("dirichlet_log_pdf: point not interior");
  double log_pdf = -log_multivariate_beta(params.alpha);
  for (Eigen::Index k = 0; k < s.size(); ++k) log_pdf += (params.alpha[k] - 1.0) * std::log(s[k]);
  log_pdf += (params.alpha[d - 1] - 1.0) * std::log(last);
  return log_pdf;
}

double dirichlet_entropy(const DirichletParams& params) {
  const double d = static_cast<double>(params.d());
  const double alpha0 = params.alpha.sum();
  double entropy = log_multivariate_beta(params.alpha) + (alpha0 - d) * digamma(alpha0);
  for (Eigen::Index k = 0; k < params.alpha.size(); ++k) {
    entropy -= (params.alpha[k] - 1.0) * digamma(params.alpha[k]);
  }
  return entropy;
}

Eigen::VectorXd dirichlet_sample(const DirichletParams& params, Rng& rng) {
  const int d = params.d();
  Eigen::VectorXd gammas(d);
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    gammas[k] = rng.gamma(params.alpha[k]);
    total += gammas[k];
  }
  return gammas.head(d - 1) / total;
}

double dirichlet_kl(const DirichletParams& p, const DirichletParams& q) {
  if (p.d() != q.d()) throw std::invalid_argument("dirichlet_kl: dimension mismatch");
  const double psi0 = digamma(p.alpha.sum());
  double kl = log_multivariate_beta(q.alpha) - log_multivariate_beta(p.alpha);
  for (Eigen::Index k = 0; k < p.alpha.size(); ++k) {
    kl += (p.alpha[k] - q.alpha[k]) * (digamma(p.alpha[k]) - psi0);
  }
  return kl;
}

DirichletParams dirichlet_fit_mle(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const int d = static_cast<int>(samples.cols()) + 1;
  if (n < 2) throw std::invalid_argument("dirichlet_fit_mle: need at least two samples");
  // Sufficient statistics: mean log of each coordinate, last included.
  Eigen::VectorXd mean_log = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < d - 1; ++k) {
      const double s = std::max(samples(i, k), 1e-300);
      mean_log[k] += std::log(s);
      sum += samples(i, k);
    }
    mean_log[d - 1] += std::log(std::max(1.0 - sum, 1e-300));
  }
  mean_log /= static_cast<double>(n);

  // Inverse digamma by Newton (Minka's initialization).
  auto inv_digamma = [](double y) {
    double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y - digamma(1.0));
    for (int it = 0; it < 30; ++it) {
      const double f = digamma(x) - y;
      // psi'(x) approximated by a central difference; accurate enough here.
      const double h = 1e-5 * std::max(1.0, x);
      const double fp = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
      const double step = f / fp;
      x -= step;
      if (x <= 0.0) x = 1e-8;
      if (std::fabs(step) < 1e-12 * std::max(1.0, x)) break;
    }
    return x;
  };

  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(d);
  for (int it = 0; it < 500; ++it) {
    const double psi_total = digamma(alpha.sum());
    Eigen::VectorXd next(d);
    double shift = 0.0;
    for (int k = 0; k < d; ++k) {
      next[k] = inv_digamma(psi_total + mean_log[k]);
      shift = std::max(shift, std::fabs(next[k] - alpha[k]));
    }
    alpha = next;
    if (shift < 1e-10) break;
  }
  return DirichletParams(alpha);
}

}  // namespace mefn
