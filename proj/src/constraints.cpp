#include "mefn/constraints.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mefn/special.hpp"

namespace mefn {

namespace {

// Keeps log arguments away from the underflow regime; the simplex output map
// already produces strictly interior points.
double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

}  // namespace

ConstraintSet dirichlet_constraints(const Eigen::VectorXd& kappa) {
  const int d = static_cast<int>(kappa.size());
  if (d < 2) throw std::invalid_argument("dirichlet_constraints: need d >= 2");
  ConstraintSet set;
  set.m = d;
  set.dim = d - 1;
  set.domain = ConstraintSet::Domain::Simplex;
  set.evaluate = [kappa, d](const Eigen::VectorXd& s) {
    if (s.size() != d - 1) throw std::invalid_argument("dirichlet constraints: bad point size");
    double sum = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      if (!(s[k] > 0.0)) throw std::invalid_argument("dirichlet constraints: point not interior");
      sum += s[k];
    }
    const double last = 1.0 - sum;
    if (!(last > 0.0)) throw std::invalid_argument("dirichlet constraints: point not interior");
    Eigen::VectorXd t(d);
    for (Eigen::Index k = 0; k < s.size(); ++k) t[k] = safe_log(s[k]) - kappa[k];
    t[d - 1] = safe_log(last) - kappa[d - 1];
    return t;
  };
  set.output_gradient = [d](const Eigen::VectorXd& s) {
    const double last = 1.0 - s.sum();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d - 1);
    for (Eigen::Index k = 0; k < s.size(); ++k) jac(k, k) = 1.0 / s[k];
    jac.row(d - 1).setConstant(-1.0 / last);
    return jac;
  };
  return set;
}

Eigen::VectorXd kappa_from_alpha(const Eigen::VectorXd& alpha) {
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw std::invalid_argument("kappa_from_alpha: alpha must be positive");
  }
  const double psi_total = digamma(alpha.sum());
  Eigen::VectorXd kappa(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) kappa[k] = digamma(alpha[k]) - psi_total;
  return kappa;
}

void OptionChain::validate() const {
  if (!(spot > 0.0)) throw std::invalid_argument("option chain: spot must be positive");
  if (!(discount > 0.0) || discount > 1.0) {
    throw std::invalid_argument("option chain: discount must lie in (0, 1]");
  }
  if (strikes.size() != prices.size()) {
    throw std::invalid_argument("option chain: strikes and prices differ in length");
  }
  for (Eigen::Index i = 0; i < strikes.size(); ++i) {
    if (!(strikes[i] > 0.0)) throw std::invalid_argument("option chain: strikes must be positive");
    if (i > 0 && !(strikes[i] > strikes[i - 1])) {
      throw std::invalid_argument("option chain: strikes must be strictly increasing");
    }
    if (!(prices[i] > 0.0)) throw std::invalid_argument("option chain: prices must be positive");
    if (i > 0 && !(prices[i] < prices[i - 1])) {
      throw std::invalid_argument("option chain: prices must decrease in strike");
    }
    if (!(prices[i] < discount * spot)) {
      throw std::invalid_argument("option chain: price exceeds discounted spot");
    }
  }
}

ConstraintSet option_constraints(const OptionChain& chain) {
  chain.validate();
  const int m = static_cast<int>(chain.strikes.size());
  ConstraintSet set;
  set.m = m + 1;
  set.dim = 1;
  set.domain = ConstraintSet::Domain::PositiveHalfLine;
  const Eigen::VectorXd strikes = chain.strikes;
  const Eigen::VectorXd prices = chain.prices;
  const double discount = chain.discount;
  const double spot = chain.spot;
  set.evaluate = [strikes, prices, discount, spot, m](const Eigen::VectorXd& s) {
    if (s.size() != 1) throw std::invalid_argument("option constraints: bad point size");
    Eigen::VectorXd t(m + 1);
    for (int i = 0; i < m; ++i) {
      t[i] = discount * std::max(s[0] - strikes[i], 0.0) - prices[i];
    }
    t[m] = discount * s[0] - spot;
    return t;
  };
  // Payoff rows use the left derivative at the kink (gradient 0 at s == K).
  set.output_gradient = [strikes, discount, m](const Eigen::VectorXd& s) {
    Eigen::MatrixXd jac(m + 1, 1);
    for (int i = 0; i < m; ++i) jac(i, 0) = s[0] > strikes[i] ? discount : 0.0;
    jac(m, 0) = discount;
    return jac;
  };
  return set;
}

OptionChain load_option_chain_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open option chain " + path);
  OptionChain chain;
  bool have_spot = false, have_discount = false, have_header = false;
  std::vector<double> strikes, prices;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty() || raw[0] == '#') continue;
    if (raw.rfind("spot=", 0) == 0) {
      chain.spot = std::stod(raw.substr(5));
      have_spot = true;
      continue;
    }
    if (raw.rfind("discount=", 0) == 0) {
      chain.discount = std::stod(raw.substr(9));
      have_discount = true;
      continue;
    }
    if (raw.rfind("strike", 0) == 0) {
      have_header = true;
      continue;
    }
    std::istringstream row(raw);
    std::string strike_tok, price_tok;
    if (!std::getline(row, strike_tok, ',') || !std::getline(row, price_tok, ',')) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected strike,price");
    }
    strikes.push_back(std::stod(strike_tok));
    prices.push_back(std::stod(price_tok));
  }
  if (!have_spot || !have_discount) {
    throw std::runtime_error(path + ": missing spot= or discount= metadata");
  }
  if (!have_header) throw std::runtime_error(path + ": missing strike,price header");
  chain.strikes = Eigen::Map<Eigen::VectorXd>(strikes.data(), static_cast<Eigen::Index>(strikes.size()));
  chain.prices = Eigen::Map<Eigen::VectorXd>(prices.data(), static_cast<Eigen::Index>(prices.size()));
  chain.validate();
  return chain;
}

void save_option_chain_csv(const OptionChain& chain, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", chain.spot);
  out << "spot=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", chain.discount);
  out << "discount=" << buf << '\n';
  out << "strike,price\n";
  for (Eigen::Index i = 0; i < chain.strikes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", chain.strikes[i]);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", chain.prices[i]);
    out << buf << '\n';
  }
}

}  // namespace mefn
