#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>

#include "mefn/constraints.hpp"
#include "mefn/rng.hpp"

namespace mefn {

/// Maximum entropy risk-neutral density with piecewise-linear log density
/// kinked at the strikes:
///   p(z) = exp(eta_0 z + sum_i eta_i (z - K_i)_+ - log_z),  z >= 0.
/// Integrable iff eta_0 + sum_i eta_i < 0.
struct GibbsOptionModel {
  Eigen::VectorXd eta;      // length m + 1: eta[0], then one per strike
  Eigen::VectorXd strikes;  // ascending, length m
  double discount = 1.0;
  double log_z = 0.0;       // cached log normalizer
};

/// Builds a model from natural parameters, computing the normalizer.
/// Throws when the tail slope is non-negative.
GibbsOptionModel make_gibbs_model(const Eigen::VectorXd& eta,
                                  const Eigen::VectorXd& strikes, double discount);

/// Fits the natural parameters so that the discounted expectation constraints
/// reproduce the chain: E[S] = spot/D and E[(S - K_i)_+] = price_i/D.
/// Safeguarded Newton on the convex dual with closed-form segment moments;
/// converged when the moment mismatch infinity-norm is <= 1e-10.
GibbsOptionModel gibbs_option_fit(const OptionChain& chain);

double gibbs_pdf(const GibbsOptionModel& model, double s);
double gibbs_cdf(const GibbsOptionModel& model, double s);
double gibbs_sample(const GibbsOptionModel& model, Rng& rng);

/// Discounted expected call payoff D * E[(S - K)_+], closed form.
double gibbs_price(const GibbsOptionModel& model, double strike);

/// E[S] under the model.
double gibbs_mean(const GibbsOptionModel& model);

void save_gibbs_model(const GibbsOptionModel& model, std::ostream& out);
void save_gibbs_model(const GibbsOptionModel& model, const std::string& path);

}  // namespace mefn
