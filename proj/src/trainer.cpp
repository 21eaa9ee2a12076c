#include "mefn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mefn/special.hpp"

namespace mefn {

void TrainConfig::validate() const {
  if (k_max < 1 || i_max < 0) throw std::invalid_argument("train config: bad iteration counts");
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("train config: n must be even and >= 2");
  if (n_tilde < 2) throw std::invalid_argument("train config: n_tilde must be >= 2");
  if (!(beta > 1.0)) throw std::invalid_argument("train config: beta must exceed 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("train config: gamma must lie in (0,1)");
  if (!(c0 > 0.0)) throw std::invalid_argument("train config: c0 must be positive");
  if (residual_batches < 2 || residual_batch_size < 2) {
    throw std::invalid_argument("train config: residual sampling protocol too small");
  }
}

void sgd_step(TrainState& state, const ParamGradient& gradient) {
  const Eigen::VectorXd g = gradient.flatten();
  Eigen::VectorXd phi = state.stack.parameters();
  if (g.size() != phi.size()) throw std::invalid_argument("sgd_step: gradient shape mismatch");
  OptimizerState& opt = state.opt;
  if (opt.acc_grad_sq.size() != g.size()) {
    opt.acc_grad_sq = Eigen::VectorXd::Zero(g.size());
    opt.acc_delta_sq = Eigen::VectorXd::Zero(g.size());
    opt.moment1 = Eigen::VectorXd::Zero(g.size());
    opt.moment2 = Eigen::VectorXd::Zero(g.size());
    opt.step = 0;
  }
  ++opt.step;
  const OptimizerConfig& cfg = state.opt_config;
  if (cfg.kind == OptimizerConfig::Kind::Adadelta) {
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      opt.acc_grad_sq[j] = cfg.rho * opt.acc_grad_sq[j] + (1.0 - cfg.rho) * g[j] * g[j];
      const double delta = -std::sqrt(opt.acc_delta_sq[j] + cfg.epsilon) /
                           std::sqrt(opt.acc_grad_sq[j] + cfg.epsilon) * g[j];
      opt.acc_delta_sq[j] = cfg.rho * opt.acc_delta_sq[j] + (1.0 - cfg.rho) * delta * delta;
      phi[j] += delta;
    }
  } else {
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      opt.moment1[j] = cfg.beta1 * opt.moment1[j] + (1.0 - cfg.beta1) * g[j];
      opt.moment2[j] = cfg.beta2 * opt.moment2[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = opt.moment1[j] / bias1;
      const double v_hat = opt.moment2[j] / bias2;
      phi[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
  state.stack.set_parameters(phi);
}

void lambda_update(TrainState& state, const Eigen::VectorXd& residual_batch_mean) {
  if (residual_batch_mean.size() != state.lagrangian.lambda.size()) {
    throw std::invalid_argument("lambda_update: dimension mismatch");
  }
  state.lagrangian.lambda += state.lagrangian.c * residual_batch_mean;
}

double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_one_sided_p: need at least two samples per set");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (double v : a) mean_a += v;
  for (double v : b) mean_b += v;
  mean_a /= na;
  mean_b /= nb;
  double var_a = 0.0, var_b = 0.0;
  for (double v : a) var_a += (v - mean_a) * (v - mean_a);
  for (double v : b) var_b += (v - mean_b) * (v - mean_b);
  var_a /= na - 1.0;
  var_b /= nb - 1.0;
  const double se2 = var_a / na + var_b / nb;
  if (se2 <= 0.0) {
    // Zero variance in both samples: a pure mean comparison, ties at 0.5.
    if (mean_a > mean_b) return 0.0;
    if (mean_a < mean_b) return 1.0;
    return 0.5;
  }
  const double t = (mean_a - mean_b) / std::sqrt(se2);
  const double num = se2 * se2;
  const double den = (var_a / na) * (var_a / na) / (na - 1.0) +
                     (var_b / nb) * (var_b / nb) / (nb - 1.0);
  const double nu = num / den;
  return 1.0 - student_t_cdf(t, nu);
}

CUpdateResult c_update(TrainState& state, const std::vector<double>& residuals_new,
                       const std::vector<double>& residuals_old, double gamma, double beta) {
  std::vector<double> scaled_old(residuals_old.size());
  for (std::size_t i = 0; i < residuals_old.size(); ++i) scaled_old[i] = gamma * residuals_old[i];
  CUpdateResult result;
  result.p_value = welch_one_sided_p(residuals_new, scaled_old);
  result.updated = state.rng.bernoulli(1.0 - result.p_value);
  if (result.updated) state.lagrangian.c *= beta;
  return result;
}

namespace {

std::vector<double> residual_norm_samples(TrainState& state, const ConstraintSet& constraints,
                                          const TrainConfig& config) {
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(config.residual_batches));
  for (int b = 0; b < config.residual_batches; ++b) {
    const SampleBatch batch =
        draw_batch(state.stack, constraints, config.residual_batch_size, state.rng);
    norms.push_back(moment_residual(batch).norm());
  }
  return norms;
}

}  // namespace

TrainReport train(const TrainConfig& config, const FlowStack& stack0,
                  const ConstraintSet& constraints) {
  config.validate();
  TrainState state{stack0,
                   LagrangianState{config.lambda0.size() > 0
                                       ? config.lambda0
                                       : Eigen::VectorXd::Zero(constraints.m),
                                   config.c0},
                   config.optimizer,
                   OptimizerState{},
                   0,
                   0,
                   {},
                   Rng(config.seed)};
  if (state.lagrangian.lambda.size() != constraints.m) {
    throw std::invalid_argument("train: lambda0 dimension mismatch");
  }

  TrainReport report;
  report.trace.reserve(static_cast<std::size_t>(config.k_max) *
                       static_cast<std::size_t>(std::max(config.i_max, 1)));

  state.residuals_prev = residual_norm_samples(state, constraints, config);

  for (int k = 1; k <= config.k_max; ++k) {
    state.outer_iter = k;
    for (int i = 1; i <= config.i_max; ++i) {
      state.inner_iter = i;
      const SampleBatch batch = draw_batch(state.stack, constraints, config.n, state.rng);
      const double entropy = entropy_estimate(batch);
      const Eigen::VectorXd residual = moment_residual(batch);
      const double loss =
          aug_lagrangian_value(config.entropy_enabled ? entropy : 0.0, residual,
                               state.lagrangian);
      InnerTraceRow row{k, i, entropy, residual.norm(), loss, state.lagrangian.c,
                        state.lagrangian.lambda};
      report.trace.push_back(std::move(row));
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at outer " << k << " inner " << i;
        report.final_stack = state.stack;
        throw TrainingError(msg.str(), std::move(report));
      }
      const ParamGradient grad = aug_lagrangian_grad(state.stack, constraints,
                                                     state.lagrangian, batch,
                                                     config.entropy_enabled);
      if (!grad.flatten().allFinite()) {
        std::ostringstream msg;
        msg << "train: non-finite gradient at outer " << k << " inner " << i;
        report.final_stack = state.stack;
        throw TrainingError(msg.str(), std::move(report));
      }
      sgd_step(state, grad);
    }

    const SampleBatch fresh = draw_batch(state.stack, constraints, config.n_tilde, state.rng);
    lambda_update(state, moment_residual(fresh));

    const std::vector<double> residuals_new =
        residual_norm_samples(state, constraints, config);
    const CUpdateResult cu =
        c_update(state, residuals_new, state.residuals_prev, config.gamma, config.beta);
    report.outer.push_back(OuterTraceRow{k, state.lagrangian.lambda, state.lagrangian.c,
                                         cu.p_value, cu.updated});
    state.residuals_prev = residuals_new;
  }
  report.final_stack = state.stack;
  return report;
}

void write_trace_csv(const TrainReport& report, std::ostream& out) {
  const Eigen::Index m =
      report.trace.empty() ? 0 : report.trace.front().lambda.size();
  out << "outer,inner,entropy,residual_norm,loss,c";
  for (Eigen::Index j = 0; j < m; ++j) out << ",lambda_" << (j + 1);
  out << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (const InnerTraceRow& row : report.trace) {
    out << row.outer << ',' << row.inner << ',';
    put(row.entropy);
    out << ',';
    put(row.residual_norm);
    out << ',';
    put(row.loss);
    out << ',';
    put(row.c);
    for (Eigen::Index j = 0; j < row.lambda.size(); ++j) {
      out << ',';
      put(row.lambda[j]);
    }
    out << '\n';
  }
}

void write_trace_csv(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(report, out);
}

}  // namespace mefn
