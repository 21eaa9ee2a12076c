#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mefn/constraints.hpp"
#include "mefn/flow.hpp"
#include "mefn/objectives.hpp"
#include "mefn/rng.hpp"

namespace mefn {

struct OptimizerConfig {
  enum class Kind { Adadelta, Adam };
  Kind kind = Kind::Adadelta;
  // ADADELTA
  double rho = 0.95;
  double epsilon = 1e-6;
  // ADAM
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct TrainConfig {
  int k_max = 10;      // outer iterations
  int i_max = 3000;    // inner SGD iterations per outer round
  int n = 300;         // gradient batch size (must be even)
  int n_tilde = 1000;  // multiplier-update batch size
  double beta = 4.0;   // penalty growth factor, > 1
  double gamma = 0.25; // residual decrease ratio, in (0, 1)
  double c0 = 1.0;     // initial penalty, > 0
  Eigen::VectorXd lambda0;  // empty means zeros
  OptimizerConfig optimizer;
  bool entropy_enabled = true;  // false: moment-matching-only ablation
  std::uint64_t seed = 1;
  // Residual sample sets fed to the penalty t-test.
  int residual_batches = 20;
  int residual_batch_size = 100;

  void validate() const;
};

struct OptimizerState {
  Eigen::VectorXd acc_grad_sq;   // ADADELTA E[g^2]
  Eigen::VectorXd acc_delta_sq;  // ADADELTA E[dx^2]
  Eigen::VectorXd moment1;       // ADAM m
  Eigen::VectorXd moment2;       // ADAM v
  long step = 0;
};

struct TrainState {
  FlowStack stack;
  LagrangianState lagrangian;
  OptimizerConfig opt_config;
  OptimizerState opt;
  int outer_iter = 0;
  int inner_iter = 0;
  std::vector<double> residuals_prev;  // |R| samples recorded at phi_k
  Rng rng;
};

struct InnerTraceRow {
  int outer = 0;
  int inner = 0;
  double entropy = 0.0;
  double residual_norm = 0.0;
  double loss = 0.0;
  double c = 0.0;
  Eigen::VectorXd lambda;
};

struct OuterTraceRow {
  int outer = 0;
  Eigen::VectorXd lambda;
  double c = 0.0;
  double p_value = 0.0;
  bool penalty_updated = false;
};

struct TrainReport {
  std::vector<InnerTraceRow> trace;
  std::vector<OuterTraceRow> outer;
  FlowStack final_stack;
};

/// One optimizer step; updates accumulators and stack parameters in place.
void sgd_step(TrainState& state, const ParamGradient& gradient);

/// lambda <- lambda + c * residual_mean (Algorithm step: fresh batch of
/// size n_tilde).
void lambda_update(TrainState& state, const Eigen::VectorXd& residual_batch_mean);

/// Probabilistic penalty escalation. One-sided Welch t-test of
/// H0: E|R_new| = gamma E|R_old| against ">"; c is multiplied by beta with
/// probability 1 - p. Returns the p-value and whether the update fired.
struct CUpdateResult {
  double p_value = 0.5;
  bool updated = false;
};
CUpdateResult c_update(TrainState& state, const std::vector<double>& residuals_new,
                       const std::vector<double>& residuals_old, double gamma, double beta);

/// One-sided Welch p-value for H1: mean(a) > mean(b); both samples need at
/// least two elements. Degenerate zero-variance ties give p = 0.5.
double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);

/// Runs the full two-level loop. Deterministic given config.seed. Throws
/// TrainingError on non-finite loss or gradient.
TrainReport train(const TrainConfig& config, const FlowStack& stack0,
                  const ConstraintSet& constraints);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, TrainReport partial)
      : std::runtime_error(what), partial_report(std::move(partial)) {}
  TrainReport partial_report;
};

/// CSV trace with columns outer,inner,entropy,residual_norm,loss,c,lambda_1..m.
void write_trace_csv(const TrainReport& report, std::ostream& out);
void write_trace_csv(const TrainReport& report, const std::string& path);

}  // namespace mefn
