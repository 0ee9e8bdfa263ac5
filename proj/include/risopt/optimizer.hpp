#pragma once

#include "risopt/geometry.hpp"
#include "risopt/manifold.hpp"
#include "risopt/objectives.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace risopt {

enum class Method { Momentum, RMSprop, Adam };

std::string to_string(Method method);
std::optional<Method> parse_method(const std::string& text);

struct OptimizerConfig {
  /// Unset: RMSprop for Diagonal, Adam for the BD regimes.
  std::optional<Method> method;
  double step_size = 0.01;
  double momentum = 0.9;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double inner_tol = 1e-5;  // relative objective change
  double outer_tol = 1e-5;
  int max_inner_iters = 200;
  int max_outer_iters = 20;
  std::uint64_t seed = 1;

  Method method_for(Regime regime) const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// First/second moment buffers for one of the ascent rules. All rules
/// maximize: parameters move along +gradient.
class AscentState {
 public:
  AscentState(Method method, const OptimizerConfig& config, Eigen::Index size);

  Method method() const { return method_; }
  Eigen::Index size() const { return first_.size(); }
  int steps() const { return steps_; }

  /// Applies one update in place. Throws NumericalError on a non-finite
  /// gradient or a shape mismatch.
  void apply(RVector& params, const RVector& gradient);

 private:
  Method method_;
  double step_size_;
  double momentum_;
  double decay_;
  double rms_eps_;
  double beta1_;
  double beta2_;
  double adam_eps_;
  RVector first_;
  RVector second_;
  int steps_ = 0;
};

/// Functional form of AscentState::apply.
RVector gradient_update(AscentState& state, const RVector& params, const RVector& gradient);

/// Free real parameters of one regime and the map to Theta.
///   Diagonal:      phases phi (N)
///   BDExponential: generator (x, z) (N + N(N-1)/2)
///   BDProjection:  [Re vec(Theta); Im vec(Theta)] (2 N^2), retracted after each set()
class ScatterParameters {
 public:
  explicit ScatterParameters(const FeasibleStart& start, Regime regime);

  Regime regime() const { return regime_; }
  const ScatterMatrix& theta() const { return theta_; }
  const RVector& values() const { return values_; }

  /// Replaces the parameters and recomputes Theta (projecting for BDProjection).
  void set(const RVector& values);
  /// Chain rule: gradient in parameter space from G with dJ = Re<G, dTheta>.
  RVector pullback(const CMatrix& grad_theta) const;

 private:
  void refresh();

  Regime regime_;
  int n_;
  RVector values_;
  ScatterMatrix theta_;
  std::optional<DiagPhaseDifferential> diag_;
  std::optional<ExpDifferential> exp_;
};

struct TraceRow {
  int iteration = 0;  // global inner iteration counter, from 1
  int outer = 0;
  int inner = 0;
  double objective = 0.0;        // true objective at this iterate (bit/s/Hz)
  double inner_objective = 0.0;  // objective the inner stopping rule sees
  double best_objective = 0.0;
  double unitarity_residual = 0.0;
  double symmetry_residual = 0.0;
};

struct OptimizationTrace {
  double initial_objective = 0.0;
  std::vector<TraceRow> rows;
  std::vector<int> inner_iterations;  // per outer iteration
  int outer_iterations = 0;
  int degenerate_gradient_events = 0;
  bool converged = false;
  std::string abort_reason;  // non-empty if the run stopped on an error

  int max_inner_iterations() const;
};

struct OptimizeResult {
  ScatterMatrix theta;  // best iterate seen
  double objective = 0.0;
  Objective kind = Objective::Capacity;
  OptimizationTrace trace;
  bool converged() const { return trace.converged; }
};

/// Alternating optimization: the outer loop refreshes the precoder (SVD and,
/// for capacity, waterfilling); the inner loop takes gradient steps on Theta
/// with V and the mode powers frozen until the relative objective change
/// drops below inner_tol. Returns the best Theta seen, not the last one.
OptimizeResult optimize(const ChannelSet& channels, Objective objective, Regime regime,
                        const OptimizerConfig& config, double tx_power, double noise_power);

/// Best of independent runs, one per seed; ties keep the earliest seed.
OptimizeResult multistart(const std::function<OptimizeResult(std::uint64_t)>& run,
                          std::span<const std::uint64_t> seeds);

/// Objective value for Theta (no optimization).
double evaluate_objective(const CMatrix& h, Objective objective, double tx_power, double noise_power);

/// One row per iteration: iteration,outer,inner,objective,inner_objective,
/// best_objective,unitarity_residual,symmetry_residual (9 significant digits).
void write_trace_csv(std::ostream& out, const OptimizationTrace& trace);

}  // namespace risopt
