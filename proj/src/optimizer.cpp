#include "risopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace risopt {

std::string to_string(Method method) {
  switch (method) {
    case Method::Momentum:
      return "momentum";
    case Method::RMSprop:
      return "rmsprop";
    case Method::Adam:
      return "adam";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& text) {
  if (text == "momentum" || text == "Momentum") return Method::Momentum;
  if (text == "rmsprop" || text == "RMSprop") return Method::RMSprop;
  if (text == "adam" || text == "Adam") return Method::Adam;
  return std::nullopt;
}

Method OptimizerConfig::method_for(Regime regime) const {
  if (method) return *method;
  return regime == Regime::Diagonal ? Method::RMSprop : Method::Adam;
}

void OptimizerConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v < 1.0; };
  if (!(step_size > 0.0)) throw ConfigError("optimizer step_size must be > 0");
  if (!in_unit(momentum) || !in_unit(rmsprop_decay) || !in_unit(adam_beta1) || !in_unit(adam_beta2)) {
    throw ConfigError("optimizer decay factors must lie in [0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0) || !(adam_epsilon > 0.0)) throw ConfigError("optimizer epsilons must be > 0");
  if (!(inner_tol > 0.0) || !(outer_tol > 0.0)) throw ConfigError("optimizer tolerances must be > 0");
  if (max_inner_iters < 1 || max_outer_iters < 1) throw ConfigError("optimizer iteration limits must be >= 1");
}

// ---------------------------------------------------------------------------

AscentState::AscentState(Method method, const OptimizerConfig& config, Eigen::Index size)
    : method_(method),
      step_size_(config.step_size),
      momentum_(config.momentum),
      decay_(config.rmsprop_decay),
      rms_eps_(config.rmsprop_epsilon),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      adam_eps_(config.adam_epsilon),
      first_(RVector::Zero(size)),
      second_(RVector::Zero(size)) {}

void AscentState::apply(RVector& params, const RVector& gradient) {
  if (params.size() != size() || gradient.size() != size()) {
    throw NumericalError("ascent state has " + std::to_string(size()) + " entries, got parameters of " +
                         std::to_string(params.size()) + " and gradient of " + std::to_string(gradient.size()));
  }
  if (!gradient.allFinite()) throw NumericalError("non-finite gradient");
  ++steps_;
  switch (method_) {
    case Method::Momentum:
      first_ = momentum_ * first_ + gradient;
      params += step_size_ * first_;
      break;
    case Method::RMSprop:
      second_ = decay_ * second_ + (1.0 - decay_) * gradient.cwiseAbs2();
      params.array() += step_size_ * gradient.array() / (second_.array().sqrt() + rms_eps_);
      break;
    case Method::Adam: {
      first_ = beta1_ * first_ + (1.0 - beta1_) * gradient;
      second_ = beta2_ * second_ + (1.0 - beta2_) * gradient.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1_, steps_);
      const double c2 = 1.0 - std::pow(beta2_, steps_);
      params.array() += step_size_ * (first_.array() / c1) / ((second_.array() / c2).sqrt() + adam_eps_);
      break;
    }
  }
}

RVector gradient_update(AscentState& state, const RVector& params, const RVector& gradient) {
  RVector out = params;
  state.apply(out, gradient);
  return out;
}

// ---------------------------------------------------------------------------

ScatterParameters::ScatterParameters(const FeasibleStart& start, Regime regime)
    : regime_(regime), n_(start.theta.size()) {
  switch (regime_) {
    case Regime::Diagonal:
      if (start.phases.size() != n_) throw DimensionError("diagonal start is missing its phases");
      values_ = start.phases;
      break;
    case Regime::BDExponential:
      start.generator.check();
      if (start.generator.size() != n_) throw DimensionError("exponential start is missing its generator");
      values_.resize(start.generator.diag.size() + start.generator.offdiag.size());
      values_ << start.generator.diag, start.generator.offdiag;
      break;
    case Regime::BDProjection: {
      const Eigen::Index nn = static_cast<Eigen::Index>(n_) * n_;
      values_.resize(2 * nn);
      values_.head(nn) = start.theta.entries.reshaped().real();
      values_.tail(nn) = start.theta.entries.reshaped().imag();
      break;
    }
  }
  refresh();
}

void ScatterParameters::set(const RVector& values) {
  if (values.size() != values_.size()) throw DimensionError("parameter vector has the wrong size");
  values_ = values;
  refresh();
}

void ScatterParameters::refresh() {
  switch (regime_) {
    case Regime::Diagonal:
      diag_.emplace(values_);
      theta_ = diag_->theta();
      break;
    case Regime::BDExponential: {
      SymmetricGenerator g;
      g.diag = values_.head(n_);
      g.offdiag = values_.tail(values_.size() - n_);
      exp_.emplace(g);
      theta_ = exp_->theta();
      break;
    }
    case Regime::BDProjection: {
      const Eigen::Index nn = static_cast<Eigen::Index>(n_) * n_;
      CMatrix a(n_, n_);
      a.reshaped() = values_.head(nn).cast<Complex>() + Complex(0.0, 1.0) * values_.tail(nn).cast<Complex>();
      theta_ = project_unitary_symmetric(a);
      // Retraction: the next step starts from the feasible point.
      values_.head(nn) = theta_.entries.reshaped().real();
      values_.tail(nn) = theta_.entries.reshaped().imag();
      break;
    }
  }
}

RVector ScatterParameters::pullback(const CMatrix& grad_theta) const {
  switch (regime_) {
    case Regime::Diagonal:
      return diag_->pullback(grad_theta);
    case Regime::BDExponential: {
      const SymmetricGenerator g = exp_->pullback(grad_theta);
      RVector out(g.diag.size() + g.offdiag.size());
      out << g.diag, g.offdiag;
      return out;
    }
    case Regime::BDProjection: {
      const Eigen::Index nn = static_cast<Eigen::Index>(n_) * n_;
      RVector out(2 * nn);
      out.head(nn) = grad_theta.reshaped().real();
      out.tail(nn) = grad_theta.reshaped().imag();
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

int OptimizationTrace::max_inner_iterations() const {
  return inner_iterations.empty() ? 0 : *std::max_element(inner_iterations.begin(), inner_iterations.end());
}

double evaluate_objective(const CMatrix& h, Objective objective, double tx_power, double noise_power) {
  return objective == Objective::TxBF ? txbf_evaluate(h, tx_power, noise_power).rate
                                      : capacity_evaluate(h, tx_power, noise_power).capacity;
}

namespace {

bool relative_change_small(double current, double previous, double tol) {
  const double delta = std::abs(current - previous);
  if (current == 0.0) return delta == 0.0;
  return delta / std::abs(current) <= tol;
}

}  // namespace

OptimizeResult optimize(const ChannelSet& channels, Objective objective, Regime regime,
                        const OptimizerConfig& config, double tx_power, double noise_power) {
  config.validate();
  const int n = channels.ris_elements();
  ScatterParameters params(random_feasible_init(regime, n, config.seed), regime);
  AscentState state(config.method_for(regime), config, params.values().size());

  OptimizeResult result;
  result.kind = objective;
  result.theta = params.theta();
  result.objective = evaluate_objective(effective_channel(channels, params.theta()), objective, tx_power, noise_power);
  OptimizationTrace& trace = result.trace;
  trace.initial_objective = result.objective;

  double previous_outer = -std::numeric_limits<double>::infinity();
  int iteration = 0;
  bool outer_converged = false;

  try {
    for (int outer = 0; outer < config.max_outer_iters; ++outer) {
      CMatrix h = effective_channel(channels, params.theta());
      CapacityResult frozen;
      TxBFResult beam;
      double outer_value = 0.0;
      if (objective == Objective::Capacity) {
        frozen = capacity_evaluate(h, tx_power, noise_power);
        outer_value = frozen.capacity;
      } else {
        beam = txbf_evaluate(h, tx_power, noise_power);
        outer_value = beam.rate;
      }
      if (outer > 0 && outer_value - previous_outer <= config.outer_tol * std::abs(outer_value)) {
        outer_converged = true;
        break;
      }
      previous_outer = outer_value;
      ++trace.outer_iterations;

      double previous_inner = outer_value;
      int inner = 0;
      while (inner < config.max_inner_iters) {
        ++inner;
        ++iteration;

        CMatrix grad;
        if (objective == Objective::Capacity) {
          grad = capacity_gradient(channels, params.theta().entries, frozen.precoder, frozen.mode_powers, noise_power);
        } else {
          if (beam.top_mode_degenerate()) ++trace.degenerate_gradient_events;
          grad = txbf_rate_slope(beam.lambda_max, tx_power, noise_power) *
                 txbf_gradient(channels, params.theta().entries, beam.combiner);
        }
        RVector values = params.values();
        state.apply(values, params.pullback(grad));
        params.set(values);

        h = effective_channel(channels, params.theta());
        double inner_value = 0.0;
        double true_value = 0.0;
        if (objective == Objective::Capacity) {
          inner_value = capacity_fixed_precoder(h, frozen.precoder, frozen.mode_powers, noise_power);
          true_value = capacity_evaluate(h, tx_power, noise_power).capacity;
        } else {
          beam = txbf_evaluate(h, tx_power, noise_power);
          inner_value = beam.rate;
          true_value = beam.rate;
        }
        if (true_value > result.objective) {
          result.objective = true_value;
          result.theta = params.theta();
        }

        TraceRow row;
        row.iteration = iteration;
        row.outer = outer;
        row.inner = inner;
        row.objective = true_value;
        row.inner_objective = inner_value;
        row.best_objective = result.objective;
        if (regime != Regime::Diagonal) {
          row.unitarity_residual = params.theta().unitarity_residual();
          row.symmetry_residual = params.theta().symmetry_residual();
        }
        trace.rows.push_back(row);

        if (relative_change_small(inner_value, previous_inner, config.inner_tol)) break;
        previous_inner = inner_value;
      }
      trace.inner_iterations.push_back(inner);
    }
  } catch (const NumericalError& e) {
    trace.abort_reason = e.what();
  }
  trace.converged = outer_converged && trace.abort_reason.empty();
  return result;
}

OptimizeResult multistart(const std::function<OptimizeResult(std::uint64_t)>& run,
                          std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("multistart needs at least one seed");
  OptimizeResult best = run(seeds[0]);
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    OptimizeResult candidate = run(seeds[i]);
    if (candidate.objective > best.objective) best = std::move(candidate);
  }
  return best;
}

void write_trace_csv(std::ostream& out, const OptimizationTrace& trace) {
  out << "iteration,outer,inner,objective,inner_objective,best_objective,unitarity_residual,symmetry_residual\n";
  char buf[256];
  for (const TraceRow& r : trace.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.iteration, r.outer, r.inner, r.objective,
                  r.inner_objective, r.best_objective, r.unitarity_residual, r.symmetry_residual);
    out << buf;
  }
}

}  // namespace risopt
