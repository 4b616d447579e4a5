#include "pinnopt/training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "pinnopt/kernels.hpp"
#include "pinnopt/random.hpp"
#include "text_util.hpp"

namespace pinnopt {

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::PiMinus: return "pi_minus";
    case TrainingMode::PiPlusBiobjective: return "pi_plus";
    case TrainingMode::PiPlusConstrained: return "pi_plus_constrained";
  }
  return "?";
}

TrainingMode parse_training_mode(const std::string& text) {
  if (text == "pi_minus" || text == "PI-") return TrainingMode::PiMinus;
  if (text == "pi_plus" || text == "pi_plus_biobjective" || text == "PI+") return TrainingMode::PiPlusBiobjective;
  if (text == "pi_plus_constrained") return TrainingMode::PiPlusConstrained;
  throw ConfigError("unknown training mode '" + text + "'");
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("TrainingConfig: learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ContractError("TrainingConfig: Adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ContractError("TrainingConfig: adam_epsilon must be positive");
  if (!(weight_lo < weight_hi)) throw ContractError("TrainingConfig: need LW < UW");
  if (!(hidden_lo <= hidden_hi)) throw ContractError("TrainingConfig: need LH <= UH");
  if (!(physics_weight >= 0.0)) throw ContractError("TrainingConfig: physics_weight must be nonnegative");
  if (!(init_scale >= 0.0)) throw ContractError("TrainingConfig: init_scale must be nonnegative");
}

void ConstrainedPhaseConfig::validate() const {
  if (!(mse_upper_bound > 0.0)) throw ContractError("ConstrainedPhaseConfig: Z must be positive");
  if (!(physics_upper_bound >= 0.0)) throw ContractError("ConstrainedPhaseConfig: U must be nonnegative");
  if (!(alpha > 0.0)) throw ContractError("ConstrainedPhaseConfig: alpha must be positive");
  if (!(penalty_growth > 1.0)) throw ContractError("ConstrainedPhaseConfig: penalty_growth must exceed 1");
  if (!(initial_penalty > 0.0)) throw ContractError("ConstrainedPhaseConfig: initial_penalty must be positive");
}

std::string PhysicsTerm::name() const {
  switch (kind) {
    case Kind::BlendingComponentBalance: return "blending_component_balance";
    case Kind::ColumnMassBalance: return signed_residual ? "column_mass_balance_signed" : "column_mass_balance";
    case Kind::CduMassBalance: return "cdu_mass_balance";
  }
  return "?";
}

std::size_t PhysicsTerm::expected_inputs() const {
  switch (kind) {
    case Kind::BlendingComponentBalance: return 4;
    case Kind::ColumnMassBalance: return 7;
    case Kind::CduMassBalance: return 6;
  }
  return 0;
}

std::size_t PhysicsTerm::expected_outputs() const {
  switch (kind) {
    case Kind::BlendingComponentBalance: return 2;
    case Kind::ColumnMassBalance: return 1;
    case Kind::CduMassBalance: return 6;
  }
  return 0;
}

void PhysicsTerm::check_schema(const Dataset& data) const {
  if (data.n_in() != expected_inputs() || data.n_out() != expected_outputs()) {
    throw ContractError("physics term " + name() + " expects " + std::to_string(expected_inputs()) + " inputs and " +
                        std::to_string(expected_outputs()) + " outputs, dataset has " + std::to_string(data.n_in()) +
                        " and " + std::to_string(data.n_out()));
  }
}

std::vector<std::size_t> subset_rows(const Dataset& data, Subset subset) {
  switch (subset) {
    case Subset::Train: return data.train;
    case Subset::Test: return data.test;
    case Subset::All: {
      std::vector<std::size_t> all(data.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return all;
    }
  }
  return {};
}

namespace {

struct LossValues {
  double mse = 0.0;
  double physics = 0.0;
};

/// Weights of the MSE and physics gradients, chosen after the loss values
/// of the current iterate are known.
using CoefficientFn = std::function<std::pair<double, double>(const LossValues&)>;

// Forward pass over a fixed row subset, loss values, and (optionally) the
// backpropagated gradient of c_mse * mse + c_p * p.
class LossEngine {
 public:
  LossEngine(const Dataset& data, Subset subset, std::optional<PhysicsTerm> term)
      : data_(data), rows_(subset_rows(data, subset)), term_(term) {
    if (rows_.empty()) throw ContractError("loss evaluation over an empty subset");
    if (term_) {
      term_->check_schema(data);
      raw_inputs_.reserve(rows_.size());
      for (auto r : rows_) raw_inputs_.push_back(data.raw_input(r));
    }
  }

  LossValues evaluate(const NetworkParams& params, NetworkParams* grad, const CoefficientFn& coef) {
    params.validate();
    if (params.n_in() != data_.n_in() || params.n_out() != data_.n_out()) {
      throw ContractError("network shape does not match the dataset");
    }
    const std::size_t n = rows_.size();
    const std::size_t no = params.n_out();
    traces_.resize(n);
    LossValues values;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      forward_trace(params, data_.inputs.row(rows_[i]), traces_[i]);
      const auto target = data_.outputs.row(rows_[i]);
      for (std::size_t o = 0; o < no; ++o) {
        const double e = traces_[i].output[o] - target[o];
        sq += e * e;
      }
    }
    values.mse = sq / static_cast<double>(n);
    if (term_) values.physics = physics(params, grad != nullptr);
    if (!grad) return values;

    const auto [c_mse, c_p] = coef(values);
    *grad = NetworkParams::zeros(params.n_in(), params.n_hidden(), no, params.hidden, params.output);
    std::vector<double> delta_out(no);
    std::vector<double> delta_hidden(params.n_hidden());
    const double mse_scale = 2.0 * c_mse / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const ForwardTrace& t = traces_[i];
      const auto target = data_.outputs.row(rows_[i]);
      for (std::size_t o = 0; o < no; ++o) {
        double g = mse_scale * (t.output[o] - target[o]);
        if (term_) g += c_p * physics_grad_[i * no + o];
        delta_out[o] = g * activation_derivative(params.output, t.output_pre[o]);
      }
      std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
      for (std::size_t o = 0; o < no; ++o) {
        kernels::axpy(delta_out[o], t.hidden_post, grad->A.row(o));
        grad->D[o] += delta_out[o];
        kernels::axpy(delta_out[o], params.A.row(o), delta_hidden);
      }
      const auto u = data_.inputs.row(rows_[i]);
      for (std::size_t j = 0; j < delta_hidden.size(); ++j) {
        const double dh = delta_hidden[j] * activation_derivative(params.hidden, t.hidden_pre[j]);
        kernels::axpy(dh, u, grad->B.row(j));
        grad->C[j] += dh;
      }
    }
    return values;
  }

 private:
  // Physics value over the subset; fills physics_grad_ (d p / d yhat in
  // normalized output units) when asked.
  double physics(const NetworkParams& params, bool want_grad) {
    const std::size_t n = rows_.size();
    const std::size_t no = params.n_out();
    const Scaler& out = data_.output_scaler;
    if (want_grad) physics_grad_.assign(n * no, 0.0);
    double p = 0.0;
    switch (term_->kind) {
      case PhysicsTerm::Kind::BlendingComponentBalance: {
        const double s0 = out.raw_per_unit(0);
        const double s1 = out.raw_per_unit(1);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& u = raw_inputs_[i];
          const double x = out.to_raw(0, traces_[i].output[0]);
          const double w = out.to_raw(1, traces_[i].output[1]);
          const double r = x * w - u[0] * u[2] - u[1] * u[3];
          p += r * r;
          if (want_grad) {
            physics_grad_[i * no + 0] = 2.0 * r * w * s0;
            physics_grad_[i * no + 1] = 2.0 * r * x * s1;
          }
        }
        break;
      }
      case PhysicsTerm::Kind::ColumnMassBalance: {
        const double s0 = out.raw_per_unit(0);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& u = raw_inputs_[i];
          double r = u[0];
          for (std::size_t m = 1; m < 7; ++m) r -= u[m];
          r -= out.to_raw(0, traces_[i].output[0]);
          if (term_->signed_residual) {
            p += r * inv_n;
            if (want_grad) physics_grad_[i] = -s0 * inv_n;
          } else {
            p += r * r * inv_n;
            if (want_grad) physics_grad_[i] = -2.0 * r * s0 * inv_n;
          }
        }
        break;
      }
      case PhysicsTerm::Kind::CduMassBalance: {
        std::vector<double> residual(n);
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double r = raw_inputs_[i][0];
          for (std::size_t j = 0; j < no; ++j) r -= out.to_raw(j, traces_[i].output[j]);
          residual[i] = r;
          sum_sq += r * r;
        }
        p = std::sqrt(sum_sq);
        if (want_grad && p > 0.0) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < no; ++j) physics_grad_[i * no + j] = -residual[i] * out.raw_per_unit(j) / p;
          }
        }
        break;
      }
    }
    return p;
  }

  const Dataset& data_;
  std::vector<std::size_t> rows_;
  std::optional<PhysicsTerm> term_;
  std::vector<std::vector<double>> raw_inputs_;
  std::vector<ForwardTrace> traces_;
  std::vector<double> physics_grad_;
};

std::vector<double> flatten(const NetworkParams& p) {
  std::vector<double> v;
  v.reserve(p.size());
  v.insert(v.end(), p.B.flat().begin(), p.B.flat().end());
  v.insert(v.end(), p.C.begin(), p.C.end());
  v.insert(v.end(), p.A.flat().begin(), p.A.flat().end());
  v.insert(v.end(), p.D.begin(), p.D.end());
  return v;
}

void unflatten(std::span<const double> v, NetworkParams& p) {
  auto it = v.begin();
  auto take = [&it](std::span<double> dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(p.B.flat());
  take(p.C);
  take(p.A.flat());
  take(p.D);
}

class Adam {
 public:
  Adam(const TrainingConfig& c, std::size_t n) : config_(c), m_(n, 0.0), v_(n, 0.0) {}

  void step(NetworkParams& params, const NetworkParams& grad) {
    auto x = flatten(params);
    const auto g = flatten(grad);
    ++t_;
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < x.size(); ++k) {
      m_[k] = b1 * m_[k] + (1.0 - b1) * g[k];
      v_[k] = b2 * v_[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m_[k] / corr1;
      const double vhat = v_[k] / corr2;
      x[k] = std::clamp(x[k] - config_.learning_rate * mhat / (std::sqrt(vhat) + config_.adam_epsilon),
                        config_.weight_lo, config_.weight_hi);
    }
    unflatten(x, params);
  }

 private:
  const TrainingConfig& config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

void check_finite(const LossValues& v, double combined, std::size_t epoch) {
  if (!std::isfinite(v.mse) || !std::isfinite(v.physics) || !std::isfinite(combined)) {
    std::ostringstream msg;
    msg << "training diverged: non-finite loss at epoch " << epoch << " (mse " << v.mse << ", physics " << v.physics
        << ")";
    throw TrainingError(msg.str());
  }
}

double test_mse(const Dataset& data, const NetworkParams& params) {
  return data.test.empty() ? std::nan("") : mse_loss(params, data, Subset::Test);
}

}  // namespace

double mse_loss(const NetworkParams& params, const Dataset& data, Subset subset) {
  LossEngine engine(data, subset, std::nullopt);
  return engine.evaluate(params, nullptr, {}).mse;
}

double physics_eval(const PhysicsTerm& term, const NetworkParams& params, const Dataset& data, Subset subset) {
  LossEngine engine(data, subset, term);
  return engine.evaluate(params, nullptr, {}).physics;
}

NetworkParams gradient(const NetworkParams& params, const Dataset& data, const LossSpec& spec, Subset subset) {
  if (spec.kind != LossSpec::Kind::Mse && !spec.term) throw ContractError("gradient: physics loss needs a PhysicsTerm");
  LossEngine engine(data, subset, spec.kind == LossSpec::Kind::Mse ? std::nullopt : spec.term);
  NetworkParams grad;
  engine.evaluate(params, &grad, [&spec](const LossValues&) -> std::pair<double, double> {
    switch (spec.kind) {
      case LossSpec::Kind::Mse: return {1.0, 0.0};
      case LossSpec::Kind::Physics: return {0.0, 1.0};
      case LossSpec::Kind::Combined: return {1.0, spec.physics_weight};
    }
    return {1.0, 0.0};
  });
  return grad;
}

void write_trace_csv(const TrainingTrace& trace, std::ostream& out) {
  out << "epoch,mse_train,mse_test,physics_value,combined_loss\n";
  for (const auto& r : trace.rows) {
    out << r.epoch << ',' << detail::format_double(r.mse_train) << ',' << detail::format_double(r.mse_test) << ','
        << detail::format_double(r.physics) << ',' << detail::format_double(r.combined) << '\n';
  }
}

NetworkParams initialize_params(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, const Activation& hidden,
                                const Activation& output, const TrainingConfig& config) {
  config.validate();
  NetworkParams p = NetworkParams::zeros(n_in, n_hidden, n_out, hidden, output);
  rng::Engine engine(config.seed);
  auto x = flatten(p);
  for (auto& v : x) {
    v = std::clamp(rng::uniform(engine, -config.init_scale, config.init_scale), config.weight_lo, config.weight_hi);
  }
  unflatten(x, p);
  return p;
}

TrainingResult train(const TrainingConfig& config, const Dataset& data, const std::optional<PhysicsTerm>& term,
                     const NetworkParams& init) {
  config.validate();
  init.validate();
  data.validate();
  if (config.mode == TrainingMode::PiPlusConstrained) {
    throw ContractError("train: use train_constrained for the constrained mode");
  }
  const bool physics_in_loss = config.mode == TrainingMode::PiPlusBiobjective;
  if (physics_in_loss && !term) throw ContractError("train: PI+ training requires a physics term");

  TrainingResult result{init, {}};
  LossEngine engine(data, Subset::Train, term);
  Adam adam(config, init.size());
  const double w = physics_in_loss ? config.physics_weight : 0.0;
  const CoefficientFn coef = [w, physics_in_loss](const LossValues&) {
    return std::pair<double, double>{1.0, physics_in_loss ? w : 0.0};
  };
  auto record = [&](std::size_t epoch, const LossValues& v) {
    const double combined = v.mse + w * v.physics;
    check_finite(v, combined, epoch);
    result.trace.rows.push_back({epoch, v.mse, test_mse(data, result.params), v.physics, combined});
  };

  NetworkParams grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const LossValues v = engine.evaluate(result.params, &grad, coef);
    record(epoch, v);
    adam.step(result.params, grad);
  }
  record(config.epochs, engine.evaluate(result.params, nullptr, {}));
  return result;
}

TrainingResult train(const TrainingConfig& config, const Dataset& data, const std::optional<PhysicsTerm>& term,
                     std::size_t n_hidden, const Activation& hidden, const Activation& output) {
  return train(config, data, term, initialize_params(data.n_in(), n_hidden, data.n_out(), hidden, output, config));
}

ConstrainedResult train_constrained(const TrainingConfig& config, const ConstrainedPhaseConfig& phase2,
                                    const Dataset& data, const PhysicsTerm& term, std::size_t n_hidden,
                                    const Activation& hidden, const Activation& output) {
  return train_constrained(config, phase2, data, term,
                           initialize_params(data.n_in(), n_hidden, data.n_out(), hidden, output, config));
}

ConstrainedResult train_constrained(const TrainingConfig& config, const ConstrainedPhaseConfig& phase2,
                                    const Dataset& data, const PhysicsTerm& term, const NetworkParams& init) {
  phase2.validate();
  TrainingConfig warm = config;
  warm.mode = TrainingMode::PiMinus;
  TrainingResult phase1 = train(warm, data, term, init);

  ConstrainedResult result;
  result.params = std::move(phase1.params);
  result.trace = std::move(phase1.trace);

  const double Z = phase2.mse_upper_bound;
  const double U = phase2.physics_upper_bound;
  const double alpha = phase2.alpha;
  constexpr double kFeasTol = 1e-8;
  const bool z_active = std::isfinite(Z);
  const bool u_active = std::isfinite(U);

  LossEngine engine(data, Subset::Train, term);
  auto feasible = [&](const LossValues& v) {
    return (!z_active || v.mse <= Z + kFeasTol) && (!u_active || alpha * v.physics <= U + kFeasTol);
  };
  LossValues v = engine.evaluate(result.params, nullptr, {});
  result.mse = v.mse;
  result.physics = v.physics;
  if (feasible(v)) {
    result.feasible = true;
    return result;
  }

  // Constraints are scaled by their magnitude at the warm start so the
  // penalty parameter means the same thing for both.
  const double s_mse = std::max({z_active ? Z : 0.0, v.mse, 1e-12});
  const double s_phys = std::max({u_active ? U : 0.0, alpha * v.physics, 1e-12});
  auto g_mse = [&](const LossValues& lv) { return z_active ? (lv.mse - Z) / s_mse : -1.0; };
  auto g_phys = [&](const LossValues& lv) { return u_active ? (alpha * lv.physics - U) / s_phys : -1.0; };
  auto violation = [&](const LossValues& lv) { return std::max(0.0, g_mse(lv)) + std::max(0.0, g_phys(lv)); };

  double mu_mse = 0.0;
  double mu_phys = 0.0;
  double rho = phase2.initial_penalty;
  NetworkParams best = result.params;
  LossValues best_values = v;
  double best_violation = violation(v);

  NetworkParams current = result.params;
  NetworkParams grad;
  Adam adam(config, current.size());
  std::size_t epoch = config.epochs;
  for (std::size_t outer = 0; outer < phase2.max_outer_iterations; ++outer) {
    LossValues last = v;
    for (std::size_t inner = 0; inner < phase2.inner_epochs; ++inner) {
      const CoefficientFn coef = [&](const LossValues& lv) {
        const double lam_mse = z_active ? std::max(0.0, mu_mse + rho * g_mse(lv)) : 0.0;
        const double lam_phys = u_active ? std::max(0.0, mu_phys + rho * g_phys(lv)) : 0.0;
        return std::pair<double, double>{1.0 + lam_mse / s_mse, alpha * lam_phys / s_phys};
      };
      last = engine.evaluate(current, &grad, coef);
      const double combined = last.mse + alpha * last.physics;
      check_finite(last, combined, epoch);
      result.trace.rows.push_back({epoch, last.mse, test_mse(data, current), last.physics, combined});
      if (feasible(last)) {
        result.params = current;
        result.feasible = true;
        result.mse = last.mse;
        result.physics = last.physics;
        return result;
      }
      if (const double viol = violation(last); viol < best_violation) {
        best_violation = viol;
        best = current;
        best_values = last;
      }
      adam.step(current, grad);
      ++epoch;
    }
    mu_mse = z_active ? std::max(0.0, mu_mse + rho * g_mse(last)) : 0.0;
    mu_phys = u_active ? std::max(0.0, mu_phys + rho * g_phys(last)) : 0.0;
    rho *= phase2.penalty_growth;
  }

  v = engine.evaluate(current, nullptr, {});
  result.trace.rows.push_back({epoch, v.mse, test_mse(data, current), v.physics, v.mse + alpha * v.physics});
  if (feasible(v)) {
    result.params = current;
    result.feasible = true;
    result.mse = v.mse;
    result.physics = v.physics;
    return result;
  }
  if (violation(v) < best_violation) {
    best = current;
    best_values = v;
  }
  result.params = best;
  result.feasible = false;
  result.mse = best_values.mse;
  result.physics = best_values.physics;
  std::ostringstream report;
  report << "infeasible after " << phase2.max_outer_iterations << " outer iterations: mse " << best_values.mse;
  if (z_active) report << " (Z " << Z << ")";
  report << ", alpha*p " << alpha * best_values.physics;
  if (u_active) report << " (U " << U << ")";
  result.report = report.str();
  return result;
}

}  // namespace pinnopt
