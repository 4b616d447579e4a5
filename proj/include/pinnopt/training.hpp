#pragma once

// Full-batch Adam training of NetworkParams against the plain MSE loss
// (PI-), the MSE plus a weighted physics term (PI+ bi-objective), and a
// two-phase scheme that warm-starts with PI- and then enforces upper
// bounds on the MSE and the physics term with an augmented Lagrangian.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pinnopt/error.hpp"
#include "pinnopt/nn_core.hpp"

namespace pinnopt {

enum class TrainingMode { PiMinus, PiPlusBiobjective, PiPlusConstrained };

std::string to_string(TrainingMode mode);
/// Accepts "pi_minus", "pi_plus" (bi-objective) and "pi_plus_constrained".
TrainingMode parse_training_mode(const std::string& text);

enum class Subset { Train, Test, All };

struct TrainingConfig {
  std::size_t epochs = 5000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  double weight_lo = -10.0;  ///< LW
  double weight_hi = 10.0;   ///< UW
  double hidden_lo = -1.0;   ///< LH; informational, tanh satisfies it and ReLU nets skip it
  double hidden_hi = 1.0;    ///< UH
  double physics_weight = 1.0;
  double init_scale = 0.5;  ///< initial entries uniform on [-init_scale, init_scale]
  TrainingMode mode = TrainingMode::PiMinus;

  /// Throws ContractError when a field is out of range.
  void validate() const;
};

struct ConstrainedPhaseConfig {
  double mse_upper_bound = std::numeric_limits<double>::infinity();      ///< Z
  double physics_upper_bound = std::numeric_limits<double>::infinity();  ///< U
  double alpha = 1.0;                                                     ///< scale on the physics term
  double initial_penalty = 10.0;
  double penalty_growth = 2.0;
  std::size_t max_outer_iterations = 20;
  std::size_t inner_epochs = 250;

  void validate() const;
};

/// Conservation-law residual evaluated on back-normalized (raw) inputs and
/// predictions. Feature roles are positional:
///   BlendingComponentBalance  inputs (x1, x2, w1, w2), outputs (x, w)
///     p = sum_i (x w - x1 w1 - x2 w2)^2
///   ColumnMassBalance         inputs (F_CR, six product flows), output F_RSD
///     p = mean_i (F_CR - sum products - F_RSD)^2   (signed mean if `signed_residual`)
///   CduMassBalance            inputs (F_CDU, five cut temperatures), outputs six flows
///     p = sqrt(sum_i (F_CDU - sum_j y_j)^2)
struct PhysicsTerm {
  enum class Kind { BlendingComponentBalance, ColumnMassBalance, CduMassBalance };

  Kind kind = Kind::BlendingComponentBalance;
  bool signed_residual = false;  ///< ColumnMassBalance only: the as-printed signed mean

  static PhysicsTerm blending() { return {Kind::BlendingComponentBalance, false}; }
  static PhysicsTerm column(bool signed_residual = false) { return {Kind::ColumnMassBalance, signed_residual}; }
  static PhysicsTerm cdu() { return {Kind::CduMassBalance, false}; }

  std::string name() const;
  std::size_t expected_inputs() const;
  std::size_t expected_outputs() const;
  /// Throws ContractError when the dataset's shape does not fit the term.
  void check_schema(const Dataset& data) const;
};

/// Rows of `data` selected by `subset`.
std::vector<std::size_t> subset_rows(const Dataset& data, Subset subset);

/// (1/N) sum_i sum_j (yhat_ij - y_ij)^2 over the subset. Empty subset throws.
double mse_loss(const NetworkParams& params, const Dataset& data, Subset subset = Subset::Train);

double physics_eval(const PhysicsTerm& term, const NetworkParams& params, const Dataset& data,
                    Subset subset = Subset::Train);

/// Which loss `gradient` differentiates.
struct LossSpec {
  enum class Kind { Mse, Physics, Combined };
  Kind kind = Kind::Mse;
  std::optional<PhysicsTerm> term;  ///< required for Physics and Combined
  double physics_weight = 1.0;      ///< Combined: mse + physics_weight * p

  static LossSpec mse() { return {Kind::Mse, std::nullopt, 0.0}; }
  static LossSpec physics(PhysicsTerm t) { return {Kind::Physics, t, 1.0}; }
  static LossSpec combined(PhysicsTerm t, double w) { return {Kind::Combined, t, w}; }
};

/// Exact analytic gradient of the loss with respect to every entry of A, B,
/// C and D, returned in a NetworkParams of the same shape.
NetworkParams gradient(const NetworkParams& params, const Dataset& data, const LossSpec& spec,
                       Subset subset = Subset::Train);

struct TraceRow {
  std::size_t epoch = 0;
  double mse_train = 0.0;
  double mse_test = 0.0;
  double physics = 0.0;
  double combined = 0.0;
};

/// Row e holds the losses of the iterate after e optimizer steps.
struct TrainingTrace {
  std::vector<TraceRow> rows;
};

/// CSV with header "epoch,mse_train,mse_test,physics_value,combined_loss".
void write_trace_csv(const TrainingTrace& trace, std::ostream& out);

struct TrainingResult {
  NetworkParams params;
  TrainingTrace trace;
};

/// Seeded uniform initialization on [-init_scale, init_scale], clipped to
/// the weight box.
NetworkParams initialize_params(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, const Activation& hidden,
                                const Activation& output, const TrainingConfig& config);

/// PI- or PI+ bi-objective training from `init`. PI+ modes need `term`.
/// Throws TrainingError if a loss turns non-finite.
TrainingResult train(const TrainingConfig& config, const Dataset& data, const std::optional<PhysicsTerm>& term,
                     const NetworkParams& init);

/// Same, initializing from config.seed.
TrainingResult train(const TrainingConfig& config, const Dataset& data, const std::optional<PhysicsTerm>& term,
                     std::size_t n_hidden, const Activation& hidden = Activation::tanh(),
                     const Activation& output = Activation::tanh());

struct ConstrainedResult {
  NetworkParams params;
  TrainingTrace trace;
  bool feasible = false;
  double mse = 0.0;         ///< training MSE of the returned iterate
  double physics = 0.0;     ///< p (without alpha) of the returned iterate
  std::string report;       ///< violation summary when infeasible
};

/// Phase 1 trains PI- for config.epochs from the seeded initialization;
/// phase 2 minimizes the MSE subject to mse <= Z and alpha p <= U and
/// returns the first iterate meeting both within 1e-8, or the least
/// violating iterate flagged infeasible.
ConstrainedResult train_constrained(const TrainingConfig& config, const ConstrainedPhaseConfig& phase2,
                                    const Dataset& data, const PhysicsTerm& term, std::size_t n_hidden,
                                    const Activation& hidden = Activation::tanh(),
                                    const Activation& output = Activation::tanh());

/// Same with an explicit phase-1 starting point.
ConstrainedResult train_constrained(const TrainingConfig& config, const ConstrainedPhaseConfig& phase2,
                                    const Dataset& data, const PhysicsTerm& term, const NetworkParams& init);

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinnopt
