#pragma once

// Compiles a trained one-hidden-layer network and an optimization query into
// a MilpModel: tanh activations through a piecewise-linear approximation
// (convex-combination or SOS2 form), ReLU through Big-M rows.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pinnopt/milp_model.hpp"
#include "pinnopt/nn_core.hpp"
#include "pinnopt/pwl_approx.hpp"

namespace pinnopt {

/// Linear row over network inputs (normalized units).
struct InputConstraint {
  std::vector<std::pair<std::size_t, double>> terms;  ///< (input index, coefficient)
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct SurrogateQuery {
  std::size_t objective_output = 0;
  Sense sense = Sense::Minimize;
  std::vector<double> input_lo;  ///< normalized, within [-1, 1]
  std::vector<double> input_hi;
  std::vector<std::optional<double>> fixings;  ///< empty or one entry per input
  std::vector<InputConstraint> constraints;

  /// Minimize output `output` over the full normalized box.
  static SurrogateQuery box(std::size_t n_in, std::size_t output = 0, Sense sense = Sense::Minimize);

  void fix(std::size_t input, double value);

  /// Effective bounds of input i after fixings.
  double lower(std::size_t i) const;
  double upper(std::size_t i) const;

  /// Throws ContractError on shape mismatch, bounds outside [-1, 1],
  /// lo > hi, or fixings outside their bounds.
  void validate(std::size_t n_in, std::size_t n_out) const;
};

enum class EncodingKind { PwlCc, PwlSos2, ReluBigM };

std::string to_string(EncodingKind kind);
/// "cc", "sos2" or "relu_bigm".
EncodingKind parse_encoding_kind(const std::string& text);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Hidden pre-activation ranges by interval arithmetic over the query box.
std::vector<Interval> preactivation_bounds(const NetworkParams& params, const SurrogateQuery& query);

/// Model plus the handles needed to read a solution back.
struct EncodedModel {
  MilpModel model;
  EncodingKind kind = EncodingKind::PwlCc;
  std::vector<VarId> inputs;       ///< normalized network inputs u
  std::vector<VarId> hidden_pre;   ///< z per hidden neuron
  std::vector<VarId> hidden_post;  ///< activation output per hidden neuron
  VarId output;                    ///< the objective output y
  std::size_t blocks = 0;          ///< PWL activation blocks
  std::size_t lambda_count = 0;
  std::vector<std::string> warnings;

  /// Input assignment of a solution, in normalized units.
  std::vector<double> input_values(const std::vector<double>& solution) const;
};

/// Convex-combination form: per block, lambda weights over the breakpoints,
/// one binary per segment and adjacency rows. Blocks are built for every
/// hidden neuron and for the objective output when the output activation is
/// tanh-family (identity outputs are affine and need no block). Throws
/// ContractError unless the hidden activation is tanh-family.
EncodedModel encode_pwl_cc(const NetworkParams& params, const PwlFunction& pwl, const SurrogateQuery& query);

/// Same structure with each block's lambdas declared an SOS2 group instead
/// of binaries and adjacency rows.
EncodedModel encode_pwl_sos2(const NetworkParams& params, const PwlFunction& pwl, const SurrogateQuery& query);

/// ReLU hidden layer, identity output. Neurons whose interval is entirely
/// nonpositive are fixed to zero, entirely nonnegative ones are affine,
/// the rest get h >= z, h <= z - lo (1 - s), h <= hi s with binary s.
EncodedModel encode_relu_bigm(const NetworkParams& params, const SurrogateQuery& query);

EncodedModel encode(EncodingKind kind, const NetworkParams& params, const PwlFunction& pwl,
                    const SurrogateQuery& query);

/// Forward pass with tanh-family activations replaced by `pwl`.
std::vector<double> pwl_forward(const NetworkParams& params, const PwlFunction& pwl, std::span<const double> input);

}  // namespace pinnopt
