#pragma once

// One-hidden-layer feed-forward network y = f_out(A f_hidden(B u + C) + D),
// min-max data scaling to [-1, 1], and the normalized Dataset container.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pinnopt/matrix.hpp"

namespace pinnopt {

/// Activation applied elementwise to a layer's pre-activation.
struct Activation {
  enum class Kind { Tanh, Relu, Identity, PwlTanh };

  Kind kind = Kind::Tanh;
  int pieces = 0;  ///< 3 or 5 for PwlTanh, 0 otherwise

  static Activation tanh() { return {Kind::Tanh, 0}; }
  static Activation relu() { return {Kind::Relu, 0}; }
  static Activation identity() { return {Kind::Identity, 0}; }
  /// Throws ContractError unless pieces is 3 or 5.
  static Activation pwl_tanh(int pieces);

  /// "tanh", "relu", "identity", "pwl_tanh3" or "pwl_tanh5".
  std::string name() const;
  static Activation parse(const std::string& name);

  bool is_tanh_family() const { return kind == Kind::Tanh || kind == Kind::PwlTanh; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

double activation_eval(const Activation& act, double x);

/// d act / dx. ReLU uses 0 at the kink, PwlTanh the slope of the segment
/// to the right of a breakpoint.
double activation_derivative(const Activation& act, double x);

/// Weights and biases of the network. A is n_out x n_hidden, B is
/// n_hidden x n_in, C has n_hidden entries and D has n_out.
struct NetworkParams {
  Matrix A;
  Matrix B;
  std::vector<double> C;
  std::vector<double> D;
  Activation hidden = Activation::tanh();
  Activation output = Activation::tanh();

  std::size_t n_in() const { return B.cols(); }
  std::size_t n_hidden() const { return B.rows(); }
  std::size_t n_out() const { return A.rows(); }

  /// Zero-initialized parameters of the given shape.
  static NetworkParams zeros(std::size_t n_in, std::size_t n_hidden, std::size_t n_out,
                             Activation hidden = Activation::tanh(), Activation output = Activation::tanh());

  /// Throws ContractError on inconsistent shapes or non-finite entries.
  void validate() const;

  /// Total number of scalar parameters.
  std::size_t size() const { return A.rows() * A.cols() + B.rows() * B.cols() + C.size() + D.size(); }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// f_out(A f_hidden(B u + C) + D) with the network's own activations.
std::vector<double> forward(const NetworkParams& params, std::span<const double> input);

/// Same, with the activations substituted (e.g. PWL tanh in place of tanh).
std::vector<double> forward(const NetworkParams& params, std::span<const double> input, const Activation& hidden,
                            const Activation& output);

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardTrace {
  std::vector<double> hidden_pre;
  std::vector<double> hidden_post;
  std::vector<double> output_pre;
  std::vector<double> output;
};

void forward_trace(const NetworkParams& params, std::span<const double> input, ForwardTrace& trace);

/// Per-feature affine map between [raw_min, raw_max] and [-1, 1].
class Scaler {
 public:
  enum class Direction { ToNormalized, ToRaw };

  Scaler() = default;
  /// Throws ContractError unless raw_max[k] > raw_min[k] for every feature.
  Scaler(std::vector<double> raw_min, std::vector<double> raw_max);

  /// Column-wise min/max of `raw`.
  static Scaler fit(const Matrix& raw);

  std::size_t features() const { return min_.size(); }
  std::span<const double> raw_min() const { return min_; }
  std::span<const double> raw_max() const { return max_; }

  double to_normalized(std::size_t feature, double raw) const;
  double to_raw(std::size_t feature, double normalized) const;
  /// d raw / d normalized for the feature.
  double raw_per_unit(std::size_t feature) const { return 0.5 * (max_[feature] - min_[feature]); }

  std::vector<double> apply(std::span<const double> values, Direction direction) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Scales a whole vector; its length must equal the scaler's feature count.
std::vector<double> scale(const Scaler& scaler, std::span<const double> values, Scaler::Direction direction);

/// Normalized samples plus the scalers that map them back to raw units.
struct Dataset {
  Matrix inputs;   ///< N x n_in, normalized
  Matrix outputs;  ///< N x n_out, normalized
  Scaler input_scaler;
  Scaler output_scaler;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  std::size_t size() const { return inputs.rows(); }
  std::size_t n_in() const { return inputs.cols(); }
  std::size_t n_out() const { return outputs.cols(); }

  std::vector<double> raw_input(std::size_t row) const;
  std::vector<double> raw_output(std::size_t row) const;

  /// Throws ContractError when shapes disagree or train/test do not
  /// partition the rows.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Text format: a header line "n_in n_hidden n_out hidden_act output_act",
/// then the blocks B, C, A, D (row-major, one matrix row per line), each
/// block preceded by a blank line.
void write_params(const NetworkParams& params, std::ostream& out);
NetworkParams read_params(std::istream& in);
void save_params(const NetworkParams& params, const std::string& path);
NetworkParams load_params(const std::string& path);

/// Dataset CSV: header "split,<input names>,<output names>" and one row per
/// sample in raw units. The scaler goes to a companion CSV with header
/// "name,role,min,max" (role is "input" or "output").
void write_dataset_csv(const Dataset& data, std::ostream& rows, std::ostream& scaler);
Dataset read_dataset_csv(std::istream& rows, std::istream& scaler);
std::string scaler_path_for(const std::string& dataset_path);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace pinnopt
