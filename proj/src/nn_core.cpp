#include "pinnopt/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pinnopt/error.hpp"
#include "pinnopt/kernels.hpp"
#include "pinnopt/pwl_approx.hpp"
#include "text_util.hpp"

namespace pinnopt {

Activation Activation::pwl_tanh(int pieces) {
  if (pieces != 3 && pieces != 5) {
    throw ContractError("pwl_tanh activation needs 3 or 5 pieces, got " + std::to_string(pieces));
  }
  return {Kind::PwlTanh, pieces};
}

std::string Activation::name() const {
  switch (kind) {
    case Kind::Tanh: return "tanh";
    case Kind::Relu: return "relu";
    case Kind::Identity: return "identity";
    case Kind::PwlTanh: return "pwl_tanh" + std::to_string(pieces);
  }
  return "?";
}

Activation Activation::parse(const std::string& name) {
  if (name == "tanh") return tanh();
  if (name == "relu") return relu();
  if (name == "identity") return identity();
  if (name == "pwl_tanh3") return pwl_tanh(3);
  if (name == "pwl_tanh5") return pwl_tanh(5);
  throw ParseError("unknown activation '" + name + "'");
}

double activation_eval(const Activation& act, double x) {
  switch (act.kind) {
    case Activation::Kind::Tanh: return std::tanh(x);
    case Activation::Kind::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Kind::Identity: return x;
    case Activation::Kind::PwlTanh: return tanh_pwl_ref(act.pieces).eval(x);
  }
  return x;
}

double activation_derivative(const Activation& act, double x) {
  switch (act.kind) {
    case Activation::Kind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Kind::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Kind::Identity: return 1.0;
    case Activation::Kind::PwlTanh: return tanh_pwl_ref(act.pieces).slope(x);
  }
  return 1.0;
}

NetworkParams NetworkParams::zeros(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, Activation hidden,
                                   Activation output) {
  NetworkParams p;
  p.A = Matrix(n_out, n_hidden);
  p.B = Matrix(n_hidden, n_in);
  p.C.assign(n_hidden, 0.0);
  p.D.assign(n_out, 0.0);
  p.hidden = hidden;
  p.output = output;
  return p;
}

void NetworkParams::validate() const {
  if (A.cols() != B.rows() || C.size() != B.rows() || D.size() != A.rows()) {
    throw ContractError("NetworkParams: inconsistent shapes (A " + std::to_string(A.rows()) + "x" +
                        std::to_string(A.cols()) + ", B " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                        ", C " + std::to_string(C.size()) + ", D " + std::to_string(D.size()) + ")");
  }
  if (B.cols() == 0 || B.rows() == 0 || A.rows() == 0) throw ContractError("NetworkParams: empty layer");
  auto finite = [](std::span<const double> v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  if (!finite(A.flat()) || !finite(B.flat()) || !finite(C) || !finite(D)) {
    throw ContractError("NetworkParams: non-finite entry");
  }
}

namespace {

void check_input(const NetworkParams& params, std::span<const double> input) {
  if (input.size() != params.n_in() || params.A.cols() != params.B.rows() || params.C.size() != params.B.rows() ||
      params.D.size() != params.A.rows()) {
    throw ContractError("forward: input length " + std::to_string(input.size()) + " does not match network n_in " +
                        std::to_string(params.n_in()) + " or parameters are inconsistent");
  }
}

}  // namespace

std::vector<double> forward(const NetworkParams& params, std::span<const double> input, const Activation& hidden,
                            const Activation& output) {
  check_input(params, input);
  std::vector<double> h(params.n_hidden());
  for (std::size_t j = 0; j < h.size(); ++j) {
    h[j] = activation_eval(hidden, kernels::dot(params.B.row(j), input) + params.C[j]);
  }
  std::vector<double> y(params.n_out());
  for (std::size_t o = 0; o < y.size(); ++o) {
    y[o] = activation_eval(output, kernels::dot(params.A.row(o), h) + params.D[o]);
  }
  return y;
}

std::vector<double> forward(const NetworkParams& params, std::span<const double> input) {
  return forward(params, input, params.hidden, params.output);
}

void forward_trace(const NetworkParams& params, std::span<const double> input, ForwardTrace& t) {
  check_input(params, input);
  const std::size_t nh = params.n_hidden();
  const std::size_t no = params.n_out();
  t.hidden_pre.resize(nh);
  t.hidden_post.resize(nh);
  t.output_pre.resize(no);
  t.output.resize(no);
  for (std::size_t j = 0; j < nh; ++j) {
    t.hidden_pre[j] = kernels::dot(params.B.row(j), input) + params.C[j];
    t.hidden_post[j] = activation_eval(params.hidden, t.hidden_pre[j]);
  }
  for (std::size_t o = 0; o < no; ++o) {
    t.output_pre[o] = kernels::dot(params.A.row(o), t.hidden_post) + params.D[o];
    t.output[o] = activation_eval(params.output, t.output_pre[o]);
  }
}

Scaler::Scaler(std::vector<double> raw_min, std::vector<double> raw_max) : min_(std::move(raw_min)), max_(std::move(raw_max)) {
  if (min_.size() != max_.size()) throw ContractError("Scaler: min/max length mismatch");
  for (std::size_t k = 0; k < min_.size(); ++k) {
    if (!std::isfinite(min_[k]) || !std::isfinite(max_[k]) || !(max_[k] > min_[k])) {
      throw ContractError("Scaler: feature " + std::to_string(k) + " has a degenerate range [" +
                          detail::format_double(min_[k]) + ", " + detail::format_double(max_[k]) + "]");
    }
  }
}

Scaler Scaler::fit(const Matrix& raw) {
  std::vector<double> lo(raw.cols(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(raw.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      lo[c] = std::min(lo[c], raw(r, c));
      hi[c] = std::max(hi[c], raw(r, c));
    }
  }
  return Scaler(std::move(lo), std::move(hi));
}

double Scaler::to_normalized(std::size_t k, double raw) const {
  return 2.0 * (raw - min_[k]) / (max_[k] - min_[k]) - 1.0;
}

double Scaler::to_raw(std::size_t k, double normalized) const {
  return min_[k] + (normalized + 1.0) * 0.5 * (max_[k] - min_[k]);
}

std::vector<double> Scaler::apply(std::span<const double> values, Direction direction) const {
  if (values.size() != features()) {
    throw ContractError("Scaler: vector length " + std::to_string(values.size()) + " does not match " +
                        std::to_string(features()) + " features");
  }
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = direction == Direction::ToNormalized ? to_normalized(k, values[k]) : to_raw(k, values[k]);
  }
  return out;
}

std::vector<double> scale(const Scaler& scaler, std::span<const double> values, Scaler::Direction direction) {
  return scaler.apply(values, direction);
}

std::vector<double> Dataset::raw_input(std::size_t row) const {
  return input_scaler.apply(inputs.row(row), Scaler::Direction::ToRaw);
}

std::vector<double> Dataset::raw_output(std::size_t row) const {
  return output_scaler.apply(outputs.row(row), Scaler::Direction::ToRaw);
}

void Dataset::validate() const {
  if (inputs.rows() != outputs.rows()) throw ContractError("Dataset: input/output row counts differ");
  if (input_scaler.features() != inputs.cols() || output_scaler.features() != outputs.cols()) {
    throw ContractError("Dataset: scaler feature count does not match columns");
  }
  if (input_names.size() != inputs.cols() || output_names.size() != outputs.cols()) {
    throw ContractError("Dataset: feature name count does not match columns");
  }
  std::vector<int> seen(size(), 0);
  for (auto idx : train) {
    if (idx >= size()) throw ContractError("Dataset: train index out of range");
    ++seen[idx];
  }
  for (auto idx : test) {
    if (idx >= size()) throw ContractError("Dataset: test index out of range");
    ++seen[idx];
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw ContractError("Dataset: train/test split is not a partition of the rows");
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << detail::format_double(row[k]);
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) write_row(out, m.row(r));
}

// Reads the next non-empty line into a vector of exactly `n` numbers.
std::vector<double> read_numbers(std::istream& in, std::size_t n, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto tokens = detail::split_ws(line);
    if (tokens.size() != n) {
      throw ParseError(std::string("params: expected ") + std::to_string(n) + " values in " + what + " row, got " +
                       std::to_string(tokens.size()));
    }
    std::vector<double> v;
    v.reserve(n);
    for (const auto& t : tokens) v.push_back(detail::parse_double(t));
    return v;
  }
  throw ParseError(std::string("params: unexpected end of input while reading ") + what);
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols, const char* what) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = read_numbers(in, cols, what);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

void write_params(const NetworkParams& params, std::ostream& out) {
  params.validate();
  out << params.n_in() << ' ' << params.n_hidden() << ' ' << params.n_out() << ' ' << params.hidden.name() << ' '
      << params.output.name() << '\n';
  write_matrix(out, params.B);
  out << '\n';
  write_row(out, params.C);
  write_matrix(out, params.A);
  out << '\n';
  write_row(out, params.D);
}

NetworkParams read_params(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && detail::trim(line).empty()) {
  }
  const auto header = detail::split_ws(line);
  if (header.size() != 5) throw ParseError("params: header must be 'n_in n_hidden n_out hidden_act output_act'");
  const auto n_in = static_cast<std::size_t>(detail::parse_int(header[0]));
  const auto n_hidden = static_cast<std::size_t>(detail::parse_int(header[1]));
  const auto n_out = static_cast<std::size_t>(detail::parse_int(header[2]));
  NetworkParams p;
  p.hidden = Activation::parse(header[3]);
  p.output = Activation::parse(header[4]);
  p.B = read_matrix(in, n_hidden, n_in, "B");
  p.C = read_numbers(in, n_hidden, "C");
  p.A = read_matrix(in, n_out, n_hidden, "A");
  p.D = read_numbers(in, n_out, "D");
  p.validate();
  return p;
}

void save_params(const NetworkParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_params(params, out);
}

NetworkParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  return read_params(in);
}

void write_dataset_csv(const Dataset& data, std::ostream& rows, std::ostream& scaler) {
  data.validate();
  rows << "split";
  for (const auto& n : data.input_names) rows << ',' << n;
  for (const auto& n : data.output_names) rows << ',' << n;
  rows << '\n';
  std::vector<char> is_train(data.size(), 0);
  for (auto idx : data.train) is_train[idx] = 1;
  for (std::size_t r = 0; r < data.size(); ++r) {
    rows << (is_train[r] ? "train" : "test");
    for (double v : data.raw_input(r)) rows << ',' << detail::format_double(v);
    for (double v : data.raw_output(r)) rows << ',' << detail::format_double(v);
    rows << '\n';
  }
  scaler << "name,role,min,max\n";
  for (std::size_t k = 0; k < data.n_in(); ++k) {
    scaler << data.input_names[k] << ",input," << detail::format_double(data.input_scaler.raw_min()[k]) << ','
           << detail::format_double(data.input_scaler.raw_max()[k]) << '\n';
  }
  for (std::size_t k = 0; k < data.n_out(); ++k) {
    scaler << data.output_names[k] << ",output," << detail::format_double(data.output_scaler.raw_min()[k]) << ','
           << detail::format_double(data.output_scaler.raw_max()[k]) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& rows, std::istream& scaler) {
  Dataset d;
  std::string line;
  if (!std::getline(scaler, line) || detail::trim(line) != "name,role,min,max") {
    throw ParseError("scaler csv: expected header 'name,role,min,max'");
  }
  std::vector<double> in_lo, in_hi, out_lo, out_hi;
  while (std::getline(scaler, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 4) throw ParseError("scaler csv: expected 4 columns in '" + line + "'");
    if (f[1] == "input") {
      d.input_names.push_back(f[0]);
      in_lo.push_back(detail::parse_double(f[2]));
      in_hi.push_back(detail::parse_double(f[3]));
    } else if (f[1] == "output") {
      d.output_names.push_back(f[0]);
      out_lo.push_back(detail::parse_double(f[2]));
      out_hi.push_back(detail::parse_double(f[3]));
    } else {
      throw ParseError("scaler csv: unknown role '" + f[1] + "'");
    }
  }
  d.input_scaler = Scaler(in_lo, in_hi);
  d.output_scaler = Scaler(out_lo, out_hi);

  if (!std::getline(rows, line)) throw ParseError("dataset csv: missing header");
  const auto header = detail::split(line, ',');
  const std::size_t n_in = d.input_names.size();
  const std::size_t n_out = d.output_names.size();
  if (header.size() != 1 + n_in + n_out || header[0] != "split") {
    throw ParseError("dataset csv: header does not match the scaler file");
  }
  for (std::size_t k = 0; k < n_in; ++k) {
    if (header[1 + k] != d.input_names[k]) throw ParseError("dataset csv: column '" + header[1 + k] + "' out of order");
  }
  for (std::size_t k = 0; k < n_out; ++k) {
    if (header[1 + n_in + k] != d.output_names[k]) {
      throw ParseError("dataset csv: column '" + header[1 + n_in + k] + "' out of order");
    }
  }
  std::vector<std::vector<double>> in_rows, out_rows;
  while (std::getline(rows, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != header.size()) throw ParseError("dataset csv: wrong column count in '" + line + "'");
    const std::size_t idx = in_rows.size();
    if (f[0] == "train") {
      d.train.push_back(idx);
    } else if (f[0] == "test") {
      d.test.push_back(idx);
    } else {
      throw ParseError("dataset csv: split must be 'train' or 'test'");
    }
    std::vector<double> u(n_in), y(n_out);
    for (std::size_t k = 0; k < n_in; ++k) u[k] = d.input_scaler.to_normalized(k, detail::parse_double(f[1 + k]));
    for (std::size_t k = 0; k < n_out; ++k) y[k] = d.output_scaler.to_normalized(k, detail::parse_double(f[1 + n_in + k]));
    in_rows.push_back(std::move(u));
    out_rows.push_back(std::move(y));
  }
  d.inputs = Matrix(in_rows.size(), n_in);
  d.outputs = Matrix(out_rows.size(), n_out);
  for (std::size_t r = 0; r < in_rows.size(); ++r) {
    std::copy(in_rows[r].begin(), in_rows[r].end(), d.inputs.row(r).begin());
    std::copy(out_rows[r].begin(), out_rows[r].end(), d.outputs.row(r).begin());
  }
  d.validate();
  return d;
}

std::string scaler_path_for(const std::string& dataset_path) {
  const auto dot = dataset_path.rfind(".csv");
  const std::string stem = dot != std::string::npos && dot + 4 == dataset_path.size() ? dataset_path.substr(0, dot) : dataset_path;
  return stem + ".scaler.csv";
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream rows(path);
  std::ofstream scaler(scaler_path_for(path));
  if (!rows || !scaler) throw Error("cannot write dataset '" + path + "'");
  write_dataset_csv(data, rows, scaler);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream rows(path);
  std::ifstream scaler(scaler_path_for(path));
  if (!rows || !scaler) throw Error("cannot read dataset '" + path + "' (and its .scaler.csv)");
  return read_dataset_csv(rows, scaler);
}

}  // namespace pinnopt
