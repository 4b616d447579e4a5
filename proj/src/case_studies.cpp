#include "pinnopt/case_studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pinnopt/random.hpp"

namespace pinnopt::cases {

std::string to_string(CaseId id) {
  switch (id) {
    case CaseId::Blending: return "blending";
    case CaseId::Column: return "column";
    case CaseId::Cdu: return "cdu";
  }
  return "?";
}

CaseId parse_case_id(const std::string& text) {
  if (text == "blending") return CaseId::Blending;
  if (text == "column") return CaseId::Column;
  if (text == "cdu") return CaseId::Cdu;
  throw ConfigError("unknown case '" + text + "' (expected blending, column or cdu)");
}

BlendingOutput blending_forward(double x1, double x2, double w1, double w2) {
  const double w = w1 + w2;
  if (w == 0.0) throw ContractError("blending_forward: total flow is zero");
  return {(x1 * w1 + x2 * w2) / w, w};
}

double cdu_cut(double te) {
  double v = 0.0;
  for (std::size_t k = kCutCoefficients.size(); k-- > 0;) v = v * te + kCutCoefficients[k];
  return v;
}

/// Cut-order slack in percent, so that equal temperatures rounded by the
/// solver still count as an empty product rather than a violation.
constexpr double kCutOrderTolerance = 1e-9;

std::array<double, 6> cdu_forward(double feed, std::span<const double, 5> te) {
  std::array<double, 6> flows{};
  double previous = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    const double cut = cdu_cut(te[s]);
    if (cut < previous - kCutOrderTolerance)
      throw InfeasiblePointError(std::string("cut of ") + kCduProducts[s] + " is below the previous cut");
    flows[s] = feed * (cut - previous) / 100.0;
    previous = cut;
  }
  if (previous > 100.0) throw InfeasiblePointError("VGO cut exceeds 100");
  flows[5] = feed * (100.0 - previous) / 100.0;
  return flows;
}

double column_residuum(std::span<const double> inputs) {
  if (inputs.size() != 7) throw ContractError("column_residuum: expected feed plus six products");
  double r = inputs[0];
  for (std::size_t s = 1; s < 7; ++s) r -= inputs[s];
  return r;
}

Matrix lhs_sample(std::size_t n, std::span<const std::pair<double, double>> bounds, std::uint64_t seed) {
  if (n == 0) throw ContractError("lhs_sample: need at least one point");
  for (const auto& [lo, hi] : bounds)
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ContractError("lhs_sample: invalid bounds");
  rng::Engine eng(seed);
  Matrix out(n, bounds.size());
  const double width = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    const std::vector<std::size_t> strata = rng::permutation(eng, n);
    const auto [lo, hi] = bounds[d];
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (static_cast<double>(strata[i]) + rng::uniform01(eng)) * width;
      out(i, d) = lo + (hi - lo) * std::min(t, 1.0);
    }
  }
  return out;
}

namespace {

void add_noise(Matrix& outputs, double snr_db, rng::Engine& eng) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  const std::size_t n = outputs.rows();
  for (std::size_t j = 0; j < outputs.cols(); ++j) {
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) power += outputs(i, j) * outputs(i, j);
    power /= static_cast<double>(n);
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    for (std::size_t i = 0; i < n; ++i) outputs(i, j) += sigma * rng::normal(eng);
  }
}

Dataset assemble(const Matrix& raw_in, const Matrix& raw_out, std::vector<std::string> in_names,
                 std::vector<std::string> out_names, const DatasetOptions& options, rng::Engine& eng) {
  Dataset d;
  d.input_scaler = Scaler::fit(raw_in);
  d.output_scaler = Scaler::fit(raw_out);
  const std::size_t n = raw_in.rows();
  d.inputs = Matrix(n, raw_in.cols());
  d.outputs = Matrix(n, raw_out.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < raw_in.cols(); ++k) d.inputs(i, k) = d.input_scaler.to_normalized(k, raw_in(i, k));
    for (std::size_t k = 0; k < raw_out.cols(); ++k)
      d.outputs(i, k) = d.output_scaler.to_normalized(k, raw_out(i, k));
  }
  add_noise(d.outputs, options.noise_snr_db, eng);
  const std::vector<std::size_t> order = rng::permutation(eng, n);
  const auto n_train = static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
  d.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.test.begin(), d.test.end());
  d.input_names = std::move(in_names);
  d.output_names = std::move(out_names);
  d.validate();
  return d;
}

void check_options(const DatasetOptions& o, std::size_t min_samples) {
  if (o.samples < min_samples)
    throw ContractError("dataset needs at least " + std::to_string(min_samples) + " samples");
  if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) throw ContractError("train fraction must lie in (0, 1)");
  if (std::isnan(o.noise_snr_db)) throw ContractError("noise SNR must be a number");
}

std::array<double, 5> temperatures(std::span<const double> row) {
  return {row[1], row[2], row[3], row[4], row[5]};
}

bool cdu_feasible(std::span<const double> row) {
  double previous = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    const double cut = cdu_cut(row[s + 1]);
    if (cut < previous) return false;
    previous = cut;
  }
  return previous <= 100.0;
}

}  // namespace

void add_output_noise(Matrix& outputs, double snr_db, std::uint64_t seed) {
  rng::Engine eng(seed);
  add_noise(outputs, snr_db, eng);
}

Dataset make_blending_dataset(const DatasetOptions& options) {
  check_options(options, 10);
  rng::Engine eng(options.seed);
  const std::size_t n = options.samples;
  Matrix in(n, 4), out(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    do {
      for (std::size_t k = 0; k < 4; ++k) in(i, k) = rng::uniform(eng, kBlendingBounds[k].first, kBlendingBounds[k].second);
    } while (in(i, 2) + in(i, 3) <= 0.0);
    const BlendingOutput b = blending_forward(in(i, 0), in(i, 1), in(i, 2), in(i, 3));
    out(i, 0) = b.x;
    out(i, 1) = b.w;
  }
  return assemble(in, out, {"x1", "x2", "w1", "w2"}, {"x", "w"}, options, eng);
}

Dataset make_cdu_dataset(const DatasetOptions& options, GenerationLog* log) {
  check_options(options, 10);
  if (!(options.cdu.feed_lo > 0.0 && options.cdu.feed_lo < options.cdu.feed_hi))
    throw ContractError("CDU feed range must satisfy 0 < lo < hi");
  std::vector<std::pair<double, double>> bounds{{options.cdu.feed_lo, options.cdu.feed_hi}};
  bounds.insert(bounds.end(), kCutTemperatureBounds.begin(), kCutTemperatureBounds.end());
  const std::size_t n = options.samples;
  Matrix in = lhs_sample(n, bounds, options.seed);
  // Separate stream for resampling and noise so the LHS design depends on the seed alone.
  rng::Engine eng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t rejected = 0;
  Matrix out(n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    while (!cdu_feasible(in.row(i))) {
      ++rejected;
      for (std::size_t k = 0; k < bounds.size(); ++k) in(i, k) = rng::uniform(eng, bounds[k].first, bounds[k].second);
    }
    const std::array<double, 5> te = temperatures(in.row(i));
    const std::array<double, 6> flows = cdu_forward(in(i, 0), te);
    for (std::size_t k = 0; k < 6; ++k) out(i, k) = flows[k];
  }
  if (log) log->rejected = rejected;
  std::vector<std::string> in_names{"F_CDU"}, out_names;
  for (const char* p : kCduProducts) {
    in_names.push_back(std::string("TE_") + p);
    out_names.push_back(std::string("F_") + p);
  }
  out_names.push_back("F_RSD");
  return assemble(in, out, std::move(in_names), std::move(out_names), options, eng);
}

Dataset make_column_dataset(const DatasetOptions& options) {
  check_options(options, 10);
  rng::Engine eng(options.seed);
  const std::size_t n = options.samples;
  Matrix in(n, 7), out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double feed = rng::uniform(eng, kColumnFeedBounds.first, kColumnFeedBounds.second);
    in(i, 0) = feed;
    for (std::size_t s = 0; s < 6; ++s)
      in(i, s + 1) = feed * rng::uniform(eng, kColumnFractionBounds[s].first, kColumnFractionBounds[s].second);
    out(i, 0) = column_residuum(in.row(i));
  }
  std::vector<std::string> in_names{"F_CR"};
  for (const char* p : kColumnProducts) in_names.push_back(std::string("F_") + p);
  return assemble(in, out, std::move(in_names), {"F_RSD"}, options, eng);
}

Dataset make_dataset(CaseId id, const DatasetOptions& options, GenerationLog* log) {
  switch (id) {
    case CaseId::Blending: return make_blending_dataset(options);
    case CaseId::Column: return make_column_dataset(options);
    case CaseId::Cdu: return make_cdu_dataset(options, log);
  }
  throw ContractError("unknown case");
}

PhysicsTerm physics_term(CaseId id) {
  switch (id) {
    case CaseId::Blending: return PhysicsTerm::blending();
    case CaseId::Column: return PhysicsTerm::column();
    case CaseId::Cdu: return PhysicsTerm::cdu();
  }
  throw ContractError("unknown case");
}

std::size_t objective_output(CaseId id) {
  switch (id) {
    case CaseId::Blending: return 0;  // x
    case CaseId::Column: return 0;    // residuum
    case CaseId::Cdu: return 5;       // residuum
  }
  throw ContractError("unknown case");
}

std::vector<double> first_principles(CaseId id, std::span<const double> u) {
  switch (id) {
    case CaseId::Blending: {
      if (u.size() != 4) throw ContractError("blending model takes 4 inputs");
      if (u[2] + u[3] <= 0.0) throw InfeasiblePointError("blending total flow is not positive");
      const BlendingOutput b = blending_forward(u[0], u[1], u[2], u[3]);
      return {b.x, b.w};
    }
    case CaseId::Column: {
      const double r = column_residuum(u);
      if (r < 0.0) throw InfeasiblePointError("column products exceed the feed");
      return {r};
    }
    case CaseId::Cdu: {
      if (u.size() != 6) throw ContractError("CDU model takes 6 inputs");
      const std::array<double, 5> te = temperatures(u);
      const std::array<double, 6> f = cdu_forward(u[0], te);
      return {f.begin(), f.end()};
    }
  }
  throw ContractError("unknown case");
}

OracleSolution global_oracle(CaseId id, const Dataset& data, const CduOptions& cdu, std::size_t grid_points) {
  OracleSolution s;
  switch (id) {
    case CaseId::Blending: {
      s.inputs = {kBlendingBounds[0].first, kBlendingBounds[1].first, kBlendingBounds[2].second, kBlendingMinW2};
      s.outputs = first_principles(id, s.inputs);
      s.objective = s.outputs[0];
      return s;
    }
    case CaseId::Column: {
      const auto hi = data.input_scaler.raw_max();
      s.inputs.assign(hi.begin(), hi.end());
      s.outputs = {column_residuum(s.inputs)};
      s.objective = s.outputs[0];
      return s;
    }
    case CaseId::Cdu: {
      if (grid_points < 2) throw ContractError("CDU oracle grid needs at least 2 points per dimension");
      std::array<std::vector<double>, 5> axes;
      for (std::size_t d = 0; d < 5; ++d) {
        const auto [lo, hi] = kCutTemperatureBounds[d];
        for (std::size_t k = 0; k < grid_points; ++k)
          axes[d].push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_points - 1));
      }
      std::array<std::size_t, 5> idx{};
      double best = std::numeric_limits<double>::infinity();
      std::array<double, 5> best_te{};
      for (;;) {
        std::array<double, 6> row{cdu.feed_hi};
        for (std::size_t d = 0; d < 5; ++d) row[d + 1] = axes[d][idx[d]];
        if (cdu_feasible(row)) {
          const std::array<double, 5> te = temperatures(row);
          const double rsd = cdu_forward(cdu.feed_hi, te)[5];
          if (rsd < best) {
            best = rsd;
            best_te = te;
          }
        }
        std::size_t d = 0;
        while (d < 5 && ++idx[d] == grid_points) idx[d++] = 0;
        if (d == 5) break;
      }
      if (!std::isfinite(best)) throw InfeasiblePointError("no feasible CDU grid point");
      s.inputs = {cdu.feed_hi};
      s.inputs.insert(s.inputs.end(), best_te.begin(), best_te.end());
      s.outputs = first_principles(id, s.inputs);
      s.objective = s.outputs[5];
      return s;
    }
  }
  throw ContractError("unknown case");
}

double sse_compare(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("sse_compare: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.flat().size(); ++i) {
    const double d = a.flat()[i] - b.flat()[i];
    s += d * d;
  }
  return s;
}

}  // namespace pinnopt::cases
