#include "pinnopt/nn_encode.hpp"

#include <algorithm>
#include <cmath>

#include "pinnopt/error.hpp"
#include "text_util.hpp"

namespace pinnopt {

SurrogateQuery SurrogateQuery::box(std::size_t n_in, std::size_t output, Sense sense) {
  SurrogateQuery q;
  q.objective_output = output;
  q.sense = sense;
  q.input_lo.assign(n_in, -1.0);
  q.input_hi.assign(n_in, 1.0);
  return q;
}

void SurrogateQuery::fix(std::size_t input, double value) {
  if (fixings.size() < input_lo.size()) fixings.resize(input_lo.size());
  fixings.at(input) = value;
}

double SurrogateQuery::lower(std::size_t i) const {
  return i < fixings.size() && fixings[i] ? *fixings[i] : input_lo[i];
}

double SurrogateQuery::upper(std::size_t i) const {
  return i < fixings.size() && fixings[i] ? *fixings[i] : input_hi[i];
}

void SurrogateQuery::validate(std::size_t n_in, std::size_t n_out) const {
  if (objective_output >= n_out) throw ContractError("query objective output out of range");
  if (input_lo.size() != n_in || input_hi.size() != n_in) throw ContractError("query bounds must cover every input");
  if (!fixings.empty() && fixings.size() != n_in) throw ContractError("query fixings must cover every input");
  for (std::size_t i = 0; i < n_in; ++i) {
    if (!(input_lo[i] >= -1.0 && input_hi[i] <= 1.0 && input_lo[i] <= input_hi[i]))
      throw ContractError("query bounds of input " + std::to_string(i + 1) + " must satisfy -1 <= lo <= hi <= 1");
    if (i < fixings.size() && fixings[i] && !(*fixings[i] >= input_lo[i] && *fixings[i] <= input_hi[i]))
      throw ContractError("fixing of input " + std::to_string(i + 1) + " lies outside its bounds");
  }
  for (const InputConstraint& c : constraints)
    for (const auto& [idx, coef] : c.terms)
      if (idx >= n_in || !std::isfinite(coef)) throw ContractError("query constraint references a bad input");
}

std::string to_string(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::PwlCc: return "cc";
    case EncodingKind::PwlSos2: return "sos2";
    case EncodingKind::ReluBigM: return "relu_bigm";
  }
  return "?";
}

EncodingKind parse_encoding_kind(const std::string& text) {
  if (text == "cc") return EncodingKind::PwlCc;
  if (text == "sos2") return EncodingKind::PwlSos2;
  if (text == "relu_bigm") return EncodingKind::ReluBigM;
  throw ConfigError("unknown encoding '" + text + "' (expected cc, sos2 or relu_bigm)");
}

std::vector<Interval> preactivation_bounds(const NetworkParams& params, const SurrogateQuery& query) {
  std::vector<Interval> out(params.n_hidden());
  for (std::size_t j = 0; j < params.n_hidden(); ++j) {
    double lo = params.C[j], hi = params.C[j];
    for (std::size_t k = 0; k < params.n_in(); ++k) {
      const double w = params.B(j, k);
      const double a = w * query.lower(k), b = w * query.upper(k);
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    out[j] = {lo, hi};
  }
  return out;
}

std::vector<double> EncodedModel::input_values(const std::vector<double>& solution) const {
  std::vector<double> u(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) u[i] = solution.at(inputs[i].index);
  return u;
}

std::vector<double> pwl_forward(const NetworkParams& params, const PwlFunction& pwl, std::span<const double> input) {
  if (input.size() != params.n_in()) throw ContractError("pwl_forward: input size mismatch");
  std::vector<double> h(params.n_hidden());
  for (std::size_t j = 0; j < h.size(); ++j) {
    double z = params.C[j];
    for (std::size_t k = 0; k < params.n_in(); ++k) z += params.B(j, k) * input[k];
    h[j] = params.hidden.is_tanh_family() ? pwl(z) : activation_eval(params.hidden, z);
  }
  std::vector<double> y(params.n_out());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double z = params.D[i];
    for (std::size_t j = 0; j < h.size(); ++j) z += params.A(i, j) * h[j];
    y[i] = params.output.is_tanh_family() ? pwl(z) : activation_eval(params.output, z);
  }
  return y;
}

namespace {

/// Range of pwl over [lo, hi] (clamped to its domain).
Interval pwl_range(const PwlFunction& pwl, Interval x) {
  const double lo = std::clamp(x.lo, pwl.domain_lo(), pwl.domain_hi());
  const double hi = std::clamp(x.hi, pwl.domain_lo(), pwl.domain_hi());
  Interval r{std::min(pwl(lo), pwl(hi)), std::max(pwl(lo), pwl(hi))};
  for (double b : pwl.breakpoints())
    if (b > lo && b < hi) {
      r.lo = std::min(r.lo, pwl(b));
      r.hi = std::max(r.hi, pwl(b));
    }
  return r;
}

Interval affine_range(std::span<const double> weights, double bias, const std::vector<Interval>& ranges) {
  Interval r{bias, bias};
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double a = weights[j] * ranges[j].lo, b = weights[j] * ranges[j].hi;
    r.lo += std::min(a, b);
    r.hi += std::max(a, b);
  }
  return r;
}

std::string fmt(double v) { return detail::format_double(v); }

std::string interval_text(Interval r) { return "[" + fmt(r.lo) + ", " + fmt(r.hi) + "]"; }

class Builder {
 public:
  Builder(const NetworkParams& params, const SurrogateQuery& query, EncodingKind kind)
      : params_(params), query_(query) {
    params.validate();
    query.validate(params.n_in(), params.n_out());
    out_.kind = kind;
    MilpModel& m = out_.model;
    m.add_comment("encoding: " + to_string(kind));
    m.add_comment("network: " + std::to_string(params.n_in()) + " inputs, " + std::to_string(params.n_hidden()) +
                  " hidden (" + params.hidden.name() + "), " + std::to_string(params.n_out()) + " outputs (" +
                  params.output.name() + ")");
    m.add_comment(std::string("objective: ") + (query.sense == Sense::Minimize ? "minimize" : "maximize") + " y" +
                  std::to_string(query.objective_output + 1));
    for (std::size_t k = 0; k < params.n_in(); ++k) {
      const double lo = query.lower(k), hi = query.upper(k);
      out_.inputs.push_back(m.add_continuous("u" + std::to_string(k + 1), lo, hi));
    }
    for (const InputConstraint& c : query.constraints) {
      std::vector<Term> terms;
      for (const auto& [idx, coef] : c.terms) terms.push_back({out_.inputs[idx], coef});
      m.add_constraint(std::move(terms), c.relation, c.rhs);
    }
  }

  /// z = B_j u + C_j for every hidden neuron.
  void hidden_preactivations(double lo, double hi, const std::vector<Interval>& ranges) {
    MilpModel& m = out_.model;
    for (std::size_t j = 0; j < params_.n_hidden(); ++j) {
      const double zlo = std::isfinite(lo) ? lo : ranges[j].lo;
      const double zhi = std::isfinite(hi) ? hi : ranges[j].hi;
      VarId z = m.add_continuous("z" + std::to_string(j + 1), zlo, zhi);
      std::vector<Term> row{{z, 1.0}};
      for (std::size_t k = 0; k < params_.n_in(); ++k)
        if (params_.B(j, k) != 0.0) row.push_back({out_.inputs[k], -params_.B(j, k)});
      m.add_constraint(std::move(row), Relation::Equal, params_.C[j]);
      out_.hidden_pre.push_back(z);
    }
  }

  /// lambda block tying f = pwl(z); returns nothing, f and z already exist.
  void pwl_block(const PwlFunction& pwl, VarId z, VarId f, const std::string& tag, bool sos2) {
    MilpModel& m = out_.model;
    const auto bp = pwl.breakpoints();
    const auto val = pwl.values();
    const std::size_t points = bp.size(), segments = points - 1;
    std::vector<VarId> lam;
    for (std::size_t k = 0; k < points; ++k)
      lam.push_back(m.add_continuous("l" + tag + "_" + std::to_string(k + 1), 0.0, 1.0));
    std::vector<Term> sum, zrow{{z, -1.0}}, frow{{f, -1.0}};
    for (std::size_t k = 0; k < points; ++k) {
      sum.push_back({lam[k], 1.0});
      if (bp[k] != 0.0) zrow.push_back({lam[k], bp[k]});
      if (val[k] != 0.0) frow.push_back({lam[k], val[k]});
    }
    m.add_constraint(std::move(sum), Relation::Equal, 1.0);
    m.add_constraint(std::move(zrow), Relation::Equal, 0.0);
    m.add_constraint(std::move(frow), Relation::Equal, 0.0);
    if (sos2) {
      m.add_sos2(lam);
    } else {
      std::vector<VarId> gam;
      std::vector<Term> gsum;
      for (std::size_t s = 0; s < segments; ++s) {
        gam.push_back(m.add_binary("g" + tag + "_" + std::to_string(s + 1)));
        gsum.push_back({gam[s], 1.0});
      }
      m.add_constraint(std::move(gsum), Relation::Equal, 1.0);
      for (std::size_t k = 0; k < points; ++k) {
        std::vector<Term> adj{{lam[k], 1.0}};
        if (k > 0) adj.push_back({gam[k - 1], -1.0});
        if (k < segments) adj.push_back({gam[k], -1.0});
        m.add_constraint(std::move(adj), Relation::LessEqual, 0.0);
      }
    }
    ++out_.blocks;
    out_.lambda_count += points;
  }

  /// y_pre = A_i h + D_i for the objective output; returns its variable.
  VarId output_preactivation(const std::string& name, double lo, double hi) {
    const std::size_t i = query_.objective_output;
    MilpModel& m = out_.model;
    VarId y = m.add_continuous(name, lo, hi);
    std::vector<Term> row{{y, 1.0}};
    for (std::size_t j = 0; j < params_.n_hidden(); ++j)
      if (params_.A(i, j) != 0.0) row.push_back({out_.hidden_post[j], -params_.A(i, j)});
    m.add_constraint(std::move(row), Relation::Equal, params_.D[i]);
    return y;
  }

  void warn(const std::string& text) {
    out_.warnings.push_back(text);
    out_.model.add_comment("warning: " + text);
  }

  EncodedModel finish(VarId output) {
    out_.output = output;
    out_.model.set_objective(query_.sense, {{output, 1.0}});
    out_.model.finalize();
    return std::move(out_);
  }

  EncodedModel& out() { return out_; }

 private:
  const NetworkParams& params_;
  const SurrogateQuery& query_;
  EncodedModel out_;
};

EncodedModel encode_pwl(const NetworkParams& params, const PwlFunction& pwl, const SurrogateQuery& query,
                        bool sos2) {
  if (!params.hidden.is_tanh_family())
    throw ContractError("PWL encoding needs a tanh hidden layer, got " + params.hidden.name());
  if (!params.output.is_tanh_family() && params.output.kind != Activation::Kind::Identity)
    throw ContractError("PWL encoding needs a tanh or identity output, got " + params.output.name());
  Builder b(params, query, sos2 ? EncodingKind::PwlSos2 : EncodingKind::PwlCc);
  MilpModel& m = b.out().model;
  m.add_comment("pieces: " + std::to_string(pwl.segment_count()));
  std::string bps = "breakpoints:";
  for (double x : pwl.breakpoints()) bps += " " + fmt(x);
  m.add_comment(bps);

  const Interval domain{pwl.domain_lo(), pwl.domain_hi()};
  const std::vector<Interval> pre = preactivation_bounds(params, query);
  for (std::size_t j = 0; j < pre.size(); ++j)
    if (pre[j].lo < domain.lo || pre[j].hi > domain.hi)
      b.warn("hidden neuron " + std::to_string(j + 1) + " pre-activation interval " + interval_text(pre[j]) +
             " exceeds the PWL domain " + interval_text(domain));

  b.hidden_preactivations(domain.lo, domain.hi, pre);
  std::vector<Interval> post;
  for (std::size_t j = 0; j < params.n_hidden(); ++j) {
    VarId f = m.add_continuous("h" + std::to_string(j + 1), pwl.min_value(), pwl.max_value());
    b.out().hidden_post.push_back(f);
    b.pwl_block(pwl, b.out().hidden_pre[j], f, std::to_string(j + 1), sos2);
    post.push_back(pwl_range(pwl, pre[j]));
  }

  const std::size_t i = query.objective_output;
  const std::string yname = "y" + std::to_string(i + 1);
  const Interval out_pre = affine_range(params.A.row(i), params.D[i], post);
  if (params.output.kind == Activation::Kind::Identity) return b.finish(b.output_preactivation(yname, out_pre.lo, out_pre.hi));

  if (out_pre.lo < domain.lo || out_pre.hi > domain.hi)
    b.warn("output pre-activation interval " + interval_text(out_pre) + " exceeds the PWL domain " +
           interval_text(domain));
  VarId zy = b.output_preactivation("zy" + std::to_string(i + 1), domain.lo, domain.hi);
  VarId y = m.add_continuous(yname, pwl.min_value(), pwl.max_value());
  b.pwl_block(pwl, zy, y, "y" + std::to_string(i + 1), sos2);
  return b.finish(y);
}

}  // namespace

EncodedModel encode_pwl_cc(const NetworkParams& params, const PwlFunction& pwl, const SurrogateQuery& query) {
  return encode_pwl(params, pwl, query, false);
}

EncodedModel encode_pwl_sos2(const NetworkParams& params, const PwlFunction& pwl, const SurrogateQuery& query) {
  return encode_pwl(params, pwl, query, true);
}

EncodedModel encode_relu_bigm(const NetworkParams& params, const SurrogateQuery& query) {
  if (params.hidden.kind != Activation::Kind::Relu || params.output.kind != Activation::Kind::Identity)
    throw ContractError("Big-M encoding needs relu hidden and identity output activations");
  for (std::size_t k = 0; k < query.input_lo.size(); ++k)
    if (!std::isfinite(query.input_lo[k]) || !std::isfinite(query.input_hi[k]))
      throw ContractError("Big-M encoding needs finite bounds on every input");
  Builder b(params, query, EncodingKind::ReluBigM);
  MilpModel& m = b.out().model;
  const std::vector<Interval> pre = preactivation_bounds(params, query);
  b.hidden_preactivations(kInf, kInf, pre);
  std::vector<Interval> post;
  for (std::size_t j = 0; j < params.n_hidden(); ++j) {
    const Interval r = pre[j];
    const std::string tag = std::to_string(j + 1);
    const VarId z = b.out().hidden_pre[j];
    m.add_comment("neuron " + tag + " bounds " + interval_text(r));
    if (r.hi <= 0.0) {
      b.out().hidden_post.push_back(m.add_continuous("h" + tag, 0.0, 0.0));
      post.push_back({0.0, 0.0});
      continue;
    }
    VarId h = m.add_continuous("h" + tag, 0.0, r.hi);
    b.out().hidden_post.push_back(h);
    post.push_back({std::max(r.lo, 0.0), r.hi});
    if (r.lo >= 0.0) {
      m.add_constraint({{h, 1.0}, {z, -1.0}}, Relation::Equal, 0.0);
      continue;
    }
    VarId s = m.add_binary("s" + tag);
    m.add_constraint({{h, 1.0}, {z, -1.0}}, Relation::GreaterEqual, 0.0);
    // h <= z - lo (1 - s)  <=>  h - z - lo s <= -lo
    m.add_constraint({{h, 1.0}, {z, -1.0}, {s, -r.lo}}, Relation::LessEqual, -r.lo);
    m.add_constraint({{h, 1.0}, {s, -r.hi}}, Relation::LessEqual, 0.0);
  }
  const std::size_t i = query.objective_output;
  const Interval out_pre = affine_range(params.A.row(i), params.D[i], post);
  return b.finish(b.output_preactivation("y" + std::to_string(i + 1), out_pre.lo, out_pre.hi));
}

EncodedModel encode(EncodingKind kind, const NetworkParams& params, const PwlFunction& pwl,
                    const SurrogateQuery& query) {
  switch (kind) {
    case EncodingKind::PwlCc: return encode_pwl_cc(params, pwl, query);
    case EncodingKind::PwlSos2: return encode_pwl_sos2(params, pwl, query);
    case EncodingKind::ReluBigM: return encode_relu_bigm(params, query);
  }
  throw ContractError("unknown encoding kind");
}

}  // namespace pinnopt
