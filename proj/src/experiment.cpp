#include "pinnopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "text_util.hpp"

namespace pinnopt {

namespace {

using detail::format_double;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

/// Short fixed-precision text for the markdown summary.
std::string brief(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

double number(const std::string& key, const std::string& value) {
  try {
    return detail::parse_double(value);
  } catch (const ParseError&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

long long integer(const std::string& key, const std::string& value) {
  try {
    return detail::parse_int(value);
  } catch (const ParseError&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::size_t count(const std::string& key, const std::string& value) {
  const long long v = integer(key, value);
  if (v < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::string> list(const std::string& key, const std::string& value) {
  std::vector<std::string> items = detail::split(value, ',');
  for (const std::string& item : items)
    if (item.empty()) throw ConfigError("config key '" + key + "' has an empty list item");
  return items;
}

template <class Fn>
auto rethrow_as_config(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  const bool pwl = encoding != EncodingKind::ReluBigM;
  if (pwl && !hidden_activation.is_tanh_family())
    throw ConfigError("encoding " + to_string(encoding) + " needs a tanh hidden activation");
  if (!pwl && (hidden_activation.kind != Activation::Kind::Relu ||
               output_activation.kind != Activation::Kind::Identity))
    throw ConfigError("encoding relu_bigm needs relu hidden and identity output activations");
  if (pwl && !output_activation.is_tanh_family() && output_activation.kind != Activation::Kind::Identity)
    throw ConfigError("PWL encodings need a tanh or identity output activation");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (modes.empty() || seeds.empty() || pieces.empty()) throw ConfigError("modes, seeds and pieces must be non-empty");
  for (int p : pieces)
    if (pwl ? (p != 3 && p != 5) : p != 0) throw ConfigError("pieces must be 3 or 5 for PWL encodings");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (physics_weight && !(*physics_weight >= 0.0)) throw ConfigError("physics_weight must be nonnegative");
  if (!(constrained_mse_factor > 0.0) || !(constrained_physics_factor > 0.0))
    throw ConfigError("constrained bound factors must be positive");
  if (oracle_grid < 21) throw ConfigError("oracle_grid must be at least 21");
  if (!(recovery_tolerance > 0.0)) throw ConfigError("recovery_tolerance must be positive");
  rethrow_as_config("training", [&] {
    training.validate();
    constrained.validate();
    solver.validate();
    return 0;
  });
  if (data.samples < 10) throw ConfigError("samples must be at least 10");
  if (!(data.cdu.feed_lo > 0.0 && data.cdu.feed_lo < data.cdu.feed_hi))
    throw ConfigError("cdu feed range must satisfy 0 < lo < hi");
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string value(detail::trim(text.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    if (!kv.emplace(key, value).second) throw ConfigError("config key '" + key + "' given twice");
  }

  ExperimentConfig c;
  if (const auto it = kv.find("case"); it != kv.end()) c.case_id = cases::parse_case_id(it->second);
  switch (c.case_id) {
    case cases::CaseId::Blending: c.data.samples = 100; c.hidden = 5; break;
    case cases::CaseId::Column: c.data.samples = 270; c.hidden = 5; break;
    case cases::CaseId::Cdu: c.data.samples = 1000; c.hidden = 10; break;
  }
  bool encoding_given = kv.count("encoding") > 0;
  bool pieces_given = kv.count("pieces") > 0;
  bool output_given = kv.count("output_activation") > 0;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"case", [](auto&, auto&) {}},
      {"samples", [&](auto& k, auto& v) { c.data.samples = count(k, v); }},
      {"noise_snr_db", [&](auto& k, auto& v) { c.data.noise_snr_db = number(k, v); }},
      {"data_seed", [&](auto& k, auto& v) { c.data.seed = static_cast<std::uint64_t>(count(k, v)); }},
      {"train_fraction", [&](auto& k, auto& v) { c.data.train_fraction = number(k, v); }},
      {"cdu_feed_lo", [&](auto& k, auto& v) { c.data.cdu.feed_lo = number(k, v); }},
      {"cdu_feed_hi", [&](auto& k, auto& v) { c.data.cdu.feed_hi = number(k, v); }},
      {"hidden", [&](auto& k, auto& v) { c.hidden = count(k, v); }},
      {"activation",
       [&](auto& k, auto& v) { c.hidden_activation = rethrow_as_config(k, [&] { return Activation::parse(v); }); }},
      {"output_activation",
       [&](auto& k, auto& v) { c.output_activation = rethrow_as_config(k, [&] { return Activation::parse(v); }); }},
      {"modes",
       [&](auto& k, auto& v) {
         c.modes.clear();
         for (const auto& m : list(k, v)) c.modes.push_back(rethrow_as_config(k, [&] { return parse_training_mode(m); }));
       }},
      {"seeds",
       [&](auto& k, auto& v) {
         c.seeds.clear();
         for (const auto& s : list(k, v)) c.seeds.push_back(static_cast<std::uint64_t>(count(k, s)));
       }},
      {"epochs", [&](auto& k, auto& v) { c.training.epochs = count(k, v); }},
      {"learning_rate", [&](auto& k, auto& v) { c.training.learning_rate = number(k, v); }},
      {"adam_beta1", [&](auto& k, auto& v) { c.training.adam_beta1 = number(k, v); }},
      {"adam_beta2", [&](auto& k, auto& v) { c.training.adam_beta2 = number(k, v); }},
      {"adam_epsilon", [&](auto& k, auto& v) { c.training.adam_epsilon = number(k, v); }},
      {"weight_lo", [&](auto& k, auto& v) { c.training.weight_lo = number(k, v); }},
      {"weight_hi", [&](auto& k, auto& v) { c.training.weight_hi = number(k, v); }},
      {"init_scale", [&](auto& k, auto& v) { c.training.init_scale = number(k, v); }},
      {"physics_weight",
       [&](auto& k, auto& v) {
         if (v == "auto") c.physics_weight.reset();
         else c.physics_weight = number(k, v);
       }},
      {"mse_upper_bound", [&](auto& k, auto& v) { c.constrained.mse_upper_bound = number(k, v); }},
      {"physics_upper_bound", [&](auto& k, auto& v) { c.constrained.physics_upper_bound = number(k, v); }},
      {"alpha", [&](auto& k, auto& v) { c.constrained.alpha = number(k, v); }},
      {"initial_penalty", [&](auto& k, auto& v) { c.constrained.initial_penalty = number(k, v); }},
      {"penalty_growth", [&](auto& k, auto& v) { c.constrained.penalty_growth = number(k, v); }},
      {"max_outer_iterations", [&](auto& k, auto& v) { c.constrained.max_outer_iterations = count(k, v); }},
      {"inner_epochs", [&](auto& k, auto& v) { c.constrained.inner_epochs = count(k, v); }},
      {"constrained_mse_factor", [&](auto& k, auto& v) { c.constrained_mse_factor = number(k, v); }},
      {"constrained_physics_factor", [&](auto& k, auto& v) { c.constrained_physics_factor = number(k, v); }},
      {"encoding", [&](auto&, auto& v) { c.encoding = parse_encoding_kind(v); }},
      {"pieces",
       [&](auto& k, auto& v) {
         c.pieces.clear();
         for (const auto& p : list(k, v)) c.pieces.push_back(static_cast<int>(integer(k, p)));
       }},
      {"feasibility_tol", [&](auto& k, auto& v) { c.solver.feasibility_tol = number(k, v); }},
      {"integrality_tol", [&](auto& k, auto& v) { c.solver.integrality_tol = number(k, v); }},
      {"relative_gap", [&](auto& k, auto& v) { c.solver.relative_gap = number(k, v); }},
      {"node_limit", [&](auto& k, auto& v) { c.solver.node_limit = count(k, v); }},
      {"time_limit", [&](auto& k, auto& v) { c.solver.time_limit_seconds = number(k, v); }},
      {"oracle_grid", [&](auto& k, auto& v) { c.oracle_grid = count(k, v); }},
      {"cdu_order_constraints", [&](auto& k, auto& v) { c.cdu_order_constraints = boolean(k, v); }},
      {"recovery_tolerance", [&](auto& k, auto& v) { c.recovery_tolerance = number(k, v); }},
      {"export_lp", [&](auto& k, auto& v) { c.export_lp = boolean(k, v); }},
      {"out", [&](auto&, auto& v) { c.out_dir = v; }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  if (c.hidden_activation.kind == Activation::Kind::Relu) {
    if (!encoding_given) c.encoding = EncodingKind::ReluBigM;
    if (!output_given) c.output_activation = Activation::identity();
  }
  if (c.encoding == EncodingKind::ReluBigM && !pieces_given) c.pieces = {0};
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto line = [&o](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  line("case", cases::to_string(c.case_id));
  line("samples", std::to_string(c.data.samples));
  line("noise_snr_db", fmt(c.data.noise_snr_db));
  line("data_seed", std::to_string(c.data.seed));
  line("train_fraction", fmt(c.data.train_fraction));
  line("cdu_feed_lo", fmt(c.data.cdu.feed_lo));
  line("cdu_feed_hi", fmt(c.data.cdu.feed_hi));
  line("hidden", std::to_string(c.hidden));
  line("activation", c.hidden_activation.name());
  line("output_activation", c.output_activation.name());
  std::vector<std::string> items;
  for (TrainingMode m : c.modes) items.push_back(to_string(m));
  line("modes", join(items, ","));
  items.clear();
  for (auto s : c.seeds) items.push_back(std::to_string(s));
  line("seeds", join(items, ","));
  line("epochs", std::to_string(c.training.epochs));
  line("learning_rate", fmt(c.training.learning_rate));
  line("adam_beta1", fmt(c.training.adam_beta1));
  line("adam_beta2", fmt(c.training.adam_beta2));
  line("adam_epsilon", fmt(c.training.adam_epsilon));
  line("weight_lo", fmt(c.training.weight_lo));
  line("weight_hi", fmt(c.training.weight_hi));
  line("init_scale", fmt(c.training.init_scale));
  line("physics_weight", c.physics_weight ? fmt(*c.physics_weight) : "auto");
  line("mse_upper_bound", fmt(c.constrained.mse_upper_bound));
  line("physics_upper_bound", fmt(c.constrained.physics_upper_bound));
  line("alpha", fmt(c.constrained.alpha));
  line("initial_penalty", fmt(c.constrained.initial_penalty));
  line("penalty_growth", fmt(c.constrained.penalty_growth));
  line("max_outer_iterations", std::to_string(c.constrained.max_outer_iterations));
  line("inner_epochs", std::to_string(c.constrained.inner_epochs));
  line("constrained_mse_factor", fmt(c.constrained_mse_factor));
  line("constrained_physics_factor", fmt(c.constrained_physics_factor));
  line("encoding", to_string(c.encoding));
  items.clear();
  for (int p : c.pieces) items.push_back(std::to_string(p));
  line("pieces", join(items, ","));
  line("feasibility_tol", fmt(c.solver.feasibility_tol));
  line("integrality_tol", fmt(c.solver.integrality_tol));
  line("relative_gap", fmt(c.solver.relative_gap));
  line("node_limit", std::to_string(c.solver.node_limit));
  line("time_limit", fmt(c.solver.time_limit_seconds));
  line("oracle_grid", std::to_string(c.oracle_grid));
  line("cdu_order_constraints", c.cdu_order_constraints ? "true" : "false");
  line("recovery_tolerance", fmt(c.recovery_tolerance));
  line("export_lp", c.export_lp ? "true" : "false");
  line("out", c.out_dir);
  return o.str();
}

SurrogateQuery case_query(cases::CaseId id, const Dataset& data, const cases::CduOptions& cdu, bool cdu_order) {
  SurrogateQuery q = SurrogateQuery::box(data.n_in(), cases::objective_output(id), Sense::Minimize);
  switch (id) {
    case cases::CaseId::Blending:
      q.input_lo[3] = std::clamp(data.input_scaler.to_normalized(3, cases::kBlendingMinW2), -1.0, 1.0);
      break;
    case cases::CaseId::Column:
      q.fix(0, 1.0);
      break;
    case cases::CaseId::Cdu:
      q.fix(0, std::clamp(data.input_scaler.to_normalized(0, cdu.feed_hi), -1.0, 1.0));
      if (cdu_order) {
        // raw_i = c_i + h_i u_i; inputs 2..5 are Naphtha..VGO temperatures.
        const Scaler& s = data.input_scaler;
        for (std::size_t i = 2; i + 1 < data.n_in(); ++i) {
          q.constraints.push_back({{{i, s.raw_per_unit(i)}, {i + 1, -s.raw_per_unit(i + 1)}},
                                   Relation::LessEqual,
                                   s.to_raw(i + 1, 0.0) - s.to_raw(i, 0.0)});
        }
      }
      break;
  }
  return q;
}

double balanced_physics_weight(const NetworkParams& params, const Dataset& data, const PhysicsTerm& term) {
  const double mse = mse_loss(params, data, Subset::Train);
  const double p = physics_eval(term, params, data, Subset::Train);
  return p > 0.0 ? mse / p : 1.0;
}

TrainedNetwork train_network(const ExperimentConfig& c, const Dataset& data, TrainingMode mode, std::uint64_t seed) {
  const PhysicsTerm term = cases::physics_term(c.case_id);
  TrainedNetwork out;
  const auto start = std::chrono::steady_clock::now();
  TrainingConfig cfg = c.training;
  cfg.seed = seed;
  cfg.mode = mode;
  const NetworkParams init =
      initialize_params(data.n_in(), c.hidden, data.n_out(), c.hidden_activation, c.output_activation, cfg);
  switch (mode) {
    case TrainingMode::PiMinus: {
      TrainingResult r = train(cfg, data, std::nullopt, init);
      out.params = std::move(r.params);
      out.trace = std::move(r.trace);
      break;
    }
    case TrainingMode::PiPlusBiobjective: {
      cfg.physics_weight = c.physics_weight ? *c.physics_weight : balanced_physics_weight(init, data, term);
      out.physics_weight = cfg.physics_weight;
      TrainingResult r = train(cfg, data, term, init);
      out.params = std::move(r.params);
      out.trace = std::move(r.trace);
      break;
    }
    case TrainingMode::PiPlusConstrained: {
      TrainingConfig warm = cfg;
      warm.mode = TrainingMode::PiMinus;
      TrainingResult phase1 = train(warm, data, std::nullopt, init);
      ConstrainedPhaseConfig phase2 = c.constrained;
      if (!std::isfinite(phase2.mse_upper_bound))
        phase2.mse_upper_bound = c.constrained_mse_factor * mse_loss(phase1.params, data, Subset::Train);
      if (!std::isfinite(phase2.physics_upper_bound))
        phase2.physics_upper_bound =
            c.constrained_physics_factor * phase2.alpha * physics_eval(term, phase1.params, data, Subset::Train);
      TrainingConfig second = cfg;
      second.epochs = 0;  // phase 1 already ran above
      ConstrainedResult r = train_constrained(second, phase2, data, term, phase1.params);
      out.params = std::move(r.params);
      out.trace = std::move(r.trace);
      out.constrained_feasible = r.feasible;
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

bool ReportBundle::has_failures() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; });
}

namespace {

/// Inputs that determine each case's optimum; the others are free at the
/// oracle (CDU temperatures below VGO do not change the residuum).
std::vector<std::size_t> recovery_inputs(cases::CaseId id, std::size_t n_in) {
  if (id == cases::CaseId::Cdu) return {0, 5};
  std::vector<std::size_t> all(n_in);
  for (std::size_t i = 0; i < n_in; ++i) all[i] = i;
  return all;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  ReportBundle b;
  b.config = config;
  cases::GenerationLog glog;
  const Dataset data = cases::make_dataset(config.case_id, config.data, &glog);
  b.rejected_samples = glog.rejected;
  if (log && config.case_id == cases::CaseId::Cdu)
    *log << "cdu dataset: " << glog.rejected << " infeasible samples resampled\n";
  b.input_names = data.input_names;
  b.output_names = data.output_names;
  b.oracle = cases::global_oracle(config.case_id, data, config.data.cdu, config.oracle_grid);
  const SurrogateQuery query = case_query(config.case_id, data, config.data.cdu, config.cdu_order_constraints);
  const PhysicsTerm term = cases::physics_term(config.case_id);
  const std::size_t obj = cases::objective_output(config.case_id);
  const std::vector<std::size_t> recover = recovery_inputs(config.case_id, data.n_in());

  struct CachedNet {
    TrainedNetwork net;
    std::string error;
  };
  std::map<std::pair<TrainingMode, std::uint64_t>, CachedNet> nets;
  for (TrainingMode mode : config.modes) {
    for (int pieces : config.pieces) {
      for (std::uint64_t seed : config.seeds) {
        RunRecord r;
        r.mode = mode;
        r.pieces = pieces;
        r.seed = seed;
        try {
          auto key = std::make_pair(mode, seed);
          auto it = nets.find(key);
          if (it == nets.end()) {
            try {
              it = nets.emplace(key, CachedNet{train_network(config, data, mode, seed), {}}).first;
            } catch (const std::exception& e) {
              it = nets.emplace(key, CachedNet{{}, e.what()}).first;
            }
          }
          if (!it->second.error.empty()) throw Error("training failed: " + it->second.error);
          const TrainedNetwork& net = it->second.net;
          r.physics_weight = net.physics_weight;
          r.constrained_feasible = net.constrained_feasible;
          r.train_seconds = net.seconds;
          r.mse_train = mse_loss(net.params, data, Subset::Train);
          r.mse_test = mse_loss(net.params, data, Subset::Test);
          r.physics_train = physics_eval(term, net.params, data, Subset::Train);

          const PwlFunction& pwl = tanh_pwl_ref(pieces == 0 ? 3 : pieces);
          const EncodedModel em = encode(config.encoding, net.params, pwl, query);
          r.warnings = em.warnings;
          const MilpSolution sol = solve_milp(em.model, config.solver);
          r.status = sol.status;
          r.nodes = sol.nodes;
          r.wall_seconds = sol.wall_seconds;
          if (config.export_lp) r.lp_text = write_lp(em.model);
          if (sol.status == SolveStatus::Infeasible) {
            // The surrogate admits no point of the query (e.g. a neuron saturated
            // beyond the PWL domain everywhere): a completed but infeasible run.
            r.sse = r.deviation = r.fp_gap = kNaN;
            r.ok = true;
            if (log) *log << "run " << to_string(mode) << " pieces " << pieces << " seed " << seed << ": surrogate MILP infeasible\n";
            b.runs.push_back(std::move(r));
            continue;
          }
          if (!sol.has_incumbent()) throw Error("solver finished without a solution (" + to_string(sol.status) + ")");

          const std::vector<double> u = em.input_values(sol.values);
          r.inputs = data.input_scaler.apply(u, Scaler::Direction::ToRaw);
          const std::vector<double> pred_norm = config.encoding == EncodingKind::ReluBigM
                                                    ? forward(net.params, u)
                                                    : pwl_forward(net.params, pwl, u);
          r.predicted = data.output_scaler.apply(pred_norm, Scaler::Direction::ToRaw);
          try {
            r.first_principles = cases::first_principles(config.case_id, r.inputs);
            r.fp_feasible = true;
          } catch (const cases::InfeasiblePointError&) {
            r.fp_feasible = false;
          }
          if (r.fp_feasible) {
            const std::vector<double> fp_norm =
                data.output_scaler.apply(r.first_principles, Scaler::Direction::ToNormalized);
            r.sse = 0.0;
            for (std::size_t j = 0; j < fp_norm.size(); ++j) r.sse += (fp_norm[j] - pred_norm[j]) * (fp_norm[j] - pred_norm[j]);
            r.fp_gap = std::abs(r.first_principles[obj] - b.oracle.objective);
          } else {
            r.sse = kNaN;
            r.fp_gap = kNaN;
          }
          r.deviation = std::abs(r.predicted[obj] - b.oracle.objective) / std::abs(b.oracle.objective);
          r.recovered = std::all_of(recover.begin(), recover.end(), [&](std::size_t i) {
            const double range = data.input_scaler.raw_max()[i] - data.input_scaler.raw_min()[i];
            return std::abs(r.inputs[i] - b.oracle.inputs[i]) <= config.recovery_tolerance * range;
          });
          r.ok = true;
        } catch (const std::exception& e) {
          r.ok = false;
          r.error = e.what();
        }
        if (log) {
          *log << "run " << to_string(mode) << " pieces " << pieces << " seed " << seed << ": "
               << (r.ok ? to_string(r.status) + ", " + std::to_string(r.nodes) + " nodes" +
                              (r.fp_feasible ? "" : ", first-principles infeasible")
                        : "failed: " + r.error)
               << '\n';
        }
        b.runs.push_back(std::move(r));
      }
    }
  }

  for (TrainingMode mode : config.modes) {
    for (int pieces : config.pieces) {
      AggregateRow a;
      a.mode = mode;
      a.pieces = pieces;
      std::vector<double> mse_tr, mse_te, sse, dev, gap;
      for (const RunRecord& r : b.runs) {
        if (r.mode != mode || r.pieces != pieces) continue;
        ++a.runs;
        if (!r.ok) {
          ++a.failed;
          continue;
        }
        mse_tr.push_back(r.mse_train);
        mse_te.push_back(r.mse_test);
        if (!std::isnan(r.deviation)) dev.push_back(r.deviation);
        if (r.recovered) ++a.recovered;
        if (r.fp_feasible) {
          ++a.feasible;
          sse.push_back(r.sse);
          gap.push_back(r.fp_gap);
        }
      }
      a.mean_mse_train = mean(mse_tr);
      a.mean_mse_test = mean(mse_te);
      a.mean_sse = mean(sse);
      a.mean_deviation = mean(dev);
      a.median_deviation = median(dev);
      a.mean_fp_gap = mean(gap);
      b.aggregate.push_back(a);
    }
  }
  return b;
}

std::string runs_csv(const ReportBundle& b) {
  std::ostringstream o;
  std::vector<std::string> head{"mode", "pieces", "seed", "ok", "status", "nodes", "physics_weight",
                                "constrained_feasible", "mse_train", "mse_test", "physics_train"};
  for (const auto& n : b.input_names) head.push_back("u_" + n);
  for (const auto& n : b.output_names) head.push_back("pred_" + n);
  for (const auto& n : b.output_names) head.push_back("fp_" + n);
  for (const char* h : {"fp_feasible", "sse", "deviation", "fp_gap", "recovered", "error"}) head.push_back(h);
  o << join(head, ",") << '\n';
  for (const RunRecord& r : b.runs) {
    std::vector<std::string> f{to_string(r.mode), std::to_string(r.pieces), std::to_string(r.seed),
                               r.ok ? "1" : "0", r.ok ? to_string(r.status) : "failed", std::to_string(r.nodes),
                               fmt(r.physics_weight), r.constrained_feasible ? "1" : "0"};
    const bool ok = r.ok;
    for (double v : {r.mse_train, r.mse_test, r.physics_train}) f.push_back(ok ? fmt(v) : "nan");
    auto vec = [&](const std::vector<double>& v, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) f.push_back(i < v.size() ? fmt(v[i]) : "nan");
    };
    vec(r.inputs, b.input_names.size());
    vec(r.predicted, b.output_names.size());
    vec(r.first_principles, b.output_names.size());
    f.push_back(r.fp_feasible ? "1" : "0");
    for (double v : {r.sse, r.deviation, r.fp_gap}) f.push_back(ok ? fmt(v) : "nan");
    f.push_back(r.recovered ? "1" : "0");
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    f.push_back(err);
    o << join(f, ",") << '\n';
  }
  return o.str();
}

std::string aggregate_csv(const ReportBundle& b) {
  std::ostringstream o;
  o << "mode,pieces,runs,failed,feasible_runs,recovered_runs,mean_mse_train,mean_mse_test,mean_sse,"
       "mean_deviation,median_deviation,mean_fp_gap\n";
  for (const AggregateRow& a : b.aggregate) {
    o << to_string(a.mode) << ',' << a.pieces << ',' << a.runs << ',' << a.failed << ',' << a.feasible << ','
      << a.recovered << ',' << fmt(a.mean_mse_train) << ',' << fmt(a.mean_mse_test) << ',' << fmt(a.mean_sse) << ','
      << fmt(a.mean_deviation) << ',' << fmt(a.median_deviation) << ',' << fmt(a.mean_fp_gap) << '\n';
  }
  return o.str();
}

std::string summary_markdown(const ReportBundle& b) {
  std::ostringstream o;
  const ExperimentConfig& c = b.config;
  o << "# Experiment summary: " << cases::to_string(c.case_id) << "\n\n";
  o << c.data.samples << " samples, noise " << fmt(c.data.noise_snr_db) << " dB, " << c.hidden << " hidden "
    << c.hidden_activation.name() << " neurons, encoding " << to_string(c.encoding) << ", " << c.seeds.size()
    << " seeds.\n\n";
  o << "Global reference: objective " << brief(b.oracle.objective) << " at";
  for (std::size_t i = 0; i < b.oracle.inputs.size(); ++i)
    o << (i ? ", " : " ") << b.input_names[i] << " = " << brief(b.oracle.inputs[i]);
  o << ".\n\n";
  if (c.case_id == cases::CaseId::Cdu) o << "Resampled infeasible dataset points: " << b.rejected_samples << ".\n\n";
  o << "| mode | pieces | runs | failed | feasible | recovered | MSE train | MSE test | mean SSE | mean deviation "
       "| median deviation | mean objective gap |\n";
  o << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const AggregateRow& a : b.aggregate) {
    o << "| " << to_string(a.mode) << " | " << a.pieces << " | " << a.runs << " | " << a.failed << " | " << a.feasible
      << " | " << a.recovered << " | " << brief(a.mean_mse_train) << " | " << brief(a.mean_mse_test) << " | "
      << brief(a.mean_sse) << " | " << brief(a.mean_deviation) << " | " << brief(a.median_deviation) << " | "
      << brief(a.mean_fp_gap) << " |\n";
  }
  o << "\n## Configuration\n\n```\n" << format_experiment_config(c) << "```\n";
  return o.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

void emit_reports(const ReportBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  write_file(fs::path(dir) / "runs.csv", runs_csv(bundle));
  write_file(fs::path(dir) / "aggregate.csv", aggregate_csv(bundle));
  write_file(fs::path(dir) / "summary.md", summary_markdown(bundle));
  std::ostringstream t;
  t << "mode,pieces,seed,train_seconds,solve_seconds,nodes\n";
  for (const RunRecord& r : bundle.runs)
    t << to_string(r.mode) << ',' << r.pieces << ',' << r.seed << ',' << brief(r.train_seconds) << ','
      << brief(r.wall_seconds) << ',' << r.nodes << '\n';
  write_file(fs::path(dir) / "timings.csv", t.str());
  if (bundle.config.export_lp) {
    const fs::path lp_dir = fs::path(dir) / "lp";
    fs::create_directories(lp_dir, ec);
    if (ec) throw Error("cannot create '" + lp_dir.string() + "': " + ec.message());
    for (const RunRecord& r : bundle.runs) {
      if (r.lp_text.empty()) continue;
      write_file(lp_dir / (to_string(r.mode) + "_p" + std::to_string(r.pieces) + "_s" + std::to_string(r.seed) + ".lp"),
                 r.lp_text);
    }
  }
}

}  // namespace pinnopt
