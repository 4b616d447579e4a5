// Command-line front end: data generation, training, encoding, solving and
// the declarative experiment runner.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "pinnopt/experiment.hpp"
#include "pinnopt/milp_model.hpp"
#include "pinnopt/milp_solver.hpp"
#include "pinnopt/nn_encode.hpp"

namespace fs = std::filesystem;
using namespace pinnopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRunFailures = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_experiment_config(c.config);
  } else {
    std::istringstream empty;
    cfg = parse_experiment_config(empty);
  }
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

std::string csv_row(const std::vector<double>& v) {
  std::ostringstream o;
  o.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << v[i];
  return o.str();
}

std::string csv_header(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

Dataset dataset_for(const ExperimentConfig& cfg, const std::string& data_path) {
  if (!data_path.empty()) return load_dataset(data_path);
  return cases::make_dataset(cfg.case_id, cfg.data);
}

int gen_data(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.data.seed = *c.seed;
  cases::GenerationLog log;
  const Dataset data = cases::make_dataset(cfg.case_id, cfg.data, &log);
  const fs::path dir = out_dir(cfg);
  save_dataset(data, (dir / "dataset.csv").string());
  const cases::OracleSolution oracle = cases::global_oracle(cfg.case_id, data, cfg.data.cdu, cfg.oracle_grid);
  write_text(dir / "oracle.csv", csv_header(data.input_names) + "," + csv_header(data.output_names) + ",objective\n" +
                                     csv_row(oracle.inputs) + "," + csv_row(oracle.outputs) + "," +
                                     csv_row({oracle.objective}) + "\n");
  std::cout << "wrote " << data.size() << " samples to " << (dir / "dataset.csv").string() << '\n';
  if (cfg.case_id == cases::CaseId::Cdu) std::cout << "resampled infeasible points: " << log.rejected << '\n';
  return kExitOk;
}

int train_cmd(const Common& c, const std::string& data_path, const std::string& mode_text) {
  const ExperimentConfig cfg = load(c);
  const TrainingMode mode = mode_text.empty() ? cfg.modes.front() : parse_training_mode(mode_text);
  const std::uint64_t seed = c.seed ? *c.seed : cfg.seeds.front();
  const Dataset data = dataset_for(cfg, data_path);
  const TrainedNetwork net = train_network(cfg, data, mode, seed);
  const fs::path dir = out_dir(cfg);
  save_params(net.params, (dir / "params.txt").string());
  std::ofstream trace(dir / "trace.csv");
  write_trace_csv(net.trace, trace);
  std::cout << to_string(mode) << " seed " << seed << ": train MSE " << mse_loss(net.params, data, Subset::Train)
            << ", test MSE " << mse_loss(net.params, data, Subset::Test) << '\n';
  if (!net.constrained_feasible) std::cout << "constrained phase ended infeasible\n";
  return kExitOk;
}

struct Encoded {
  Dataset data;
  NetworkParams params;
  int pieces;
  EncodedModel em;
};

Encoded encode_from(const ExperimentConfig& cfg, const std::string& params_path, const std::string& data_path,
                    std::optional<int> pieces) {
  Dataset data = dataset_for(cfg, data_path);
  NetworkParams params = load_params(params_path);
  const int p = pieces ? *pieces : cfg.pieces.front();
  const SurrogateQuery query = case_query(cfg.case_id, data, cfg.data.cdu, cfg.cdu_order_constraints);
  EncodedModel em = encode(cfg.encoding, params, tanh_pwl_ref(p == 0 ? 3 : p), query);
  for (const std::string& w : em.warnings) std::cerr << "warning: " << w << '\n';
  return {std::move(data), std::move(params), p, std::move(em)};
}

int encode_cmd(const Common& c, const std::string& params_path, const std::string& data_path,
               std::optional<int> pieces) {
  const ExperimentConfig cfg = load(c);
  const Encoded e = encode_from(cfg, params_path, data_path, pieces);
  const fs::path dir = out_dir(cfg);
  write_text(dir / "model.lp", write_lp(e.em.model));
  std::cout << "wrote " << (dir / "model.lp").string() << " (" << e.em.model.variable_count() << " variables, "
            << e.em.model.binary_count() << " binaries)\n";
  return kExitOk;
}

int solve_cmd(const Common& c, const std::string& params_path, const std::string& data_path,
              std::optional<int> pieces) {
  ExperimentConfig cfg = load(c);
  cfg.solver.log = nullptr;
  const Encoded e = encode_from(cfg, params_path, data_path, pieces);
  const MilpSolution sol = solve_milp(e.em.model, cfg.solver);
  const fs::path dir = out_dir(cfg);
  write_text(dir / "model.lp", write_lp(e.em.model));
  std::cout << "status " << to_string(sol.status) << ", " << sol.nodes << " nodes\n";
  if (!sol.has_incumbent()) return kExitFailure;
  const std::vector<double> u = e.em.input_values(sol.values);
  const std::vector<double> raw_in = e.data.input_scaler.apply(u, Scaler::Direction::ToRaw);
  const std::vector<double> pred = e.data.output_scaler.apply(
      cfg.encoding == EncodingKind::ReluBigM ? forward(e.params, u)
                                             : pwl_forward(e.params, tanh_pwl_ref(e.pieces == 0 ? 3 : e.pieces), u),
      Scaler::Direction::ToRaw);
  std::vector<std::string> head;
  for (const auto& n : e.data.input_names) head.push_back("u_" + n);
  for (const auto& n : e.data.output_names) head.push_back("pred_" + n);
  std::string row = csv_row(raw_in) + "," + csv_row(pred);
  try {
    const std::vector<double> fp = cases::first_principles(cfg.case_id, raw_in);
    for (const auto& n : e.data.output_names) head.push_back("fp_" + n);
    row += "," + csv_row(fp);
  } catch (const cases::InfeasiblePointError& err) {
    std::cout << "first-principles model infeasible at the optimum: " << err.what() << '\n';
  }
  write_text(dir / "solution.csv", "status,objective,nodes," + csv_header(head) + "\n" + to_string(sol.status) + "," +
                                       csv_row({sol.objective}) + "," + std::to_string(sol.nodes) + "," + row + "\n");
  std::cout << "objective " << sol.objective << "; wrote " << (dir / "solution.csv").string() << '\n';
  return kExitOk;
}

int experiment_cmd(const Common& c, bool quiet) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.seeds = {*c.seed};
  const ReportBundle bundle = run_experiment(cfg, quiet ? nullptr : &std::cerr);
  emit_reports(bundle, cfg.out_dir);
  std::cout << aggregate_csv(bundle);
  return bundle.has_failures() ? kExitRunFailures : kExitOk;
}

int report_cmd(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const fs::path path = fs::path(cfg.out_dir) / "summary.md";
  std::ifstream in(path);
  if (!in) throw Error("no report at '" + path.string() + "'; run the experiment subcommand first");
  std::cout << in.rdbuf();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed surrogate training, MILP encoding and optimization"};
  app.require_subcommand(1);
  Common common;
  std::string params_path, data_path, mode;
  std::optional<int> pieces;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config file (key = value lines)");
    sub->add_option("--seed", common.seed, "Seed override");
    sub->add_option("--out", common.out, "Output directory");
  };
  CLI::App* gen = app.add_subcommand("gen-data", "Generate the case dataset and its global oracle");
  add_common(gen);
  CLI::App* tr = app.add_subcommand("train", "Train one network");
  add_common(tr);
  tr->add_option("--data", data_path, "Dataset CSV (default: generate from config)");
  tr->add_option("--mode", mode, "pi_minus, pi_plus or pi_plus_constrained (default: first configured mode)");
  CLI::App* enc = app.add_subcommand("encode", "Encode a trained network as an LP file");
  CLI::App* sol = app.add_subcommand("solve", "Encode and solve a trained network");
  for (CLI::App* sub : {enc, sol}) {
    add_common(sub);
    sub->add_option("--params", params_path, "Trained parameter file")->required();
    sub->add_option("--data", data_path, "Dataset CSV (default: generate from config)");
    sub->add_option("--pieces", pieces, "PWL piece count (default: first configured)");
  }
  CLI::App* exp = app.add_subcommand("experiment", "Run the full train/encode/solve/validate study");
  add_common(exp);
  exp->add_flag("--quiet", quiet, "Suppress per-run progress");
  CLI::App* rep = app.add_subcommand("report", "Print the summary of a finished experiment");
  add_common(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return gen_data(common);
    if (*tr) return train_cmd(common, data_path, mode);
    if (*enc) return encode_cmd(common, params_path, data_path, pieces);
    if (*sol) return solve_cmd(common, params_path, data_path, pieces);
    if (*exp) return experiment_cmd(common, quiet);
    if (*rep) return report_cmd(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
