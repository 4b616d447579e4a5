#pragma once

// Declarative experiment runner: per seed, generate data, train, encode,
// solve, replay the optimal inputs through the first-principles model and
// compare against the case's global oracle.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pinnopt/case_studies.hpp"
#include "pinnopt/milp_solver.hpp"
#include "pinnopt/nn_encode.hpp"
#include "pinnopt/training.hpp"

namespace pinnopt {

struct ExperimentConfig {
  cases::CaseId case_id = cases::CaseId::Blending;
  cases::DatasetOptions data;  ///< data.seed is the fixed dataset seed
  std::size_t hidden = 5;
  Activation hidden_activation = Activation::tanh();
  Activation output_activation = Activation::tanh();
  std::vector<TrainingMode> modes{TrainingMode::PiMinus, TrainingMode::PiPlusBiobjective};
  TrainingConfig training;
  /// Unset means "auto": MSE / physics of the initial network, per run.
  std::optional<double> physics_weight;
  ConstrainedPhaseConfig constrained;
  /// Used when Z or U is infinite: bounds relative to the phase-1 network.
  double constrained_mse_factor = 1.5;
  double constrained_physics_factor = 0.5;
  EncodingKind encoding = EncodingKind::PwlCc;
  std::vector<int> pieces{5};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SolverOptions solver;
  std::size_t oracle_grid = 21;
  /// Restrict the CDU query to cut-ordered temperatures, the region the
  /// dataset covers.
  bool cdu_order_constraints = true;
  /// Inputs within this fraction of their sampling range of the oracle count as recovered.
  double recovery_tolerance = 0.1;
  bool export_lp = false;
  std::string out_dir = "out";

  /// Throws ConfigError on incompatible settings (e.g. PWL with ReLU).
  void validate() const;
};

/// Flat "key = value" text, '#' starts a comment. Lists are comma
/// separated. Unknown keys and malformed values throw ConfigError. Keys not
/// given take case-dependent defaults (sample count, hidden size).
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

/// Settings of one configuration as "key = value" lines (round-trips
/// through parse_experiment_config).
std::string format_experiment_config(const ExperimentConfig& config);

struct RunRecord {
  TrainingMode mode = TrainingMode::PiMinus;
  int pieces = 0;
  std::uint64_t seed = 0;
  bool ok = false;            ///< false when the pipeline failed
  std::string error;          ///< failure message
  double physics_weight = 0.0;
  bool constrained_feasible = true;
  double mse_train = 0.0;
  double mse_test = 0.0;
  double physics_train = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  std::size_t nodes = 0;
  double wall_seconds = 0.0;  ///< solver wall time (kept out of the deterministic reports)
  double train_seconds = 0.0;
  std::vector<double> inputs;           ///< optimal inputs, raw units
  std::vector<double> predicted;        ///< surrogate outputs at the optimum, raw units
  std::vector<double> first_principles; ///< replayed outputs, raw units (empty if infeasible)
  bool fp_feasible = false;
  double sse = 0.0;           ///< normalized units, over all outputs
  double deviation = 0.0;     ///< |predicted objective - oracle| / |oracle|
  double fp_gap = 0.0;        ///< |first-principles objective - oracle|
  bool recovered = false;
  std::vector<std::string> warnings;
  std::string lp_text;        ///< exported model when requested
};

struct AggregateRow {
  TrainingMode mode = TrainingMode::PiMinus;
  int pieces = 0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::size_t feasible = 0;
  std::size_t recovered = 0;
  double mean_mse_train = 0.0;
  double mean_mse_test = 0.0;
  double mean_sse = 0.0;
  double mean_deviation = 0.0;
  double median_deviation = 0.0;
  double mean_fp_gap = 0.0;
};

struct ReportBundle {
  ExperimentConfig config;
  cases::OracleSolution oracle;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  std::size_t rejected_samples = 0;
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregate;

  bool has_failures() const;
};

/// Runs every (mode, pieces, seed) combination. Per-run failures are
/// recorded, not thrown. `log` receives one progress line per run.
ReportBundle run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes runs.csv, aggregate.csv, summary.md, timings.csv and, when
/// requested, lp/<mode>_p<pieces>_s<seed>.lp into `dir`. Everything except
/// timings.csv is byte-identical across reruns.
void emit_reports(const ReportBundle& bundle, const std::string& dir);

std::string runs_csv(const ReportBundle& bundle);
std::string aggregate_csv(const ReportBundle& bundle);
std::string summary_markdown(const ReportBundle& bundle);

/// Query of a case in normalized units: blending w2 >= 25, CDU and column
/// feed fixed at its maximum, objective = the case's minimized output.
/// With `cdu_order` the CDU temperatures from Naphtha to VGO are kept
/// nondecreasing; the cut polynomial is increasing there, so this is exactly
/// the cut-order feasibility of the first-principles model.
SurrogateQuery case_query(cases::CaseId id, const Dataset& data, const cases::CduOptions& cdu,
                          bool cdu_order = true);

/// Physics weight giving the MSE and physics terms equal size at `params`.
double balanced_physics_weight(const NetworkParams& params, const Dataset& data, const PhysicsTerm& term);

struct TrainedNetwork {
  NetworkParams params;
  TrainingTrace trace;
  double physics_weight = 0.0;  ///< weight used by the bi-objective mode, else 0
  bool constrained_feasible = true;
  double seconds = 0.0;
};

/// One training run of `mode` with the configured hyperparameters and `seed`.
TrainedNetwork train_network(const ExperimentConfig& config, const Dataset& data, TrainingMode mode,
                             std::uint64_t seed);

}  // namespace pinnopt
