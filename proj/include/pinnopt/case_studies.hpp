#pragma once

// First-principles models of the three process studies (two-stream
// blending, a crude separation column, a crude distillation unit), their
// dataset generators, physics-term bindings and global-solution oracles.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinnopt/error.hpp"
#include "pinnopt/matrix.hpp"
#include "pinnopt/nn_core.hpp"
#include "pinnopt/training.hpp"

namespace pinnopt::cases {

enum class CaseId { Blending, Column, Cdu };

std::string to_string(CaseId id);
/// "blending", "column" or "cdu"; anything else throws ConfigError.
CaseId parse_case_id(const std::string& text);

/// A point where the first-principles model has no physical meaning
/// (e.g. decreasing cut points give a negative product flow).
class InfeasiblePointError : public Error {
 public:
  using Error::Error;
};

// ---- blending -------------------------------------------------------------

struct BlendingOutput {
  double x = 0.0;  ///< mole fraction of the mixed stream
  double w = 0.0;  ///< molar flow of the mixed stream
};

/// Mixing of two streams: w = w1 + w2, x = (x1 w1 + x2 w2) / w.
/// Throws ContractError when w1 + w2 == 0.
BlendingOutput blending_forward(double x1, double x2, double w1, double w2);

/// Sampling box of (x1, x2, w1, w2).
inline constexpr std::array<std::pair<double, double>, 4> kBlendingBounds{
    {{0.1, 0.5}, {0.5, 1.0}, {0.0, 50.0}, {0.0, 50.0}}};

/// Lower bound on w2 in the blending optimization query.
inline constexpr double kBlendingMinW2 = 25.0;

// ---- crude distillation unit ---------------------------------------------

inline constexpr std::array<double, 5> kCutCoefficients{4.04, -0.047, 3.25e-4, -2.84e-7, 8.15e-11};

inline constexpr std::array<const char*, 5> kCduProducts{"LPG", "Naphtha", "Kerosene", "Diesel", "VGO"};

/// Cut-point temperature ranges in degrees F, in product order.
inline constexpr std::array<std::pair<double, double>, 5> kCutTemperatureBounds{
    {{-48.0, -40.0}, {230.0, 380.0}, {330.0, 520.0}, {420.0, 630.0}, {620.0, 1050.0}}};

struct CduOptions {
  double feed_lo = 50.0;
  double feed_hi = 100.0;
};

/// Cumulative volume percent distilled up to a cut-point temperature:
/// the quartic sum a_k TE^k.
double cdu_cut(double te);

/// Flows of the five products followed by the residuum:
/// F_s = F (Cut_s - Cut_{s-1}) / 100 with Cut_0 = 0 and a residuum cut of 100.
/// Throws InfeasiblePointError when the cuts decrease.
std::array<double, 6> cdu_forward(double feed, std::span<const double, 5> te);

// ---- crude separation column ---------------------------------------------

inline constexpr std::array<const char*, 6> kColumnProducts{"LPG", "LSRN", "HSRN", "Kero", "LD", "HD"};

/// Feed fraction range of each column product; the sums (0.5 and 0.9)
/// keep the residuum between 10% and 50% of the feed.
inline constexpr std::array<std::pair<double, double>, 6> kColumnFractionBounds{
    {{0.01, 0.03}, {0.05, 0.10}, {0.08, 0.14}, {0.10, 0.16}, {0.12, 0.20}, {0.14, 0.27}}};

inline constexpr std::pair<double, double> kColumnFeedBounds{400.0, 600.0};

/// Residuum by mass balance: feed minus the six product flows.
double column_residuum(std::span<const double> inputs);

// ---- sampling and datasets ------------------------------------------------

/// Latin hypercube: per dimension one point in each of n equal strata,
/// jittered uniformly inside the stratum, strata order permuted
/// independently per dimension.
Matrix lhs_sample(std::size_t n, std::span<const std::pair<double, double>> bounds, std::uint64_t seed);

struct DatasetOptions {
  std::size_t samples = 100;
  double noise_snr_db = 40.0;  ///< +inf disables noise
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
  CduOptions cdu;
};

/// Counters filled by the generators.
struct GenerationLog {
  std::size_t rejected = 0;  ///< resampled infeasible points
};

Dataset make_blending_dataset(const DatasetOptions& options);
Dataset make_cdu_dataset(const DatasetOptions& options, GenerationLog* log = nullptr);
Dataset make_column_dataset(const DatasetOptions& options);
Dataset make_dataset(CaseId id, const DatasetOptions& options, GenerationLog* log = nullptr);

/// Adds white Gaussian noise to every column of normalized outputs at the
/// given signal-to-noise ratio (dB), measured from the column's mean square.
void add_output_noise(Matrix& outputs, double snr_db, std::uint64_t seed);

// ---- per-case bindings ----------------------------------------------------

/// Physics term matching the case's input/output layout.
PhysicsTerm physics_term(CaseId id);

/// Output minimized by the case's optimization query.
std::size_t objective_output(CaseId id);

/// First-principles outputs at raw inputs. Throws InfeasiblePointError
/// where the model is undefined.
std::vector<double> first_principles(CaseId id, std::span<const double> raw_inputs);

struct OracleSolution {
  std::vector<double> inputs;   ///< raw units
  std::vector<double> outputs;  ///< raw units
  double objective = 0.0;       ///< the minimized output, raw units
};

/// Reference optimum of each study. Blending is analytic, column uses the
/// dataset's input ranges (all flows at their maximum), CDU is a grid
/// search with `grid_points` per temperature at maximum feed.
OracleSolution global_oracle(CaseId id, const Dataset& data, const CduOptions& cdu = {}, std::size_t grid_points = 21);

/// Sum of squared differences; throws ContractError on shape mismatch.
double sse_compare(const Matrix& a, const Matrix& b);

}  // namespace pinnopt::cases
