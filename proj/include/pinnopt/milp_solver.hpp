#pragma once

// Branch-and-bound MILP solver over dense bounded-variable simplex LP
// relaxations, with most-fractional binary branching and SOS2 branching.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "pinnopt/error.hpp"
#include "pinnopt/milp_model.hpp"

namespace pinnopt {

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  double relative_gap = 1e-6;
  std::size_t node_limit = 1'000'000;
  double time_limit_seconds = 300.0;
  /// When set, one line per node: "node <id> depth <d> bound <b> incumbent <v>".
  std::ostream* log = nullptr;

  /// Throws ContractError unless every tolerance is positive.
  void validate() const;
};

/// Numerical failure inside the simplex (singular basis, iteration limit).
class LpError : public Error {
 public:
  using Error::Error;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;  ///< Optimal, Infeasible or Unbounded
  double objective = 0.0;                        ///< in the model's sense, constant included
  std::vector<double> values;                    ///< one per model variable
  std::vector<double> duals;                     ///< one per constraint, d objective / d rhs
  std::size_t iterations = 0;
};

/// LP relaxation of `model` (binaries relaxed to [0, 1], SOS2 groups
/// ignored), solved by two-phase primal simplex. Dantzig pricing switches
/// to Bland's rule after 1000 degenerate pivots.
LpSolution solve_lp(const MilpModel& model, const SolverOptions& options = {});

/// Best-bound branch and bound. Requires a finalized model.
MilpSolution solve_milp(const MilpModel& model, const SolverOptions& options = {});

}  // namespace pinnopt
