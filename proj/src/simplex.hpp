#pragma once

// Dense bounded-variable simplex on the tableau of a MilpModel's LP
// relaxation. Every row i is written as  a_i x - r_i + s_i t_i = 0  with a
// logical r_i carrying the row's bounds and an artificial t_i used only by
// phase 1, so all right-hand sides are zero and row bounds live on r_i.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pinnopt/milp_model.hpp"

namespace pinnopt::detail {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<std::size_t> head;  ///< basic column per row
  std::vector<VarState> state;    ///< per column
};

class DenseSimplex {
 public:
  enum class Result { Optimal, Infeasible, Unbounded, Cutoff };

  DenseSimplex(const MilpModel& model, double feasibility_tol);

  std::size_t structural_count() const { return n_; }
  std::size_t row_count() const { return m_; }

  /// Bounds of the model variables for the next solve.
  void set_structural_bounds(std::span<const double> lower, std::span<const double> upper);

  /// Two-phase primal simplex from the slack/artificial basis.
  Result solve_cold();

  /// Dual simplex from `basis` (which must come from this object). Stops
  /// with Cutoff once the objective provably exceeds `cutoff`. Falls back to
  /// solve_cold when the basis is singular or not dual feasible.
  Result solve_warm(const Basis& basis, std::uint64_t basis_serial, double cutoff);

  /// Minimization objective of the structural part (no constant).
  double objective() const;
  std::vector<double> structural_values() const;
  /// Reduced costs of the logicals, i.e. d objective / d row bound.
  std::vector<double> row_duals() const;
  Basis basis() const;
  /// Changes every time the tableau changes; identifies the live basis.
  std::uint64_t serial() const { return serial_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double* row(std::size_t i) { return tableau_.data() + i * ncol_; }
  const double* row(std::size_t i) const { return tableau_.data() + i * ncol_; }
  std::span<double> row_span(std::size_t i) { return {row(i), ncol_}; }

  void pivot(std::size_t r, std::size_t q);
  void place_nonbasic(std::size_t j);
  void recompute_basics();
  void recompute_reduced_costs(const std::vector<double>& cost);
  bool refactor(const Basis& basis);
  double max_row_residual() const;
  bool dual_feasible() const;
  Result primal_loop(const std::vector<double>& cost);
  Result dual_loop(double cutoff);
  void count_pivot(bool degenerate);
  void bump_iteration();

  std::size_t n_ = 0, m_ = 0, ncol_ = 0;
  double feas_tol_;
  std::vector<double> original_;  ///< m x ncol constraint matrix incl. logicals/artificials
  std::vector<double> cost_;      ///< phase-2 costs, minimization sense
  std::vector<double> row_lo_, row_hi_;
  std::vector<double> lo_, hi_;
  std::vector<double> tableau_;   ///< B^-1 times original_, row-major
  std::vector<double> reduced_;   ///< reduced costs per column
  std::vector<double> x_;
  std::vector<std::size_t> head_;
  std::vector<VarState> state_;
  std::size_t iterations_ = 0;
  std::size_t degenerate_ = 0;
  std::size_t since_refactor_ = 0;
  bool bland_ = false;
  std::uint64_t serial_ = 0;
  bool have_basis_ = false;
};

}  // namespace pinnopt::detail
