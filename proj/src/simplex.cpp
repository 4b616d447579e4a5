#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pinnopt/kernels.hpp"
#include "pinnopt/milp_solver.hpp"

namespace pinnopt::detail {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kTieTol = 1e-12;
constexpr std::size_t kBlandAfter = 1000;
constexpr std::size_t kRefactorEvery = 400;

}  // namespace

DenseSimplex::DenseSimplex(const MilpModel& model, double feasibility_tol)
    : n_(model.variable_count()),
      m_(model.constraints().size()),
      ncol_(n_ + 2 * m_),
      feas_tol_(feasibility_tol) {
  original_.assign(m_ * ncol_, 0.0);
  row_lo_.resize(m_);
  row_hi_.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    const Constraint& c = model.constraints()[i];
    double* a = original_.data() + i * ncol_;
    for (const Term& t : c.terms) a[t.var.index] += t.coef;
    a[n_ + i] = -1.0;
    a[n_ + m_ + i] = 1.0;
    row_lo_[i] = c.relation == Relation::LessEqual ? -kInf : c.rhs;
    row_hi_[i] = c.relation == Relation::GreaterEqual ? kInf : c.rhs;
  }
  cost_.assign(ncol_, 0.0);
  const double sign = model.objective().sense == Sense::Maximize ? -1.0 : 1.0;
  for (const Term& t : model.objective().terms) cost_[t.var.index] += sign * t.coef;

  lo_.assign(ncol_, 0.0);
  hi_.assign(ncol_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    lo_[j] = model.variables()[j].lower;
    hi_[j] = model.variables()[j].upper;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    lo_[n_ + i] = row_lo_[i];
    hi_[n_ + i] = row_hi_[i];
  }
  tableau_.assign(m_ * ncol_, 0.0);
  reduced_.assign(ncol_, 0.0);
  x_.assign(ncol_, 0.0);
  head_.assign(m_, 0);
  state_.assign(ncol_, VarState::AtLower);
}

void DenseSimplex::set_structural_bounds(std::span<const double> lower, std::span<const double> upper) {
  for (std::size_t j = 0; j < n_; ++j) {
    lo_[j] = lower[j];
    hi_[j] = upper[j];
  }
}

void DenseSimplex::bump_iteration() {
  ++iterations_;
  if (iterations_ > 200 * (m_ + ncol_) + 10000)
    throw LpError("simplex iteration limit reached after " + std::to_string(iterations_) + " pivots");
}

void DenseSimplex::count_pivot(bool degenerate) {
  if (degenerate && ++degenerate_ >= kBlandAfter) bland_ = true;
}

void DenseSimplex::pivot(std::size_t r, std::size_t q) {
  double* pr = row(r);
  const double p = pr[q];
  if (std::abs(p) < 1e-12)
    throw LpError("singular pivot element " + std::to_string(p) + " at simplex iteration " +
                  std::to_string(iterations_));
  std::span<double> rs = row_span(r);
  kernels::scale(1.0 / p, rs);
  pr[q] = 1.0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* pi = row(i);
    const double f = pi[q];
    if (f == 0.0) continue;
    kernels::axpy(-f, rs, row_span(i));
    pi[q] = 0.0;
  }
  const double f = reduced_[q];
  if (f != 0.0) {
    kernels::axpy(-f, rs, reduced_);
    reduced_[q] = 0.0;
  }
  head_[r] = q;
  state_[q] = VarState::Basic;
  ++serial_;
  ++since_refactor_;
}

void DenseSimplex::place_nonbasic(std::size_t j) {
  VarState& s = state_[j];
  if (s == VarState::AtLower && !std::isfinite(lo_[j])) s = std::isfinite(hi_[j]) ? VarState::AtUpper : VarState::Free;
  if (s == VarState::AtUpper && !std::isfinite(hi_[j])) s = std::isfinite(lo_[j]) ? VarState::AtLower : VarState::Free;
  if (s == VarState::Free && std::isfinite(lo_[j])) s = VarState::AtLower;
  if (s == VarState::Free && std::isfinite(hi_[j])) s = VarState::AtUpper;
  x_[j] = s == VarState::AtLower ? lo_[j] : s == VarState::AtUpper ? hi_[j] : 0.0;
}

void DenseSimplex::recompute_basics() {
  // Rows are homogeneous: x_B = -sum over nonbasic j of T[:, j] x_j.
  for (std::size_t i = 0; i < m_; ++i) {
    const double* t = row(i);
    double v = 0.0;
    for (std::size_t j = 0; j < ncol_; ++j)
      if (state_[j] != VarState::Basic && x_[j] != 0.0) v -= t[j] * x_[j];
    x_[head_[i]] = v;
  }
}

void DenseSimplex::recompute_reduced_costs(const std::vector<double>& cost) {
  reduced_ = cost;
  for (std::size_t i = 0; i < m_; ++i) {
    const double cb = cost[head_[i]];
    if (cb != 0.0) kernels::axpy(-cb, std::span<const double>(row(i), ncol_), reduced_);
  }
  for (std::size_t i = 0; i < m_; ++i) reduced_[head_[i]] = 0.0;
}

double DenseSimplex::max_row_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    const double* a = original_.data() + i * ncol_;
    double v = 0.0, scale = 1.0;
    for (std::size_t j = 0; j < ncol_; ++j) {
      if (a[j] == 0.0) continue;
      v += a[j] * x_[j];
      scale = std::max(scale, std::abs(a[j] * x_[j]));
    }
    worst = std::max(worst, std::abs(v) / scale);
  }
  return worst;
}

bool DenseSimplex::refactor(const Basis& basis) {
  tableau_ = original_;
  std::vector<bool> used(m_, false);
  for (std::size_t k = 0; k < m_; ++k) {
    const std::size_t c = basis.head[k];
    std::size_t best = m_;
    double best_abs = 1e-9;
    for (std::size_t p = 0; p < m_; ++p) {
      if (used[p]) continue;
      const double v = std::abs(row(p)[c]);
      if (v > best_abs) {
        best_abs = v;
        best = p;
      }
    }
    if (best == m_) return false;
    used[best] = true;
    // Tableau-only pivot; reduced costs are rebuilt afterwards.
    std::span<double> rs = row_span(best);
    kernels::scale(1.0 / row(best)[c], rs);
    row(best)[c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == best) continue;
      const double f = row(i)[c];
      if (f == 0.0) continue;
      kernels::axpy(-f, rs, row_span(i));
      row(i)[c] = 0.0;
    }
    head_[best] = c;
  }
  state_ = basis.state;
  for (std::size_t i = 0; i < m_; ++i) state_[head_[i]] = VarState::Basic;
  since_refactor_ = 0;
  ++serial_;
  return true;
}

bool DenseSimplex::dual_feasible() const {
  for (std::size_t j = 0; j < ncol_; ++j) {
    if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
    const double d = reduced_[j];
    if (state_[j] == VarState::AtLower && d < -kOptTol) return false;
    if (state_[j] == VarState::AtUpper && d > kOptTol) return false;
    if (state_[j] == VarState::Free && std::abs(d) > kOptTol) return false;
  }
  return true;
}

DenseSimplex::Result DenseSimplex::primal_loop(const std::vector<double>& cost) {
  recompute_reduced_costs(cost);
  for (;;) {
    bump_iteration();
    // Pricing.
    std::size_t q = ncol_;
    double best = 0.0;
    double dir = 0.0;
    for (std::size_t j = 0; j < ncol_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic || lo_[j] == hi_[j]) continue;
      const double d = reduced_[j];
      double jdir = 0.0;
      if (s == VarState::AtLower && d < -kOptTol) jdir = 1.0;
      else if (s == VarState::AtUpper && d > kOptTol) jdir = -1.0;
      else if (s == VarState::Free && std::abs(d) > kOptTol) jdir = d < 0.0 ? 1.0 : -1.0;
      if (jdir == 0.0) continue;
      if (bland_) {
        q = j;
        dir = jdir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = jdir;
      }
    }
    if (q == ncol_) return Result::Optimal;

    // Ratio test.
    const double span_q = hi_[q] - lo_[q];
    std::size_t leave = m_;
    double t_best = kInf, alpha_best = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double alpha = -row(i)[q] * dir;
      if (std::abs(alpha) < kPivotTol) continue;
      const std::size_t b = head_[i];
      double lim;
      if (alpha > 0.0 && std::isfinite(hi_[b])) lim = (hi_[b] - x_[b]) / alpha;
      else if (alpha < 0.0 && std::isfinite(lo_[b])) lim = (lo_[b] - x_[b]) / alpha;
      else continue;
      lim = std::max(lim, 0.0);
      bool take = false;
      if (lim < t_best - kTieTol) take = true;
      else if (lim <= t_best + kTieTol)
        take = bland_ ? head_[i] < head_[leave] : std::abs(alpha) > std::abs(alpha_best);
      if (take) {
        t_best = lim;
        leave = i;
        alpha_best = alpha;
      }
    }
    if (leave == m_ && !std::isfinite(span_q)) return Result::Unbounded;

    if (leave == m_ || span_q <= t_best) {
      // Bound flip of the entering variable.
      for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= row(i)[q] * dir * span_q;
      if (dir > 0) {
        x_[q] = hi_[q];
        state_[q] = VarState::AtUpper;
      } else {
        x_[q] = lo_[q];
        state_[q] = VarState::AtLower;
      }
      ++serial_;
      count_pivot(false);
      continue;
    }

    const double t = t_best;
    for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= row(i)[q] * dir * t;
    x_[q] += dir * t;
    const std::size_t b = head_[leave];
    if (alpha_best > 0.0) {
      x_[b] = hi_[b];
      state_[b] = VarState::AtUpper;
    } else {
      x_[b] = lo_[b];
      state_[b] = VarState::AtLower;
    }
    pivot(leave, q);
    count_pivot(t <= kTieTol);
  }
}

DenseSimplex::Result DenseSimplex::dual_loop(double cutoff) {
  for (;;) {
    bump_iteration();
    std::size_t r = m_;
    double worst = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t b = head_[i];
      double v = 0.0;
      if (x_[b] < lo_[b] - feas_tol_) v = lo_[b] - x_[b];
      else if (x_[b] > hi_[b] + feas_tol_) v = x_[b] - hi_[b];
      if (v <= 0.0) continue;
      if (bland_) {
        if (r == m_ || b < head_[r]) r = i;
      } else if (v > worst) {
        worst = v;
        r = i;
      }
    }
    if (r == m_) return Result::Optimal;

    const std::size_t b = head_[r];
    const bool raise = x_[b] < lo_[b];
    const double target = raise ? lo_[b] : hi_[b];
    const double* tr = row(r);
    std::size_t q = ncol_;
    double ratio_best = kInf, abs_best = 0.0;
    for (std::size_t j = 0; j < ncol_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic || lo_[j] == hi_[j]) continue;
      const double a = tr[j];
      if (std::abs(a) < kPivotTol) continue;
      // x_b = -sum a_j x_j: raising x_b needs x_j to move against sign(a).
      const bool up = raise ? a < 0.0 : a > 0.0;
      if (s == VarState::AtLower && !up) continue;
      if (s == VarState::AtUpper && up) continue;
      const double ratio = std::abs(reduced_[j]) / std::abs(a);
      bool take = false;
      if (ratio < ratio_best - kTieTol) take = true;
      else if (ratio <= ratio_best + kTieTol) take = bland_ ? j < q : std::abs(a) > abs_best;
      if (take) {
        ratio_best = ratio;
        abs_best = std::abs(a);
        q = j;
      }
    }
    if (q == ncol_) return Result::Infeasible;

    const double dq = -(target - x_[b]) / tr[q];
    for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= row(i)[q] * dq;
    x_[q] += dq;
    x_[b] = target;
    state_[b] = raise ? VarState::AtLower : VarState::AtUpper;
    pivot(r, q);
    count_pivot(ratio_best <= kTieTol);
    if (std::isfinite(cutoff) && objective() > cutoff + 1e-9 * std::max(1.0, std::abs(cutoff)))
      return Result::Cutoff;
  }
}

DenseSimplex::Result DenseSimplex::solve_cold() {
  degenerate_ = 0;
  bland_ = false;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    state_[j] = VarState::AtLower;
    place_nonbasic(j);
  }
  std::vector<double> phase1(ncol_, 0.0);
  bool need_phase1 = false;
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t logical = n_ + i, art = n_ + m_ + i;
    double* a = original_.data() + i * ncol_;
    double act = 0.0;
    for (std::size_t j = 0; j < n_; ++j)
      if (a[j] != 0.0) act += a[j] * x_[j];
    lo_[art] = 0.0;
    hi_[art] = kInf;
    if (act >= row_lo_[i] - feas_tol_ && act <= row_hi_[i] + feas_tol_) {
      a[art] = 1.0;
      hi_[art] = 0.0;
      head_[i] = logical;
      state_[logical] = VarState::Basic;
      x_[logical] = act;
      state_[art] = VarState::AtLower;
      x_[art] = 0.0;
    } else {
      const double v = std::clamp(act, row_lo_[i], row_hi_[i]);
      state_[logical] = v == row_lo_[i] ? VarState::AtLower : VarState::AtUpper;
      x_[logical] = v;
      a[art] = v - act > 0.0 ? 1.0 : -1.0;
      head_[i] = art;
      state_[art] = VarState::Basic;
      x_[art] = std::abs(v - act);
      phase1[art] = 1.0;
      need_phase1 = true;
    }
  }
  // Initial basis is diagonal: scale each original row by its basic entry.
  tableau_ = original_;
  for (std::size_t i = 0; i < m_; ++i) kernels::scale(1.0 / row(i)[head_[i]], row_span(i));
  since_refactor_ = 0;
  ++serial_;
  have_basis_ = true;

  if (need_phase1) {
    const Result r = primal_loop(phase1);
    if (r != Result::Optimal) throw LpError("phase 1 ended without an optimum");
    recompute_basics();
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i) infeas = std::max(infeas, x_[n_ + m_ + i]);
    if (infeas > feas_tol_) return Result::Infeasible;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t art = n_ + m_ + i;
    hi_[art] = 0.0;
    if (state_[art] != VarState::Basic) x_[art] = 0.0;
  }
  // Drive basic artificials out where a non-artificial column can replace them.
  for (std::size_t i = 0; i < m_; ++i) {
    if (head_[i] < n_ + m_) continue;
    const double* t = row(i);
    std::size_t q = ncol_;
    double best = 1e-7;
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (state_[j] != VarState::Basic && std::abs(t[j]) > best) {
        best = std::abs(t[j]);
        q = j;
      }
    if (q == ncol_) continue;
    const std::size_t art = head_[i];
    state_[art] = VarState::AtLower;
    x_[art] = 0.0;
    pivot(i, q);
  }
  recompute_basics();

  Result r = primal_loop(cost_);
  if (r == Result::Optimal) {
    recompute_basics();
    if (max_row_residual() > 1e-9) {
      refactor(basis());
      recompute_basics();
      r = primal_loop(cost_);
      recompute_basics();
    }
  }
  return r;
}

DenseSimplex::Result DenseSimplex::solve_warm(const Basis& basis, std::uint64_t basis_serial, double cutoff) {
  if (!have_basis_) return solve_cold();
  degenerate_ = 0;
  bland_ = false;
  const bool live = basis_serial == serial_ && since_refactor_ < kRefactorEvery;
  if (!live) {
    if (!refactor(basis)) return solve_cold();
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t art = n_ + m_ + i;
    lo_[art] = 0.0;
    hi_[art] = 0.0;
  }
  for (std::size_t j = 0; j < ncol_; ++j)
    if (state_[j] != VarState::Basic) place_nonbasic(j);
  recompute_basics();
  recompute_reduced_costs(cost_);
  if (!dual_feasible()) return solve_cold();

  Result r = dual_loop(cutoff);
  if (r == Result::Optimal) {
    recompute_basics();
    if (max_row_residual() > 1e-9) {
      if (!refactor(this->basis())) return solve_cold();
      recompute_basics();
      recompute_reduced_costs(cost_);
      if (!dual_feasible()) return solve_cold();
      r = dual_loop(cutoff);
      recompute_basics();
    }
  }
  return r;
}

double DenseSimplex::objective() const {
  double v = 0.0;
  for (std::size_t j = 0; j < n_; ++j)
    if (cost_[j] != 0.0) v += cost_[j] * x_[j];
  return v;
}

std::vector<double> DenseSimplex::structural_values() const {
  return {x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_)};
}

std::vector<double> DenseSimplex::row_duals() const {
  return {reduced_.begin() + static_cast<std::ptrdiff_t>(n_),
          reduced_.begin() + static_cast<std::ptrdiff_t>(n_ + m_)};
}

Basis DenseSimplex::basis() const { return Basis{head_, state_}; }

}  // namespace pinnopt::detail
