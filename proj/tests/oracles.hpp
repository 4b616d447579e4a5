#pragma once

// Independent reference computations shared by unit and acceptance tests:
// random network and program generators, brute-force grid minimization with
// a Lipschitz bound on its error, vertex enumeration for small LPs and
// exhaustive enumeration for small binary programs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pinnopt/milp_model.hpp"
#include "pinnopt/nn_core.hpp"
#include "pinnopt/random.hpp"

namespace oracles {

using pinnopt::NetworkParams;
namespace rng = pinnopt::rng;

/// Single-output network with weights scaled so pre-activations span a few
/// units over the box [-1, 1]^n_in.
inline NetworkParams random_net(rng::Engine& e, std::size_t n_in, std::size_t n_hidden,
                                pinnopt::Activation hidden = pinnopt::Activation::tanh(),
                                pinnopt::Activation output = pinnopt::Activation::tanh()) {
  NetworkParams p = NetworkParams::zeros(n_in, n_hidden, 1, hidden, output);
  for (std::size_t j = 0; j < n_hidden; ++j) {
    for (std::size_t k = 0; k < n_in; ++k) p.B(j, k) = rng::uniform(e, -1, 1) * 3.0 / static_cast<double>(n_in);
    p.C[j] = rng::uniform(e, -0.5, 0.5);
    p.A(0, j) = rng::uniform(e, -1, 1) * 3.0 / static_cast<double>(n_hidden);
  }
  p.D[0] = rng::uniform(e, -0.3, 0.3);
  return p;
}

/// Bound on |f(u) - f(v)| / ||u - v||_inf for a single-output network whose
/// activations have slopes at most `hidden_slope` and `output_slope`.
inline double lipschitz_inf(const NetworkParams& p, double hidden_slope, double output_slope) {
  double total = 0.0;
  for (std::size_t j = 0; j < p.n_hidden(); ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < p.n_in(); ++k) row += std::abs(p.B(j, k));
    total += std::abs(p.A(0, j)) * hidden_slope * row;
  }
  return output_slope * total;
}

struct GridResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;
  double spacing = 0.0;
};

/// Minimum of f over the tensor grid of `points` values per dimension on
/// [-1, 1]^dims. Every box point lies within spacing / 2 (inf-norm) of a
/// grid point, so the true minimum is at least value - L spacing / 2.
inline GridResult grid_min(std::size_t dims, std::size_t points, const std::function<double(const std::vector<double>&)>& f) {
  GridResult g;
  g.spacing = 2.0 / static_cast<double>(points - 1);
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> u(dims);
  for (;;) {
    for (std::size_t d = 0; d < dims; ++d) u[d] = -1.0 + g.spacing * static_cast<double>(idx[d]);
    const double v = f(u);
    if (v < g.value) {
      g.value = v;
      g.argmin = u;
    }
    std::size_t d = 0;
    while (d < dims && ++idx[d] == points) idx[d++] = 0;
    if (d == dims) break;
  }
  return g;
}

/// Points per dimension keeping the grid near `budget` evaluations.
inline std::size_t grid_points_for(std::size_t dims, double budget) {
  return std::max<std::size_t>(3, static_cast<std::size_t>(std::floor(std::pow(budget, 1.0 / static_cast<double>(dims)))));
}

// ---------------------------------------------------------------------------
// Small LPs: minimize c x subject to A x <= b (bounds folded in as rows).

struct DenseLp {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
};

inline bool solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs, std::vector<double>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t p = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[p][col])) p = r;
    if (std::abs(m[p][col]) < 1e-10) return false;
    std::swap(m[p], m[col]);
    std::swap(rhs[p], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t k = col; k < n; ++k) m[r][k] -= f * m[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return true;
}

/// Minimum of c x over the feasible vertices (+inf if none). Valid as the LP
/// optimum when the feasible set is bounded.
inline double vertex_min(const DenseLp& lp) {
  const std::size_t rows = lp.a.size(), n = lp.c.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> mask(rows, false);
  std::fill(mask.begin(), mask.begin() + static_cast<long>(n), true);
  do {
    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (std::size_t r = 0; r < rows; ++r)
      if (mask[r]) {
        m.push_back(lp.a[r]);
        rhs.push_back(lp.b[r]);
      }
    std::vector<double> x;
    if (!solve_square(m, rhs, x)) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < rows && feasible; ++r) {
      double lhs = 0.0;
      for (std::size_t k = 0; k < n; ++k) lhs += lp.a[r][k] * x[k];
      feasible = lhs <= lp.b[r] + 1e-9 * std::max(1.0, std::abs(lp.b[r]));
    }
    if (!feasible) continue;
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k) v += lp.c[k] * x[k];
    best = std::min(best, v);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

/// Random bounded LP with `n` variables in [-5, 5] and a few random rows;
/// returns both the dense form and the equivalent MilpModel.
inline std::pair<DenseLp, pinnopt::MilpModel> random_lp(rng::Engine& e, std::size_t n, std::size_t rows) {
  using namespace pinnopt;
  DenseLp lp;
  MilpModel m;
  std::vector<VarId> v;
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = rng::uniform(e, -5, 0), hi = rng::uniform(e, 0.5, 5);
    v.push_back(m.add_continuous("x" + std::to_string(k), lo, hi));
    std::vector<double> up(n, 0.0), down(n, 0.0);
    up[k] = 1.0;
    down[k] = -1.0;
    lp.a.push_back(up);
    lp.b.push_back(hi);
    lp.a.push_back(down);
    lp.b.push_back(-lo);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(n);
    std::vector<Term> terms;
    for (std::size_t k = 0; k < n; ++k) {
      row[k] = std::round(rng::uniform(e, -4, 4) * 4.0) / 4.0;
      terms.push_back({v[k], row[k]});
    }
    const double rhs = rng::uniform(e, -3, 6);
    if (rng::uniform01(e) < 0.5) {
      lp.a.push_back(row);
      lp.b.push_back(rhs);
      m.add_constraint(terms, Relation::LessEqual, rhs);
    } else {
      for (double& x : row) x = -x;
      lp.a.push_back(row);
      lp.b.push_back(-rhs);
      m.add_constraint(terms, Relation::GreaterEqual, rhs);
    }
  }
  std::vector<Term> obj;
  for (std::size_t k = 0; k < n; ++k) {
    lp.c.push_back(std::round(rng::uniform(e, -5, 5) * 2.0) / 2.0);
    obj.push_back({v[k], lp.c.back()});
  }
  m.set_objective(Sense::Minimize, obj);
  m.finalize();
  return {lp, std::move(m)};
}

// ---------------------------------------------------------------------------
// Small mixed programs: `nb` binaries plus up to two bounded continuous
// variables; the oracle enumerates binaries and solves each continuous
// remainder by vertex enumeration.

struct SmallMilp {
  std::size_t nb = 0, nc = 0;
  std::vector<std::vector<double>> a;  ///< rows over (binaries, continuous), all <=
  std::vector<double> b;
  std::vector<double> c;
  std::vector<std::pair<double, double>> cont_bounds;
  pinnopt::MilpModel model;
};

inline SmallMilp random_small_milp(rng::Engine& e, std::size_t nb, std::size_t nc, std::size_t rows) {
  using namespace pinnopt;
  SmallMilp s;
  s.nb = nb;
  s.nc = nc;
  std::vector<VarId> v;
  for (std::size_t k = 0; k < nb; ++k) v.push_back(s.model.add_binary("b" + std::to_string(k)));
  for (std::size_t k = 0; k < nc; ++k) {
    const double lo = rng::uniform(e, -3, 0), hi = rng::uniform(e, 0.5, 3);
    s.cont_bounds.push_back({lo, hi});
    v.push_back(s.model.add_continuous("x" + std::to_string(k), lo, hi));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(nb + nc);
    std::vector<Term> terms;
    for (std::size_t k = 0; k < nb + nc; ++k) {
      row[k] = std::round(rng::uniform(e, -5, 9));
      terms.push_back({v[k], row[k]});
    }
    const double rhs = std::round(rng::uniform(e, 0, 2.0 * static_cast<double>(nb)));
    s.a.push_back(row);
    s.b.push_back(rhs);
    s.model.add_constraint(terms, Relation::LessEqual, rhs);
  }
  std::vector<Term> obj;
  for (std::size_t k = 0; k < nb + nc; ++k) {
    s.c.push_back(std::round(rng::uniform(e, -10, 4)));
    obj.push_back({v[k], s.c.back()});
  }
  s.model.set_objective(Sense::Minimize, obj);
  s.model.finalize();
  return s;
}

/// Exhaustive optimum (+inf when infeasible).
inline double enumerate_min(const SmallMilp& s) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << s.nb); ++mask) {
    double fixed_obj = 0.0;
    std::vector<double> rest(s.b);
    for (std::size_t k = 0; k < s.nb; ++k) {
      if (!((mask >> k) & 1)) continue;
      fixed_obj += s.c[k];
      for (std::size_t r = 0; r < s.a.size(); ++r) rest[r] -= s.a[r][k];
    }
    if (s.nc == 0) {
      bool ok = true;
      for (double v : rest) ok = ok && v >= -1e-9;
      if (ok) best = std::min(best, fixed_obj);
      continue;
    }
    DenseLp lp;
    for (std::size_t r = 0; r < s.a.size(); ++r) {
      lp.a.push_back(std::vector<double>(s.a[r].begin() + static_cast<long>(s.nb), s.a[r].end()));
      lp.b.push_back(rest[r]);
    }
    for (std::size_t k = 0; k < s.nc; ++k) {
      std::vector<double> up(s.nc, 0.0), down(s.nc, 0.0);
      up[k] = 1.0;
      down[k] = -1.0;
      lp.a.push_back(up);
      lp.b.push_back(s.cont_bounds[k].second);
      lp.a.push_back(down);
      lp.b.push_back(-s.cont_bounds[k].first);
      lp.c.push_back(s.c[s.nb + k]);
    }
    best = std::min(best, fixed_obj + vertex_min(lp));
  }
  return best;
}

}  // namespace oracles
