#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pinnopt/milp_solver.hpp"
#include "pinnopt/random.hpp"

using namespace pinnopt;

namespace {

// Vertex enumeration oracle for small LPs in inequality form
// A x <= b, with bounds folded in as rows. Every optimal vertex solves n
// active rows; enumerate all n-subsets.
struct DenseLp {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
};

bool solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs, std::vector<double>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    if (std::abs(m[p][c]) < 1e-10) return false;
    std::swap(m[p], m[c]);
    std::swap(rhs[p], rhs[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return true;
}

/// Best objective over all feasible vertices, +inf if none.
double vertex_min(const DenseLp& lp, const std::vector<double>& c) {
  const std::size_t rows = lp.a.size(), n = c.size();
  std::vector<std::size_t> pick(n);
  double best = INFINITY;
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
    bool ok = true;
    for (std::size_t r = 0; r < rows && ok; ++r) {
      double v = 0;
      for (std::size_t k = 0; k < n; ++k) v += lp.a[r][k] * x[k];
      ok = v <= lp.b[r] + 1e-8;
    }
    if (!ok) continue;
    double obj = 0;
    for (std::size_t k = 0; k < n; ++k) obj += c[k] * x[k];
    best = std::min(best, obj);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

}  // namespace

TEST_CASE("single bounded variable") {
  MilpModel m;
  VarId x = m.add_continuous("x", 0, 10);
  m.add_constraint({{x, 1.0}}, Relation::GreaterEqual, 2.5);
  m.set_objective(Sense::Minimize, {{x, 1.0}});
  m.finalize();
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(2.5));
  CHECK(s.duals[0] == doctest::Approx(1.0));
}

TEST_CASE("classic two-variable LP") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
  MilpModel m;
  VarId x = m.add_continuous("x", 0, kInf);
  VarId y = m.add_continuous("y", 0, kInf);
  m.add_constraint({{x, 1}}, Relation::LessEqual, 4);
  m.add_constraint({{y, 2}}, Relation::LessEqual, 12);
  m.add_constraint({{x, 3}, {y, 2}}, Relation::LessEqual, 18);
  m.set_objective(Sense::Maximize, {{x, 3}, {y, 5}});
  m.finalize();
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(36));
  CHECK(s.values[0] == doctest::Approx(2));
  CHECK(s.values[1] == doctest::Approx(6));
  // Shadow prices of the textbook example: 0, 1.5, 1.
  CHECK(s.duals[0] == doctest::Approx(0).epsilon(1e-9));
  CHECK(s.duals[1] == doctest::Approx(1.5));
  CHECK(s.duals[2] == doctest::Approx(1));
}

TEST_CASE("infeasible and unbounded LPs") {
  {
    MilpModel m;
    VarId x = m.add_continuous("x", 0, 1);
    m.add_constraint({{x, 1}}, Relation::GreaterEqual, 2);
    m.finalize();
    CHECK(solve_lp(m).status == SolveStatus::Infeasible);
    CHECK(solve_milp(m).status == SolveStatus::Infeasible);
  }
  {
    MilpModel m;
    VarId x = m.add_continuous("x", 0, kInf);
    VarId y = m.add_continuous("y", -kInf, kInf);
    m.add_constraint({{x, 1}, {y, -1}}, Relation::Equal, 0);
    m.set_objective(Sense::Maximize, {{x, 1}});
    m.finalize();
    CHECK(solve_lp(m).status == SolveStatus::Unbounded);
    CHECK(solve_milp(m).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("free variables and equality rows") {
  MilpModel m;
  VarId x = m.add_continuous("x", -kInf, kInf);
  VarId y = m.add_continuous("y", -kInf, kInf);
  m.add_constraint({{x, 1}, {y, 1}}, Relation::Equal, 3);
  m.add_constraint({{x, 1}, {y, -1}}, Relation::Equal, -1);
  m.set_objective(Sense::Minimize, {{x, 2}, {y, 1}});
  m.finalize();
  LpSolution s = solve_lp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.values[0] == doctest::Approx(1));
  CHECK(s.values[1] == doctest::Approx(2));
  CHECK(s.objective == doctest::Approx(4));
}

TEST_CASE("random LPs match vertex enumeration") {
  rng::Engine eng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng::index(eng, 3);
    const std::size_t rows = 2 + rng::index(eng, 4);
    MilpModel m;
    DenseLp dense;
    std::vector<VarId> v;
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = rng::uniform(eng, -3, 0), hi = rng::uniform(eng, 0.5, 3);
      v.push_back(m.add_continuous("x" + std::to_string(j), lo, hi));
      std::vector<double> e(n, 0.0);
      e[j] = 1;
      dense.a.push_back(e);
      dense.b.push_back(hi);
      e[j] = -1;
      dense.a.push_back(e);
      dense.b.push_back(-lo);
    }
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<Term> t;
      std::vector<double> coef(n);
      for (std::size_t j = 0; j < n; ++j) {
        coef[j] = rng::uniform(eng, -2, 2);
        t.push_back({v[j], coef[j]});
      }
      const double rhs = rng::uniform(eng, -1, 2);
      const int rel = static_cast<int>(rng::index(eng, 3));
      if (rel == 0) {
        m.add_constraint(t, Relation::LessEqual, rhs);
        dense.a.push_back(coef);
        dense.b.push_back(rhs);
      } else if (rel == 1) {
        m.add_constraint(t, Relation::GreaterEqual, rhs);
        for (double& c : coef) c = -c;
        dense.a.push_back(coef);
        dense.b.push_back(-rhs);
      } else {
        // Equality as two inequalities in the oracle.
        m.add_constraint(t, Relation::Equal, rhs);
        dense.a.push_back(coef);
        dense.b.push_back(rhs);
        for (double& c : coef) c = -c;
        dense.a.push_back(coef);
        dense.b.push_back(-rhs);
      }
    }
    std::vector<double> c(n);
    std::vector<Term> obj;
    for (std::size_t j = 0; j < n; ++j) {
      c[j] = rng::uniform(eng, -1, 1);
      obj.push_back({v[j], c[j]});
    }
    m.set_objective(Sense::Minimize, obj);
    m.finalize();
    const double oracle = vertex_min(dense, c);
    LpSolution s = solve_lp(m);
    CAPTURE(trial);
    if (std::isinf(oracle)) {
      CHECK(s.status == SolveStatus::Infeasible);
    } else {
      REQUIRE(s.status == SolveStatus::Optimal);
      CHECK(s.objective == doctest::Approx(oracle).epsilon(1e-7));
      CHECK(m.max_violation(s.values) <= 1e-7);
    }
  }
}

TEST_CASE("pure LP through branch and bound equals solve_lp") {
  MilpModel m;
  VarId x = m.add_continuous("x", 0, kInf);
  VarId y = m.add_continuous("y", 0, kInf);
  m.add_constraint({{x, 1}, {y, 2}}, Relation::LessEqual, 4);
  m.add_constraint({{x, 3}, {y, 1}}, Relation::LessEqual, 6);
  m.set_objective(Sense::Maximize, {{x, 1}, {y, 1}});
  m.finalize();
  LpSolution lp = solve_lp(m);
  MilpSolution milp = solve_milp(m);
  REQUIRE(milp.status == SolveStatus::Optimal);
  CHECK(milp.objective == doctest::Approx(lp.objective));
  CHECK(milp.nodes == 1);
}

TEST_CASE("toy SOS2 picks the lowest breakpoint value") {
  const std::vector<double> bp{-4, -1, 1, 4}, val{-1, -0.76, 0.76, 1};
  MilpModel m;
  VarId z = m.add_continuous("z", -4, 4);
  std::vector<VarId> lam;
  std::vector<Term> sum, zdef{{z, -1.0}}, obj;
  for (std::size_t k = 0; k < 4; ++k) {
    lam.push_back(m.add_continuous("l" + std::to_string(k + 1), 0, 1));
    sum.push_back({lam[k], 1});
    zdef.push_back({lam[k], bp[k]});
    obj.push_back({lam[k], val[k]});
  }
  m.add_constraint(sum, Relation::Equal, 1);
  m.add_constraint(zdef, Relation::Equal, 0);
  m.add_sos2(lam);
  m.set_objective(Sense::Minimize, obj);
  m.finalize();
  MilpSolution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(-1));
  CHECK(s.values[lam[0].index] == doctest::Approx(1));
}

TEST_CASE("SOS2 branching enforces adjacency on a concave pick") {
  // max of a concave-shaped table over a convex hull would mix the two
  // outer points; SOS2 forces a neighbouring pair.
  const std::vector<double> bp{0, 1, 2, 3}, val{0, 5, 5, 0};
  MilpModel m;
  VarId z = m.add_continuous("z", 0, 3);
  std::vector<VarId> lam;
  std::vector<Term> sum, zdef{{z, -1.0}}, obj;
  for (std::size_t k = 0; k < 4; ++k) {
    lam.push_back(m.add_continuous("l" + std::to_string(k + 1), 0, 1));
    sum.push_back({lam[k], 1});
    zdef.push_back({lam[k], bp[k]});
    obj.push_back({lam[k], -val[k]});
  }
  m.add_constraint(sum, Relation::Equal, 1);
  m.add_constraint(zdef, Relation::Equal, 0);
  m.add_constraint({{z, 1}}, Relation::Equal, 1.5);
  m.add_sos2(lam);
  // Without SOS2, z = 1.5 could mix l1 and l4 (value 0) or l2/l3 (value -5).
  // Minimizing +val instead would pick l1/l4 -- make that the objective.
  std::vector<Term> flipped;
  for (auto t : obj) flipped.push_back({t.var, -t.coef});
  m.set_objective(Sense::Minimize, flipped);
  m.finalize();
  LpSolution relax = solve_lp(m);
  CHECK(relax.objective == doctest::Approx(0.0).epsilon(1e-9));
  MilpSolution s = solve_milp(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(5.0));
  CHECK(s.nodes > 1);
}

TEST_CASE("random binary knapsacks match enumeration") {
  rng::Engine eng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + rng::index(eng, 8);
    std::vector<double> w(n), p(n);
    MilpModel m;
    std::vector<Term> cap, obj;
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = rng::uniform(eng, 1, 10);
      p[j] = rng::uniform(eng, 1, 10);
      VarId b = m.add_binary("b" + std::to_string(j));
      cap.push_back({b, w[j]});
      obj.push_back({b, p[j]});
    }
    double total = 0;
    for (double x : w) total += x;
    const double c = 0.4 * total;
    m.add_constraint(cap, Relation::LessEqual, c);
    m.set_objective(Sense::Maximize, obj);
    m.finalize();
    double best = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      double ww = 0, pp = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (mask >> j & 1) {
          ww += w[j];
          pp += p[j];
        }
      if (ww <= c) best = std::max(best, pp);
    }
    MilpSolution s = solve_milp(m);
    CAPTURE(trial);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-6));
    CHECK(std::abs(s.objective - s.best_bound) / std::max(1.0, std::abs(s.objective)) <= 1e-6);
    CHECK(m.max_violation(s.values) <= 1e-7);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = s.values[j];
      CHECK(std::min(std::abs(v), std::abs(v - 1)) <= 1e-6);
    }
  }
}

TEST_CASE("node limit yields gap_limit with the incumbent") {
  rng::Engine eng(5);
  MilpModel m;
  std::vector<Term> cap, obj;
  for (int j = 0; j < 25; ++j) {
    VarId b = m.add_binary("b" + std::to_string(j));
    cap.push_back({b, rng::uniform(eng, 1, 10)});
    obj.push_back({b, rng::uniform(eng, 1, 10)});
  }
  m.add_constraint(cap, Relation::LessEqual, 30);
  m.set_objective(Sense::Maximize, obj);
  m.finalize();
  SolverOptions opt;
  opt.node_limit = 3;
  MilpSolution s = solve_milp(m, opt);
  CHECK(s.status == SolveStatus::GapLimit);
  CHECK(s.nodes == 3);
  CHECK(s.best_bound >= s.objective - 1e-9);
}

TEST_CASE("solver options validation") {
  SolverOptions o;
  o.feasibility_tol = 0;
  CHECK_THROWS_AS(o.validate(), ContractError);
  MilpModel open;
  open.add_continuous("x", 0, 1);
  CHECK_THROWS_AS(solve_milp(open), ContractError);
}
