#include "pinnopt/milp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>

#include "simplex.hpp"

namespace pinnopt {

using detail::Basis;
using detail::DenseSimplex;

void SolverOptions::validate() const {
  if (!(feasibility_tol > 0.0) || !(integrality_tol > 0.0) || !(relative_gap >= 0.0))
    throw ContractError("solver tolerances must be positive");
  if (!(time_limit_seconds > 0.0)) throw ContractError("solver time limit must be positive");
  if (node_limit == 0) throw ContractError("solver node limit must be positive");
}

namespace {

double sense_sign(const MilpModel& model) {
  return model.objective().sense == Sense::Maximize ? -1.0 : 1.0;
}

void require_finalized(const MilpModel& model) {
  if (!model.finalized()) throw ContractError("model must be finalized before solving");
}

struct BoundChange {
  std::size_t var;
  double lower;
  double upper;
};

struct Node {
  std::vector<BoundChange> changes;  ///< cumulative from the root
  double bound = -kInf;              ///< parent relaxation value (minimization)
  std::size_t depth = 0;
  std::size_t id = 0;
  std::shared_ptr<const Basis> basis;
  std::uint64_t serial = 0;
};

/// Heap order: lowest bound first, then deepest, then oldest.
bool worse(const Node& a, const Node& b) {
  if (a.bound != b.bound) return a.bound > b.bound;
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.id > b.id;
}

struct Branch {
  std::vector<BoundChange> first;
  std::vector<BoundChange> second;
};

/// Most-fractional binary, ties to the lowest index. Returns false if all
/// binaries are integral.
bool branch_binary(const MilpModel& model, const std::vector<double>& x, const std::vector<double>& lo,
                   const std::vector<double>& hi, double tol, Branch& out) {
  std::size_t best = model.variable_count();
  double best_frac = tol;
  for (std::size_t j = 0; j < model.variable_count(); ++j) {
    if (model.variables()[j].kind != VarKind::Binary) continue;
    const double frac = std::abs(x[j] - std::round(x[j]));
    if (frac > best_frac) {
      best_frac = frac;
      best = j;
    }
  }
  if (best == model.variable_count()) return false;
  BoundChange down{best, lo[best], 0.0};
  BoundChange up{best, 1.0, hi[best]};
  // Explore the side the relaxation leans towards first.
  if (x[best] >= 0.5) out = {{up}, {down}};
  else out = {{down}, {up}};
  return true;
}

/// SOS2 group with the largest mass outside its best adjacent pair. The
/// split index is the position nearest the weighted mean, ties low, kept
/// strictly inside the nonzero range so both children cut the point off.
bool branch_sos2(const MilpModel& model, const std::vector<double>& x, const std::vector<double>& lo, double tol,
                 Branch& out) {
  const auto& groups = model.sos2_groups();
  std::size_t best_group = groups.size();
  double best_mass = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& mem = groups[g].members;
    std::size_t count = 0, first = 0, last = 0;
    double total = 0.0, pair = 0.0;
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double v = x[mem[k].index];
      if (v > tol) {
        if (count == 0) first = k;
        last = k;
        ++count;
      }
      total += std::max(v, 0.0);
      if (k + 1 < mem.size()) pair = std::max(pair, std::max(v, 0.0) + std::max(x[mem[k + 1].index], 0.0));
    }
    if (count <= 1 || last - first <= 1) continue;
    const double mass = std::max(total - pair, tol);
    if (mass > best_mass) {
      best_mass = mass;
      best_group = g;
    }
  }
  if (best_group == groups.size()) return false;

  const auto& mem = groups[best_group].members;
  std::size_t first = mem.size(), last = 0;
  double weight = 0.0, total = 0.0;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double v = std::max(x[mem[k].index], 0.0);
    if (v > tol) {
      first = std::min(first, k);
      last = k;
    }
    weight += static_cast<double>(k) * v;
    total += v;
  }
  const double mean = weight / total;
  auto split = static_cast<std::size_t>(std::ceil(mean - 0.5));
  split = std::clamp(split, first + 1, last - 1);

  Branch b;
  double left_mass = 0.0, right_mass = 0.0;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const std::size_t v = mem[k].index;
    if (k > split) b.first.push_back({v, lo[v], 0.0});
    if (k < split) b.second.push_back({v, lo[v], 0.0});
    if (k < split) left_mass += std::max(x[v], 0.0);
    if (k > split) right_mass += std::max(x[v], 0.0);
  }
  // first keeps positions <= split; explore the heavier side first.
  if (right_mass > left_mass) std::swap(b.first, b.second);
  out = std::move(b);
  return true;
}

}  // namespace

LpSolution solve_lp(const MilpModel& model, const SolverOptions& options) {
  options.validate();
  require_finalized(model);
  DenseSimplex lp(model, options.feasibility_tol);
  const DenseSimplex::Result r = lp.solve_cold();
  LpSolution out;
  out.iterations = lp.iterations();
  const double sign = sense_sign(model);
  switch (r) {
    case DenseSimplex::Result::Optimal:
      out.status = SolveStatus::Optimal;
      out.values = lp.structural_values();
      out.objective = sign * lp.objective() + model.objective().constant;
      out.duals = lp.row_duals();
      for (double& d : out.duals) d *= sign;
      break;
    case DenseSimplex::Result::Unbounded:
      out.status = SolveStatus::Unbounded;
      out.objective = -sign * kInf;
      break;
    default:
      out.status = SolveStatus::Infeasible;
      out.objective = sign * kInf;
      break;
  }
  return out;
}

MilpSolution solve_milp(const MilpModel& model, const SolverOptions& options) {
  options.validate();
  require_finalized(model);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  const double sign = sense_sign(model);
  const double constant = model.objective().constant;
  auto user = [&](double internal) { return sign * internal + constant; };

  const std::size_t n = model.variable_count();
  std::vector<double> root_lo(n), root_hi(n);
  for (std::size_t j = 0; j < n; ++j) {
    root_lo[j] = model.variables()[j].lower;
    root_hi[j] = model.variables()[j].upper;
  }

  DenseSimplex lp(model, options.feasibility_tol);
  MilpSolution sol;
  double incumbent = kInf;  // minimization sense, structural part only
  double pruned_bound = kInf;
  std::vector<Node> heap;
  heap.push_back(Node{});
  std::size_t next_id = 1;
  bool limit_hit = false;
  bool unbounded = false;
  double open_bound = kInf;

  auto abs_gap = [&] { return options.relative_gap * std::max(1.0, std::abs(user(incumbent))); };

  std::vector<double> lo(n), hi(n);
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    Node node = std::move(heap.back());
    heap.pop_back();

    if (std::isfinite(incumbent) && node.bound >= incumbent - abs_gap()) {
      // Every open node is at least this bad.
      pruned_bound = std::min(pruned_bound, node.bound);
      for (const Node& other : heap) pruned_bound = std::min(pruned_bound, other.bound);
      heap.clear();
      break;
    }
    if (sol.nodes >= options.node_limit || elapsed() > options.time_limit_seconds) {
      limit_hit = true;
      open_bound = node.bound;
      for (const Node& other : heap) open_bound = std::min(open_bound, other.bound);
      break;
    }

    lo = root_lo;
    hi = root_hi;
    bool crossed = false;
    for (const BoundChange& c : node.changes) {
      lo[c.var] = c.lower;
      hi[c.var] = c.upper;
      if (c.lower > c.upper) crossed = true;
    }
    ++sol.nodes;
    if (crossed) continue;
    lp.set_structural_bounds(lo, hi);
    const double cutoff = std::isfinite(incumbent) ? incumbent - abs_gap() : kInf;
    const DenseSimplex::Result r = node.basis ? lp.solve_warm(*node.basis, node.serial, cutoff) : lp.solve_cold();

    if (options.log) {
      *options.log << "node " << node.id << " depth " << node.depth << " bound " << user(node.bound)
                   << " incumbent " << (std::isfinite(incumbent) ? user(incumbent) : sign * kInf) << '\n';
    }
    if (r == DenseSimplex::Result::Unbounded) {
      unbounded = true;
      break;
    }
    if (r != DenseSimplex::Result::Optimal) continue;
    const double value = lp.objective();
    if (std::isfinite(incumbent) && value >= incumbent - abs_gap()) {
      pruned_bound = std::min(pruned_bound, value);
      continue;
    }
    const std::vector<double> x = lp.structural_values();
    Branch branch;
    if (!branch_binary(model, x, lo, hi, options.integrality_tol, branch) &&
        !branch_sos2(model, x, lo, options.integrality_tol, branch)) {
      if (value < incumbent) {
        incumbent = value;
        sol.values = x;
      }
      continue;
    }
    auto basis = std::make_shared<const Basis>(lp.basis());
    for (auto* side : {&branch.first, &branch.second}) {
      Node child;
      child.changes = node.changes;
      child.changes.insert(child.changes.end(), side->begin(), side->end());
      child.bound = value;
      child.depth = node.depth + 1;
      child.id = next_id++;
      child.basis = basis;
      child.serial = lp.serial();
      heap.push_back(std::move(child));
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }

  sol.wall_seconds = elapsed();
  if (unbounded) {
    sol.status = SolveStatus::Unbounded;
    sol.objective = -sign * kInf;
    sol.best_bound = -sign * kInf;
    sol.values.clear();
    return sol;
  }
  if (limit_hit) {
    sol.status = SolveStatus::GapLimit;
    const double bound = std::min({open_bound, pruned_bound, incumbent});
    sol.best_bound = user(bound);
    sol.objective = std::isfinite(incumbent) ? user(incumbent) : sign * kInf;
  } else if (std::isfinite(incumbent)) {
    sol.status = SolveStatus::Optimal;
    sol.objective = user(incumbent);
    sol.best_bound = user(std::min(pruned_bound, incumbent));
  } else {
    sol.status = SolveStatus::Infeasible;
    sol.objective = sign * kInf;
    sol.best_bound = sign * kInf;
  }
  if (sol.has_incumbent()) {
    sol.gap = std::abs(sol.objective - sol.best_bound) / std::max(1.0, std::abs(sol.objective));
  }
  return sol;
}

}  // namespace pinnopt
