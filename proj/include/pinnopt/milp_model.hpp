#pragma once

// Solver-agnostic mixed-integer linear program with SOS2 groups, plus the
// CPLEX LP-format exporter.

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace pinnopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Index of a variable inside one MilpModel.
struct VarId {
  std::size_t index = 0;
  friend bool operator==(VarId, VarId) = default;
  friend auto operator<=>(VarId, VarId) = default;
};

enum class VarKind { Continuous, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };

struct Term {
  VarId var;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct Sos2Group {
  std::string name;
  std::vector<VarId> members;  ///< in order; adjacency refers to this order
};

struct Objective {
  Sense sense = Sense::Minimize;
  std::vector<Term> terms;
  double constant = 0.0;
};

/// Built incrementally, then frozen by finalize(). Mutators throw
/// ContractError after finalize() or when an invariant would break.
class MilpModel {
 public:
  VarId add_variable(const std::string& name, VarKind kind, double lower, double upper);
  VarId add_continuous(const std::string& name, double lower, double upper) {
    return add_variable(name, VarKind::Continuous, lower, upper);
  }
  VarId add_binary(const std::string& name) { return add_variable(name, VarKind::Binary, 0.0, 1.0); }

  /// Empty name gets "c<k>" with k the 1-based constraint position.
  void add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});
  /// Members must be continuous with a nonnegative lower bound. Empty name
  /// gets "s<k>".
  void add_sos2(std::vector<VarId> members, std::string name = {});
  void set_objective(Sense sense, std::vector<Term> terms, double constant = 0.0);
  /// Free-form metadata written as LP comment lines.
  void add_comment(std::string line);

  /// Tightens a variable's bounds in place (allowed only before finalize).
  void set_bounds(VarId var, double lower, double upper);

  /// Re-checks every invariant and freezes the model.
  void finalize();
  bool finalized() const { return finalized_; }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Sos2Group>& sos2_groups() const { return sos2_; }
  const Objective& objective() const { return objective_; }
  const std::vector<std::string>& comments() const { return comments_; }
  const Variable& variable(VarId id) const { return variables_.at(id.index); }
  VarId find(const std::string& name) const;

  std::size_t variable_count() const { return variables_.size(); }
  std::size_t binary_count() const;

  /// Objective value (including the constant) of an assignment.
  double objective_value(const std::vector<double>& values) const;
  /// Largest bound or row violation of an assignment (0 when feasible).
  double max_violation(const std::vector<double>& values) const;

 private:
  void require_open() const;
  void check_terms(const std::vector<Term>& terms) const;

  std::vector<Variable> variables_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::vector<Constraint> constraints_;
  std::vector<Sos2Group> sos2_;
  Objective objective_;
  std::vector<std::string> comments_;
  bool finalized_ = false;
};

/// CPLEX LP-format text. Coefficients use 17 significant digits, variables
/// keep insertion order, SOS2 weights are 1-based positions. Requires a
/// finalized model.
std::string write_lp(const MilpModel& model);

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit };

std::string to_string(SolveStatus status);

struct MilpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = kInf;       ///< incumbent value in the model's sense
  double best_bound = -kInf;     ///< proven bound in the model's sense
  std::vector<double> values;    ///< incumbent assignment (empty without one)
  double gap = kInf;             ///< |objective - best_bound| / max(1, |objective|)
  std::size_t nodes = 0;
  double wall_seconds = 0.0;

  bool has_incumbent() const { return !values.empty(); }
};

}  // namespace pinnopt
