#include "pinnopt/milp_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "pinnopt/error.hpp"
#include "text_util.hpp"

namespace pinnopt {

namespace {

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  const unsigned char first = static_cast<unsigned char>(name.front());
  if (std::isdigit(first) || first == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '.' || c == '[' || c == ']' || c == '#';
  });
}

}  // namespace

void MilpModel::require_open() const {
  if (finalized_) throw ContractError("MilpModel: model is finalized");
}

VarId MilpModel::add_variable(const std::string& name, VarKind kind, double lower, double upper) {
  require_open();
  if (!valid_name(name)) throw ContractError("MilpModel: invalid variable name '" + name + "'");
  if (by_name_.count(name)) throw ContractError("MilpModel: duplicate variable name '" + name + "'");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw ContractError("MilpModel: variable '" + name + "' has empty or NaN bounds");
  }
  if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw ContractError("MilpModel: binary '" + name + "' must have bounds within [0, 1]");
  }
  const VarId id{variables_.size()};
  variables_.push_back({name, kind, lower, upper});
  by_name_.emplace(name, id.index);
  return id;
}

void MilpModel::check_terms(const std::vector<Term>& terms) const {
  for (const auto& t : terms) {
    if (t.var.index >= variables_.size()) {
      throw ContractError("MilpModel: term references unknown variable index " + std::to_string(t.var.index));
    }
    if (!std::isfinite(t.coef)) throw ContractError("MilpModel: non-finite coefficient");
  }
}

void MilpModel::add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
  require_open();
  check_terms(terms);
  if (!std::isfinite(rhs)) throw ContractError("MilpModel: non-finite right-hand side");
  if (name.empty()) name = "c" + std::to_string(constraints_.size() + 1);
  if (!valid_name(name)) throw ContractError("MilpModel: invalid constraint name '" + name + "'");
  constraints_.push_back({std::move(name), std::move(terms), relation, rhs});
}

void MilpModel::add_sos2(std::vector<VarId> members, std::string name) {
  require_open();
  if (members.size() < 2) throw ContractError("MilpModel: SOS2 group needs at least two members");
  for (auto m : members) {
    if (m.index >= variables_.size()) throw ContractError("MilpModel: SOS2 member references unknown variable");
    const auto& v = variables_[m.index];
    if (v.kind != VarKind::Continuous || v.lower < 0.0) {
      throw ContractError("MilpModel: SOS2 member '" + v.name + "' must be continuous and nonnegative");
    }
  }
  if (name.empty()) name = "s" + std::to_string(sos2_.size() + 1);
  sos2_.push_back({std::move(name), std::move(members)});
}

void MilpModel::set_objective(Sense sense, std::vector<Term> terms, double constant) {
  require_open();
  check_terms(terms);
  objective_ = {sense, std::move(terms), constant};
}

void MilpModel::add_comment(std::string line) {
  require_open();
  std::replace(line.begin(), line.end(), '\n', ' ');
  comments_.push_back(std::move(line));
}

void MilpModel::set_bounds(VarId var, double lower, double upper) {
  require_open();
  if (var.index >= variables_.size()) throw ContractError("MilpModel: unknown variable");
  auto& v = variables_[var.index];
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) throw ContractError("MilpModel: empty bounds for '" + v.name + "'");
  if (v.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw ContractError("MilpModel: binary '" + v.name + "' must have bounds within [0, 1]");
  }
  v.lower = lower;
  v.upper = upper;
}

void MilpModel::finalize() {
  for (const auto& v : variables_) {
    if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw ContractError("MilpModel: binary '" + v.name + "' has bounds outside [0, 1]");
    }
  }
  for (const auto& c : constraints_) check_terms(c.terms);
  check_terms(objective_.terms);
  for (const auto& g : sos2_) {
    for (auto m : g.members) {
      const auto& v = variables_.at(m.index);
      if (v.kind != VarKind::Continuous || v.lower < 0.0) {
        throw ContractError("MilpModel: SOS2 member '" + v.name + "' must be continuous and nonnegative");
      }
    }
  }
  finalized_ = true;
}

VarId MilpModel::find(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ContractError("MilpModel: no variable named '" + name + "'");
  return VarId{it->second};
}

std::size_t MilpModel::binary_count() const {
  return static_cast<std::size_t>(
      std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) { return v.kind == VarKind::Binary; }));
}

double MilpModel::objective_value(const std::vector<double>& values) const {
  double obj = objective_.constant;
  for (const auto& t : objective_.terms) obj += t.coef * values.at(t.var.index);
  return obj;
}

double MilpModel::max_violation(const std::vector<double>& values) const {
  if (values.size() != variables_.size()) throw ContractError("max_violation: assignment has the wrong length");
  double worst = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    worst = std::max({worst, variables_[j].lower - values[j], values[j] - variables_[j].upper});
  }
  for (const auto& c : constraints_) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * values[t.var.index];
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
      case Relation::Equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// LP format

namespace {

constexpr std::size_t kTermsPerLine = 8;

void write_terms(std::ostringstream& out, const std::vector<Term>& terms, const std::vector<Variable>& vars) {
  std::size_t written = 0;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    if (written > 0 && written % kTermsPerLine == 0) out << "\n   ";
    const double mag = std::abs(t.coef);
    if (t.coef < 0.0) {
      out << (written ? " - " : "- ");
    } else if (written) {
      out << " + ";
    }
    if (mag != 1.0) out << detail::format_double(mag) << ' ';
    out << vars[t.var.index].name;
    ++written;
  }
  if (written == 0) out << "0 " << vars.front().name;
}

const char* relation_text(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "=";
    case Relation::GreaterEqual: return ">=";
  }
  return "=";
}

}  // namespace

std::string write_lp(const MilpModel& model) {
  if (!model.finalized()) throw ContractError("write_lp: model must be finalized");
  if (model.variables().empty()) throw ContractError("write_lp: model has no variables");
  const auto& vars = model.variables();
  std::ostringstream out;
  for (const auto& c : model.comments()) out << "\\ " << c << '\n';

  const auto& obj = model.objective();
  out << (obj.sense == Sense::Minimize ? "Minimize" : "Maximize") << "\n obj: ";
  const bool has_terms = std::any_of(obj.terms.begin(), obj.terms.end(), [](const Term& t) { return t.coef != 0.0; });
  if (has_terms || obj.constant == 0.0) write_terms(out, obj.terms, vars);
  if (obj.constant != 0.0) {
    if (has_terms) {
      out << (obj.constant < 0.0 ? " - " : " + ") << detail::format_double(std::abs(obj.constant));
    } else {
      out << detail::format_double(obj.constant);
    }
  }
  out << "\nSubject To\n";
  for (const auto& c : model.constraints()) {
    out << ' ' << c.name << ": ";
    write_terms(out, c.terms, vars);
    out << ' ' << relation_text(c.relation) << ' ' << detail::format_double(c.rhs) << '\n';
  }

  out << "Bounds\n";
  for (const auto& v : vars) {
    const bool lo_inf = v.lower == -kInf;
    const bool hi_inf = v.upper == kInf;
    if (lo_inf && hi_inf) {
      out << ' ' << v.name << " free\n";
    } else if (hi_inf) {
      out << ' ' << v.name << " >= " << detail::format_double(v.lower) << '\n';
    } else if (lo_inf) {
      out << " -inf <= " << v.name << " <= " << detail::format_double(v.upper) << '\n';
    } else if (v.lower == v.upper) {
      out << ' ' << v.name << " = " << detail::format_double(v.lower) << '\n';
    } else {
      out << ' ' << detail::format_double(v.lower) << " <= " << v.name << " <= " << detail::format_double(v.upper)
          << '\n';
    }
  }

  if (model.binary_count() > 0) {
    out << "Binaries\n";
    std::size_t written = 0;
    for (const auto& v : vars) {
      if (v.kind != VarKind::Binary) continue;
      out << ' ' << v.name;
      if (++written % kTermsPerLine == 0) out << '\n';
    }
    if (written % kTermsPerLine != 0) out << '\n';
  }

  if (!model.sos2_groups().empty()) {
    out << "SOS\n";
    for (const auto& g : model.sos2_groups()) {
      out << ' ' << g.name << ": S2 ::";
      for (std::size_t k = 0; k < g.members.size(); ++k) out << ' ' << vars[g.members[k].index].name << ':' << k + 1;
      out << '\n';
    }
  }
  out << "End\n";
  return out.str();
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::GapLimit: return "gap_limit";
  }
  return "?";
}

}  // namespace pinnopt
