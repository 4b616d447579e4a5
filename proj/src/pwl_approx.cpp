#include "pinnopt/pwl_approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "pinnopt/error.hpp"
#include "text_util.hpp"

namespace pinnopt {

PwlFunction::PwlFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() != values_.size()) throw ContractError("PwlFunction: breakpoint/value length mismatch");
  if (breakpoints_.size() < 2) throw ContractError("PwlFunction: need at least two breakpoints");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!std::isfinite(breakpoints_[k]) || !std::isfinite(values_[k])) {
      throw ContractError("PwlFunction: non-finite breakpoint or value");
    }
    if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1])) {
      throw ContractError("PwlFunction: breakpoints must be strictly increasing");
    }
  }
}

std::size_t PwlFunction::segment_of(double x) const {
  // Index k of the segment [b_k, b_{k+1}) holding x, clamped to a valid segment.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  std::size_t k = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return std::min(k, segment_count() - 1);
}

double PwlFunction::eval(double x) const {
  if (x <= breakpoints_.front()) return values_.front();
  if (x >= breakpoints_.back()) return values_.back();
  const std::size_t k = segment_of(x);
  const double t = (x - breakpoints_[k]) / (breakpoints_[k + 1] - breakpoints_[k]);
  return values_[k] + t * (values_[k + 1] - values_[k]);
}

double PwlFunction::slope(double x) const {
  if (x < breakpoints_.front() || x >= breakpoints_.back()) return 0.0;
  const std::size_t k = segment_of(x);
  return (values_[k + 1] - values_[k]) / (breakpoints_[k + 1] - breakpoints_[k]);
}

double PwlFunction::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double PwlFunction::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

PwlFunction tanh_pwl(int pieces) {
  switch (pieces) {
    case 3:
      return PwlFunction({-4.0, -1.0, 1.0, 4.0}, {-1.0, -0.76, 0.76, 1.0});
    case 5:
      // Inner segments 0.20x + 0.56 and outer 0.018x + 0.93, joined
      // continuously at |x| = 2 with the inner-segment value.
      return PwlFunction({-4.0, -2.0, -1.0, 1.0, 2.0, 4.0}, {-1.002, -0.96, -0.76, 0.76, 0.96, 1.002});
    default:
      throw ContractError("tanh_pwl: piece count must be 3 or 5, got " + std::to_string(pieces));
  }
}

const PwlFunction& tanh_pwl_ref(int pieces) {
  static const PwlFunction three = tanh_pwl(3);
  static const PwlFunction five = tanh_pwl(5);
  if (pieces == 3) return three;
  if (pieces == 5) return five;
  throw ContractError("tanh_pwl: piece count must be 3 or 5, got " + std::to_string(pieces));
}

double pwl_max_error(const PwlFunction& f, const std::function<double(double)>& reference, double lo, double hi,
                     std::size_t samples) {
  if (samples < 1000) throw ContractError("pwl_max_error: at least 1000 samples required");
  if (!(hi > lo)) throw ContractError("pwl_max_error: empty interval");
  double worst = 0.0;
  const double step = (hi - lo) / static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    const double x = k + 1 == samples ? hi : lo + step * static_cast<double>(k);
    worst = std::max(worst, std::abs(f.eval(x) - reference(x)));
  }
  return worst;
}

void write_pwl_csv(const PwlFunction& f, std::ostream& out) {
  out << "breakpoint,value\n";
  for (std::size_t k = 0; k < f.breakpoints().size(); ++k) {
    out << detail::format_double(f.breakpoints()[k]) << ',' << detail::format_double(f.values()[k]) << '\n';
  }
}

PwlFunction read_pwl_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "breakpoint,value") {
    throw ParseError("pwl csv: expected header 'breakpoint,value'");
  }
  std::vector<double> b, v;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) throw ParseError("pwl csv: expected two columns in '" + line + "'");
    b.push_back(detail::parse_double(fields[0]));
    v.push_back(detail::parse_double(fields[1]));
  }
  return PwlFunction(std::move(b), std::move(v));
}

}  // namespace pinnopt
