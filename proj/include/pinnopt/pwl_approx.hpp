#pragma once

// Continuous piecewise-linear functions in breakpoint/value form, and the
// 3- and 5-piece approximations of tanh used when a trained network is
// compiled into a mixed-integer program.

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace pinnopt {

/// Linear interpolation through (breakpoint, value) pairs. Outside the
/// breakpoint range the function clamps to the end values.
class PwlFunction {
 public:
  /// Throws ContractError unless breakpoints are finite and strictly
  /// increasing and both lists have the same length >= 2.
  PwlFunction(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;

  /// Slope of the segment containing x (segments are closed on the left);
  /// zero outside the domain.
  double slope(double x) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> values() const { return values_; }
  std::size_t segment_count() const { return breakpoints_.size() - 1; }
  double domain_lo() const { return breakpoints_.front(); }
  double domain_hi() const { return breakpoints_.back(); }
  double min_value() const;
  double max_value() const;

  friend bool operator==(const PwlFunction&, const PwlFunction&) = default;

 private:
  std::size_t segment_of(double x) const;

  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// The 3-piece (breakpoints -4, -1, 1, 4) or 5-piece (-4, -2, -1, 1, 2, 4)
/// approximation of tanh. Any other piece count throws ContractError.
PwlFunction tanh_pwl(int pieces);

/// Shared immutable instance of tanh_pwl(pieces).
const PwlFunction& tanh_pwl_ref(int pieces);

/// Max of |f(x) - reference(x)| over `samples` uniformly spaced points of
/// [lo, hi] (both ends included). Requires samples >= 1000.
double pwl_max_error(const PwlFunction& f, const std::function<double(double)>& reference, double lo, double hi,
                     std::size_t samples);

/// Two-column CSV, header "breakpoint,value".
void write_pwl_csv(const PwlFunction& f, std::ostream& out);
PwlFunction read_pwl_csv(std::istream& in);

}  // namespace pinnopt
