#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace revdyn {

/// Thrown when a configuration or parameter set is outside the domain of a
/// construction (as opposed to a programming error).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool approx_equal_rel(double x, double y, double rel = 1e-12) {
  const double scale = std::max({1.0, std::abs(x), std::abs(y)});
  return std::abs(x - y) <= rel * scale;
}

/// Symmetric 2x2 anti-coordination game
///
///          A   B
///     A    a   b
///     B    c   d
///
/// with a < c and d < b, so that each strategy pays less the more popular it is.
class AntiCoordinationGame {
 public:
  AntiCoordinationGame(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d)))
      throw InvalidArgument("not anti-coordination: payoffs must be finite");
    if (!(a < c)) {
      std::ostringstream os;
      os << "not anti-coordination: requires a < c, got a=" << a << ", c=" << c;
      throw InvalidArgument(os.str());
    }
    if (!(d < b)) {
      std::ostringstream os;
      os << "not anti-coordination: requires d < b, got d=" << d << ", b=" << b;
      throw InvalidArgument(os.str());
    }
    scale_ = c - a + b - d;
    p_ = (b - d) / scale_;
  }

  /// Game with a = d = 0, the given payoff gap b - d and equilibrium p.
  static AntiCoordinationGame from_equilibrium(double p, double b_minus_d = 1.0) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("equilibrium must lie in (0,1)");
    if (!(b_minus_d > 0.0)) throw InvalidArgument("b - d must be positive");
    return {0.0, b_minus_d, b_minus_d * (1.0 - p) / p, 0.0};
  }

  [[nodiscard]] double a() const noexcept { return a_; }
  [[nodiscard]] double b() const noexcept { return b_; }
  [[nodiscard]] double c() const noexcept { return c_; }
  [[nodiscard]] double d() const noexcept { return d_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double b_minus_d() const noexcept { return b_ - d_; }
  [[nodiscard]] double c_minus_a() const noexcept { return c_ - a_; }
  /// (b - d)/p = c - a + b - d; slope of u_B - u_A in x.
  [[nodiscard]] double gap_slope() const noexcept { return scale_; }

  [[nodiscard]] double payoff_A(double x) const noexcept { return (a_ - b_) * x + b_; }
  [[nodiscard]] double payoff_B(double x) const noexcept { return (c_ - d_) * x + d_; }
  [[nodiscard]] double mean_payoff(double x) const noexcept {
    return x * payoff_A(x) + (1.0 - x) * payoff_B(x);
  }

  /// The same game seen with the strategy labels swapped; its equilibrium is 1 - p.
  [[nodiscard]] AntiCoordinationGame reflected() const { return {d_, c_, b_, a_}; }

 private:
  double a_, b_, c_, d_;
  double scale_;
  double p_;
};

struct Equilibrium {
  double p;
};

inline double payoff_A(const AntiCoordinationGame& g, double x) { return g.payoff_A(x); }
inline double payoff_B(const AntiCoordinationGame& g, double x) { return g.payoff_B(x); }
inline double mean_payoff(const AntiCoordinationGame& g, double x) { return g.mean_payoff(x); }
inline Equilibrium nash_equilibrium(const AntiCoordinationGame& g) { return {g.p()}; }

}  // namespace revdyn
