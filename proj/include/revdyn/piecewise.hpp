#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "revdyn/polynomial.hpp"

namespace revdyn {

/// A function on [0,1] given by one closed-form piece per cell of a
/// breakpoint list 0 = b_0 < b_1 < ... < b_k = 1.
///
/// Cells are left-closed and right-open, [b_i, b_{i+1}), except the last
/// one, which also owns x = 1. Arguments outside [0,1] are evaluated with
/// the nearest end piece.
template <class Piece>
class Piecewise {
 public:
  Piecewise() : breaks_{0.0, 1.0}, pieces_(1) {}

  Piecewise(std::vector<double> breakpoints, std::vector<Piece> pieces)
      : breaks_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    if (pieces_.empty() || breaks_.size() != pieces_.size() + 1)
      throw std::invalid_argument("piecewise: need exactly one more breakpoint than pieces");
    if (breaks_.front() != 0.0 || breaks_.back() != 1.0)
      throw std::invalid_argument("piecewise: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1]))
        throw std::invalid_argument("piecewise: breakpoints must be strictly increasing");
  }

  static Piecewise single(Piece piece) { return Piecewise({0.0, 1.0}, {std::move(piece)}); }

  [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  [[nodiscard]] const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  [[nodiscard]] std::size_t size() const noexcept { return pieces_.size(); }
  [[nodiscard]] double lower(std::size_t i) const { return breaks_[i]; }
  [[nodiscard]] double upper(std::size_t i) const { return breaks_[i + 1]; }

  /// Index of the cell that owns x under the left-closed convention.
  [[nodiscard]] std::size_t locate(double x) const noexcept {
    const auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
    return static_cast<std::size_t>(it - (breaks_.begin() + 1));
  }

  /// Index of the cell whose closure governs the left limit at x.
  [[nodiscard]] std::size_t locate_left(double x) const noexcept {
    const auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
    return static_cast<std::size_t>(it - (breaks_.begin() + 1));
  }

  [[nodiscard]] double operator()(double x) const { return pieces_[locate(x)](x); }
  [[nodiscard]] double left_value(double x) const { return pieces_[locate_left(x)](x); }
  [[nodiscard]] double right_value(double x) const { return pieces_[locate(x)](x); }

  /// Largest |left limit - right limit| over interior breakpoints.
  [[nodiscard]] double max_jump() const {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < breaks_.size(); ++i) {
      const double b = breaks_[i];
      worst = std::max(worst, std::abs(pieces_[i - 1](b) - pieces_[i](b)));
    }
    return worst;
  }

  /// g(x) = piece(1 - x), cell order reversed.
  [[nodiscard]] Piecewise reflected() const {
    std::vector<double> b(breaks_.size());
    std::vector<Piece> p;
    p.reserve(pieces_.size());
    for (std::size_t i = 0; i < breaks_.size(); ++i) b[i] = 1.0 - breaks_[breaks_.size() - 1 - i];
    b.front() = 0.0;
    b.back() = 1.0;
    for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) p.push_back(it->reflected());
    return Piecewise(std::move(b), std::move(p));
  }

  template <class F>
  [[nodiscard]] auto transform(F&& f) const {
    using Out = std::decay_t<decltype(f(pieces_.front()))>;
    std::vector<Out> out;
    out.reserve(pieces_.size());
    for (const auto& pc : pieces_) out.push_back(f(pc));
    return Piecewise<Out>(breaks_, std::move(out));
  }

  /// Re-express on a finer breakpoint list; every cell of `finer` must lie
  /// inside one cell of this function.
  [[nodiscard]] Piecewise refined(const std::vector<double>& finer) const {
    std::vector<Piece> out;
    out.reserve(finer.size() - 1);
    for (std::size_t i = 0; i + 1 < finer.size(); ++i)
      out.push_back(pieces_[locate(0.5 * (finer[i] + finer[i + 1]))]);
    return Piecewise(finer, std::move(out));
  }

 private:
  std::vector<double> breaks_;
  std::vector<Piece> pieces_;
};

using PiecewiseRational = Piecewise<Rational>;
using PiecewisePolynomial = Piecewise<Polynomial>;

/// Sorted union of breakpoint lists; points closer than `tol` are merged.
inline std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b,
                                             double tol = 1e-14) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double v : all) {
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  }
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

/// Builds breakpoints {0, interior..., 1} from a possibly unsorted list of
/// interior points, dropping those that fall outside (0,1).
inline std::vector<double> breakpoints_from(std::vector<double> interior) {
  std::vector<double> b{0.0};
  std::sort(interior.begin(), interior.end());
  for (double v : interior)
    if (v > 0.0 && v < 1.0 && v > b.back()) b.push_back(v);
  b.push_back(1.0);
  return b;
}

inline PiecewisePolynomial derivative(const PiecewisePolynomial& f) {
  return f.transform([](const Polynomial& p) { return p.derivative(); });
}

inline std::size_t max_degree(const PiecewisePolynomial& f) {
  std::size_t d = 0;
  for (const auto& p : f.pieces()) d = std::max(d, p.degree());
  return d;
}

}  // namespace revdyn
