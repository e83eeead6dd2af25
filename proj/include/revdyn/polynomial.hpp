#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace revdyn {

/// Dense univariate polynomial with coefficients in ascending order,
/// c[0] + c[1] x + c[2] x^2 + ...
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Polynomial constant(double v) { return Polynomial{v}; }
  static Polynomial linear(double intercept, double slope) { return Polynomial{intercept, slope}; }
  /// slope * (x - root)
  static Polynomial affine_root(double slope, double root) { return Polynomial{-slope * root, slope}; }

  [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return c_; }
  [[nodiscard]] bool is_zero() const noexcept { return c_.empty(); }
  /// Degree of the zero polynomial is reported as 0.
  [[nodiscard]] std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
  [[nodiscard]] double coeff(std::size_t k) const noexcept { return k < c_.size() ? c_[k] : 0.0; }

  [[nodiscard]] double operator()(double x) const noexcept {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  [[nodiscard]] Polynomial derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
  }

  /// q(x) = p(1 - x), expanded exactly via binomial coefficients.
  [[nodiscard]] Polynomial reflected() const {
    std::vector<double> out(c_.size(), 0.0);
    for (std::size_t k = 0; k < c_.size(); ++k) {
      // (1 - x)^k = sum_j C(k,j) (-x)^j
      double binom = 1.0;
      for (std::size_t j = 0; j <= k; ++j) {
        out[j] += c_[k] * binom * ((j % 2 == 0) ? 1.0 : -1.0);
        binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
      }
    }
    return Polynomial(std::move(out));
  }

  [[nodiscard]] double max_abs_coeff() const noexcept {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) { return *this += (-1.0) * o; }
  Polynomial& operator*=(double s) {
    for (double& v : c_) v *= s;
    trim();
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  /// Euclidean division; returns {quotient, remainder}.
  friend std::pair<Polynomial, Polynomial> divide(const Polynomial& num, const Polynomial& den) {
    if (den.is_zero()) throw std::domain_error("polynomial division by zero");
    std::vector<double> rem = num.c_;
    const std::size_t dd = den.degree();
    if (rem.size() <= dd) return {Polynomial{}, num};
    std::vector<double> quot(rem.size() - dd, 0.0);
    const double lead = den.c_.back();
    for (std::size_t k = rem.size(); k-- > dd;) {
      const double q = rem[k] / lead;
      quot[k - dd] = q;
      for (std::size_t j = 0; j <= dd; ++j) rem[k - dd + j] -= q * den.c_[j];
      rem[k] = 0.0;
    }
    rem.resize(dd);
    return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }

  std::vector<double> c_;
};

/// Real roots of a polynomial of degree <= 2 inside [lo, hi], sorted.
/// Higher degrees are handled by sign-change scanning plus bisection.
inline std::vector<double> real_roots_in(const Polynomial& poly, double lo, double hi) {
  std::vector<double> roots;
  const auto keep = [&](double r) {
    if (std::isfinite(r) && r >= lo && r <= hi) roots.push_back(r);
  };
  const std::size_t deg = poly.degree();
  if (poly.is_zero() || deg == 0) return roots;
  if (deg == 1) {
    keep(-poly.coeff(0) / poly.coeff(1));
  } else if (deg == 2) {
    const double a = poly.coeff(2), b = poly.coeff(1), c = poly.coeff(0);
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return roots;
    const double sq = std::sqrt(disc);
    // numerically stable pair
    const double q = -0.5 * (b + std::copysign(sq, b));
    if (q != 0.0) {
      keep(q / a);
      keep(c / q);
    } else {
      keep(0.0);
    }
  } else {
    constexpr int kCells = 4096;
    double xa = lo, fa = poly(lo);
    if (fa == 0.0) roots.push_back(lo);
    for (int i = 1; i <= kCells; ++i) {
      const double xb = lo + (hi - lo) * i / kCells;
      const double fb = poly(xb);
      if (fb == 0.0) {
        roots.push_back(xb);
      } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
        double a = xa, b = xb, ga = fa;
        for (int it = 0; it < 200 && b - a > 0.0; ++it) {
          const double m = 0.5 * (a + b);
          if (m <= a || m >= b) break;
          const double gm = poly(m);
          if ((gm < 0.0) == (ga < 0.0)) {
            a = m;
            ga = gm;
          } else {
            b = m;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
      xa = xb;
      fa = fb;
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

/// Ratio of two polynomials; the denominator must not vanish on the piece
/// where the rational is used.
struct Rational {
  Polynomial num;
  Polynomial den = Polynomial{1.0};

  Rational() = default;
  Rational(Polynomial n) : num(std::move(n)) {}  // NOLINT(google-explicit-constructor)
  Rational(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {}

  [[nodiscard]] double operator()(double x) const { return num(x) / den(x); }
  [[nodiscard]] bool is_zero() const noexcept { return num.is_zero(); }
  [[nodiscard]] Rational reflected() const { return {num.reflected(), den.reflected()}; }
  [[nodiscard]] bool is_polynomial() const noexcept { return den.degree() == 0; }
};

}  // namespace revdyn
