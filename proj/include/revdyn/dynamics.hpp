#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "revdyn/game.hpp"
#include "revdyn/piecewise.hpp"
#include "revdyn/polynomial.hpp"
#include "revdyn/protocols.hpp"

namespace revdyn {

/// Raised when iteration is requested on a map that does not keep [0,1]
/// invariant, or when an orbit leaves [0,1].
class NotIntervalMap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Excursions beyond [0,1] up to this size are attributed to round-off.
inline constexpr double kRangeTolerance = 1e-12;

enum class CriticalType { LocalMax, LocalMin };

inline const char* to_string(CriticalType t) { return t == CriticalType::LocalMax ? "max" : "min"; }

struct CriticalPoint {
  double x;
  CriticalType type;
};

struct RangeReport {
  bool ok = true;
  double min_value = 0.0;
  double max_value = 1.0;
  /// max(0, -min f, max f - 1)
  double max_excursion = 0.0;
  double worst_x = 0.0;
  std::size_t points_checked = 0;
};

/// Interval map f induced by a revision protocol and step size, or given
/// directly as an exact piecewise-polynomial (typically piecewise-linear)
/// function.
///
/// A closed-form map evaluates
///   f(x) = x + delta [(1 - x) rho_BA(x) - x rho_AB(x)]
/// from the protocol's rates; when the rates allow it an exact per-piece
/// polynomial form is attached as well. A mirrored map evaluates
/// 1 - f(1 - x) of its underlying closed form.
class UpdateMap {
 public:
  /// Exact piecewise-polynomial map with no protocol behind it.
  static UpdateMap from_piecewise(PiecewisePolynomial f, std::optional<ProtocolKind> kind = std::nullopt,
                                  std::string label = "piecewise") {
    const double jump = f.max_jump();
    if (jump > 1e-12) {
      std::ostringstream os;
      os << "piecewise map is discontinuous (jump " << jump << ")";
      throw InvalidArgument(os.str());
    }
    UpdateMap m;
    m.exact_ = std::move(f);
    m.kind_ = kind;
    m.label_ = std::move(label);
    return m;
  }

  static UpdateMap from_protocol(RevisionProtocol proto, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive and finite");
    UpdateMap m;
    m.kind_ = proto.kind();
    m.label_ = to_string(proto.family());
    m.protocol_ = std::move(proto);
    m.delta_ = delta;
    return m;
  }

  [[nodiscard]] double operator()(double x) const {
    if (protocol_) {
      if (mirrored_) return 1.0 - closed_form(1.0 - x);
      return closed_form(x);
    }
    return (*exact_)(x);
  }

  /// Left limit of the exact form at a breakpoint, value elsewhere.
  [[nodiscard]] double left_value(double x) const { return exact_ ? exact_->left_value(x) : (*this)(x); }

  [[nodiscard]] bool has_protocol() const noexcept { return protocol_.has_value(); }
  [[nodiscard]] const RevisionProtocol& protocol() const { return protocol_.value(); }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] bool mirrored() const noexcept { return mirrored_; }
  [[nodiscard]] std::optional<ProtocolKind> kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }

  /// Equilibrium of the game behind the map (taking mirroring into account), if any.
  [[nodiscard]] std::optional<double> equilibrium() const {
    if (!protocol_) return std::nullopt;
    return mirrored_ ? 1.0 - protocol_->p() : protocol_->p();
  }

  [[nodiscard]] bool has_exact() const noexcept { return exact_.has_value(); }
  [[nodiscard]] const PiecewisePolynomial& exact() const { return exact_.value(); }
  [[nodiscard]] bool is_piecewise_linear() const { return exact_ && max_degree(*exact_) <= 1; }

  [[nodiscard]] const std::optional<RangeReport>& range_report() const noexcept { return range_; }
  /// True once a range check has failed.
  [[nodiscard]] bool flagged() const noexcept { return range_ && !range_->ok; }

  void record_range(RangeReport r) { range_ = r; }
  void attach_exact(PiecewisePolynomial f) { exact_ = std::move(f); }

  [[nodiscard]] UpdateMap conjugated() const {
    UpdateMap m = *this;
    if (protocol_) m.mirrored_ = !mirrored_;
    if (exact_) {
      const Polynomial one{1.0};
      m.exact_ = exact_->reflected().transform([&](const Polynomial& q) { return one - q; });
    }
    if (range_) {
      RangeReport r = *range_;
      r.min_value = 1.0 - range_->max_value;
      r.max_value = 1.0 - range_->min_value;
      r.worst_x = 1.0 - range_->worst_x;
      m.range_ = r;
    }
    m.label_ = label_ + "~";
    return m;
  }

 private:
  UpdateMap() = default;

  [[nodiscard]] double closed_form(double x) const {
    const auto& pr = *protocol_;
    return x + delta_ * ((1.0 - x) * pr.rho_BA(x) - x * pr.rho_AB(x));
  }

  std::optional<RevisionProtocol> protocol_;
  double delta_ = 1.0;
  bool mirrored_ = false;
  std::optional<PiecewisePolynomial> exact_;
  std::optional<ProtocolKind> kind_;
  std::string label_;
  std::optional<RangeReport> range_;
};

struct Orbit {
  double x0 = 0.0;
  double delta = 0.0;
  std::vector<double> samples;
};

namespace detail {

inline bool same_poly(const Polynomial& a, const Polynomial& b, double tol = 1e-13) {
  const std::size_t n = std::max(a.coeffs().size(), b.coeffs().size());
  for (std::size_t k = 0; k < n; ++k) {
    const double u = a.coeff(k), v = b.coeff(k);
    if (std::abs(u - v) > tol * std::max({1.0, std::abs(u), std::abs(v)})) return false;
  }
  return true;
}

/// Joins neighbouring cells carrying the same polynomial.
inline PiecewisePolynomial merge_equal_pieces(const PiecewisePolynomial& f) {
  std::vector<double> b{0.0};
  std::vector<Polynomial> pcs{f.pieces().front()};
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (same_poly(f.pieces()[i], pcs.back())) continue;
    b.push_back(f.lower(i));
    pcs.push_back(f.pieces()[i]);
  }
  b.push_back(1.0);
  return {std::move(b), std::move(pcs)};
}

/// Exact per-piece polynomial form of a protocol's map, if every piece of
/// the combined rational expression divides out to a polynomial.
inline std::optional<PiecewisePolynomial> exact_form(const RevisionProtocol& pr, double delta) {
  const bool imit = pr.kind() == ProtocolKind::Imitative;
  const Polynomial pre_ba = imit ? Polynomial{0.0, 1.0, -1.0} : Polynomial{1.0, -1.0};
  const Polynomial pre_ab = imit ? Polynomial{0.0, 1.0, -1.0} : Polynomial{0.0, 1.0};
  const auto bps = pr.breakpoints();
  const auto ab = pr.stored_ab().refined(bps);
  const auto ba = pr.stored_ba().refined(bps);
  std::vector<Polynomial> pieces;
  pieces.reserve(ab.size());
  const Polynomial x{0.0, 1.0};
  for (std::size_t i = 0; i < ab.size(); ++i) {
    const Rational& rab = ab.pieces()[i];
    const Rational& rba = ba.pieces()[i];
    Polynomial num, den;
    if (rab.is_zero()) {
      num = pre_ba * rba.num;
      den = rba.den;
    } else if (rba.is_zero()) {
      num = (-1.0) * (pre_ab * rab.num);
      den = rab.den;
    } else if (rab.den == rba.den) {
      num = pre_ba * rba.num - pre_ab * rab.num;
      den = rab.den;
    } else {
      num = pre_ba * rba.num * rab.den - pre_ab * rab.num * rba.den;
      den = rab.den * rba.den;
    }
    auto [q, r] = divide(num, den);
    if (r.max_abs_coeff() > 1e-9 * std::max(1.0, num.max_abs_coeff())) return std::nullopt;
    pieces.push_back(x + delta * q);
  }
  PiecewisePolynomial f(bps, std::move(pieces));
  // cross-check against direct evaluation of the rates
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int k = 1; k <= 5; ++k) {
      const double t = f.lower(i) + (f.upper(i) - f.lower(i)) * k / 6.0;
      const double direct = t + delta * ((1.0 - t) * pr.rho_BA(t) - t * pr.rho_AB(t));
      if (std::abs(direct - f(t)) > 1e-11 * std::max(1.0, std::abs(direct))) return std::nullopt;
    }
  }
  return merge_equal_pieces(f);
}

inline std::vector<double> unit_grid(std::size_t n) {
  std::vector<double> g(n);
  const double m = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / m;
  return g;
}

}  // namespace detail

/// Critical points (interior local extrema) of a map. Exact forms are
/// analysed piece by piece; otherwise a dense grid is scanned and each
/// extremum polished by golden-section search.
inline std::vector<CriticalPoint> critical_points(const UpdateMap& f, std::size_t grid = 20001) {
  std::vector<CriticalPoint> out;
  if (f.has_exact()) {
    const auto& ex = f.exact();
    const auto df = derivative(ex);
    // split [0,1] into sub-intervals on which f is monotone
    std::vector<double> cuts{0.0};
    for (std::size_t i = 0; i < ex.size(); ++i) {
      for (double r : real_roots_in(df.pieces()[i], ex.lower(i), ex.upper(i)))
        if (r > cuts.back() && r < ex.upper(i)) cuts.push_back(r);
      if (ex.upper(i) > cuts.back()) cuts.push_back(ex.upper(i));
    }
    double scale = 0.0;
    for (const auto& q : df.pieces()) scale = std::max(scale, q.max_abs_coeff());
    std::vector<std::pair<double, int>> signs;  // (left end, sign)
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const double mid = 0.5 * (cuts[j] + cuts[j + 1]);
      const double d = df.pieces()[df.locate(mid)](mid);
      const int s = std::abs(d) <= 1e-12 * std::max(1.0, scale) ? 0 : (d > 0 ? 1 : -1);
      if (s == 0) continue;
      if (!signs.empty() && signs.back().second == s) continue;
      signs.emplace_back(cuts[j], s);
    }
    for (std::size_t j = 1; j < signs.size(); ++j) {
      // the extremum sits where the previous monotone stretch ends
      double loc = signs[j].first;
      // if a flat stretch separates the two, report its left end
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] > loc) break;
        if (cuts[k] >= signs[j - 1].first) {
          const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
          const double d = df.pieces()[df.locate(mid)](mid);
          if (std::abs(d) <= 1e-12 * std::max(1.0, scale)) {
            loc = cuts[k];
            break;
          }
        }
      }
      out.push_back({loc, signs[j - 1].second > 0 ? CriticalType::LocalMax : CriticalType::LocalMin});
    }
    return out;
  }
  const auto xs = detail::unit_grid(std::max<std::size_t>(grid, 3));
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  int prev = 0;
  std::size_t prev_i = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double d = ys[i + 1] - ys[i];
    const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) {
      // extremum lies in [x_{prev_i}, x_{i+1}]; polish by golden section
      double a = xs[prev_i], b = xs[i + 1];
      const bool is_max = prev > 0;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double c = b - g * (b - a), e = a + g * (b - a);
        const double fc = is_max ? f(c) : -f(c);
        const double fe = is_max ? f(e) : -f(e);
        if (fc > fe)
          b = e;
        else
          a = c;
      }
      out.push_back({0.5 * (a + b), is_max ? CriticalType::LocalMax : CriticalType::LocalMin});
    }
    if (s != prev) prev = s;
    prev_i = i;
  }
  return out;
}

namespace detail {

inline RangeReport scan_range(const UpdateMap& f, std::size_t grid_size, double tol) {
  if (grid_size < 2) throw InvalidArgument("grid_size must be at least 2");
  std::vector<double> pts = unit_grid(grid_size);
  for (const auto& c : critical_points(f)) pts.push_back(c.x);
  if (f.has_exact())
    for (double b : f.exact().breakpoints()) pts.push_back(b);
  if (f.has_protocol())
    for (double b : f.protocol().breakpoints()) pts.push_back(f.mirrored() ? 1.0 - b : b);
  RangeReport r;
  r.min_value = INFINITY;
  r.max_value = -INFINITY;
  for (double x : pts) {
    for (double y : {f(x), f.left_value(x)}) {
      if (!std::isfinite(y)) {
        r.max_excursion = INFINITY;
        r.worst_x = x;
        continue;
      }
      if (y < r.min_value) r.min_value = y;
      if (y > r.max_value) r.max_value = y;
      const double exc = std::max({0.0, -y, y - 1.0});
      if (exc > r.max_excursion) {
        r.max_excursion = exc;
        r.worst_x = x;
      }
    }
  }
  r.points_checked = pts.size();
  r.ok = r.max_excursion <= tol;
  return r;
}

}  // namespace detail

/// Checks that f maps [0,1] into itself on a uniform grid plus all critical
/// points and breakpoints. The const overload only reports; the mutable
/// overload also records the result on the map.
inline RangeReport range_check(const UpdateMap& f, std::size_t grid_size, double tol = kRangeTolerance) {
  return detail::scan_range(f, grid_size, tol);
}

inline RangeReport range_check(UpdateMap& f, std::size_t grid_size, double tol = kRangeTolerance) {
  RangeReport r = detail::scan_range(f, grid_size, tol);
  f.record_range(r);
  return r;
}

inline constexpr std::size_t kDefaultRangeGrid = 2001;

/// Update map of a protocol with step size delta. The exact piecewise form
/// is attached when available and the map is range-checked; a failing map
/// is returned flagged and will refuse iteration.
inline UpdateMap build_update_map(const RevisionProtocol& proto, double delta,
                                  std::size_t range_grid = kDefaultRangeGrid) {
  UpdateMap m = UpdateMap::from_protocol(proto, delta);
  if (auto ex = detail::exact_form(proto, delta)) m.attach_exact(std::move(*ex));
  range_check(m, range_grid);
  return m;
}

/// Continuous piecewise-linear map interpolating the given nodes
/// (x_0 = 0 < x_1 < ... < x_k = 1, values y_i).
inline UpdateMap piecewise_linear_map(const std::vector<double>& xs, const std::vector<double>& ys,
                                      std::optional<ProtocolKind> kind = std::nullopt,
                                      std::string label = "piecewise_linear") {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("need at least two matching nodes");
  std::vector<Polynomial> pcs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    pcs.push_back(Polynomial{ys[i] - s * xs[i], s});
  }
  UpdateMap m = UpdateMap::from_piecewise(PiecewisePolynomial(xs, std::move(pcs)), kind, std::move(label));
  range_check(m, kDefaultRangeGrid);
  return m;
}

/// Piecewise-linear map from per-segment slopes and intercepts.
inline UpdateMap piecewise_linear_map_from_segments(const std::vector<double>& breakpoints,
                                                    const std::vector<double>& slopes,
                                                    const std::vector<double>& intercepts,
                                                    std::optional<ProtocolKind> kind = std::nullopt) {
  if (slopes.size() != intercepts.size() || breakpoints.size() != slopes.size() + 1)
    throw InvalidArgument("need one slope and one intercept per segment");
  std::vector<Polynomial> pcs;
  for (std::size_t i = 0; i < slopes.size(); ++i) pcs.push_back(Polynomial{intercepts[i], slopes[i]});
  UpdateMap m = UpdateMap::from_piecewise(PiecewisePolynomial(breakpoints, std::move(pcs)), kind);
  range_check(m, kDefaultRangeGrid);
  return m;
}

inline UpdateMap identity_map() { return piecewise_linear_map({0.0, 1.0}, {0.0, 1.0}, std::nullopt, "identity"); }

/// Three-lap map that decreases, increases, then decreases, with
/// f(c_l) = 0:
///   beta1 (x - c_l)                          on [0, c_l)
///   beta2 (x - c_l)                          on [c_l, c_r)
///   beta3 (x - c_r) + beta2 (c_r - c_l)      on [c_r, 1]
inline UpdateMap pl_bimodal_innovative(double cl, double cr, double beta1, double beta2, double beta3) {
  if (!(cl > 0.0 && cl < cr && cr < 1.0)) throw InvalidArgument("need 0 < c_l < c_r < 1");
  const auto fail = [](const char* name, double v, const std::string& bound) {
    std::ostringstream os;
    os << name << "=" << v << " violates " << bound;
    throw InvalidArgument(os.str());
  };
  if (!detail::ge_rel(beta1, -1.0 / cl)) fail("beta1", beta1, "beta1 >= -1/c_l");
  if (!(beta1 < -cr / cl)) fail("beta1", beta1, "beta1 < -c_r/c_l");
  if (!(beta2 > cl / (cr - cl))) fail("beta2", beta2, "beta2 > c_l/(c_r-c_l)");
  if (!detail::le_rel(beta2, 1.0 / (cr - cl))) fail("beta2", beta2, "beta2 <= 1/(c_r-c_l)");
  if (!detail::ge_rel(beta3, -cl / (1.0 - cr))) fail("beta3", beta3, "beta3 >= -c_l/(1-c_r)");
  if (!(beta3 < 0.0)) fail("beta3", beta3, "beta3 < 0");
  std::vector<Polynomial> pcs{Polynomial::affine_root(beta1, cl), Polynomial::affine_root(beta2, cl),
                              Polynomial::affine_root(beta3, cr) + Polynomial{beta2 * (cr - cl)}};
  UpdateMap m = UpdateMap::from_piecewise(PiecewisePolynomial({0.0, cl, cr, 1.0}, std::move(pcs)),
                                          ProtocolKind::Innovative, "pl_bimodal_innovative");
  range_check(m, kDefaultRangeGrid);
  return m;
}

/// Three-lap map that increases, decreases, then increases, with f(0) = 0,
/// f(c_l) = 1 and f(1) = 1:
///   x / c_l                                                   on [0, c_l)
///   1 - beta2 (x - c_l)                                       on [c_l, c_r)
///   1 - beta2 (c_r - c_l) (1 - (x - c_r)/(1 - c_r))           on [c_r, 1]
inline UpdateMap pl_bimodal_imitative(double cl, double cr, double beta2) {
  if (!(cl > 0.0 && cl < cr && cr < 1.0)) throw InvalidArgument("need 0 < c_l < c_r < 1");
  if (!(beta2 > (1.0 - cl) / (cr - cl)) || !detail::le_rel(beta2, 1.0 / (cr - cl))) {
    std::ostringstream os;
    os << "beta2=" << beta2 << " violates (1-c_l)/(c_r-c_l) < beta2 <= 1/(c_r-c_l)";
    throw InvalidArgument(os.str());
  }
  const double drop = beta2 * (cr - cl);
  std::vector<Polynomial> pcs{Polynomial{0.0, 1.0 / cl}, Polynomial{1.0 + beta2 * cl, -beta2},
                              Polynomial{1.0 - drop, 0.0} + Polynomial::affine_root(drop / (1.0 - cr), cr)};
  UpdateMap m = UpdateMap::from_piecewise(PiecewisePolynomial({0.0, cl, cr, 1.0}, std::move(pcs)),
                                          ProtocolKind::Imitative, "pl_bimodal_imitative");
  range_check(m, kDefaultRangeGrid);
  return m;
}

/// g(x) = 1 - f(1 - x); exact at segment level for piecewise maps.
inline UpdateMap conjugate_map(const UpdateMap& f) { return f.conjugated(); }

/// Orbit x0, f(x0), ..., f^n(x0). States are never clamped: leaving [0,1]
/// by more than round-off aborts with a diagnostic.
inline Orbit iterate(const UpdateMap& f, double x0, std::size_t n) {
  if (f.flagged()) {
    std::ostringstream os;
    os << "not an interval self-map (excursion " << f.range_report()->max_excursion << " near x="
       << f.range_report()->worst_x << "); refusing to iterate";
    throw NotIntervalMap(os.str());
  }
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidArgument("x0 must lie in [0,1]");
  Orbit o;
  o.x0 = x0;
  o.delta = f.delta();
  o.samples.reserve(n + 1);
  o.samples.push_back(x0);
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    x = f(x);
    if (!(x >= -kRangeTolerance && x <= 1.0 + kRangeTolerance)) {
      std::ostringstream os;
      os << "orbit left [0,1] at step " << k + 1 << " (x=" << x << ")";
      throw NotIntervalMap(os.str());
    }
    o.samples.push_back(x);
  }
  return o;
}

/// f^n(x) without bookkeeping.
inline double iterate_n(const UpdateMap& f, double x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x = f(x);
  return x;
}

}  // namespace revdyn
