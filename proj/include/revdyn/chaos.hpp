#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "revdyn/dynamics.hpp"
#include "revdyn/game.hpp"
#include "revdyn/protocols.hpp"

namespace revdyn {

/// Raised by find_witness when f(x) = z_l has no sign-change bracket in (z_l, z_r).
class NoWitness : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict inequalities in certificates must hold by at least this much.
inline constexpr double kCertificateMargin = 1e-9;

// ---------------------------------------------------------------------------
// periodic orbits

struct PeriodicOrbit {
  std::size_t period = 0;
  /// Orbit points in iteration order, starting from the smallest one.
  std::vector<double> points;
};

/// Interval of points all satisfying f^n(x) = x (e.g. the identity map).
struct PeriodicContinuum {
  std::size_t n = 0;
  double lo = 0.0, hi = 0.0;
};

enum class SearchMode { Auto, Exact, Numeric };

struct PeriodicSearchOptions {
  SearchMode mode = SearchMode::Auto;
  /// Uniform grid used by the numeric search (refined by lap endpoints).
  std::size_t grid = 200000;
  /// Largest period solved by itinerary enumeration.
  std::size_t exact_budget = 12;
};

struct PeriodicSearchResult {
  std::vector<PeriodicOrbit> orbits;  // ordered by period, then smallest point
  std::vector<PeriodicContinuum> continua;
  std::vector<std::string> warnings;
  /// Periods that were solved exactly (piecewise-linear itineraries).
  std::vector<std::size_t> exact_periods;

  [[nodiscard]] std::vector<PeriodicOrbit> of_period(std::size_t n) const {
    std::vector<PeriodicOrbit> out;
    for (const auto& o : orbits)
      if (o.period == n) out.push_back(o);
    return out;
  }
  [[nodiscard]] bool has_period(std::size_t n) const {
    return std::any_of(orbits.begin(), orbits.end(), [&](const PeriodicOrbit& o) { return o.period == n; });
  }
};

namespace detail {

inline PeriodicOrbit canonical_orbit(std::vector<double> pts) {
  for (double& v : pts) v += 0.0;  // -0 -> +0
  const auto it = std::min_element(pts.begin(), pts.end());
  std::rotate(pts.begin(), it, pts.end());
  return {pts.size(), std::move(pts)};
}

inline bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b, double tol) {
  if (a.period != b.period) return false;
  for (std::size_t i = 0; i < a.period; ++i)
    if (std::abs(a.points[i] - b.points[i]) > tol) return false;
  return true;
}

/// Returns true if the orbit (pts[0..n-1], with pts[n] = f^n(pts[0]))
/// repeats with a proper divisor of n.
inline bool has_smaller_period(const std::vector<double>& pts, std::size_t n, double tol) {
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    if (std::abs(pts[d] - pts[0]) <= tol) return true;
  }
  return false;
}

inline void add_orbit(std::vector<PeriodicOrbit>& dst, PeriodicOrbit o, double tol) {
  for (const auto& e : dst)
    if (same_orbit(e, o, tol)) return;
  dst.push_back(std::move(o));
}

struct Segment {
  double lo, hi, slope, intercept;
};

inline std::vector<Segment> pl_segments(const UpdateMap& f) {
  const auto& ex = f.exact();
  std::vector<Segment> s;
  for (std::size_t i = 0; i < ex.size(); ++i)
    s.push_back({ex.lower(i), ex.upper(i), ex.pieces()[i].coeff(1), ex.pieces()[i].coeff(0)});
  return s;
}

/// Exact period-n points of a piecewise-linear map by depth-first itinerary
/// enumeration. Each branch carries the interval of starting points that
/// follow the itinerary so far and the affine form of f^k on it, so
/// infeasible itineraries are pruned as soon as they appear.
inline void exact_period_n(const std::vector<Segment>& segs, std::size_t n, std::vector<PeriodicOrbit>& out,
                           std::vector<PeriodicContinuum>& continua) {
  constexpr double tol = 1e-12;
  std::vector<std::size_t> itin(n);
  std::vector<PeriodicOrbit> found;
  struct Frame {
    double lo, hi, A, B;
  };
  const auto solve = [&](const Frame& fr) {
    if (std::abs(fr.A - 1.0) <= 1e-14) {
      if (std::abs(fr.B) <= 1e-14) {
        bool dup = false;
        for (auto& c : continua)
          if (c.n == n && std::abs(c.lo - fr.lo) <= 1e-12 && std::abs(c.hi - fr.hi) <= 1e-12) dup = true;
        if (!dup) continua.push_back({n, fr.lo, fr.hi});
      }
      return;
    }
    const double x = fr.B / (1.0 - fr.A);
    if (x < fr.lo - tol || x > fr.hi + tol) return;
    // replay the itinerary with its affine pieces and confirm membership
    std::vector<double> pts{std::clamp(x, 0.0, 1.0)};
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = segs[itin[k]];
      const double y = pts.back();
      if (y < s.lo - tol || y > s.hi + tol) return;
      pts.push_back(s.slope * y + s.intercept);
    }
    if (std::abs(pts[n] - pts[0]) > 1e-9) return;
    if (has_smaller_period(pts, n, 1e-9)) return;
    pts.pop_back();
    for (double& v : pts) v = std::clamp(v, 0.0, 1.0);
    add_orbit(found, canonical_orbit(std::move(pts)), 1e-9);
  };
  const auto recurse = [&](auto&& self, const Frame& fr, std::size_t depth) -> void {
    if (depth == n) {
      solve(fr);
      return;
    }
    double ylo = fr.A * fr.lo + fr.B, yhi = fr.A * fr.hi + fr.B;
    if (ylo > yhi) std::swap(ylo, yhi);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto& sg = segs[s];
      if (yhi < sg.lo - tol || ylo > sg.hi + tol) continue;
      Frame nf = fr;
      if (fr.A != 0.0) {
        double a = (sg.lo - tol - fr.B) / fr.A, b = (sg.hi + tol - fr.B) / fr.A;
        if (a > b) std::swap(a, b);
        nf.lo = std::max(fr.lo, a);
        nf.hi = std::min(fr.hi, b);
        if (nf.lo > nf.hi) continue;
      }
      nf.A = sg.slope * fr.A;
      nf.B = sg.slope * fr.B + sg.intercept;
      itin[depth] = s;
      self(self, nf, depth + 1);
    }
  };
  recurse(recurse, {0.0, 1.0, 1.0, 0.0}, 0);
  std::sort(found.begin(), found.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.points[0] < b.points[0]; });
  for (auto& o : found) out.push_back(std::move(o));
}

/// Endpoints of the monotone laps of f^n, obtained by pulling the critical
/// points of f back through f^{k-1} lap by lap.
inline std::vector<double> lap_endpoints(const UpdateMap& f, std::size_t n, std::size_t cap,
                                         std::vector<std::string>& warnings) {
  std::vector<double> crit;
  for (const auto& c : critical_points(f)) crit.push_back(c.x);
  std::vector<double> ends{0.0};
  for (double c : crit) ends.push_back(c);
  ends.push_back(1.0);
  for (std::size_t k = 2; k <= n; ++k) {
    std::vector<double> next{ends.front()};
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
      const double a = ends[i], b = ends[i + 1];
      const double ya = iterate_n(f, a, k - 1), yb = iterate_n(f, b, k - 1);
      const bool up = yb > ya;
      std::vector<double> inner;
      for (double c : crit) {
        if (!(c > std::min(ya, yb) && c < std::max(ya, yb))) continue;
        double lo = a, hi = b;
        for (int it = 0; it < 200; ++it) {
          const double m = 0.5 * (lo + hi);
          if (m <= lo || m >= hi) break;
          const double ym = iterate_n(f, m, k - 1);
          if ((ym < c) == up)
            lo = m;
          else
            hi = m;
        }
        inner.push_back(0.5 * (lo + hi));
      }
      std::sort(inner.begin(), inner.end());
      for (double v : inner)
        if (v > next.back()) next.push_back(v);
      if (b > next.back()) next.push_back(b);
      if (next.size() > cap) {
        warnings.push_back("lap refinement truncated at period " + std::to_string(k));
        return next;
      }
    }
    ends = std::move(next);
  }
  return ends;
}

inline void numeric_period_n(const UpdateMap& f, std::size_t n, std::size_t grid, std::vector<PeriodicOrbit>& out,
                             std::vector<std::string>& warnings) {
  std::vector<double> xs = unit_grid(std::max<std::size_t>(grid, 2));
  const auto laps = lap_endpoints(f, n, 4'000'000, warnings);
  xs.insert(xs.end(), laps.begin(), laps.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const auto g = [&](double x) { return iterate_n(f, x, n) - x; };
  std::vector<double> roots;
  double ga = g(xs[0]);
  if (ga == 0.0) roots.push_back(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double gb = g(xs[i]);
    if (gb == 0.0) {
      roots.push_back(xs[i]);
    } else if (ga != 0.0 && (ga < 0.0) != (gb < 0.0)) {
      double a = xs[i - 1], b = xs[i], fa = ga;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double gm = g(m);
        if (gm == 0.0) {
          a = b = m;
          break;
        }
        if ((gm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = gm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    ga = gb;
  }
  std::vector<PeriodicOrbit> found;
  for (double r : roots) {
    std::vector<double> pts{r};
    for (std::size_t k = 0; k < n; ++k) pts.push_back(f(pts.back()));
    if (has_smaller_period(pts, n, 1e-9)) continue;
    pts.pop_back();
    add_orbit(found, canonical_orbit(std::move(pts)), 1e-8);
  }
  std::sort(found.begin(), found.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.points[0] < b.points[0]; });
  for (auto& o : found) out.push_back(std::move(o));
}

}  // namespace detail

/// Periodic orbits of minimal period 1..n_max. Piecewise-linear maps are
/// solved exactly by itinerary enumeration up to the exact budget; larger
/// periods and other maps use sign changes of f^n(x) - x on a grid refined
/// by the lap endpoints of f^n, polished by bisection.
inline PeriodicSearchResult find_periodic_orbits(const UpdateMap& f, std::size_t n_max,
                                                 const PeriodicSearchOptions& opt = {}) {
  if (f.flagged()) throw NotIntervalMap("periodic search needs an interval self-map");
  PeriodicSearchResult res;
  const bool pl = f.is_piecewise_linear();
  if (opt.mode == SearchMode::Exact && !pl)
    throw InvalidArgument("exact periodic search needs a piecewise-linear map");
  const auto segs = pl ? detail::pl_segments(f) : std::vector<detail::Segment>{};
  bool warned = false;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const bool exact = pl && opt.mode != SearchMode::Numeric && n <= opt.exact_budget;
    if (pl && opt.mode != SearchMode::Numeric && n > opt.exact_budget && !warned) {
      res.warnings.push_back("periods above " + std::to_string(opt.exact_budget) +
                             " exceed the exact itinerary budget; using numeric search");
      warned = true;
    }
    if (exact) {
      detail::exact_period_n(segs, n, res.orbits, res.continua);
      res.exact_periods.push_back(n);
    } else {
      detail::numeric_period_n(f, n, opt.grid, res.orbits, res.warnings);
    }
  }
  return res;
}

inline std::vector<double> fixed_points(const UpdateMap& f, const PeriodicSearchOptions& opt = {}) {
  std::vector<double> out;
  for (const auto& o : find_periodic_orbits(f, 1, opt).orbits) out.push_back(o.points[0]);
  return out;
}

/// Some orbit of minimal period 3, or nothing.
inline std::optional<PeriodicOrbit> find_period3(const UpdateMap& f, const PeriodicSearchOptions& opt = {}) {
  PeriodicSearchResult res;
  if (f.is_piecewise_linear() && opt.mode != SearchMode::Numeric) {
    detail::exact_period_n(detail::pl_segments(f), 3, res.orbits, res.continua);
  } else {
    detail::numeric_period_n(f, 3, opt.grid, res.orbits, res.warnings);
  }
  if (res.orbits.empty()) return std::nullopt;
  return res.orbits.front();
}

// ---------------------------------------------------------------------------
// Li-Yorke certificate

enum class ConditionBranch {
  /// f(z_r) < z_l and f(z_l) > z_r
  Primary,
  /// f(z_r) > z_l and f(z_l) < z_l
  Primed,
};

inline const char* to_string(ConditionBranch b) { return b == ConditionBranch::Primary ? "(1,2)" : "(1',2')"; }

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs - rhs for '>' checks, rhs - lhs for '<' checks; holds if > margin
  double slack = 0.0;
  bool holds = false;
};

struct ChaosCertificate {
  double z_l = 0.0, z_r = 0.0;
  ConditionBranch branch = ConditionBranch::Primary;
  double f_zl = 0.0, f_zr = 0.0, f2_zl = 0.0;
  std::vector<Inequality> inequalities;
  double witness = 0.0;
  double f_witness = 0.0, f3_witness = 0.0;
  std::optional<PeriodicOrbit> period3;
};

struct ChaosCheck {
  std::optional<ChaosCertificate> certificate;
  /// All evaluated inequalities (both branches plus the shared one).
  std::vector<Inequality> inequalities;
  double f_zl = 0.0, f_zr = 0.0, f2_zl = 0.0;
  std::string failure;

  [[nodiscard]] bool certified() const noexcept { return certificate.has_value(); }
};

namespace detail {

inline Inequality less(std::string name, double lhs, double rhs) {
  return {std::move(name), lhs, rhs, rhs - lhs, rhs - lhs > kCertificateMargin};
}
inline Inequality greater(std::string name, double lhs, double rhs) {
  return {std::move(name), lhs, rhs, lhs - rhs, lhs - rhs > kCertificateMargin};
}

}  // namespace detail

/// Solves f(x) = z_l on (z_l, z_r) by bisection to machine precision.
inline double find_witness(const UpdateMap& f, double z_l, double z_r) {
  if (!(z_l < z_r)) throw InvalidArgument("need z_l < z_r");
  double a = z_l, b = z_r;
  double ga = f(a) - z_l, gb = f(b) - z_l;
  if (ga == 0.0 || gb == 0.0 || (ga < 0.0) == (gb < 0.0)) {
    std::ostringstream os;
    os << "no sign change of f(x) - z_l on (" << z_l << ", " << z_r << "): f(z_l)-z_l=" << ga
       << ", f(z_r)-z_l=" << gb;
    throw NoWitness(os.str());
  }
  for (int it = 0; it < 400; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double gm = f(m) - z_l;
    if (gm == 0.0) return m;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Checks both condition branches at (z_l, z_r). On success the certificate
/// carries a witness x with f(x) < x < f^3(x) and a period-3 orbit.
inline ChaosCheck check_chaos_conditions(const UpdateMap& f, double z_l, double z_r,
                                         const PeriodicSearchOptions& opt = {}) {
  if (!(z_l >= 0.0 && z_l < z_r && z_r <= 1.0)) throw InvalidArgument("need 0 <= z_l < z_r <= 1");
  ChaosCheck out;
  out.f_zl = f(z_l);
  out.f_zr = f(z_r);
  out.f2_zl = f(out.f_zl);
  const auto c1 = detail::less("f(z_r) < z_l", out.f_zr, z_l);
  const auto c2 = detail::greater("f(z_l) > z_r", out.f_zl, z_r);
  const auto c1p = detail::greater("f(z_r) > z_l", out.f_zr, z_l);
  const auto c2p = detail::less("f(z_l) < z_l", out.f_zl, z_l);
  const auto c3 = detail::greater("f^2(z_l) > z_r", out.f2_zl, z_r);
  out.inequalities = {c1, c2, c1p, c2p, c3};
  std::optional<ConditionBranch> branch;
  if (c1.holds && c2.holds && c3.holds) branch = ConditionBranch::Primary;
  if (c1p.holds && c2p.holds && c3.holds) branch = ConditionBranch::Primed;
  if (!branch) {
    std::ostringstream os;
    os << "no condition branch holds:";
    for (const auto& q : out.inequalities)
      if (!q.holds) os << " [" << q.name << " fails by " << -q.slack << "]";
    out.failure = os.str();
    return out;
  }
  ChaosCertificate cert;
  cert.z_l = z_l;
  cert.z_r = z_r;
  cert.branch = *branch;
  cert.f_zl = out.f_zl;
  cert.f_zr = out.f_zr;
  cert.f2_zl = out.f2_zl;
  cert.inequalities = *branch == ConditionBranch::Primary ? std::vector<Inequality>{c1, c2, c3}
                                                           : std::vector<Inequality>{c1p, c2p, c3};
  try {
    cert.witness = find_witness(f, z_l, z_r);
  } catch (const NoWitness& e) {
    out.failure = e.what();
    return out;
  }
  cert.f_witness = f(cert.witness);
  cert.f3_witness = f(f(cert.f_witness));
  if (!(cert.witness - cert.f_witness > kCertificateMargin && cert.f3_witness - cert.witness > kCertificateMargin)) {
    out.failure = "witness fails f(x) < x < f^3(x) by the required margin";
    return out;
  }
  if (!f.flagged()) cert.period3 = find_period3(f, opt);
  out.certificate = std::move(cert);
  return out;
}

/// Re-evaluates a certificate's recorded inequalities on a map.
inline bool verify_certificate(const UpdateMap& f, const ChaosCertificate& c) {
  const double fzl = f(c.z_l), fzr = f(c.z_r), f2 = f(fzl);
  const bool shared = f2 - c.z_r > kCertificateMargin;
  bool branch_ok = false;
  if (c.branch == ConditionBranch::Primary)
    branch_ok = c.z_l - fzr > kCertificateMargin && fzl - c.z_r > kCertificateMargin;
  else
    branch_ok = fzr - c.z_l > kCertificateMargin && c.z_l - fzl > kCertificateMargin;
  const double fw = f(c.witness), f3w = f(f(fw));
  const bool witness_ok = c.witness - fw > kCertificateMargin && f3w - c.witness > kCertificateMargin;
  bool orbit_ok = true;
  if (c.period3) {
    for (double x : c.period3->points) {
      if (std::abs(iterate_n(f, x, 3) - x) > 1e-10) orbit_ok = false;
      if (std::abs(f(x) - x) <= 1e-10) orbit_ok = false;
    }
  }
  return shared && branch_ok && witness_ok && orbit_ok;
}

// ---------------------------------------------------------------------------
// stability

enum class Stability { Attracting, Repelling, Inconclusive };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Attracting: return "attracting";
    case Stability::Repelling: return "repelling";
    case Stability::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct StabilityReport {
  double point = 0.0;
  double left_derivative = 0.0;
  double right_derivative = 0.0;
  Stability classification = Stability::Inconclusive;
  /// Derivatives came from exact per-piece polynomials.
  bool analytic = false;
  /// Heuristic: did nearby orbits settle on the point? Never feeds the classification.
  std::optional<bool> basin_probe_converged;
};

inline Stability classify(double left, double right) {
  if (std::abs(left) > 1.0 && std::abs(right) > 1.0) return Stability::Repelling;
  if (std::abs(left) < 1.0 && std::abs(right) < 1.0) return Stability::Attracting;
  return Stability::Inconclusive;
}

/// One-sided difference quotients at x, Richardson-extrapolated twice.
inline std::pair<double, double> finite_difference_derivatives(const UpdateMap& f, double x, double h = 1e-5) {
  const double fx = f(x);
  const auto left = [&](double s) { return (fx - f(x - s)) / s; };
  const auto right = [&](double s) { return (f(x + s) - fx) / s; };
  const auto extrap = [&](auto&& d) {
    const double d1 = d(h), d2 = d(h / 2), d4 = d(h / 4);
    const double r1 = 2 * d2 - d1, r2 = 2 * d4 - d2;
    return (4 * r2 - r1) / 3;
  };
  return {extrap(left), extrap(right)};
}

/// One-sided derivatives of f at x with classification. Exact forms give
/// analytic values; other maps fall back to finite differences.
inline StabilityReport one_sided_derivatives(const UpdateMap& f, double x, bool basin_probe = false) {
  if (!(x > 0.0 && x < 1.0)) throw InvalidArgument("stability point must lie in (0,1)");
  StabilityReport r;
  r.point = x;
  if (f.has_exact()) {
    const auto& ex = f.exact();
    r.left_derivative = ex.pieces()[ex.locate_left(x)].derivative()(x);
    r.right_derivative = ex.pieces()[ex.locate(x)].derivative()(x);
    r.analytic = true;
  } else {
    std::tie(r.left_derivative, r.right_derivative) = finite_difference_derivatives(f, x);
  }
  r.classification = classify(r.left_derivative, r.right_derivative);
  if (basin_probe && !f.flagged()) {
    bool conv = true;
    for (double off : {-1e-3, 1e-3}) {
      const double y = iterate_n(f, std::clamp(x + off, 0.0, 1.0), 5000);
      if (std::abs(y - x) > 1e-6) conv = false;
    }
    r.basin_probe_converged = conv;
  }
  return r;
}

// ---------------------------------------------------------------------------
// thresholds

struct ThresholdReport {
  double p = 0.0;
  std::vector<double> components;
  double threshold = 0.0;
  bool valid = false;
};

/// Step-size threshold above which the maximal perturbed PPI map is
/// certified chaotic at the probes p/2 and (p+1)/2.
inline ThresholdReport delta_threshold_perturbed(double p) {
  if (!(p > 0.0 && p < 0.5)) throw InvalidArgument("threshold formulas need p in (0, 1/2); reflect first");
  const double d1 = 1.0 / (p + 1.0);
  const double d2 = 1.0 / (2.0 - p);
  const double d3 = 0.125 * (p + 3.0 + std::sqrt((-p * p * p - 4.0 * p * p - 13.0 * p + 34.0) / (2.0 - p)));
  ThresholdReport r{p, {d1, d2, d3}, std::max({d1, d2, d3}), false};
  r.valid = r.threshold < 1.0;
  return r;
}

/// Step-size threshold for the maximal truncated PPI map (gamma = p + p^2/2).
inline ThresholdReport delta_threshold_truncated(double p) {
  if (!(p > 0.0 && p < 0.5)) throw InvalidArgument("threshold formulas need p in (0, 1/2); reflect first");
  const double d1 = (p + 1.0) / (p + 2.0);
  const double d2 = p * (p + 1.0) / (2.0 - p);
  const double p2 = p * p, p3 = p2 * p, p4 = p3 * p;
  const double d3 = 0.25 * (p2 + 2.0 * p + std::sqrt(p * (p4 + 10.0 * p3 + 20.0 * p2 - 8.0 * p - 16.0) / (p - 2.0)));
  const double d4 = p / (2.0 * (1.0 - p));
  const double d5 = p * (2.0 - 2.0 * p - p2) / (2.0 * (1.0 - p));
  ThresholdReport r{p, {d1, d2, d3, d4, d5}, std::max({d1, d2, d3, d4, d5}), false};
  r.valid = r.threshold < 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// symmetric imitative case

struct DeltaStar {
  double delta = 0.0;
  /// Maximiser of f on [0, 1/2] at delta.
  double z_l = 0.0;
  /// f(z_l) at delta.
  double peak = 0.0;
};

namespace detail {

/// max of f over [lo, hi] with its location; uses the exact form when present.
inline std::pair<double, double> maximize(const UpdateMap& f, double lo, double hi) {
  std::vector<double> cand{lo, hi};
  if (f.has_exact()) {
    const auto& ex = f.exact();
    for (std::size_t i = 0; i < ex.size(); ++i) {
      const double a = std::max(lo, ex.lower(i)), b = std::min(hi, ex.upper(i));
      if (a > b) continue;
      cand.push_back(a);
      cand.push_back(b);
      for (double r : real_roots_in(ex.pieces()[i].derivative(), a, b)) cand.push_back(r);
    }
  } else {
    constexpr int kGrid = 4000;
    double best = lo, bv = f(lo);
    for (int i = 1; i <= kGrid; ++i) {
      const double x = lo + (hi - lo) * i / kGrid;
      if (f(x) > bv) {
        bv = f(x);
        best = x;
      }
    }
    double a = std::max(lo, best - (hi - lo) / kGrid), b = std::min(hi, best + (hi - lo) / kGrid);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      const double c = b - g * (b - a), e = a + g * (b - a);
      if (f(c) > f(e))
        b = e;
      else
        a = c;
    }
    cand.push_back(0.5 * (a + b));
  }
  double bx = cand[0], bv = f(cand[0]);
  for (double x : cand) {
    const double v = f(x);
    if (v > bv) {
      bv = v;
      bx = x;
    }
  }
  return {bx, bv};
}

inline UpdateMap unchecked_map(const RevisionProtocol& proto, double delta) {
  UpdateMap m = UpdateMap::from_protocol(proto, delta);
  if (auto ex = exact_form(proto, delta)) m.attach_exact(std::move(*ex));
  return m;
}

}  // namespace detail

/// Step size at which the maximum of f over [0, 1/2] reaches 1 for an
/// imitative protocol on a game with equilibrium 1/2 whose rates satisfy
/// r_AB(x) + r_AB(1-x) = r_BA(x) + r_BA(1-x).
///
/// The maximum is nondecreasing in delta, so delta is bracketed by doubling
/// and then bisected; the search is not restricted to (0,1].
inline DeltaStar delta_star_symmetric(const RevisionProtocol& proto, double tol = 1e-10) {
  if (proto.kind() != ProtocolKind::Imitative) throw InvalidArgument("symmetric case needs an imitative protocol");
  if (!approx_equal_rel(proto.p(), 0.5)) throw InvalidArgument("symmetric case needs equilibrium p = 1/2");
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    const double lhs = proto.r_AB(x) + proto.r_AB(1.0 - x), rhs = proto.r_BA(x) + proto.r_BA(1.0 - x);
    if (std::abs(lhs - rhs) > 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) {
      std::ostringstream os;
      os << "rates violate r_AB(x)+r_AB(1-x) = r_BA(x)+r_BA(1-x) at x=" << x;
      throw InvalidArgument(os.str());
    }
  }
  const auto excess = [&](double d) { return detail::maximize(detail::unchecked_map(proto, d), 0.0, 0.5).second - 1.0; };
  double lo = 0.0, hi = 1.0;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) throw InvalidArgument("no step size found where the left maximum reaches 1");
  }
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (lo + hi);
    if (m <= lo || m >= hi) break;
    if (excess(m) < 0.0)
      lo = m;
    else
      hi = m;
  }
  // pick the bracket end with the smaller residual
  const double ex_lo = std::abs(excess(lo)), ex_hi = std::abs(excess(hi));
  const double d = ex_lo <= ex_hi ? lo : hi;
  const auto [zl, peak] = detail::maximize(detail::unchecked_map(proto, d), 0.0, 0.5);
  if (std::abs(peak - 1.0) > tol) {
    std::ostringstream os;
    os << "step-size search stalled with |f(z_l) - 1| = " << std::abs(peak - 1.0);
    throw InvalidArgument(os.str());
  }
  return {d, zl, peak};
}

// ---------------------------------------------------------------------------
// scrambled-pair diagnostic

struct ScrambledPairStat {
  double min_gap = 0.0;
  double max_tail_gap = 0.0;
};

/// Smallest |f^n(x) - f^n(x')| over n <= horizon and largest over the final
/// half of the horizon. A finite-horizon indicator only.
inline ScrambledPairStat scrambled_pair_stat(const UpdateMap& f, double x, double xp, std::size_t horizon) {
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (f.flagged()) throw NotIntervalMap("scrambled-pair statistic needs an interval self-map");
  ScrambledPairStat s;
  s.min_gap = std::abs(x - xp);
  for (std::size_t n = 1; n <= horizon; ++n) {
    x = f(x);
    xp = f(xp);
    const double gap = std::abs(x - xp);
    s.min_gap = std::min(s.min_gap, gap);
    if (n >= horizon / 2) s.max_tail_gap = std::max(s.max_tail_gap, gap);
  }
  return s;
}

}  // namespace revdyn
