#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "revdyn/game.hpp"
#include "revdyn/piecewise.hpp"
#include "revdyn/polynomial.hpp"

namespace revdyn {

enum class ProtocolKind { Imitative, Innovative };

enum class ProtocolFamily {
  PPI,
  PairwiseComparison,
  PerturbedPPI,
  TruncatedPPI,
  InnovativeConstructed,
  ImitativeConstructed,
  Custom,
};

inline const char* to_string(ProtocolKind k) { return k == ProtocolKind::Imitative ? "imitative" : "innovative"; }

inline const char* to_string(ProtocolFamily f) {
  switch (f) {
    case ProtocolFamily::PPI: return "ppi";
    case ProtocolFamily::PairwiseComparison: return "pc";
    case ProtocolFamily::PerturbedPPI: return "perturbed_ppi";
    case ProtocolFamily::TruncatedPPI: return "truncated_ppi";
    case ProtocolFamily::InnovativeConstructed: return "innovative_constructed";
    case ProtocolFamily::ImitativeConstructed: return "imitative_constructed";
    case ProtocolFamily::Custom: return "custom";
  }
  return "custom";
}

/// Construction parameters recorded with a protocol. Unused fields are NaN.
struct ProtocolParams {
  double eta = std::numeric_limits<double>::quiet_NaN();
  double xi = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double beta2 = std::numeric_limits<double>::quiet_NaN();
  double beta3 = std::numeric_limits<double>::quiet_NaN();
};

/// A pair of switch-rate functions on [0,1].
///
/// Innovative protocols store the switch rates rho_AB, rho_BA directly.
/// Imitative protocols store the conditional imitation rates r_AB, r_BA and
/// derive rho_AB(x) = (1-x) r_AB(x), rho_BA(x) = x r_BA(x).
class RevisionProtocol {
 public:
  RevisionProtocol(ProtocolKind kind, ProtocolFamily family, AntiCoordinationGame game, PiecewiseRational ab,
                   PiecewiseRational ba, ProtocolParams params = {}, bool reflected = false)
      : kind_(kind),
        family_(family),
        game_(game),
        ab_(std::move(ab)),
        ba_(std::move(ba)),
        params_(params),
        reflected_(reflected) {}

  [[nodiscard]] ProtocolKind kind() const noexcept { return kind_; }
  [[nodiscard]] ProtocolFamily family() const noexcept { return family_; }
  [[nodiscard]] const AntiCoordinationGame& game() const noexcept { return game_; }
  [[nodiscard]] double p() const noexcept { return game_.p(); }
  [[nodiscard]] const ProtocolParams& params() const noexcept { return params_; }
  [[nodiscard]] bool is_reflected() const noexcept { return reflected_; }

  /// Stored rate functions: r-rates for imitative kind, rho-rates otherwise.
  [[nodiscard]] const PiecewiseRational& stored_ab() const noexcept { return ab_; }
  [[nodiscard]] const PiecewiseRational& stored_ba() const noexcept { return ba_; }

  [[nodiscard]] double rho_AB(double x) const {
    return kind_ == ProtocolKind::Imitative ? (1.0 - x) * ab_(x) : ab_(x);
  }
  [[nodiscard]] double rho_BA(double x) const { return kind_ == ProtocolKind::Imitative ? x * ba_(x) : ba_(x); }

  [[nodiscard]] double r_AB(double x) const {
    require_imitative();
    return ab_(x);
  }
  [[nodiscard]] double r_BA(double x) const {
    require_imitative();
    return ba_(x);
  }

  /// Union of the breakpoints of both stored rates.
  [[nodiscard]] std::vector<double> breakpoints() const {
    return merge_breakpoints(ab_.breakpoints(), ba_.breakpoints());
  }

 private:
  void require_imitative() const {
    if (kind_ != ProtocolKind::Imitative)
      throw std::logic_error("conditional imitation rates exist only for imitative protocols");
  }

  ProtocolKind kind_;
  ProtocolFamily family_;
  AntiCoordinationGame game_;
  PiecewiseRational ab_;
  PiecewiseRational ba_;
  ProtocolParams params_;
  bool reflected_;
};

namespace detail {

inline PiecewiseRational zero_rate() { return PiecewiseRational::single(Rational{}); }

/// s * [x - p]_+ on [0,1].
inline PiecewiseRational ramp_up(double s, double p) {
  return PiecewiseRational({0.0, p, 1.0}, {Rational{}, Rational{Polynomial::affine_root(s, p)}});
}

/// s * [p - x]_+ on [0,1].
inline PiecewiseRational ramp_down(double s, double p) {
  return PiecewiseRational({0.0, p, 1.0}, {Rational{Polynomial::affine_root(-s, p)}, Rational{}});
}

inline void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(std::string(name) + " must lie in (0,1)");
}

inline void require_below_half(double p, const char* what) {
  if (!(p > 0.0 && p < 0.5)) {
    std::ostringstream os;
    os << what << " requires an equilibrium p in (0, 1/2), got p=" << p << "; reflect the game instead";
    throw InvalidArgument(os.str());
  }
}

// Closed bounds get a relative slack of 1e-12 so that exact boundary values
// computed in floating point are accepted.
inline bool le_rel(double v, double bound) { return v <= bound + 1e-12 * std::max(1.0, std::abs(bound)); }
inline bool ge_rel(double v, double bound) { return v >= bound - 1e-12 * std::max(1.0, std::abs(bound)); }

}  // namespace detail

/// Pairwise proportional imitation: rho_ij = x_j [u_j - u_i]_+.
inline RevisionProtocol ppi_protocol(const AntiCoordinationGame& g) {
  const double k = g.gap_slope();
  ProtocolParams prm;
  prm.eta = 1.0;
  prm.xi = 1.0;
  return {ProtocolKind::Imitative, ProtocolFamily::PPI, g, detail::ramp_up(k, g.p()), detail::ramp_down(k, g.p()),
          prm};
}

/// Pairwise comparison: rho_ij = [u_j - u_i]_+.
inline RevisionProtocol pairwise_comparison_protocol(const AntiCoordinationGame& g) {
  const double k = g.gap_slope();
  return {ProtocolKind::Innovative, ProtocolFamily::PairwiseComparison, g, detail::ramp_up(k, g.p()),
          detail::ramp_down(k, g.p())};
}

/// PPI with conditional imitation rates scaled by eta (A to B) and xi (B to A).
inline RevisionProtocol perturbed_ppi_protocol(const AntiCoordinationGame& g, double eta, double xi) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive and finite");
  if (!(xi > 0.0) || !std::isfinite(xi)) throw InvalidArgument("xi must be positive and finite");
  const double k = g.gap_slope();
  ProtocolParams prm;
  prm.eta = eta;
  prm.xi = xi;
  return {ProtocolKind::Imitative,          ProtocolFamily::PerturbedPPI, g, detail::ramp_up(eta * k, g.p()),
          detail::ramp_down(xi * k, g.p()), prm};
}

/// Perturbed PPI with one rate frozen beyond the level gamma: for gamma > p
/// the A-to-B rate is constant on [gamma,1], for gamma < p the B-to-A rate
/// is constant on [0,gamma]. gamma = 0 or 1 gives the untruncated rates.
inline RevisionProtocol truncated_ppi_protocol(const AntiCoordinationGame& g, double eta, double xi, double gamma) {
  const double p = g.p();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0,1]");
  if (gamma == p) throw InvalidArgument("gamma = p excluded: the truncated rate would be piecewise constant");
  RevisionProtocol base = perturbed_ppi_protocol(g, eta, xi);
  ProtocolParams prm = base.params();
  prm.gamma = gamma;
  const double k = g.gap_slope();
  PiecewiseRational ab = base.stored_ab();
  PiecewiseRational ba = base.stored_ba();
  if (gamma > p && gamma < 1.0) {
    ab = PiecewiseRational({0.0, p, gamma, 1.0}, {Rational{}, Rational{Polynomial::affine_root(eta * k, p)},
                                                  Rational{Polynomial::constant(eta * k * (gamma - p))}});
  } else if (gamma < p && gamma > 0.0) {
    ba = PiecewiseRational({0.0, gamma, p, 1.0}, {Rational{Polynomial::constant(xi * k * (p - gamma))},
                                                  Rational{Polynomial::affine_root(-xi * k, p)}, Rational{}});
  }
  return {ProtocolKind::Imitative, ProtocolFamily::TruncatedPPI, g, std::move(ab), std::move(ba), prm};
}

struct InnovativeBetaRange {
  double beta2_lo, beta2_hi;  // open interval
  double beta3_lo, beta3_hi;  // [lo, hi)
};

inline InnovativeBetaRange innovative_beta_range(double p) {
  detail::require_below_half(p, "innovative construction");
  return {1.0 / (1.0 - 2.0 * p), 2.0 * (1.0 - p) / (1.0 - 2.0 * p), -p / ((1.0 - 2.0 * p) * (1.0 - p)), 0.0};
}

/// Innovative protocol whose update map at delta = 1 is the bimodal
/// piecewise-linear map with critical points p/(1-p) and 2p.
inline RevisionProtocol innovative_chaotic_protocol(const AntiCoordinationGame& g, double beta2, double beta3) {
  const double p = g.p();
  const auto r = innovative_beta_range(p);
  if (!(beta2 > r.beta2_lo && beta2 < r.beta2_hi)) {
    std::ostringstream os;
    os << "beta2=" << beta2 << " outside (" << r.beta2_lo << ", " << r.beta2_hi << ")";
    throw InvalidArgument(os.str());
  }
  if (!(detail::ge_rel(beta3, r.beta3_lo) && beta3 < r.beta3_hi)) {
    std::ostringstream os;
    os << "beta3=" << beta3 << " outside [" << r.beta3_lo << ", 0)";
    throw InvalidArgument(os.str());
  }
  const double cl = p / (1.0 - p);
  const double cr = 2.0 * p;
  const Polynomial px{0.0, p};  // p x
  const Polynomial xx{0.0, 1.0};
  PiecewiseRational ab(
      {0.0, p, cl, cr, 1.0},
      {Rational{},
       Rational{Polynomial{-p, 1.0}, px},
       Rational{Polynomial{beta2 * p / (1.0 - p), 1.0 - beta2}, xx},
       Rational{Polynomial{2.0 * p * beta3 - beta2 * p * (1.0 - 2.0 * p) / (1.0 - p), 1.0 - beta3}, xx}});
  PiecewiseRational ba({0.0, p, 1.0}, {Rational{Polynomial{p, -1.0}, Polynomial{p, -p}}, Rational{}});
  ProtocolParams prm;
  prm.beta2 = beta2;
  prm.beta3 = beta3;
  return {ProtocolKind::Innovative, ProtocolFamily::InnovativeConstructed, g, std::move(ab), std::move(ba), prm};
}

/// Imitative protocol whose update map at delta = 1 is the bimodal
/// piecewise-linear map with critical points p/2 and p + p^2/2.
inline RevisionProtocol imitative_chaotic_protocol(const AntiCoordinationGame& g) {
  const double p = g.p();
  detail::require_below_half(p, "imitative construction");
  const double cl = 0.5 * p;
  const double cr = p + 0.5 * p * p;
  const Polynomial one_minus_x{1.0, -1.0};
  const Polynomial x_one_minus_x{0.0, 1.0, -1.0};
  PiecewiseRational ba({0.0, cl, p, 1.0},
                       {Rational{Polynomial::constant(2.0 - p), p * one_minus_x},
                        Rational{(p - 2.0) * Polynomial{-p, 1.0}, p * x_one_minus_x}, Rational{}});
  PiecewiseRational ab({0.0, p, cr, 1.0},
                       {Rational{}, Rational{(2.0 - p) * Polynomial{-p, 1.0}, p * x_one_minus_x},
                        Rational{Polynomial::constant(p * (p - 2.0)), Polynomial{0.0, p * p + 2.0 * p - 2.0}}});
  return {ProtocolKind::Imitative, ProtocolFamily::ImitativeConstructed, g, std::move(ab), std::move(ba)};
}

/// Protocol for the game with strategy labels swapped:
/// rho~_AB(x) = rho_BA(1-x), rho~_BA(x) = rho_AB(1-x), and likewise for
/// conditional imitation rates. Reflecting twice gives back the original.
inline RevisionProtocol reflect_protocol(const RevisionProtocol& proto) {
  ProtocolParams prm = proto.params();
  std::swap(prm.eta, prm.xi);
  if (!std::isnan(prm.gamma)) prm.gamma = 1.0 - prm.gamma;
  return {proto.kind(),
          proto.family(),
          proto.game().reflected(),
          proto.stored_ba().reflected(),
          proto.stored_ab().reflected(),
          prm,
          !proto.is_reflected()};
}

/// Hand-built protocol from explicit piecewise rates (rho-rates for
/// innovative kind, r-rates for imitative kind).
inline RevisionProtocol custom_protocol(ProtocolKind kind, const AntiCoordinationGame& g, PiecewiseRational ab,
                                        PiecewiseRational ba) {
  return {kind, ProtocolFamily::Custom, g, std::move(ab), std::move(ba)};
}

struct ProtocolViolation {
  double x;
  std::string what;
};

struct ProtocolValidation {
  std::vector<ProtocolViolation> sign_violations;
  std::vector<ProtocolViolation> negativity_violations;
  std::vector<ProtocolViolation> nonfinite_values;
  /// Largest finite-difference slope of the switch rates between grid points.
  double lipschitz_rho = 0.0;
  /// Same for the conditional imitation rates (imitative kind only).
  double lipschitz_r = 0.0;

  [[nodiscard]] bool ok() const noexcept {
    return sign_violations.empty() && negativity_violations.empty() && nonfinite_values.empty();
  }
};

/// Grid check of the sign conditions linking rates to payoff differences,
/// rate nonnegativity and finiteness, plus an empirical Lipschitz estimate.
/// Payoff gaps and rate differences within `tol` of zero are treated as ties.
inline ProtocolValidation validate_protocol(const RevisionProtocol& proto, std::size_t grid_size,
                                            double tol = 1e-12) {
  if (grid_size < 2) throw InvalidArgument("grid_size must be at least 2");
  ProtocolValidation rep;
  const auto& g = proto.game();
  const bool imit = proto.kind() == ProtocolKind::Imitative;
  const double n = static_cast<double>(grid_size - 1);
  double prev_ab = 0, prev_ba = 0, prev_rab = 0, prev_rba = 0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = static_cast<double>(i) / n;
    const double gap = g.payoff_B(x) - g.payoff_A(x);  // > 0: B pays more
    const double gap_tol = tol * std::max(1.0, g.gap_slope());
    const double rab = proto.rho_AB(x), rba = proto.rho_BA(x);
    double iab = 0, iba = 0;
    if (imit) {
      iab = proto.r_AB(x);
      iba = proto.r_BA(x);
    }
    if (!std::isfinite(rab) || !std::isfinite(rba) || !std::isfinite(iab) || !std::isfinite(iba)) {
      rep.nonfinite_values.push_back({x, "non-finite rate"});
      continue;
    }
    if (rab < -tol || rba < -tol || iab < -tol || iba < -tol) rep.negativity_violations.push_back({x, "negative rate"});
    if (std::abs(gap) > gap_tol) {
      if (imit) {
        const double diff = iab - iba;
        if (std::abs(diff) > tol && ((gap > 0.0) != (diff > 0.0)))
          rep.sign_violations.push_back({x, "u_B >= u_A must hold exactly when r_AB >= r_BA"});
      } else {
        // rho_AB > 0 iff B pays strictly more; rho_BA > 0 iff A pays strictly more
        if ((rab > tol) != (gap > 0.0)) rep.sign_violations.push_back({x, "rho_AB positive iff u_B > u_A"});
        if ((rba > tol) != (gap < 0.0)) rep.sign_violations.push_back({x, "rho_BA positive iff u_A > u_B"});
      }
    }
    if (i > 0) {
      rep.lipschitz_rho = std::max({rep.lipschitz_rho, std::abs(rab - prev_ab) * n, std::abs(rba - prev_ba) * n});
      if (imit)
        rep.lipschitz_r = std::max({rep.lipschitz_r, std::abs(iab - prev_rab) * n, std::abs(iba - prev_rba) * n});
    }
    prev_ab = rab;
    prev_ba = rba;
    prev_rab = iab;
    prev_rba = iba;
  }
  return rep;
}

// Admissible parameter regions. Closed bounds carry a 1e-12 relative slack.

inline bool in_delta_p(const AntiCoordinationGame& g, double eta, double xi, double delta) {
  const double p = g.p(), bd = g.b_minus_d();
  return eta > 0.0 && xi > 0.0 && delta > 0.0 && detail::le_rel(delta, 1.0) &&
         detail::le_rel(eta, 4.0 * p / ((1.0 - p) * (1.0 - p) * bd)) && detail::le_rel(xi, 4.0 / (p * bd));
}

inline bool in_delta_star_p(const AntiCoordinationGame& g, double eta, double xi, double delta) {
  const double p = g.p(), bd = g.b_minus_d();
  return eta > 0.0 && xi > 0.0 && delta > 0.0 && detail::le_rel(delta, 1.0) &&
         detail::le_rel(eta, 4.0 / (p * (2.0 - 2.0 * p - p * p) * bd)) && detail::le_rel(xi, 4.0 / (p * bd));
}

inline bool in_gamma_star_p(const AntiCoordinationGame& g, double eta, double xi, double delta) {
  const double p = g.p(), bd = g.b_minus_d();
  const double q = (1.0 - p) * (1.0 - p);
  return eta > 0.0 && xi > 0.0 && delta > 0.0 && detail::le_rel(delta, 1.0) &&
         detail::le_rel(eta, 4.0 * p / (q * bd)) && detail::le_rel(xi, 4.0 * p / (q * (-1.0 + 4.0 * p - p * p) * bd));
}

/// Largest (eta, xi) in Delta_p.
inline std::pair<double, double> maximal_perturbation(const AntiCoordinationGame& g) {
  const double p = g.p(), bd = g.b_minus_d();
  return {4.0 * p / ((1.0 - p) * (1.0 - p) * bd), 4.0 / (p * bd)};
}

/// Largest (eta, xi) in Delta*_p.
inline std::pair<double, double> maximal_truncated_perturbation(const AntiCoordinationGame& g) {
  const double p = g.p(), bd = g.b_minus_d();
  return {4.0 / (p * (2.0 - 2.0 * p - p * p) * bd), 4.0 / (p * bd)};
}

/// Truncation level p + p^2/2 used with the maximal truncated parameters.
inline double canonical_truncation_level(double p) { return p + 0.5 * p * p; }

}  // namespace revdyn
