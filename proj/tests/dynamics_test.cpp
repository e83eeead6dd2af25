#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "revdyn/dynamics.hpp"

using namespace revdyn;

namespace {

AntiCoordinationGame with_p(double p, double bd = 1.0) { return AntiCoordinationGame::from_equilibrium(p, bd); }

std::vector<double> grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

double pos(double v) { return v > 0 ? v : 0; }

// Oracles: the update maps written out directly from their closed forms.
double oracle_perturbed(double p, double bd, double eta, double xi, double delta, double x) {
  const double k = bd / p;
  return x + delta * x * (1 - x) * (xi * k * pos(p - x) - eta * k * pos(x - p));
}

// innovative construction at delta = 1
double oracle_innovative(double p, double b2, double b3, double x) {
  const double cl = p / (1 - p);
  if (x < cl) return (p - 1) / p * x + 1;
  if (x < 2 * p) return b2 * (x - cl);
  return b3 * (x - 2 * p) + b2 * p * (1 - 2 * p) / (1 - p);
}

// imitative construction at delta = 1
double oracle_imitative(double p, double x) {
  if (x < p / 2) return 2 * x / p;
  if (x < p + p * p / 2) return -2 * (1 - p) * x / p + 2 - p;
  return 2 * (1 - p * p) / (p * p + 2 * p - 2) * (1 - x) + 1;
}

UpdateMap maximal_perturbed(double p, double delta, double bd = 1.0) {
  const auto g = with_p(p, bd);
  const auto [eta, xi] = maximal_perturbation(g);
  return build_update_map(perturbed_ppi_protocol(g, eta, xi), delta);
}

std::vector<RevisionProtocol> sample_protocols() {
  std::vector<RevisionProtocol> out;
  for (double p : {0.15, 0.3, 0.45}) {
    const auto g = with_p(p, 1.6);
    const auto r = innovative_beta_range(p);
    out.push_back(innovative_chaotic_protocol(g, 0.5 * (r.beta2_lo + r.beta2_hi), 0.5 * r.beta3_lo));
    out.push_back(imitative_chaotic_protocol(g));
    const auto [eta, xi] = maximal_perturbation(g);
    out.push_back(perturbed_ppi_protocol(g, 0.8 * eta, 0.6 * xi));
    const auto [teta, txi] = maximal_truncated_perturbation(g);
    out.push_back(truncated_ppi_protocol(g, teta, txi, canonical_truncation_level(p)));
    out.push_back(ppi_protocol(g));
    out.push_back(pairwise_comparison_protocol(g));
  }
  return out;
}

}  // namespace

TEST(BuildUpdateMap, InnovativeConstructionValues) {
  const auto f = build_update_map(innovative_chaotic_protocol(with_p(0.2), 2.0, -1.0 / 3.0), 1.0);
  EXPECT_NEAR(f(0.0), 1.0, 1e-12);
  EXPECT_NEAR(f(0.25), 0.0, 1e-12);
  EXPECT_NEAR(f(0.4), 0.3, 1e-12);
  EXPECT_NEAR(f(1.0), 0.1, 1e-12);
  EXPECT_TRUE(f.is_piecewise_linear());
  EXPECT_FALSE(f.flagged());
}

TEST(BuildUpdateMap, ImitativeConstructionValues) {
  const auto f = build_update_map(imitative_chaotic_protocol(with_p(0.4)), 1.0);
  EXPECT_NEAR(f(0.1), 0.5, 1e-12);
  EXPECT_NEAR(f(0.2), 1.0, 1e-12);
  EXPECT_NEAR(f(0.48), 0.16, 1e-12);
  EXPECT_NEAR(f(1.0), 1.0, 1e-12);
  EXPECT_TRUE(f.is_piecewise_linear());
}

TEST(BuildUpdateMap, MaximalPerturbedValues) {
  const auto f = maximal_perturbed(0.4, 1.0);
  EXPECT_NEAR(f(0.2), 1.0, 1e-12);
  EXPECT_NEAR(f(0.7), 0.0, 1e-12);
  ASSERT_TRUE(f.has_exact());
  EXPECT_EQ(max_degree(f.exact()), 3u);
}

TEST(BuildUpdateMap, ConstructedProtocolsArePiecewiseLinearForEveryDelta) {
  for (double delta : {0.1, 0.37, 0.9}) {
    EXPECT_TRUE(build_update_map(innovative_chaotic_protocol(with_p(0.3), 3.0, -0.5), delta).is_piecewise_linear());
    EXPECT_TRUE(build_update_map(imitative_chaotic_protocol(with_p(0.3)), delta).is_piecewise_linear());
  }
}

TEST(BuildUpdateMap, MatchesClosedFormOracles) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> up(0.03, 0.47), u01(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double p = up(rng), bd = 0.3 + 3 * u01(rng);
    const auto g = with_p(p, bd);
    const auto [em, xm] = maximal_perturbation(g);
    const double eta = em * (0.05 + 0.95 * u01(rng)), xi = xm * (0.05 + 0.95 * u01(rng));
    const double delta = 0.05 + 0.95 * u01(rng);
    const auto f = build_update_map(perturbed_ppi_protocol(g, eta, xi), delta);
    const auto r = innovative_beta_range(p);
    const double b2 = r.beta2_lo + (r.beta2_hi - r.beta2_lo) * (0.01 + 0.98 * u01(rng));
    const double b3 = r.beta3_lo * (0.01 + 0.99 * u01(rng));
    const auto fi = build_update_map(innovative_chaotic_protocol(g, b2, b3), 1.0);
    const auto fm = build_update_map(imitative_chaotic_protocol(g), 1.0);
    for (double x : grid(20001)) {
      EXPECT_NEAR(f(x), oracle_perturbed(p, bd, eta, xi, delta, x), 1e-12);
      EXPECT_NEAR(fi(x), oracle_innovative(p, b2, b3, x), 1e-12);
      EXPECT_NEAR(fm(x), oracle_imitative(p, x), 1e-12);
    }
  }
}

TEST(PlBimodalInnovative, Examples) {
  const auto f = pl_bimodal_innovative(0.25, 0.4, -4.0, 2.0, -1.0 / 3.0);
  EXPECT_NEAR(f(0.0), 1.0, 1e-15);
  EXPECT_NEAR(f(0.25), 0.0, 1e-15);
  EXPECT_NEAR(f(0.4), 0.3, 1e-15);
  EXPECT_FALSE(f.flagged());
}

TEST(PlBimodalInnovative, AdmissibleMapsPassRangeCheck) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double cl = 0.05 + 0.6 * u(rng);
    const double cr = cl + (0.95 - cl) * (0.05 + 0.9 * u(rng));
    const double b1 = -1.0 / cl + (1.0 / cl - cr / cl) * 0.999 * u(rng);
    const double b2 = cl / (cr - cl) + (1.0 - cl) / (cr - cl) * (0.001 + 0.999 * u(rng));
    const double b3 = -cl / (1 - cr) * (0.001 + 0.999 * u(rng));
    auto f = pl_bimodal_innovative(cl, cr, b1, b2, b3);
    EXPECT_TRUE(range_check(f, 10001).ok);
    EXPECT_NEAR(f(cl), 0.0, 1e-14);
    const auto cps = critical_points(f);
    ASSERT_EQ(cps.size(), 2u);
    EXPECT_EQ(cps[0].type, CriticalType::LocalMin);
    EXPECT_EQ(cps[1].type, CriticalType::LocalMax);
  }
}

TEST(PlBimodalInnovative, RejectionNamesViolatedBound) {
  try {
    pl_bimodal_innovative(0.25, 0.4, -5.0, 2.0, -0.2);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("beta1 >= -1/c_l"), std::string::npos);
  }
  try {
    pl_bimodal_innovative(0.25, 0.4, -4.0, 8.0, -0.2);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("beta2 <= 1/(c_r-c_l)"), std::string::npos);
  }
  EXPECT_THROW(pl_bimodal_innovative(0.25, 0.4, -4.0, 2.0, 0.1), InvalidArgument);
  EXPECT_THROW(pl_bimodal_innovative(0.5, 0.4, -1.0, 2.0, -0.1), InvalidArgument);
}

TEST(PlBimodalImitative, Examples) {
  const auto f = pl_bimodal_imitative(0.2, 0.6, 2.3);
  EXPECT_NEAR(f(0.0), 0.0, 1e-15);
  EXPECT_NEAR(f(0.2), 1.0, 1e-15);
  EXPECT_NEAR(f(0.6), 1 - 2.3 * 0.4, 1e-14);
  EXPECT_NEAR(f(0.6), 0.08, 1e-14);
  EXPECT_NEAR(f(0.8), 0.54, 1e-14);
  EXPECT_NEAR(f(1.0), 1.0, 1e-14);
  EXPECT_THROW(pl_bimodal_imitative(0.2, 0.6, 1.9), InvalidArgument);
  EXPECT_THROW(pl_bimodal_imitative(0.2, 0.6, 2.6), InvalidArgument);
}

TEST(Iterate, Examples) {
  const auto f = build_update_map(innovative_chaotic_protocol(with_p(0.2), 2.0, -1.0 / 3.0), 1.0);
  EXPECT_EQ(iterate(f, 0.3, 0).samples, std::vector<double>{0.3});
  const auto o = iterate(f, 0.25, 2);
  ASSERT_EQ(o.samples.size(), 3u);
  EXPECT_NEAR(o.samples[1], 0.0, 1e-15);
  EXPECT_NEAR(o.samples[2], 1.0, 1e-15);
  const auto id = identity_map();
  for (double v : iterate(id, 0.123, 5).samples) EXPECT_EQ(v, 0.123);
  EXPECT_THROW(iterate(f, 1.5, 3), InvalidArgument);
}

TEST(Iterate, StepRecurrenceHoldsExactly) {
  const auto f = maximal_perturbed(0.3, 0.9);
  const auto o = iterate(f, 0.77, 500);
  for (std::size_t n = 0; n + 1 < o.samples.size(); ++n) {
    EXPECT_EQ(o.samples[n + 1], f(o.samples[n]));
    EXPECT_GE(o.samples[n], 0.0);
    EXPECT_LE(o.samples[n], 1.0);
  }
}

TEST(Iterate, FlaggedMapRefuses) {
  const auto g = with_p(0.4);
  const auto [eta, xi] = maximal_perturbation(g);
  const auto f = build_update_map(perturbed_ppi_protocol(g, 2 * eta, xi), 1.0);
  EXPECT_TRUE(f.flagged());
  EXPECT_THROW(iterate(f, 0.5, 10), NotIntervalMap);
}

TEST(CriticalPoints, MaximalPerturbedFamily) {
  const auto cps = critical_points(maximal_perturbed(0.4, 1.0));
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_NEAR(cps[0].x, 0.2, 1e-12);
  EXPECT_EQ(cps[0].type, CriticalType::LocalMax);
  EXPECT_NEAR(cps[1].x, 0.7, 1e-12);
  EXPECT_EQ(cps[1].type, CriticalType::LocalMin);
}

TEST(CriticalPoints, ExtraMaximumBelowOneFifth) {
  const auto cps = critical_points(maximal_perturbed(0.1, 1.0));
  const auto has = [&](double x, CriticalType t) {
    return std::any_of(cps.begin(), cps.end(), [&](const CriticalPoint& c) { return std::abs(c.x - x) < 1e-12 && c.type == t; });
  };
  EXPECT_TRUE(has(0.05, CriticalType::LocalMax));
  EXPECT_TRUE(has(0.55, CriticalType::LocalMin));
  EXPECT_TRUE(has(1.1 / 6.0, CriticalType::LocalMax));
  EXPECT_NEAR(1.1 / 6.0, 0.18333, 1e-5);
  for (double p : {0.2, 0.25, 0.3, 0.5}) EXPECT_EQ(critical_points(maximal_perturbed(p, 1.0)).size(), 2u) << p;
  for (double p : {0.05, 0.15, 0.19}) EXPECT_EQ(critical_points(maximal_perturbed(p, 1.0)).size(), 4u) << p;
}

TEST(CriticalPoints, TruncatedMaximalFamily) {
  const auto g = with_p(0.25);
  const auto [eta, xi] = maximal_truncated_perturbation(g);
  const auto f = build_update_map(truncated_ppi_protocol(g, eta, xi, 9.0 / 32.0), 1.0);
  const auto cps = critical_points(f);
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_NEAR(cps[0].x, 0.125, 1e-12);
  EXPECT_EQ(cps[0].type, CriticalType::LocalMax);
  EXPECT_NEAR(cps[1].x, 0.28125, 1e-12);
  EXPECT_EQ(cps[1].type, CriticalType::LocalMin);
  EXPECT_NEAR(f(0.28125), 0.0, 1e-12);
}

TEST(CriticalPoints, GridFallbackForMapsWithoutExactForm) {
  // Rates that are not polynomial after multiplying out leave no exact form.
  const auto g = with_p(0.4);
  PiecewiseRational ab({0.0, 0.4, 1.0}, {Rational{}, Rational{Polynomial{-0.4, 1.0}, Polynomial{1.0, 1.0}}});
  PiecewiseRational ba({0.0, 0.4, 1.0}, {Rational{Polynomial{0.4, -1.0}, Polynomial{2.0, 1.0}}, Rational{}});
  const auto f = build_update_map(custom_protocol(ProtocolKind::Innovative, g, ab, ba), 1.0);
  EXPECT_FALSE(f.has_exact());
  EXPECT_NEAR(f(0.4), 0.4, 1e-15);
  // f(x) = x + (1-x)(0.4-x)/(2+x) on [0,0.4]: monotone, so no extrema there
  for (const auto& c : critical_points(f)) {
    const double h = 1e-4;
    if (c.type == CriticalType::LocalMax) {
      EXPECT_GE(f(c.x), f(c.x - h));
      EXPECT_GE(f(c.x), f(c.x + h));
    } else {
      EXPECT_LE(f(c.x), f(c.x - h));
      EXPECT_LE(f(c.x), f(c.x + h));
    }
  }
}

TEST(RangeCheck, Examples) {
  auto ok = maximal_perturbed(0.4, 1.0);
  EXPECT_TRUE(range_check(ok, 100001).ok);
  const auto g = with_p(0.4);
  const auto [eta, xi] = maximal_perturbation(g);
  auto bad = UpdateMap::from_protocol(perturbed_ppi_protocol(g, 2 * eta, xi), 1.0);
  const auto rep = range_check(bad, 100001);
  EXPECT_FALSE(rep.ok);
  // f(0.7) = 0.7 - 0.7 * 0.3 * (2 eta) * 2.5 * 0.3 = -0.7
  EXPECT_NEAR(bad(0.7), 0.7 - 0.7 * 0.3 * 2 * eta * 2.5 * 0.3, 1e-12);
  EXPECT_NEAR(bad(0.7), -0.7, 1e-12);
  EXPECT_LT(rep.min_value, 0.0);
  EXPECT_TRUE(bad.flagged());
  auto pl = pl_bimodal_innovative(0.25, 0.4, -4.0, 2.0, -1.0 / 3.0);
  EXPECT_TRUE(range_check(pl, 100001).ok);
}

TEST(RangeCheck, ThrowsOnTinyGrid) {
  const auto f = identity_map();
  EXPECT_THROW(range_check(f, 1), InvalidArgument);
}

TEST(ConjugateMap, Examples) {
  const auto f = build_update_map(innovative_chaotic_protocol(with_p(0.2), 2.0, -1.0 / 3.0), 1.0);
  const auto g = conjugate_map(f);
  const auto cps = critical_points(g);
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_NEAR(cps[0].x, 0.6, 1e-12);
  EXPECT_EQ(cps[0].type, CriticalType::LocalMin);
  EXPECT_NEAR(cps[1].x, 0.75, 1e-12);
  EXPECT_EQ(cps[1].type, CriticalType::LocalMax);
  const auto gg = conjugate_map(g);
  ASSERT_EQ(gg.exact().size(), f.exact().size());
  for (std::size_t i = 0; i < f.exact().size(); ++i) {
    EXPECT_NEAR(gg.exact().breakpoints()[i], f.exact().breakpoints()[i], 1e-15);
    EXPECT_NEAR(gg.exact().pieces()[i].coeff(0), f.exact().pieces()[i].coeff(0), 1e-14);
    EXPECT_NEAR(gg.exact().pieces()[i].coeff(1), f.exact().pieces()[i].coeff(1), 1e-14);
  }
  const auto m = conjugate_map(build_update_map(imitative_chaotic_protocol(with_p(0.4)), 1.0));
  EXPECT_NEAR(m(0.0), 0.0, 1e-15);
  EXPECT_NEAR(m(1.0), 1.0, 1e-15);
  EXPECT_NEAR(m(0.6), 0.6, 1e-14);
  EXPECT_NEAR(*m.equilibrium(), 0.6, 1e-15);
}

TEST(DynamicsProperty, ExactFormAgreesWithClosedForm) {
  for (const auto& pr : sample_protocols()) {
    for (double delta : {0.3, 1.0}) {
      const auto f = build_update_map(pr, delta);
      ASSERT_TRUE(f.has_exact()) << to_string(pr.family());
      for (double x : grid(100000)) EXPECT_NEAR(f(x), f.exact()(x), 1e-12) << to_string(pr.family()) << " x=" << x;
    }
  }
}

TEST(DynamicsProperty, PiecewiseFormsAreContinuous) {
  for (const auto& pr : sample_protocols()) EXPECT_LE(build_update_map(pr, 0.8).exact().max_jump(), 1e-12);
  PiecewisePolynomial broken({0.0, 0.5, 1.0}, {Polynomial{0.0, 1.0}, Polynomial{0.2, 0.5}});
  EXPECT_THROW(UpdateMap::from_piecewise(broken), InvalidArgument);
}

TEST(DynamicsProperty, FixedPointStructure) {
  for (const auto& pr : sample_protocols()) {
    const auto f = build_update_map(pr, 0.7);
    const double p = pr.p();
    int changes = 0;
    double prev = f(1e-9) - 1e-9;
    for (double x : grid(100001)) {
      if (x == 0.0 || x == 1.0) continue;
      const double v = f(x) - x;
      if (v == 0.0) continue;
      if ((v > 0) != (prev > 0)) ++changes;
      prev = v;
    }
    EXPECT_EQ(changes, 1) << to_string(pr.family());
    EXPECT_NEAR(f(p), p, 1e-14);
    if (pr.kind() == ProtocolKind::Imitative) {
      EXPECT_EQ(f(0.0), 0.0);
      EXPECT_NEAR(f(1.0), 1.0, 1e-15);
    } else {
      EXPECT_GT(f(0.0), 0.0);
      EXPECT_LT(f(1.0), 1.0);
    }
  }
}

TEST(DynamicsProperty, MonotoneOrderingForAdmissiblePerturbedAndTruncatedMaps) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> up(0.03, 0.5), u(0.0, 1.0);
  for (int i = 0; i < 60; ++i) {
    const double p = up(rng);
    const auto g = with_p(p, 0.5 + u(rng));
    const auto [em, xm] = maximal_perturbation(g);
    const auto fmax = build_update_map(perturbed_ppi_protocol(g, em, xm), 1.0);
    const auto f = build_update_map(perturbed_ppi_protocol(g, em * u(rng), xm * u(rng)), 1e-3 + u(rng) * (1 - 1e-3));
    std::vector<UpdateMap> maps{f};
    if (p < 0.5) {
      const auto [tm, tx] = maximal_truncated_perturbation(g);
      maps.push_back(build_update_map(truncated_ppi_protocol(g, tm * u(rng), tx * u(rng), canonical_truncation_level(p)),
                                      1e-3 + u(rng) * (1 - 1e-3)));
    }
    for (const auto& m : maps) {
      EXPECT_FALSE(m.flagged());
      for (double x : grid(5001)) {
        if (x < p) {
          EXPECT_GE(m(x), x - 1e-15);
        }
        if (x > p) {
          EXPECT_LE(m(x), x + 1e-15);
        }
      }
    }
    for (double x : grid(5001)) {
      if (x < p) {
        EXPECT_LE(f(x), fmax(x) + 1e-14);
      }
      if (x > p) {
        EXPECT_GE(f(x), fmax(x) - 1e-14);
      }
    }
  }
}

TEST(DynamicsProperty, ConjugacyIdentity) {
  for (const auto& pr : sample_protocols()) {
    const auto f = build_update_map(pr, 0.9);
    const auto g = conjugate_map(f);
    for (double x : grid(20001)) {
      EXPECT_NEAR(g(x), 1 - f(1 - x), 1e-12);
      EXPECT_NEAR(g.exact()(x), 1 - f(1 - x), 1e-12);
    }
  }
}

TEST(DynamicsProperty, ReflectionCommutesWithBuild) {
  for (const auto& pr : sample_protocols()) {
    for (double delta : {0.25, 1.0}) {
      const auto lhs = build_update_map(reflect_protocol(pr), delta);
      const auto rhs = conjugate_map(build_update_map(pr, delta));
      EXPECT_EQ(lhs.flagged(), rhs.flagged());
      for (double x : grid(20001)) EXPECT_NEAR(lhs(x), rhs(x), 1e-12) << to_string(pr.family());
    }
  }
}
