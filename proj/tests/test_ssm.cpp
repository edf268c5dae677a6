// Autonomous graph-style SSM expansions.

#include <cmath>

#include <gtest/gtest.h>

#include "random_systems.hpp"
#include "ssmkit.hpp"

using namespace ssmkit;

namespace {

SSMExpansion slow_ssm(const FirstOrderSystem& sys, std::vector<std::size_t> idx, std::optional<int> order, const SSMOptions& opt = {}) {
  const Spectrum s = compute_spectrum(sys.A);
  return compute_ssm(sys, make_subspace(s, std::move(idx)), order, opt);
}

}  // namespace

TEST(GraphSSM, SlowManifoldCoefficientsAreExact) {
  const SSMExpansion e = slow_ssm(polynomial_slow_manifold_system(), {0}, 8);
  for (int j = 2; j <= 5; ++j) EXPECT_NEAR(e.graph.coefficient(MultiIndex{j})(0), 1.0 / (std::sqrt(24.0) - j), 1e-12) << "j=" << j;
  for (int j = 6; j <= 8; ++j) EXPECT_NEAR(e.graph.coefficient(MultiIndex{j})(0), 0.0, 1e-12) << "j=" << j;
  EXPECT_EQ(*e.sigma, 4);
  EXPECT_EQ(e.uniqueness_class, 5);
  EXPECT_TRUE(e.unique);
  EXPECT_TRUE(e.free_coefficients.empty());
}

TEST(GraphSSM, DefaultOrderIsUniquenessClass) {
  const SSMExpansion e = slow_ssm(polynomial_slow_manifold_system(), {0}, std::nullopt);
  EXPECT_EQ(e.order, 5);
}

TEST(GraphSSM, LowOrderTruncationIsFlaggedNonUnique) {
  const SSMExpansion e = slow_ssm(polynomial_slow_manifold_system(), {0}, 3);
  EXPECT_FALSE(e.unique);
  ASSERT_FALSE(e.warnings.empty());
  EXPECT_NE(e.warnings.back().find("non-unique"), std::string::npos);
}

TEST(GraphSSM, QuadraticResonanceIsAnObstruction) {
  try {
    slow_ssm(resonant_slow_manifold_system(2), {0}, 4);
    FAIL() << "expected ResonanceObstruction";
  } catch (const ResonanceObstruction& e) {
    EXPECT_EQ(e.monomial(), "(2)");
    EXPECT_EQ(e.direction(), 2);
  }
}

TEST(GraphSSM, CubicCouplingLeavesAFreeCoefficient) {
  const FirstOrderSystem sys = resonant_slow_manifold_system(3);
  const SSMExpansion e = slow_ssm(sys, {0}, 4);
  ASSERT_EQ(e.free_coefficients.size(), 1u);
  EXPECT_EQ(e.free_coefficients[0].p, MultiIndex{2});
  EXPECT_EQ(e.graph.coefficient(MultiIndex{2})(0), 0.0);
  EXPECT_NEAR(e.graph.coefficient(MultiIndex{3})(0), -1.0, 1e-14);
  EXPECT_FALSE(e.nonresonance->passed);
  // y = C x^2 - x^3 is invariant for every C.
  for (double C : {0.0, 1.0, -2.0}) {
    for (double x : {-0.4, -0.1, 0.2, 0.5}) {
      RVector pt(2);
      pt << x, C * x * x - x * x * x;
      const RVector v = sys.vector_field(pt);
      EXPECT_NEAR(v(1), (2.0 * C * x - 3.0 * x * x) * v(0), 1e-15);
    }
  }
}

TEST(GraphSSM, EulerSeriesHasFactorialCoefficients) {
  const FirstOrderSystem sys = euler_system();
  const Spectrum s = compute_spectrum(sys.A);
  EXPECT_THROW(compute_ssm(sys, make_subspace(s, {0}), 4), UnstableSpectrum);
  const SSMExpansion e = formal_series_no_guard(sys, make_subspace(s, {0}), 12);
  EXPECT_TRUE(e.formal);
  const RealPolyMap g = graph_over_coordinates(e, {0});
  long long fact = 1;
  for (int j = 1; j <= 12; ++j) {
    if (j > 1) fact *= (j - 1);
    EXPECT_EQ(std::llround(g.coefficient(MultiIndex{j})(0)), fact) << "j=" << j;
  }
  EXPECT_EQ(divergence_diagnostic(g).classification(), "divergent");
}

TEST(GraphSSM, DivergenceDiagnosticOnKnownSeries) {
  std::vector<double> geometric, terminating, factorial;
  double f = 1.0;
  for (int d = 0; d <= 12; ++d) {
    geometric.push_back(d >= 2 ? std::pow(0.5, d) : 0.0);
    terminating.push_back(d >= 2 && d <= 5 ? 1.0 : 0.0);
    if (d > 1) f *= d - 1;
    factorial.push_back(d >= 1 ? f : 0.0);
  }
  const auto g = divergence_diagnostic(geometric);
  EXPECT_FALSE(g.divergent);
  EXPECT_NEAR(g.radius, 2.0, 1e-9);
  EXPECT_TRUE(divergence_diagnostic(terminating).terminates);
  EXPECT_TRUE(divergence_diagnostic(factorial).divergent);
}

TEST(GraphSSM, TwoMassSlowManifoldMatchesPublishedSeries) {
  const SSMExpansion e = slow_ssm(shaw_pierre_system(), {0, 1}, 6);
  for (const auto& c : shaw_pierre_published_ssm())
    EXPECT_NEAR(e.graph.coefficient(MultiIndex{c.p1, c.p2})(c.row), c.value, 5e-4) << "z" << c.row + 1 << " y^(" << c.p1 << "," << c.p2 << ")";
  for (const auto& [p, c] : e.graph.terms())
    if (p.order() % 2 == 0) EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-12) << p.to_string();
  EXPECT_EQ(e.uniqueness_class, 6);
}

TEST(GraphSSM, FastManifoldOfTwoMassSystem) {
  const FirstOrderSystem sys = shaw_pierre_system();
  const SSMExpansion e = slow_ssm(sys, {2, 3}, 5);
  EXPECT_EQ(*e.sigma, 0);
  EXPECT_TRUE(e.unique);
  EXPECT_LE(graph_invariance_defect(e.split, e.graph, 5).max_abs_coefficient(), 1e-13);
}

TEST(GraphSSM, InvarianceDefectVanishesThroughOrder) {
  for (unsigned seed : {3u, 4u}) {
    const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(seed, 4, 5);
    const SSMExpansion e = slow_ssm(sys, {0, 1}, 5);
    EXPECT_LE(graph_invariance_defect(e.split, e.graph, 5).max_abs_coefficient(), 1e-11);
  }
}

TEST(GraphSSM, ConjugateSymmetryOfComplexCoefficients) {
  const SSMExpansion e = slow_ssm(shaw_pierre_system(), {0, 1}, 5);
  EXPECT_LE(realify_residue(e.graph_complex, e.split.master_pairing, e.split.enslaved_pairing), 1e-12);
}

TEST(GraphSSM, UnsupportedSpectraAreRejected) {
  RMatrix jordan(3, 3);
  jordan << -1, 1, 0, 0, -1, 0, 0, 0, -3;
  FirstOrderSystem sys = linear_system(jordan);
  EXPECT_THROW(compute_ssm(sys, make_subspace(compute_spectrum(jordan), {2}), 3), NotSemisimple);
}

TEST(GraphSSM, ForcingIsIgnoredWithWarning) {
  const SSMExpansion e = slow_ssm(periodically_forced_slow_manifold_system(0.1), {0}, 5);
  bool warned = false;
  for (const auto& w : e.warnings) warned = warned || w.find("forcing ignored") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(GraphSSM, ThreadCountDoesNotChangeResult) {
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(8, 6, 4);
  SSMOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const SSMExpansion a = slow_ssm(sys, {0, 1}, 4, one), b = slow_ssm(sys, {0, 1}, 4, many);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(GraphSSM, RepeatedRunsAreByteIdentical) {
  const std::string a = to_json(slow_ssm(shaw_pierre_system(), {0, 1}, 5)).dump();
  const std::string b = to_json(slow_ssm(shaw_pierre_system(), {0, 1}, 5)).dump();
  EXPECT_EQ(a, b);
}

TEST(GraphSSM, GraphOverOriginalCoordinates) {
  // The slow manifold of the polynomial system is y = Σ x^j/(√24 - j) in the original variables.
  const SSMExpansion e = slow_ssm(polynomial_slow_manifold_system(), {0}, 6);
  const RealPolyMap g = graph_over_coordinates(e, {0});
  for (int j = 2; j <= 5; ++j) EXPECT_NEAR(g.coefficient(MultiIndex{j})(0), 1.0 / (std::sqrt(24.0) - j), 1e-12);
}

TEST(GraphSSM, ExactManifoldHasMachinePrecisionResidual) {
  const FirstOrderSystem sys = polynomial_slow_manifold_system();
  const SSMExpansion e = slow_ssm(sys, {0}, 6);
  for (const auto& smp : invariance_residual(sys, e, {0.05, 0.2, 0.5}, 1)) EXPECT_LE(smp.max_residual, 1e-12) << smp.radius;
}

TEST(GraphSSM, DivisorsMatchSpectrum) {
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(6, 6, 4);
  const SSMExpansion e = slow_ssm(sys, {0, 1}, 4);
  const auto& lam = e.split.spectrum.eigenvalues;
  ASSERT_FALSE(e.divisor_log.empty());
  for (const auto& d : e.divisor_log) {
    complex expect = -lam[d.l];
    for (std::size_t a = 0; a < d.p.size(); ++a) expect += static_cast<double>(d.p[a]) * lam[e.split.master[a]];
    EXPECT_LE(std::abs(d.divisor - expect), 1e-13) << d.p.to_string();
  }
}

TEST(GraphSSM, HigherOrderLeavesLowerCoefficientsUnchanged) {
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(2, 4, 5);
  const SSMExpansion lo = slow_ssm(sys, {0, 1}, 3), hi = slow_ssm(sys, {0, 1}, 5);
  for (const auto& [p, c] : lo.graph.terms()) EXPECT_EQ(hi.graph.coefficient(p), c) << p.to_string();
  for (const auto& [p, c] : hi.graph.terms())
    if (p.order() <= 3) EXPECT_EQ(lo.graph.coefficient(p), c) << p.to_string();
}

TEST(GraphSSM, AmplitudeRescalingLaw) {
  // x = δ x̃ scales the degree-k part of f0 by δ^(k-1), and h_p by δ^(|p|-1).
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(4, 4, 4);
  const double delta = 0.37;
  FirstOrderSystem scaled = sys;
  scaled.f0 = RealPolyMap(sys.dim(), sys.dim(), sys.f0.truncation_order());
  for (const auto& [p, c] : sys.f0.terms()) scaled.f0.add_term(p, std::pow(delta, p.order() - 1) * c);
  const SSMExpansion a = slow_ssm(sys, {0, 1}, 4), b = slow_ssm(scaled, {0, 1}, 4);
  for (const auto& [p, c] : a.graph.terms()) {
    const RVector expect = std::pow(delta, p.order() - 1) * c;
    EXPECT_LE((b.graph.coefficient(p) - expect).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + expect.cwiseAbs().maxCoeff())) << p.to_string();
  }
}

class RandomSystems : public ::testing::TestWithParam<unsigned> {};

TEST_P(RandomSystems, ResidualScalesWithNextOrder) {
  const unsigned seed = GetParam();
  const std::size_t n = seed % 2 == 0 ? 4 : 6;
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(seed, n);
  const std::vector<double> radii = {0.005, 0.01, 0.02, 0.04};
  for (int K : {2, 3}) {
    const SSMExpansion e = slow_ssm(sys, {0, 1}, K);
    EXPECT_NEAR(ssmkit::testing::residual_slope(sys, e, radii, seed), K + 1, 0.2) << "seed " << seed << " K " << K;
  }
}

TEST_P(RandomSystems, DegreeTwoMatchesDenseSolve) {
  const unsigned seed = GetParam();
  const std::size_t n = seed % 2 == 0 ? 4 : 6;
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(seed, n);
  const Spectrum s = compute_spectrum(sys.A);
  const SpectralSubspace e = slow_subspace(s, 2);
  const SSMExpansion x = compute_ssm(sys, e, 2);
  const RealPolyMap oracle = ssmkit::testing::dense_degree_solve(sys, e, 2);
  EXPECT_LE(subtract(x.graph.homogeneous_part(2), oracle).max_abs_coefficient(), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Seeded, RandomSystems, ::testing::Range(1u, 11u));
