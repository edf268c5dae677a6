// Forced responses, forced SSMs, reduced models and the integrator.

#include <cmath>

#include <gtest/gtest.h>

#include "random_systems.hpp"
#include "ssmkit.hpp"

using namespace ssmkit;

namespace {

const double kPi = std::acos(-1.0);

bool any_warning(const std::vector<std::string>& w, const std::string& needle) {
  for (const auto& s : w)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

/// Random stable system with quadratic f0 and ε sin t on the first coordinate.
FirstOrderSystem quadratic_forced_system(unsigned seed) {
  FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(seed, 4);
  const std::size_t n = sys.dim();
  RealPolyMap quad(n, n, 2);
  for (const auto& [p, c] : sys.f0.terms())
    if (p.order() == 2) quad.add_term(p, c);
  sys.f0 = quad;
  Forcing f;
  f.frequencies = RVector::Constant(1, 1.0);
  RVector s = RVector::Zero(static_cast<Eigen::Index>(n));
  s(0) = 1.0;
  f.terms.push_back({{1}, s, RVector::Zero(static_cast<Eigen::Index>(n)), {}});
  sys.forcing = f;
  sys.epsilon = 0.05;
  return sys;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forced response

TEST(NNM, FirstOrderTermSolvesTheLinearHarmonicBalance) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const NNMSolution nnm = compute_nnm(sys, 1);
  const RVector zero = RVector::Zero(4);
  const RVector f = sys.forcing->evaluate(zero, kPi / 2.0);
  const RMatrix I = RMatrix::Identity(4, 4);
  const RVector b = -(sys.A * sys.A + I).fullPivLu().solve(f);
  const RVector a = sys.A * b;
  const auto& c = nnm.per_order.at(0).terms.at(Harmonic{1});
  EXPECT_LE((c.sin - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((c.cos - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NNM, ModalComponentsMatchPublishedValues) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const Spectrum s = compute_spectrum(sys.A);
  const NNMSolution nnm = compute_nnm(sys, 1);
  const auto& c = nnm.per_order.at(0).terms.at(Harmonic{1});
  const RVector a = s.real_transform_inverse * c.sin, b = s.real_transform_inverse * c.cos;
  const auto& ref = shaw_pierre_published_nnm();
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(a(i), ref[0][static_cast<std::size_t>(i)], 5e-4) << "sin " << i + 1;
    EXPECT_NEAR(b(i), ref[1][static_cast<std::size_t>(i)], 5e-4) << "cos " << i + 1;
  }
}

TEST(NNM, ResponseIsPeriodic) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const NNMSolution nnm = compute_nnm(sys, 3);
  for (double t : {0.0, 0.7, 2.9})
    EXPECT_LE((nnm.evaluate(t + nnm.period()) - nnm.evaluate(t)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(NNM, OddCubicKeepsOnlyOddHarmonics) {
  const NNMSolution nnm = compute_nnm(shaw_pierre_forced_system(0.1), 3);
  for (const auto& level : nnm.per_order)
    for (const auto& [m, c] : level.terms)
      if (harmonic_order(m) % 2 == 0) EXPECT_LE(std::max(c.sin.cwiseAbs().maxCoeff(), c.cos.cwiseAbs().maxCoeff()), 1e-14);
}

class QuadraticForced : public ::testing::TestWithParam<unsigned> {};

TEST_P(QuadraticForced, ResidualScalesWithNextOrder) {
  const FirstOrderSystem sys = quadratic_forced_system(GetParam());
  const std::vector<double> eps = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  for (int r : {1, 2, 3}) {
    const NNMSolution nnm = compute_nnm(sys, r);
    std::vector<double> res;
    for (double e : eps) res.push_back(nnm_residual(sys, nnm, e));
    EXPECT_NEAR(fit_loglog_slope(eps, res), r + 1, 0.2) << "r=" << r;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeded, QuadraticForced, ::testing::Values(2u, 5u, 9u));

TEST(NNM, NarrowHarmonicBoundIsReported) {
  const NNMSolution nnm = compute_nnm(quadratic_forced_system(2), 2, 0);
  EXPECT_TRUE(any_warning(nnm.warnings, "harmonic bound 0 too small"));
}

TEST(NNM, RejectsBadArguments) {
  EXPECT_THROW(compute_nnm(shaw_pierre_forced_system(0.1), 0), InvalidInput);
  RMatrix a(2, 2);
  a << 0, 1, -1, 0;
  FirstOrderSystem undamped = linear_system(a);
  Forcing f;
  f.frequencies = RVector::Constant(1, 1.0);
  f.terms.push_back({{1}, (RVector(2) << 0.0, 1.0).finished(), RVector::Zero(2), {}});
  undamped.forcing = f;
  EXPECT_THROW(compute_nnm(undamped, 1), UnstableSpectrum);
}

// ---------------------------------------------------------------------------
// Forced SSM

TEST(ForcedSSM, PeriodicForcingClosedForm) {
  const double eps = 0.5, r24 = std::sqrt(24.0);
  const FirstOrderSystem sys = periodically_forced_slow_manifold_system(eps);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0}), 6, 2);
  const TrigCoefficients h = e.coefficients_at(eps);
  for (int i = 0; i < 50; ++i) {
    const double t = 0.37 * i;
    EXPECT_NEAR(h.at(MultiIndex{0}).evaluate(t)(0), eps * r24 / 25.0 * (std::sin(t) - std::cos(t) / r24), 1e-10) << "t=" << t;
    for (int j = 2; j <= 5; ++j) EXPECT_NEAR(h.at(MultiIndex{j}).evaluate(t)(0), 1.0 / (r24 - j), 1e-10);
    EXPECT_EQ(h.count(MultiIndex{1}) ? h.at(MultiIndex{1}).max_abs() : 0.0, 0.0);
  }
}

TEST(ForcedSSM, QuasiperiodicForcingClosedForm) {
  const double eps = 0.5, r24 = std::sqrt(24.0), r2 = std::sqrt(2.0);
  const FirstOrderSystem sys = quasiperiodically_forced_slow_manifold_system(eps);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0}), 6, 1);
  EXPECT_FALSE(e.commensurate);
  const TrigCoefficients h = e.coefficients_at(eps);
  for (int i = 0; i < 50; ++i) {
    const double t = 0.41 * i;
    const double expect = eps * (r24 / 25.0 * (std::sin(t) - std::cos(t) / r24) + r24 / 26.0 * (std::sin(r2 * t) - r2 / r24 * std::cos(r2 * t)));
    EXPECT_NEAR(h.at(MultiIndex{0}).evaluate(t)(0), expect, 1e-10) << "t=" << t;
  }
}

TEST(ForcedSSM, ZeroEpsilonReducesToAutonomousGraph) {
  const FirstOrderSystem forced = shaw_pierre_forced_system(0.0);
  const Spectrum s = compute_spectrum(forced.A);
  const SpectralSubspace e1 = make_subspace(s, {0, 1});
  const ForcedSSMExpansion f = compute_forced_ssm(forced, e1, 5, 2);
  const SSMExpansion a = compute_ssm(shaw_pierre_system(), e1, 5);
  const TrigCoefficients h = f.coefficients_at(0.0);
  for (const auto& [p, c] : a.graph.terms()) {
    ASSERT_TRUE(h.count(p)) << p.to_string();
    for (double t : {0.0, 1.1, 4.0}) EXPECT_LE((h.at(p).evaluate(t) - c).cwiseAbs().maxCoeff(), 1e-12) << p.to_string();
  }
  RVector y(2);
  y << 0.3, -0.2;
  for (double t : {0.0, 2.5}) EXPECT_LE((f.evaluate(y, t) - a.graph.evaluate(y)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForcedSSM, InvarianceDefectVanishes) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 6, 3);
  EXPECT_LE(forced_invariance_defect(e, sys), 1e-10);
  EXPECT_EQ(e.Sigma, 5);
  EXPECT_TRUE(e.nonresonance.passed);
}

TEST(ForcedSSM, GraphIsPeriodicInTime) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 5, 2);
  RVector y(2);
  y << 0.2, 0.1;
  for (double t : {0.0, 1.3}) EXPECT_LE((e.evaluate(y, t + 2.0 * kPi) - e.evaluate(y, t)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ForcedSSM, ContainsTheForcedResponse) {
  const double eps = 0.05;
  const FirstOrderSystem sys = shaw_pierre_forced_system(eps);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 6, 3);
  const ProjectionErrorReport pe = nnm_projection_error(sys, e, compute_nnm(sys, 1), {0.02, 0.05, 0.1});
  ASSERT_TRUE(pe.slope.has_value());
  EXPECT_NEAR(*pe.slope, 3.0, 0.3);
  EXPECT_FALSE(pe.below_noise_floor);
  for (std::size_t i = 0; i < pe.rms.size(); ++i) EXPECT_NEAR(pe.rms[i] * pe.rms[i], pe.mse[i], 1e-15);
}

TEST(ForcedSSM, ZeroAmplitudeForcingIsBelowNoiseFloor) {
  FirstOrderSystem sys = shaw_pierre_forced_system(0.05);
  for (auto& term : sys.forcing->terms) term.sin.setZero();
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 6, 3);
  const ProjectionErrorReport pe = nnm_projection_error(sys, e, compute_nnm(sys, 1), {0.02, 0.05, 0.1});
  EXPECT_TRUE(pe.below_noise_floor);
  EXPECT_FALSE(pe.slope.has_value());
  EXPECT_NE(pe.message.find("below noise floor"), std::string::npos);
}

TEST(ForcedSSM, LowTaylorOrderWarnsAboutUniqueness) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 3, 1);
  EXPECT_TRUE(any_warning(e.warnings, "below the uniqueness class 6"));
}

TEST(ForcedSSM, NearResonanceIsReported) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 6, 1);
  EXPECT_NEAR(e.nonresonance.min_margin, 0.0054, 5e-4);
}

TEST(ForcedSSM, RejectsBadOrders) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const SpectralSubspace e1 = make_subspace(compute_spectrum(sys.A), {0, 1});
  EXPECT_THROW(compute_forced_ssm(sys, e1, 0, 1), InvalidInput);
  EXPECT_THROW(compute_forced_ssm(sys, e1, 3, -1), InvalidInput);
}

// ---------------------------------------------------------------------------
// Reduced models

TEST(Reduce, GraphStyleAgreesWithGraphExpansion) {
  struct Case {
    FirstOrderSystem sys;
    std::vector<std::size_t> idx;
    int order;
  };
  const std::vector<Case> cases = {{polynomial_slow_manifold_system(), {0}, 6}, {shaw_pierre_system(), {0, 1}, 5}};
  for (const auto& c : cases) {
    const SpectralSubspace e = make_subspace(compute_spectrum(c.sys.A), c.idx);
    const SSMExpansion g = compute_ssm(c.sys, e, c.order);
    const ReducedModel rm = parametrize_ssm(c.sys, e, c.order);
    const std::size_t q = c.idx.size();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int k = 0; k < 20; ++k) {
      RVector eta(static_cast<Eigen::Index>(q));
      for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = u(rng);
      const RVector w = rm.modal_point(eta);
      EXPECT_LE((w.head(static_cast<Eigen::Index>(q)) - eta).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LE((w.tail(w.size() - static_cast<Eigen::Index>(q)) - g.graph.evaluate(eta)).cwiseAbs().maxCoeff(), 1e-11);
    }
    EXPECT_LE(parametrization_invariance_defect(rm, c.sys), 1e-11);
  }
}

TEST(Reduce, GraphStyleReducedFieldIsMasterEquation) {
  const FirstOrderSystem sys = shaw_pierre_system();
  const SpectralSubspace e = make_subspace(compute_spectrum(sys.A), {0, 1});
  const ReducedModel rm = parametrize_ssm(sys, e, 5);
  RVector eta(2);
  eta << 0.25, -0.1;
  const RVector x = rm.lift(eta);
  const RVector expect = rm.split.Tinv_master * sys.vector_field(x);
  EXPECT_LE((rm.field(eta) - expect).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Reduce, DampedPairNormalFormIsLinear) {
  // Damping keeps every u^(k+1) ū^k divisor at 2k Re λ, so nothing is resonant.
  const FirstOrderSystem sys = shaw_pierre_system();
  const SpectralSubspace e = make_subspace(compute_spectrum(sys.A), {0, 1});
  const ReducedModel rm = parametrize_ssm(sys, e, 5, ParametrizationStyle::normal_form);
  EXPECT_LE(parametrization_invariance_defect(rm, sys), 1e-11);
  EXPECT_TRUE(rm.inner_resonances.empty());
  for (const auto& [key, c] : rm.reduced_complex.terms())
    if (key.p.order() >= 2) EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0) << key.p.to_string();
  RVector eta(2);
  eta << 0.3, -0.2;
  EXPECT_LE((rm.field(eta) - rm.split.A_master * eta).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reduce, InnerResonanceIsKeptInNormalForm) {
  // Master rates -1 and -2 are in 1:2 resonance; x1^2 forcing the second mode cannot be removed.
  RMatrix a = RMatrix::Zero(3, 3);
  a.diagonal() << -1.0, -2.0, -5.0;
  FirstOrderSystem sys = linear_system(a, 2);
  sys.f0.add_term(MultiIndex{2, 0, 0}, (RVector(3) << 0.0, 1.0, 0.0).finished());
  sys.f0.add_term(MultiIndex{1, 1, 0}, (RVector(3) << 0.0, 0.0, 1.0).finished());
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 3, ParametrizationStyle::normal_form);
  ASSERT_EQ(rm.inner_resonances.size(), 1u);
  EXPECT_EQ(rm.inner_resonances[0].p, (MultiIndex{2, 0}));
  EXPECT_EQ(rm.inner_resonances[0].j, 1u);
  EXPECT_LE(parametrization_invariance_defect(rm, sys), 1e-12);
  RVector eta(2);
  eta << 0.3, 0.1;
  const RVector f = rm.field(eta);
  EXPECT_NEAR(f(0), -0.3, 1e-14);
  EXPECT_NEAR(f(1), -0.2 + 0.09, 1e-14);
}

TEST(Reduce, NormalFormOfSlowManifoldIsLinear) {
  const FirstOrderSystem sys = polynomial_slow_manifold_system();
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0}), 6, ParametrizationStyle::normal_form);
  EXPECT_TRUE(rm.inner_resonances.empty());
  RVector eta(1);
  eta << 0.4;
  EXPECT_NEAR(rm.field(eta)(0), -0.4, 1e-14);
  EXPECT_LE(parametrization_invariance_defect(rm, sys), 1e-12);
}

TEST(Reduce, LiftedSlowTrajectoryStaysOnExactManifold) {
  const FirstOrderSystem sys = polynomial_slow_manifold_system();
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0}), 6);
  RVector eta0(1);
  eta0 << 0.3;
  EXPECT_LE(lift_and_compare(sys, rm, eta0, 0.0, 20.0).max_distance, 1e-8);
}

TEST(Reduce, HigherOrderLiftIsCloser) {
  const FirstOrderSystem sys = shaw_pierre_system();
  const SpectralSubspace e = make_subspace(compute_spectrum(sys.A), {0, 1});
  RVector eta0(2);
  eta0 << 1.2, 0.0;
  const double e3 = lift_and_compare(sys, parametrize_ssm(sys, e, 3), eta0, 0.0, 40.0).max_distance;
  const double e5 = lift_and_compare(sys, parametrize_ssm(sys, e, 5), eta0, 0.0, 40.0).max_distance;
  EXPECT_LT(e5, e3);
}

TEST(Reduce, ForcedNormalFormOriginIsTheForcedResponse) {
  const double eps = 0.05;
  const FirstOrderSystem sys = shaw_pierre_forced_system(eps);
  ReduceOptions opt;
  opt.eps_order = 2;
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 3, ParametrizationStyle::normal_form, opt);
  EXPECT_LE(parametrization_invariance_defect(rm, sys), 1e-11);
  const NNMSolution nnm = compute_nnm(sys, 2);
  const RVector zero = RVector::Zero(2);
  for (double t : {0.0, 0.9, 3.3}) {
    EXPECT_LE((rm.lift(zero, t) - nnm.evaluate(t)).cwiseAbs().maxCoeff(), 1e-12) << "t=" << t;
    EXPECT_LE(rm.field(zero, t).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reduce, ForcedGraphStyleWarnsAndSatisfiesInvariance) {
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.05);
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), 3);
  EXPECT_TRUE(any_warning(rm.warnings, "graph style is centred at the origin"));
  EXPECT_LE(parametrization_invariance_defect(rm, sys), 1e-11);
}

TEST(Reduce, ReducedLinearPartHasSubspaceSpectrum) {
  const FirstOrderSystem sys = shaw_pierre_system();
  const Spectrum s = compute_spectrum(sys.A);
  for (ParametrizationStyle style : {ParametrizationStyle::graph, ParametrizationStyle::normal_form}) {
    for (std::vector<std::size_t> idx : {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{2, 3}}) {
      const ReducedModel rm = parametrize_ssm(sys, make_subspace(s, idx), 3, style);
      const RealPolyMap lin = rm.reduced_field.autonomous_part(1).homogeneous_part(1);
      RMatrix J(2, 2);
      for (Eigen::Index a = 0; a < 2; ++a) J.col(a) = lin.coefficient(MultiIndex::unit(2, static_cast<std::size_t>(a)));
      const Eigen::VectorXcd ev = J.eigenvalues();
      for (std::size_t k = 0; k < 2; ++k) {
        double best = 1e300;
        for (Eigen::Index i = 0; i < 2; ++i) best = std::min(best, std::abs(ev(i) - s.eigenvalues[idx[k]]));
        EXPECT_LE(best, 1e-10);
      }
    }
  }
}

TEST(Reduce, FlowCommutesWithEmbeddingToTruncationOrder) {
  // |F^t(W(η)) - W(G^t(η))| = O(|η|^(K+1)) for a quadratic-plus-cubic system.
  const FirstOrderSystem sys = ssmkit::testing::random_nonresonant_system(3, 4, 4);
  const int K = 3;
  const ReducedModel rm = parametrize_ssm(sys, make_subspace(compute_spectrum(sys.A), {0, 1}), K);
  IntegrationOptions tight;
  tight.rtol = 1e-12;
  tight.atol = 1e-15;
  const std::vector<double> radii = {0.01, 0.02, 0.04};
  std::vector<double> errs;
  for (double r : radii) {
    RVector eta(2);
    eta << 0.6 * r, -0.8 * r;
    const Trajectory red = integrate(rm, eta, 0.0, 1.0, tight);
    const Trajectory full = integrate(sys, rm.lift(eta), 0.0, 1.0, tight);
    errs.push_back((full.states.back() - rm.lift(red.states.back())).norm());
  }
  EXPECT_NEAR(fit_loglog_slope(radii, errs), K + 1, 0.3);
}

TEST(Reduce, StyleNamesRoundTrip) {
  EXPECT_EQ(parse_style(to_string(ParametrizationStyle::graph)), ParametrizationStyle::graph);
  EXPECT_EQ(parse_style(to_string(ParametrizationStyle::normal_form)), ParametrizationStyle::normal_form);
  EXPECT_THROW(parse_style("spline"), InvalidInput);
}

// ---------------------------------------------------------------------------
// Integration and sections

TEST(Integrate, LinearDecayIsAccurate) {
  RMatrix a(1, 1);
  a << -1.0;
  const Trajectory tr = integrate(linear_system(a), RVector::Constant(1, 1.0), 0.0, 5.0);
  EXPECT_NEAR(tr.states.back()(0), std::exp(-5.0), 1e-9);
  EXPECT_DOUBLE_EQ(tr.t_end(), 5.0);
}

TEST(Integrate, DenseOutputTracksOscillator) {
  RMatrix a(2, 2);
  a << 0, 1, -1, 0;
  const Trajectory tr = integrate(linear_system(a), (RVector(2) << 1.0, 0.0).finished(), 0.0, 20.0);
  for (double t = 0.0; t <= 20.0; t += 0.173) {
    const RVector x = tr.at(t);
    EXPECT_NEAR(x(0), std::cos(t), 1e-7) << t;
    EXPECT_NEAR(x(1), -std::sin(t), 1e-7) << t;
    EXPECT_NEAR(tr.derivative_at(t)(0), -std::sin(t), 1e-5) << t;
  }
  EXPECT_THROW(tr.at(21.0), InvalidInput);
}

TEST(Integrate, RejectsBadSpans) {
  RMatrix a(1, 1);
  a << -1.0;
  EXPECT_THROW(integrate(linear_system(a), RVector::Constant(1, 1.0), 1.0, 1.0), InvalidInput);
  EXPECT_THROW(integrate(linear_system(a), RVector::Constant(1, NAN), 0.0, 1.0), InvalidInput);
}

TEST(Poincare, OscillatorCrossingsArePeriodic) {
  RMatrix a(2, 2);
  a << 0, 1, -1, 0;
  const Trajectory tr = integrate(linear_system(a), (RVector(2) << 1.0, 0.0).finished(), 0.0, 30.0);
  // x2 = -sin t crosses zero downward at t = 2πk, upward at π + 2πk; the start point is not a crossing.
  const PoincareSectionResult neg = poincare_section(tr, Hyperplane{(RVector(2) << 0.0, 1.0).finished(), 0.0}, CrossingDirection::negative);
  ASSERT_EQ(neg.crossings.size(), 4u);
  for (std::size_t k = 0; k < neg.crossings.size(); ++k) {
    EXPECT_NEAR(neg.crossings[k].time, 2.0 * kPi * (k + 1.0), 1e-7);
    EXPECT_NEAR(neg.crossings[k].state(1), 0.0, 1e-10);
    EXPECT_FALSE(neg.crossings[k].positive);
  }
  const PoincareSectionResult both = poincare_section(tr, Hyperplane{(RVector(2) << 0.0, 1.0).finished(), 0.0});
  EXPECT_EQ(both.crossings.size(), 9u);
  EXPECT_EQ(both.tangential, 0u);
}

TEST(Poincare, ParallelTrajectoryIsTangential) {
  RMatrix a(2, 2);
  a << -1, 0, 0, 0;
  const Trajectory tr = integrate(linear_system(a), (RVector(2) << 1.0, 0.0).finished(), 0.0, 3.0);
  const PoincareSectionResult r = poincare_section(tr, Hyperplane{(RVector(2) << 0.0, 1.0).finished(), 0.0});
  EXPECT_TRUE(r.crossings.empty());
  EXPECT_GE(r.tangential, 1u);
  EXPECT_TRUE(any_warning(r.warnings, "tangential"));
}

TEST(Poincare, CsvAndJsonExport) {
  RMatrix a(2, 2);
  a << 0, 1, -1, 0;
  const Trajectory tr = integrate(linear_system(a), (RVector(2) << 1.0, 0.0).finished(), 0.0, 7.0);
  const std::string csv = to_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2");
  const PoincareSectionResult r = poincare_section(tr, Hyperplane{(RVector(2) << 1.0, 0.0).finished(), 0.0});
  const std::string sc = to_csv(r);
  EXPECT_EQ(sc.substr(0, sc.find('\n')), "index,t,direction,x1,x2");
  const auto j = to_json(r);
  EXPECT_EQ(j.at("crossings").size(), r.crossings.size());
  EXPECT_EQ(to_json(tr).dump(), to_json(integrate(linear_system(a), (RVector(2) << 1.0, 0.0).finished(), 0.0, 7.0)).dump());
}
