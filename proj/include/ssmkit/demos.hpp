#ifndef SSMKIT_DEMOS_HPP
#define SSMKIT_DEMOS_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssmkit/forced.hpp"
#include "ssmkit/reduce.hpp"
#include "ssmkit/reference_systems.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/ssm.hpp"

namespace ssmkit {

/// One comparison of a computed quantity against a stored reference value.
struct DemoRow {
  std::string quantity;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

struct DemoResult {
  std::string name;
  std::vector<DemoRow> rows;
  nlohmann::json artifacts = nlohmann::json::object();

  bool passed() const {
    if (rows.empty()) return false;
    for (const auto& r : rows)
      if (!r.passed) return false;
    return true;
  }

  void compare(std::string quantity, double computed, double expected, double tol) {
    rows.push_back({std::move(quantity), computed, expected, tol, std::abs(computed - expected) <= tol, {}});
  }

  void check(std::string quantity, bool ok, std::string note = {}) {
    rows.push_back({std::move(quantity), ok ? 1.0 : 0.0, 1.0, 0.0, ok, std::move(note)});
  }

  void bound(std::string quantity, double computed, double limit) {
    rows.push_back({std::move(quantity), computed, 0.0, limit, computed <= limit, "upper bound"});
  }
};

/// Published quintic slow-SSM coefficients of the two-mass oscillator, rounded to 4 decimals.
struct PublishedCoefficient {
  int p1, p2, row;
  double value;
};

inline const std::vector<PublishedCoefficient>& shaw_pierre_published_ssm() {
  static const std::vector<PublishedCoefficient> c = {
      {3, 0, 0, -0.0278}, {2, 1, 0, 0.0011},  {1, 2, 0, -0.0026}, {0, 3, 0, 0.0009},  {5, 0, 0, 0.0023},  {4, 1, 0, -0.0006}, {3, 2, 0, 0.0026},
      {2, 3, 0, -0.0007}, {1, 4, 0, -0.0010}, {0, 5, 0, 0.0002},  {3, 0, 1, -0.0032}, {2, 1, 1, -0.0470}, {1, 2, 1, -0.0074}, {0, 3, 1, -0.0323},
      {5, 0, 1, 0.0004},  {4, 1, 1, 0.0039},  {3, 2, 1, 0.0004},  {2, 3, 1, 0.0065},  {1, 4, 1, -0.0005}, {0, 5, 1, 0.0011}};
  return c;
}

/// Published leading-order forced NNM, modal coordinates: sin vector then cos vector.
inline const std::array<std::array<double, 4>, 2>& shaw_pierre_published_nnm() {
  static const std::array<std::array<double, 4>, 2> v = {{{6.7213, -0.9408, 0.0194, 0.7253}, {0.4402, 6.7357, -0.4134, -0.0809}}};
  return v;
}

namespace detail {

inline std::string label(const char* fmt, int a, int b = 0, int c = 0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

inline DemoResult demo_example1() {
  DemoResult d{"example1", {}, {}};
  const FirstOrderSystem sys = polynomial_slow_manifold_system();
  const Spectrum s = compute_spectrum(sys.A);
  const SSMExpansion e = compute_ssm(sys, make_subspace(s, {0}), 8);
  for (int j = 2; j <= 8; ++j) {
    const double expect = j <= 5 ? 1.0 / (std::sqrt(24.0) - j) : 0.0;
    d.compare(label("a_%d", j), e.graph.coefficient(MultiIndex{j})(0), expect, 1e-12);
  }
  d.compare("sigma(E1)", *e.sigma, 4, 0);
  d.artifacts["ssm"] = to_json(e);
  return d;
}

inline DemoResult demo_example2() {
  DemoResult d{"example2", {}, {}};
  {
    const FirstOrderSystem sys = resonant_slow_manifold_system(2);
    const Spectrum s = compute_spectrum(sys.A);
    bool thrown = false;
    std::string where;
    try {
      compute_ssm(sys, make_subspace(s, {0}), 4);
    } catch (const ResonanceObstruction& err) {
      thrown = true;
      where = err.monomial();
      d.artifacts["obstruction"] = {{"monomial", err.monomial()}, {"direction", err.direction()}, {"message", err.what()}};
    }
    d.check("x^2 coupling raises ResonanceObstruction", thrown);
    d.check("obstruction at p=(2)", where == "(2)", where);
  }
  const FirstOrderSystem sys = resonant_slow_manifold_system(3);
  const Spectrum s = compute_spectrum(sys.A);
  const SSMExpansion e = compute_ssm(sys, make_subspace(s, {0}), 4);
  bool free_at_2 = false;
  for (const auto& f : e.free_coefficients) free_at_2 = free_at_2 || f.p == MultiIndex{2};
  d.check("x^3 coupling leaves p=(2) free", free_at_2);
  d.compare("free coefficient h_2", e.graph.coefficient(MultiIndex{2})(0), 0.0, 1e-14);
  d.compare("h_3", e.graph.coefficient(MultiIndex{3})(0), -1.0, 1e-12);
  for (double C : {0.0, 1.0, -2.0}) {
    double worst = 0.0;
    for (int i = -10; i <= 10; ++i) {
      const double x = 0.05 * i;
      RVector pt(2);
      pt << x, C * x * x - x * x * x;
      const RVector v = sys.vector_field(pt);
      worst = std::max(worst, std::abs(v(1) - (2.0 * C * x - 3.0 * x * x) * v(0)));
    }
    char q[64];
    std::snprintf(q, sizeof q, "y=Cx^2-x^3 residual, C=%g", C);
    d.bound(q, worst, 1e-14);
  }
  d.artifacts["ssm_cubic"] = to_json(e);
  return d;
}

inline DemoResult demo_euler() {
  DemoResult d{"euler", {}, {}};
  const FirstOrderSystem sys = euler_system();
  const Spectrum s = compute_spectrum(sys.A);
  const SSMExpansion e = formal_series_no_guard(sys, make_subspace(s, {0}), 12);
  const RealPolyMap g = graph_over_coordinates(e, {0});
  double fact = 1.0;
  for (int j = 1; j <= 12; ++j) {
    if (j > 1) fact *= (j - 1);
    const double a = g.coefficient(MultiIndex{j})(0);
    d.compare(label("a_%d = (%d)!", j, j - 1), std::round(a), fact, 0.0);
  }
  const DivergenceDiagnosis dg = divergence_diagnostic(g);
  d.check("divergence diagnostic", dg.classification() == "divergent", dg.classification());
  d.artifacts["graph_y_of_x"] = to_json(g);
  d.artifacts["growth_slope"] = dg.growth_slope;
  return d;
}

inline DemoResult demo_example3() {
  DemoResult d{"example3", {}, {}};
  const FirstOrderSystem sys = shaw_pierre_system();
  const Spectrum s = compute_spectrum(sys.A);
  d.compare("Re lambda_1", s.eigenvalues[0].real(), -0.0741, 5e-5);
  d.compare("Im lambda_1", s.eigenvalues[0].imag(), 1.0027, 5e-5);
  d.compare("Re lambda_2", s.eigenvalues[2].real(), -0.3759, 5e-5);
  d.compare("Im lambda_2", s.eigenvalues[2].imag(), 1.6812, 5e-5);
  const SpectralSubspace e1 = make_subspace(s, {0, 1}), e2 = make_subspace(s, {2, 3});
  d.compare("sigma(E1)", *spectral_quotients(s, e1).sigma, 5, 0);
  d.compare("sigma(E2)", *spectral_quotients(s, e2).sigma, 0, 0);
  const ResonanceReport r = check_nonresonance(s, e1, ResonanceMode::autonomous);
  d.check("autonomous nonresonance on E1", r.passed);
  d.artifacts["spectrum"] = to_json(s);
  d.artifacts["nonresonance_E1"] = to_json(r);
  return d;
}

inline DemoResult demo_shaw_pierre() {
  DemoResult d = demo_example3();
  d.name = "shaw-pierre";
  const FirstOrderSystem sys = shaw_pierre_system();
  const Spectrum s = compute_spectrum(sys.A);
  const SpectralSubspace e1 = make_subspace(s, {0, 1});
  const SSMExpansion e = compute_ssm(sys, e1, 6);
  for (const auto& c : shaw_pierre_published_ssm())
    d.compare(label("z%d y1^%d y2^%d", c.row + 1, c.p1, c.p2), e.graph.coefficient(MultiIndex{c.p1, c.p2})(c.row), c.value, 5e-4);
  double even = 0.0;
  for (const auto& [p, c] : e.graph.terms())
    if (p.order() % 2 == 0) even = std::max(even, c.cwiseAbs().maxCoeff());
  d.bound("max even-order coefficient", even, 1e-12);
  RVector eta0(2);
  eta0 << 1.2, 0.0;
  const double err3 = lift_and_compare(sys, parametrize_ssm(sys, e1, 3), eta0, 0.0, 40.0).max_distance;
  const double err5 = lift_and_compare(sys, parametrize_ssm(sys, e1, 5), eta0, 0.0, 40.0).max_distance;
  d.check("order-5 lift error < order-3 lift error", err5 < err3, std::to_string(err5) + " < " + std::to_string(err3));
  d.artifacts["ssm"] = to_json(e);
  d.artifacts["lift_error"] = {{"order3", err3}, {"order5", err5}};
  return d;
}

inline DemoResult demo_example4() {
  DemoResult d{"example4", {}, {}};
  const double eps = 0.5, r24 = std::sqrt(24.0);
  const FirstOrderSystem sys = periodically_forced_slow_manifold_system(eps);
  const Spectrum s = compute_spectrum(sys.A);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(s, {0}), 6, 2);
  const TrigCoefficients h = e.coefficients_at(eps);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.37 * i;
    const double expect = eps * r24 / 25.0 * (std::sin(t) - std::cos(t) / r24);
    const double got = h.count(MultiIndex{0}) ? h.at(MultiIndex{0}).evaluate(t)(0) : 0.0;
    worst = std::max(worst, std::abs(got - expect));
  }
  d.bound("max |a0(t) - closed form| over 50 times", worst, 1e-10);
  for (int j = 2; j <= 6; ++j) {
    double dev = 0.0;
    const double expect = j <= 5 ? 1.0 / (r24 - j) : 0.0;
    for (int i = 0; i < 50; ++i) {
      const double got = h.count(MultiIndex{j}) ? h.at(MultiIndex{j}).evaluate(0.37 * i)(0) : 0.0;
      dev = std::max(dev, std::abs(got - expect));
    }
    d.bound(label("max |a_%d(t) - 1/(sqrt24-%d)|", j, j), dev, 1e-10);
  }
  d.artifacts["forced_ssm"] = to_json(e);
  return d;
}

inline DemoResult demo_example5() {
  DemoResult d{"example5", {}, {}};
  const double eps = 0.5, r24 = std::sqrt(24.0), r2 = std::sqrt(2.0);
  const FirstOrderSystem sys = quasiperiodically_forced_slow_manifold_system(eps);
  const Spectrum s = compute_spectrum(sys.A);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, make_subspace(s, {0}), 6, 1);
  const TrigCoefficients h = e.coefficients_at(eps);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.41 * i;
    const double expect = eps * (r24 / 25.0 * (std::sin(t) - std::cos(t) / r24) + r24 / 26.0 * (std::sin(r2 * t) - r2 / r24 * std::cos(r2 * t)));
    const double got = h.count(MultiIndex{0}) ? h.at(MultiIndex{0}).evaluate(t)(0) : 0.0;
    worst = std::max(worst, std::abs(got - expect));
  }
  d.bound("max |a0(phi1,phi2) - closed form| over 50 times", worst, 1e-10);
  for (int j = 2; j <= 5; ++j) {
    const double got = h.count(MultiIndex{j}) ? h.at(MultiIndex{j}).evaluate(1.3)(0) : 0.0;
    d.compare(label("a_%d", j), got, 1.0 / (r24 - j), 1e-10);
  }
  d.artifacts["forced_ssm"] = to_json(e);
  return d;
}

inline DemoResult demo_shaw_pierre_forced() {
  DemoResult d{"shaw-pierre-forced", {}, {}};
  const FirstOrderSystem sys = shaw_pierre_forced_system(0.1);
  const Spectrum s = compute_spectrum(sys.A);
  const NNMSolution nnm = compute_nnm(sys, 1);
  const auto& first = nnm.per_order.at(0).terms.at(Harmonic{1});
  const RVector a = s.real_transform_inverse * first.sin, b = s.real_transform_inverse * first.cos;
  const auto& ref = shaw_pierre_published_nnm();
  for (int i = 0; i < 4; ++i) d.compare(label("sin component %d", i + 1), a(i), ref[0][static_cast<std::size_t>(i)], 5e-4);
  for (int i = 0; i < 4; ++i) d.compare(label("cos component %d", i + 1), b(i), ref[1][static_cast<std::size_t>(i)], 5e-4);
  d.bound("NNM residual at eps=0.01", nnm_residual(sys, nnm, 0.01), 1e-4);
  d.artifacts["nnm"] = to_json(nnm);
  return d;
}

inline DemoResult demo_example6() {
  DemoResult d{"example6", {}, {}};
  const double eps = 0.1;
  const FirstOrderSystem sys = shaw_pierre_forced_system(eps);
  const Spectrum s = compute_spectrum(sys.A);
  const SpectralSubspace e1 = make_subspace(s, {0, 1});
  const ResonanceReport r = check_nonresonance(s, e1, ResonanceMode::forced);
  d.compare("Sigma(E1)", spectral_quotients(s, e1).Sigma, 5, 0);
  d.check("forced nonresonance on E1", r.passed);
  d.compare("near-miss margin |5 Re l1 - Re l2|", r.min_margin, 0.0054, 5e-4);
  const ForcedSSMExpansion e = compute_forced_ssm(sys, e1, 6, 3);
  d.bound("forced invariance defect", forced_invariance_defect(e, sys), 1e-10);
  const ProjectionErrorReport pe = nnm_projection_error(sys, e, compute_nnm(sys, 1), {0.02, 0.05, 0.1});
  d.compare("NNM-to-SSM projection error slope", pe.slope.value_or(0.0), 3.0, 0.3);
  d.artifacts["nonresonance_forced"] = to_json(r);
  d.artifacts["projection_error"] = to_json(pe);
  d.artifacts["forced_ssm"] = to_json(e);
  return d;
}

}  // namespace detail

inline const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> n = {"euler", "example1", "example2", "example3", "example4", "example5", "example6", "shaw-pierre", "shaw-pierre-forced"};
  return n;
}

inline DemoResult run_demo(const std::string& name) {
  static const std::map<std::string, std::function<DemoResult()>> table = {
      {"euler", detail::demo_euler},       {"example1", detail::demo_example1},       {"example2", detail::demo_example2},
      {"example3", detail::demo_example3}, {"example4", detail::demo_example4},       {"example5", detail::demo_example5},
      {"example6", detail::demo_example6}, {"shaw-pierre", detail::demo_shaw_pierre}, {"shaw-pierre-forced", detail::demo_shaw_pierre_forced}};
  auto it = table.find(name);
  if (it == table.end()) throw InvalidInput("unknown demo '" + name + "'");
  return it->second();
}

inline nlohmann::json to_json(const DemoResult& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : d.rows)
    rows.push_back({{"quantity", r.quantity}, {"computed", r.computed}, {"expected", r.expected}, {"tolerance", r.tolerance}, {"passed", r.passed}, {"note", r.note}});
  return {{"demo", d.name}, {"passed", d.passed()}, {"rows", rows}};
}

/// Fixed-width PASS/FAIL table.
inline std::string format_table(const DemoResult& d) {
  std::string out;
  char buf[256];
  for (const auto& r : d.rows) {
    std::snprintf(buf, sizeof buf, "%-4s  %-48s  computed % .10g  expected % .10g  tol %.1e%s%s\n", r.passed ? "PASS" : "FAIL", r.quantity.c_str(), r.computed,
                  r.expected, r.tolerance, r.note.empty() ? "" : "  ", r.note.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%s: %s\n", d.name.c_str(), d.passed() ? "PASS" : "FAIL");
  return out + buf;
}

}  // namespace ssmkit

#endif  // SSMKIT_DEMOS_HPP
