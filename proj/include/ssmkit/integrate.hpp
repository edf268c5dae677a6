#ifndef SSMKIT_INTEGRATE_HPP
#define SSMKIT_INTEGRATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/system.hpp"

namespace ssmkit {

struct IntegrationOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 1e-3;
};

/// Accepted steps of an adaptive integration with a quartic dense output per step.
struct Trajectory {
  struct Segment {
    double t0 = 0.0, t1 = 0.0;
    RVector x0, x1, f0, f1, xm;
  };

  std::vector<double> times;
  std::vector<RVector> states;
  std::vector<Segment> segments;
  std::string method = "dopri5";
  double rtol = 0.0;
  double atol = 0.0;

  std::size_t dim() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }

  /// Dense state at t within [t_begin, t_end].
  RVector at(double t) const {
    if (times.empty()) throw InvalidInput("Trajectory::at: empty trajectory");
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12) throw InvalidInput("Trajectory::at: time outside the integrated span");
    if (segments.empty()) return states.front();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    k = std::min(k, segments.size() - 1);
    return interpolate(segments[k], t);
  }

  /// Time derivative of the dense output.
  RVector derivative_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    k = std::min(k, segments.size() - 1);
    return interpolate_derivative(segments[k], t);
  }

  static RVector interpolate(const Segment& s, double t) {
    const double h = s.t1 - s.t0;
    const double th = (t - s.t0) / h;
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
    const RVector mid = 0.5 * (s.x0 + s.x1) + (h / 8.0) * (s.f0 - s.f1);
    const double bump = th * th * (1 - th) * (1 - th);
    return h00 * s.x0 + h10 * h * s.f0 + h01 * s.x1 + h11 * h * s.f1 + 16.0 * bump * (s.xm - mid);
  }

  static RVector interpolate_derivative(const Segment& s, double t) {
    const double h = s.t1 - s.t0;
    const double th = (t - s.t0) / h;
    const double d00 = 6 * th * th - 6 * th, d10 = 3 * th * th - 4 * th + 1;
    const double d01 = -6 * th * th + 6 * th, d11 = 3 * th * th - 2 * th;
    const RVector mid = 0.5 * (s.x0 + s.x1) + (h / 8.0) * (s.f0 - s.f1);
    const double dbump = 2 * th * (1 - th) * (1 - 2 * th);
    return (d00 * s.x0 + d01 * s.x1) / h + d10 * s.f0 + d11 * s.f1 + 16.0 * dbump * (s.xm - mid) / h;
  }
};

using VectorField = std::function<RVector(double, const RVector&)>;

/// Adaptive Dormand-Prince 5(4) from t0 to t1 (t1 > t0).
inline Trajectory integrate(const VectorField& f, const RVector& x0, double t0, double t1, const IntegrationOptions& opt = {}) {
  if (!x0.allFinite()) throw InvalidInput("integrate: initial state is not finite");
  if (!(t1 > t0)) throw InvalidInput("integrate: t_end must exceed t_start");
  using State = std::vector<double>;
  namespace ode = boost::numeric::odeint;
  const std::size_t n = static_cast<std::size_t>(x0.size());
  auto rhs = [&](const State& x, State& dx, double t) {
    const RVector v = f(t, Eigen::Map<const RVector>(x.data(), static_cast<Eigen::Index>(n)));
    if (static_cast<std::size_t>(v.size()) != n) throw DimensionMismatch("integrate: vector field returned the wrong dimension");
    dx.assign(v.data(), v.data() + n);
  };
  auto toR = [n](const State& s) { return RVector(Eigen::Map<const RVector>(s.data(), static_cast<Eigen::Index>(n))); };

  auto stepper = ode::make_dense_output(opt.atol, opt.rtol, ode::runge_kutta_dopri5<State>());
  State s0(x0.data(), x0.data() + n);
  stepper.initialize(s0, t0, std::min(opt.initial_step, t1 - t0));

  Trajectory tr;
  tr.rtol = opt.rtol;
  tr.atol = opt.atol;
  tr.times.push_back(t0);
  tr.states.push_back(x0);
  State mid(n);
  try {
    while (stepper.current_time() < t1) {
      const auto span = stepper.do_step(rhs);
      const double a = span.first;
      double b = span.second;
      if (!(b > a)) throw NumericalFailure("integrate: step-size underflow at t = " + std::to_string(a));
      Trajectory::Segment seg;
      seg.t0 = a;
      seg.t1 = b;
      seg.x0 = toR(stepper.previous_state());
      seg.x1 = toR(stepper.current_state());
      seg.f0 = tr.segments.empty() ? f(a, seg.x0) : tr.segments.back().f1;
      seg.f1 = f(b, seg.x1);
      stepper.calc_state(0.5 * (a + b), mid);
      seg.xm = toR(mid);
      if (!seg.x1.allFinite()) throw NumericalFailure("integrate: state became non-finite at t = " + std::to_string(b));
      if (b > t1) {
        Trajectory::Segment full = seg;
        const RVector xe = Trajectory::interpolate(full, t1);
        const RVector xmid = Trajectory::interpolate(full, 0.5 * (a + t1));
        seg.t1 = t1;
        seg.x1 = xe;
        seg.f1 = Trajectory::interpolate_derivative(full, t1);
        seg.xm = xmid;
        b = t1;
      }
      tr.segments.push_back(seg);
      tr.times.push_back(b);
      tr.states.push_back(seg.x1);
      if (tr.segments.size() > 50'000'000) throw NumericalFailure("integrate: too many steps");
    }
  } catch (const ode::step_adjustment_error& e) {
    throw NumericalFailure(std::string("integrate: step-size underflow: ") + e.what());
  } catch (const ode::no_progress_error& e) {
    throw NumericalFailure(std::string("integrate: no progress: ") + e.what());
  }
  return tr;
}

inline Trajectory integrate(const FirstOrderSystem& sys, const RVector& x0, double t0, double t1, const IntegrationOptions& opt = {}) {
  sys.validate();
  if (static_cast<std::size_t>(x0.size()) != sys.dim()) throw DimensionMismatch("integrate: initial state has the wrong dimension");
  return integrate([&sys](double t, const RVector& x) { return sys.vector_field(x, t); }, x0, t0, t1, opt);
}

/// n·x = offset.
struct Hyperplane {
  RVector normal;
  double offset = 0.0;

  double value(const RVector& x) const { return normal.dot(x) - offset; }
};

enum class CrossingDirection { positive, negative, both };

struct Crossing {
  double time = 0.0;
  RVector state;
  /// Sign of d/dt (n·x) at the crossing.
  bool positive = true;
};

struct PoincareSectionResult {
  Hyperplane hyperplane;
  CrossingDirection direction = CrossingDirection::both;
  std::vector<Crossing> crossings;
  std::size_t tangential = 0;
  std::vector<std::string> warnings;
};

struct PoincareOptions {
  double time_tolerance = 1e-10;
  /// |d/dt (n·x)| below this (relative to |n|·|x'|) counts as tangential.
  double tangency_tolerance = 1e-8;
  int max_iterations = 60;
};

namespace detail {

/// Bisection until the bracket shrinks by 1e-4, then safeguarded secant; at most max_iterations in total.
inline double refine_crossing(const std::function<double(double)>& s, double a, double b, double sa, double sb, const PoincareOptions& opt) {
  if (sb == 0.0) return b;
  const double width = b - a;
  int it = 0;
  while (b - a > 1e-4 * width && it < opt.max_iterations) {
    const double m = 0.5 * (a + b);
    const double sm = s(m);
    ++it;
    if (sm == 0.0) return m;
    if ((sm < 0) == (sa < 0)) {
      a = m;
      sa = sm;
    } else {
      b = m;
      sb = sm;
    }
  }
  double x = b;
  while (it < opt.max_iterations) {
    double next = b - sb * (b - a) / (sb - sa);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double sn = s(next);
    ++it;
    const double step = std::abs(next - x);
    x = next;
    if (sn == 0.0 || step < std::max(1e-3 * opt.time_tolerance, 4e-16 * std::abs(x))) break;
    if ((sn < 0) == (sa < 0)) {
      a = next;
      sa = sn;
    } else {
      b = next;
      sb = sn;
    }
  }
  return x;
}

}  // namespace detail

/// Crossings of a hyperplane, located on the dense output.
inline PoincareSectionResult poincare_section(const Trajectory& tr, const Hyperplane& hp, CrossingDirection dir = CrossingDirection::both,
                                              const PoincareOptions& opt = {}) {
  if (static_cast<std::size_t>(hp.normal.size()) != tr.dim()) throw DimensionMismatch("poincare_section: normal has the wrong dimension");
  if (hp.normal.norm() == 0.0) throw InvalidInput("poincare_section: zero normal vector");
  PoincareSectionResult out;
  out.hyperplane = hp;
  out.direction = dir;
  bool all_parallel = true;
  auto rate_ok = [&](const RVector& fx, double rate) { return std::abs(rate) > opt.tangency_tolerance * hp.normal.norm() * std::max(fx.norm(), 1e-300); };
  for (const auto& seg : tr.segments) {
    if (rate_ok(seg.f0, hp.normal.dot(seg.f0)) || rate_ok(seg.f1, hp.normal.dot(seg.f1))) all_parallel = false;
    auto s = [&](double t) { return hp.value(Trajectory::interpolate(seg, t)); };
    const double tm = 0.5 * (seg.t0 + seg.t1);
    const double pts[3] = {seg.t0, tm, seg.t1};
    const double vals[3] = {hp.value(seg.x0), s(tm), hp.value(seg.x1)};
    for (int i = 0; i < 2; ++i) {
      const double a = pts[i], b = pts[i + 1];
      const double sa = vals[i], sb = vals[i + 1];
      if (!((sa < 0 && sb >= 0) || (sa > 0 && sb <= 0))) continue;
      const double tc = detail::refine_crossing(s, a, b, sa, sb, opt);
      const RVector xc = Trajectory::interpolate(seg, tc);
      const RVector fc = Trajectory::interpolate_derivative(seg, tc);
      const double rate = hp.normal.dot(fc);
      if (!rate_ok(fc, rate)) {
        ++out.tangential;
        char buf[160];
        std::snprintf(buf, sizeof buf, "tangential crossing at t = %.10g discarded (|d/dt| = %.3g)", tc, std::abs(rate));
        out.warnings.push_back(buf);
        continue;
      }
      const bool pos = rate > 0;
      if ((dir == CrossingDirection::positive && !pos) || (dir == CrossingDirection::negative && pos)) continue;
      out.crossings.push_back({tc, xc, pos});
    }
  }
  if (all_parallel && !tr.segments.empty()) {
    ++out.tangential;
    out.warnings.push_back("tangential: the trajectory runs parallel to the section");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export. CSV columns: t, x1..xn (trajectory); index, t, direction, x1..xn (section).

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string to_csv(const Trajectory& tr) {
  std::string s = "t";
  for (std::size_t i = 0; i < tr.dim(); ++i) s += ",x" + std::to_string(i + 1);
  s += "\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    s += detail::fmt17(tr.times[k]);
    for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) s += "," + detail::fmt17(tr.states[k](i));
    s += "\n";
  }
  return s;
}

inline std::string to_csv(const PoincareSectionResult& r) {
  std::string s = "index,t,direction";
  const std::size_t n = static_cast<std::size_t>(r.hyperplane.normal.size());
  for (std::size_t i = 0; i < n; ++i) s += ",x" + std::to_string(i + 1);
  s += "\n";
  for (std::size_t k = 0; k < r.crossings.size(); ++k) {
    const auto& c = r.crossings[k];
    s += std::to_string(k) + "," + detail::fmt17(c.time) + "," + (c.positive ? "+1" : "-1");
    for (Eigen::Index i = 0; i < c.state.size(); ++i) s += "," + detail::fmt17(c.state(i));
    s += "\n";
  }
  return s;
}

inline nlohmann::json to_json(const Trajectory& tr) {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& x : tr.states) st.push_back(detail::vector_to_json(x));
  return {{"times", tr.times}, {"states", st}, {"integrator", {{"method", tr.method}, {"rtol", tr.rtol}, {"atol", tr.atol}, {"steps", tr.segments.size()}}}};
}

inline const char* to_string(CrossingDirection d) {
  switch (d) {
    case CrossingDirection::positive:
      return "positive";
    case CrossingDirection::negative:
      return "negative";
    default:
      return "both";
  }
}

inline nlohmann::json to_json(const PoincareSectionResult& r) {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : r.crossings) cs.push_back({{"t", c.time}, {"state", detail::vector_to_json(c.state)}, {"direction", c.positive ? 1 : -1}});
  return {{"hyperplane", {{"normal", detail::vector_to_json(r.hyperplane.normal)}, {"offset", r.hyperplane.offset}}},
          {"direction", to_string(r.direction)},
          {"crossings", cs},
          {"tangential", r.tangential},
          {"warnings", r.warnings}};
}

}  // namespace ssmkit

#endif  // SSMKIT_INTEGRATE_HPP
