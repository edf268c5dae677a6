#ifndef SSMKIT_REDUCE_HPP
#define SSMKIT_REDUCE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/forced.hpp"
#include "ssmkit/fourier_taylor.hpp"
#include "ssmkit/integrate.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/ssm.hpp"
#include "ssmkit/system.hpp"
#include "ssmkit/trig_series.hpp"

namespace ssmkit {

/// graph: W = (η, h(η, φ)) and the whole reduced vector field sits in Λ.
/// normal_form: W is a near-identity embedding and Λ keeps only the terms
/// whose inner divisor vanishes.
enum class ParametrizationStyle { graph, normal_form };

inline const char* to_string(ParametrizationStyle s) { return s == ParametrizationStyle::graph ? "graph" : "normal-form"; }

inline ParametrizationStyle parse_style(const std::string& s) {
  if (s == "graph" || s == "graph-normalized") return ParametrizationStyle::graph;
  if (s == "normal-form" || s == "normal_form") return ParametrizationStyle::normal_form;
  throw InvalidInput("unknown parametrization style '" + s + "' (expected graph or normal-form)");
}

/// Polynomial in η whose coefficients are trigonometric series in Ωt.
struct TrigPolyMap {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  RVector frequencies;
  TrigCoefficients terms;

  RVector evaluate(const RVector& eta, double t) const {
    if (static_cast<std::size_t>(eta.size()) != n_in) throw DimensionMismatch("TrigPolyMap: argument has the wrong dimension");
    RVector out = RVector::Zero(static_cast<Eigen::Index>(n_out));
    const RVector phi = frequencies * t;
    for (const auto& [p, ts] : terms) {
      double mono = 1.0;
      for (std::size_t a = 0; a < p.size(); ++a) mono *= std::pow(eta(static_cast<Eigen::Index>(a)), p[a]);
      if (mono != 0.0) out += mono * ts.evaluate_phases(phi);
    }
    return out;
  }

  /// Time-independent part (harmonic 0).
  RealPolyMap autonomous_part(int order) const {
    RealPolyMap r(n_in, n_out, order);
    for (const auto& [p, ts] : terms) {
      auto it = ts.terms.find(Harmonic(ts.n_freq(), 0));
      if (it != ts.terms.end()) r.add_term(p, it->second.cos);
    }
    r.prune(0.0);
    return r;
  }
};

struct InnerResonance {
  MultiIndex p;
  int eps_power = 0;
  Harmonic m;
  /// Master eigenvalue index (0-based, spectral order).
  std::size_t j = 0;
  complex divisor;
};

struct ReduceOptions {
  SpectralTolerances tolerances;
  double residual_tolerance = 1e-10;
  /// ε-order for forced systems; ignored for autonomous ones.
  int eps_order = 1;
  std::optional<int> harmonic_bound;
};

/// SSM as an embedding W(η, φ) with reduced dynamics η' = Λ(η, φ).
struct ReducedModel {
  ParametrizationStyle style = ParametrizationStyle::graph;
  std::size_t dim = 0;
  int order = 0;
  int eps_order = 0;
  int harmonic_bound = 0;
  double epsilon = 0.0;
  bool forced = false;
  RVector frequencies;
  ModalSplit split;
  /// Complex eigencoordinates: W maps u to ξ, R is the reduced field in u.
  FTSeries embedding_complex;
  FTSeries reduced_complex;
  /// Real modal coordinates (y, z) stacked master-first.
  TrigPolyMap embedding;
  TrigPolyMap reduced_field;
  std::vector<InnerResonance> inner_resonances;
  std::vector<std::string> warnings;

  RVector modal_point(const RVector& eta, double t = 0.0) const { return embedding.evaluate(eta, t); }

  /// Point in the original coordinates.
  RVector lift(const RVector& eta, double t = 0.0) const {
    const RVector w = modal_point(eta, t);
    const auto q = static_cast<Eigen::Index>(split.q());
    return split.physical(w.head(q), w.tail(w.size() - q));
  }

  RVector field(const RVector& eta, double t = 0.0) const { return reduced_field.evaluate(eta, t); }
};

namespace detail {

inline bool in_master(const ModalSplit& m, std::size_t j, std::size_t& pos) {
  for (std::size_t a = 0; a < m.master.size(); ++a)
    if (m.master[a] == j) {
      pos = a;
      return true;
    }
  return false;
}

/// F(W) - D_u W (R - Λ_E u) with F = g + ε Σ P_m e^{i<m, φ>}.
inline FTSeries parametrization_right_side(const ModalSplit& m, const HarmonicPolyMaps& forcing, const FTSeries& W, const FTSeries& NR, const FTCaps& caps) {
  const FTSeries Wc = W.with_caps(caps);
  FTSeries rhs = compose(m.g, Wc, caps) + forcing_along(forcing, Wc, m.dim(), caps);
  for (std::size_t a = 0; a < m.q(); ++a) rhs = rhs - multiply(partial_derivative(Wc, a), NR.component(a).with_caps(caps), caps);
  return rhs;
}

inline TrigPolyMap to_trig_poly(const TrigCoefficients& c, std::size_t n_in, std::size_t n_out, const RVector& freq) {
  TrigPolyMap t;
  t.n_in = n_in;
  t.n_out = n_out;
  t.frequencies = freq;
  t.terms = c;
  return t;
}

}  // namespace detail

/// Order-by-order solution of the invariance equation Λ W + F(W) = D_u W R + ∂_φ W Ω
/// in the complex eigenbasis.
///
/// Autonomous systems use the Taylor order `order`; forced systems also expand
/// to ε^eps_order, solving every level |p| + l <= order + eps_order.
inline ReducedModel parametrize_ssm(const FirstOrderSystem& sys, const SpectralSubspace& E, int order, ParametrizationStyle style = ParametrizationStyle::graph,
                                    const ReduceOptions& opt = {}) {
  detail::require_forcing_shape(sys);
  if (order < 1) throw InvalidInput("parametrize_ssm: order must be at least 1");
  const Spectrum s = compute_spectrum(sys.A, opt.tolerances);
  s.require_semisimple();
  s.require_stable();
  const ModalSplit m = make_modal_split(sys, s, E);
  const bool forced = sys.forcing && !sys.forcing->terms.empty();
  const int r = forced ? std::max(0, opt.eps_order) : 0;
  const RVector freq = detail::forcing_frequencies(sys);
  const std::size_t k = static_cast<std::size_t>(freq.size());
  const int H = forced ? opt.harmonic_bound.value_or(default_harmonic_bound(sys, std::max(1, r))) : 0;
  const int Wcap = order + r;
  const std::size_t q = m.q(), n = m.dim();

  ReducedModel rm;
  rm.style = style;
  rm.dim = q;
  rm.order = order;
  rm.eps_order = r;
  rm.harmonic_bound = H;
  rm.epsilon = sys.epsilon;
  rm.forced = forced;
  rm.frequencies = freq;
  rm.split = m;

  const HarmonicPolyMaps forcing = forced ? forcing_in_basis(*sys.forcing, s.eigenvectors, s.eigenvectors_inverse, std::max(max_f0_degree(sys), Wcap)) : HarmonicPolyMaps{};
  const FTCaps caps{Wcap, r, H, Wcap};
  const Harmonic zero(k, 0);
  FTSeries W(q, n, k, caps), NR(q, q, k, caps), R(q, q, k, caps);
  for (std::size_t a = 0; a < q; ++a) {
    CVector e = CVector::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(m.master[a])) = 1.0;
    W.add_term(FTKey{MultiIndex::unit(q, a), 0, zero}, e);
    CVector l = CVector::Zero(static_cast<Eigen::Index>(q));
    l(static_cast<Eigen::Index>(a)) = m.lambda_master[a];
    R.add_term(FTKey{MultiIndex::unit(q, a), 0, zero}, l);
  }

  for (int d = 1; d <= Wcap; ++d) {
    for (int l = 0; l <= std::min(r, d); ++l) {
      if (l == 0 && d < 2) continue;
      const FTCaps level_caps{Wcap, r, H, d};
      const FTSeries rhs = detail::parametrization_right_side(m, forcing, W, NR, level_caps).level(d, l);
      for (const auto& [key, c] : rhs.terms()) {
        CVector w = CVector::Zero(static_cast<Eigen::Index>(n));
        CVector rr = CVector::Zero(static_cast<Eigen::Index>(q));
        for (std::size_t j = 0; j < n; ++j) {
          const complex res = c(static_cast<Eigen::Index>(j));
          complex dv(0.0, 0.0);
          for (std::size_t a = 0; a < q; ++a) dv += static_cast<double>(key.p[a]) * m.lambda_master[a];
          dv += complex(0.0, forcing_phase_rate(freq, key.m)) - s.eigenvalues[j];
          const bool small = std::abs(dv) < opt.tolerances.resonance * (1.0 + std::abs(s.eigenvalues[j]));
          std::size_t a = 0;
          if (detail::in_master(m, j, a)) {
            if (style == ParametrizationStyle::graph || small) {
              rr(static_cast<Eigen::Index>(a)) = res;
              if (style == ParametrizationStyle::normal_form && std::abs(res) > 0.0) rm.inner_resonances.push_back({key.p, key.l, key.m, j, dv});
            } else {
              w(static_cast<Eigen::Index>(j)) = res / dv;
            }
            continue;
          }
          if (small) {
            if (std::abs(res) > opt.residual_tolerance)
              throw ResonanceObstruction("parametrize_ssm: outer resonance obstruction at monomial " + key.p.to_string() + ", eps^" + std::to_string(key.l) +
                                             ", eigenvalue " + std::to_string(j + 1),
                                         key.p.to_string(), static_cast<int>(j) + 1);
            rm.warnings.push_back("free coefficient at monomial " + key.p.to_string() + ", eigenvalue " + std::to_string(j + 1) + ": set to 0");
            continue;
          }
          w(static_cast<Eigen::Index>(j)) = res / dv;
        }
        W.add_term(key, w);
        NR.add_term(key, rr);
        R.add_term(key, rr);
      }
      W.prune();
      NR.prune();
      R.prune();
    }
  }
  rm.embedding_complex = W;
  rm.reduced_complex = R;

  const CMatrix sel_master = detail::row_selector(m.master, n);
  const CMatrix sel_enslaved = detail::row_selector(m.enslaved, n);
  const TrigCoefficients wy = sum_eps_orders(realify(W.left_multiply(sel_master), m.master_pairing, m.master_pairing, order, r, freq), sys.epsilon);
  const TrigCoefficients wz = sum_eps_orders(realify(W.left_multiply(sel_enslaved), m.master_pairing, m.enslaved_pairing, order, r, freq), sys.epsilon);
  TrigCoefficients emb;
  RMatrix top = RMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  top.topRows(static_cast<Eigen::Index>(q)) = RMatrix::Identity(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  RMatrix bottom = RMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n - q));
  bottom.bottomRows(static_cast<Eigen::Index>(n - q)) = RMatrix::Identity(static_cast<Eigen::Index>(n - q), static_cast<Eigen::Index>(n - q));
  for (const auto& [p, ts] : wy) emb[p] = ts.left_multiply(top);
  for (const auto& [p, ts] : wz) {
    auto it = emb.find(p);
    if (it == emb.end())
      emb[p] = ts.left_multiply(bottom);
    else
      it->second += ts.left_multiply(bottom);
  }
  rm.embedding = detail::to_trig_poly(emb, q, n, freq);
  rm.reduced_field = detail::to_trig_poly(sum_eps_orders(realify(R, m.master_pairing, m.master_pairing, order, r, freq), sys.epsilon), q, q, freq);
  if (forced && style == ParametrizationStyle::graph)
    rm.warnings.push_back("graph style is centred at the origin: the forced response is a periodic solution of the reduced field, not W(0, phi)");
  return rm;
}

/// Largest complex coefficient of Λ W + F(W) - D_u W R - ∂_φ W Ω over the solved levels.
inline double parametrization_invariance_defect(const ReducedModel& rm, const FirstOrderSystem& sys) {
  const auto& m = rm.split;
  const int Wcap = rm.order + rm.eps_order;
  const FTCaps caps{Wcap, rm.eps_order, rm.harmonic_bound, Wcap};
  const HarmonicPolyMaps forcing =
      rm.forced ? forcing_in_basis(*sys.forcing, m.spectrum.eigenvectors, m.spectrum.eigenvectors_inverse, std::max(max_f0_degree(sys), Wcap)) : HarmonicPolyMaps{};
  const FTSeries& W = rm.embedding_complex;
  const FTSeries& R = rm.reduced_complex;
  FTSeries lhs = compose(m.g, W.with_caps(caps), caps) + forcing_along(forcing, W.with_caps(caps), m.dim(), caps);
  FTSeries lin(W.n_vars(), W.n_out(), W.n_freq(), caps);
  for (const auto& [key, c] : W.terms()) {
    CVector v(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) v(j) = m.spectrum.eigenvalues[static_cast<std::size_t>(j)] * c(j);
    lin.add_term(key, v);
  }
  lhs = lhs + lin - phase_derivative(W.with_caps(caps), rm.frequencies);
  for (std::size_t a = 0; a < m.q(); ++a) lhs = lhs - multiply(partial_derivative(W.with_caps(caps), a), R.component(a).with_caps(caps), caps);
  double worst = 0.0;
  for (const auto& [key, c] : lhs.terms()) worst = std::max(worst, c.cwiseAbs().maxCoeff());
  return worst;
}

inline Trajectory integrate(const ReducedModel& rm, const RVector& eta0, double t0, double t1, const IntegrationOptions& opt = {}) {
  if (static_cast<std::size_t>(eta0.size()) != rm.dim) throw DimensionMismatch("integrate: reduced initial state has the wrong dimension");
  return integrate([&rm](double t, const RVector& eta) { return rm.field(eta, t); }, eta0, t0, t1, opt);
}

struct LiftComparison {
  std::vector<double> times;
  std::vector<double> distances;
  double max_distance = 0.0;
  Trajectory reduced;
  Trajectory full;
};

/// Reduced trajectory from η0 lifted through W against the full trajectory from W(η0, t0).
inline LiftComparison lift_and_compare(const FirstOrderSystem& sys, const ReducedModel& rm, const RVector& eta0, double t0, double t1, std::size_t samples = 400,
                                       const IntegrationOptions& opt = {}) {
  if (samples < 2) throw InvalidInput("lift_and_compare: need at least two samples");
  LiftComparison c;
  c.reduced = integrate(rm, eta0, t0, t1, opt);
  c.full = integrate(sys, rm.lift(eta0, t0), t0, t1, opt);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double dist = (rm.lift(c.reduced.at(t), t) - c.full.at(t)).norm();
    c.times.push_back(t);
    c.distances.push_back(dist);
    c.max_distance = std::max(c.max_distance, dist);
  }
  return c;
}

struct ProjectionErrorReport {
  std::vector<double> epsilons;
  /// Mean over one period of |z_nnm(t) - h(y_nnm(t), t)|^2.
  std::vector<double> mse;
  std::vector<double> rms;
  /// log-log slope of rms versus ε; absent below the noise floor.
  std::optional<double> slope;
  bool below_noise_floor = false;
  std::string message;
};

/// Distance between the ε-expanded NNM and its projection onto the forced SSM graph.
inline ProjectionErrorReport nnm_projection_error(const FirstOrderSystem& sys, const ForcedSSMExpansion& e, const NNMSolution& nnm, const std::vector<double>& epsilons,
                                                  std::size_t samples = 256, double noise_floor = 1e-12) {
  if (epsilons.size() < 3) throw InvalidInput("nnm_projection_error: need at least 3 epsilon samples");
  if (sys.dim() != e.split.dim()) throw DimensionMismatch("nnm_projection_error: system and SSM dimensions differ");
  ProjectionErrorReport rep;
  rep.epsilons = epsilons;
  const double T = nnm.period();
  std::vector<double> fe, fr;
  for (double eps : epsilons) {
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double t = T * static_cast<double>(i) / static_cast<double>(samples);
      const RVector x = nnm.evaluate(t, eps);
      const RVector y = e.split.Tinv_master * x;
      const RVector z = e.split.Tinv_enslaved * x;
      acc += (z - e.evaluate(y, t, eps)).squaredNorm();
    }
    const double mse = acc / static_cast<double>(samples);
    rep.mse.push_back(mse);
    rep.rms.push_back(std::sqrt(mse));
    if (eps > 0.0 && std::sqrt(mse) > noise_floor) {
      fe.push_back(eps);
      fr.push_back(std::sqrt(mse));
    }
  }
  if (fe.size() < 2) {
    rep.below_noise_floor = true;
    char buf[120];
    std::snprintf(buf, sizeof buf, "below noise floor: projection error does not exceed %.3g; slope fit rejected", noise_floor);
    rep.message = buf;
    return rep;
  }
  rep.slope = fit_loglog_slope(fe, fr);
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const TrigPolyMap& t) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [p, ts] : t.terms) terms.push_back({{"p", p.exponents()}, {"series", to_json(ts)}});
  return {{"n_in", t.n_in}, {"n_out", t.n_out}, {"frequencies", detail::vector_to_json(t.frequencies)}, {"terms", terms}};
}

inline nlohmann::json to_json(const ReducedModel& rm) {
  nlohmann::json idx = nlohmann::json::array();
  for (std::size_t j : rm.split.subspace.indices) idx.push_back(j + 1);
  nlohmann::json inner = nlohmann::json::array();
  for (const auto& r : rm.inner_resonances)
    inner.push_back({{"p", r.p.exponents()}, {"eps_power", r.eps_power}, {"m", r.m}, {"j", r.j + 1}, {"divisor", complex_to_json(r.divisor)}});
  return {{"style", to_string(rm.style)},
          {"dim", rm.dim},
          {"order", rm.order},
          {"eps_order", rm.eps_order},
          {"epsilon", rm.epsilon},
          {"forced", rm.forced},
          {"subspace", idx},
          {"embedding", to_json(rm.embedding)},
          {"reduced_field", to_json(rm.reduced_field)},
          {"inner_resonances", inner},
          {"warnings", rm.warnings},
          {"modal_transform", detail::matrix_to_json(rm.split.spectrum.real_transform)}};
}

inline nlohmann::json to_json(const LiftComparison& c) {
  return {{"times", c.times}, {"distances", c.distances}, {"max_distance", c.max_distance}};
}

inline nlohmann::json to_json(const ProjectionErrorReport& r) {
  nlohmann::json j = {{"epsilons", r.epsilons}, {"mse", r.mse}, {"rms", r.rms}, {"below_noise_floor", r.below_noise_floor}, {"message", r.message}};
  j["slope"] = r.slope ? nlohmann::json(*r.slope) : nlohmann::json(nullptr);
  return j;
}

}  // namespace ssmkit

#endif  // SSMKIT_REDUCE_HPP
