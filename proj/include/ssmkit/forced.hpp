#ifndef SSMKIT_FORCED_HPP
#define SSMKIT_FORCED_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/fourier_taylor.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/ssm.hpp"
#include "ssmkit/system.hpp"
#include "ssmkit/trig_series.hpp"

namespace ssmkit {

/// x_ε(t) = Σ_{l=1..r} ε^l ξ_l(Ωt) in the original coordinates.
struct NNMSolution {
  int eps_order = 0;
  std::vector<TrigSeries> per_order;
  double epsilon = 0.0;
  RVector frequencies;
  int harmonic_bound = 0;
  bool commensurate = true;
  std::vector<std::string> warnings;

  TrigSeries combined(double eps) const {
    TrigSeries out;
    double w = 1.0;
    for (const auto& s : per_order) {
      w *= eps;
      out += s.scaled(w);
    }
    if (out.dim == 0 && !per_order.empty()) out = TrigSeries(frequencies, per_order.front().dim);
    return out;
  }

  RVector evaluate(double t, double eps) const {
    RVector x = RVector::Zero(per_order.empty() ? 0 : static_cast<Eigen::Index>(per_order.front().dim));
    double w = 1.0;
    for (const auto& s : per_order) {
      w *= eps;
      x += w * s.evaluate(t);
    }
    return x;
  }

  RVector evaluate(double t) const { return evaluate(t, epsilon); }

  RVector velocity(double t, double eps) const {
    RVector v = RVector::Zero(per_order.empty() ? 0 : static_cast<Eigen::Index>(per_order.front().dim));
    double w = 1.0;
    for (const auto& s : per_order) {
      w *= eps;
      v += w * s.derivative().evaluate(t);
    }
    return v;
  }

  /// Period of the first frequency.
  double period() const { return 2.0 * std::acos(-1.0) / frequencies(0); }
};

inline int max_f0_degree(const FirstOrderSystem& sys) { return std::max(1, sys.f0.max_degree()); }

/// eps_order × (max input harmonic order) × (max f0 degree).
inline int default_harmonic_bound(const FirstOrderSystem& sys, int eps_order) {
  const int h = sys.forcing ? std::max(1, sys.forcing->max_harmonic()) : 1;
  return std::max(1, eps_order) * h * max_f0_degree(sys);
}

struct ForcedOptions {
  SpectralTolerances tolerances;
  double residual_tolerance = 1e-10;
  /// Truncated-to-retained harmonic energy ratio that triggers a warning.
  double truncation_warning = 0.01;
};

namespace detail {

inline double energy(const CVector& c) { return c.squaredNorm(); }

inline void require_forcing_shape(const FirstOrderSystem& sys) {
  sys.validate();
  if (sys.forcing && sys.forcing->n_freq() == 0 && !sys.forcing->terms.empty()) throw InvalidInput("forcing has terms but no frequencies");
}

inline RVector forcing_frequencies(const FirstOrderSystem& sys) {
  if (sys.forcing && sys.forcing->n_freq() > 0) return sys.forcing->frequencies;
  return RVector::Constant(1, 1.0);
}

inline std::size_t forcing_freq_count(const FirstOrderSystem& sys) { return static_cast<std::size_t>(forcing_frequencies(sys).size()); }

}  // namespace detail

/// Harmonic balance in powers of ε for the attracting periodic or quasiperiodic response.
inline NNMSolution compute_nnm(const FirstOrderSystem& sys, int eps_order, std::optional<int> harmonic_bound = std::nullopt, const ForcedOptions& opt = {}) {
  detail::require_forcing_shape(sys);
  if (eps_order < 1) throw InvalidInput("compute_nnm: eps_order must be at least 1");
  const Spectrum s = compute_spectrum(sys.A, opt.tolerances);
  s.require_stable();
  const std::size_t n = sys.dim();
  const RVector freq = detail::forcing_frequencies(sys);
  const std::size_t k = static_cast<std::size_t>(freq.size());
  const int H = harmonic_bound.value_or(default_harmonic_bound(sys, eps_order));
  if (H < 0) throw InvalidInput("compute_nnm: harmonic bound must be nonnegative");

  NNMSolution sol;
  sol.eps_order = eps_order;
  sol.epsilon = sys.epsilon;
  sol.frequencies = freq;
  sol.harmonic_bound = H;
  sol.commensurate = sys.forcing ? sys.forcing->commensurate : true;

  const int deg = max_f0_degree(sys);
  const CMatrix I = CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const HarmonicPolyMaps forcing = sys.forcing ? forcing_in_basis(*sys.forcing, I, I, deg) : HarmonicPolyMaps{};
  const ComplexPolyMap f0 = sys.f0.to_complex();
  const FTCaps store{0, eps_order, H, eps_order};
  const FTCaps wide{0, eps_order, -1, eps_order};
  FTSeries X(0, n, k, store);
  const CMatrix Ac = sys.A.cast<complex>();

  for (int l = 1; l <= eps_order; ++l) {
    const FTSeries rhs = (compose(f0, X, wide) + forcing_along(forcing, X, n, wide)).level(l, l);
    double kept = 0.0, dropped = 0.0;
    for (const auto& [key, c] : rhs.terms()) {
      if (harmonic_order(key.m) > H) {
        dropped += detail::energy(c);
        continue;
      }
      kept += detail::energy(c);
      const double w = forcing_phase_rate(freq, key.m);
      const CMatrix L = complex(0.0, w) * I - Ac;
      Eigen::JacobiSVD<CMatrix> svd(L);
      const double smin = svd.singularValues().minCoeff();
      if (smin < 1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
        throw NumericalFailure("compute_nnm: singular harmonic solve at harmonic " + harmonic_to_string(key.m) + "; an eigenvalue lies on the imaginary axis");
      X.add_term(key, L.partialPivLu().solve(c));
    }
    if (dropped > opt.truncation_warning * std::max(kept, 1e-300))
      sol.warnings.push_back("harmonic bound " + std::to_string(H) + " too small at order eps^" + std::to_string(l) + ": truncated energy is " +
                             std::to_string(100.0 * dropped / std::max(kept, 1e-300)) + "% of retained");
    X.prune();
  }

  for (int l = 1; l <= eps_order; ++l) {
    std::map<Harmonic, CVector> ex;
    for (const auto& [key, c] : X.terms())
      if (key.l == l) ex[key.m] = c;
    sol.per_order.push_back(TrigSeries::from_exponential(freq, n, ex));
    sol.per_order.back().harmonic_bound = H;
  }
  return sol;
}

/// max over sampled t of |x' - A x - f0(x) - ε f1(x, t)| along the NNM at ε.
inline double nnm_residual(const FirstOrderSystem& sys, const NNMSolution& nnm, double eps, int samples = 200) {
  double worst = 0.0;
  const double T = nnm.period();
  for (int i = 0; i < samples; ++i) {
    const double t = T * i / samples;
    const RVector x = nnm.evaluate(t, eps);
    RVector f = sys.A * x + sys.f0.evaluate(x);
    if (sys.forcing) f += eps * sys.forcing->evaluate(x, t);
    worst = std::max(worst, (nnm.velocity(t, eps) - f).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct ForcedDivisorRecord {
  MultiIndex p;
  int eps_power = 0;
  Harmonic m;
  /// Enslaved eigenvalue index (0-based, spectral order).
  std::size_t l = 0;
  complex divisor;
};

/// Fourier-Taylor graph z = h(y, Ωt) = Σ_p h_p(t) y^p over E in real modal coordinates.
struct ForcedSSMExpansion {
  ModalSplit split;
  int taylor_order = 0;
  int eps_order = 0;
  int harmonic_bound = 0;
  RVector frequencies;
  bool commensurate = true;
  double epsilon = 0.0;
  int Sigma = 0;
  int uniqueness_class = 0;
  /// Complex eigencoordinate coefficients, complete for |p| + l <= taylor_order + eps_order.
  FTSeries graph_complex;
  /// by_eps_order[l][p]: ε^l part of h_p, |p| <= taylor_order.
  std::vector<TrigCoefficients> by_eps_order;
  /// h_p(t) at `epsilon`.
  TrigCoefficients coefficients;
  std::vector<ForcedDivisorRecord> divisor_log;
  std::vector<ForcedDivisorRecord> free_coefficients;
  ResonanceReport nonresonance;
  std::vector<std::string> warnings;

  const SpectralSubspace& subspace() const { return split.subspace; }

  TrigCoefficients coefficients_at(double eps) const { return sum_eps_orders(by_eps_order, eps); }

  RVector evaluate(const RVector& y, double t, double eps) const {
    if (static_cast<std::size_t>(y.size()) != split.q()) throw DimensionMismatch("forced graph: y has the wrong dimension");
    RVector z = RVector::Zero(static_cast<Eigen::Index>(split.enslaved.size()));
    const RVector phi = frequencies * t;
    double w = 1.0;
    for (std::size_t l = 0; l < by_eps_order.size(); ++l) {
      if (l > 0) w *= eps;
      if (w == 0.0) break;
      for (const auto& [p, ts] : by_eps_order[l]) {
        double mono = 1.0;
        for (std::size_t a = 0; a < p.size(); ++a) mono *= std::pow(y(static_cast<Eigen::Index>(a)), p[a]);
        if (mono != 0.0) z += (w * mono) * ts.evaluate_phases(phi);
      }
    }
    return z;
  }

  RVector evaluate(const RVector& y, double t) const { return evaluate(y, t, epsilon); }

  RVector physical_point(const RVector& y, double t) const { return split.physical(y, evaluate(y, t)); }
};

inline RVector evaluate_forced_graph(const ForcedSSMExpansion& e, const RVector& y, double t) { return e.evaluate(y, t); }

namespace detail {

/// ξ(u, φ) = (u on master slots, H on enslaved slots).
inline FTSeries forced_embedding(const ModalSplit& m, const FTSeries& h) {
  const std::size_t n = m.dim(), q = m.q();
  FTSeries xi(q, n, h.n_freq(), h.caps());
  const Harmonic z(h.n_freq(), 0);
  for (std::size_t a = 0; a < q; ++a) {
    CVector e = CVector::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(m.master[a])) = 1.0;
    xi.add_term(FTKey{MultiIndex::unit(q, a), 0, z}, e);
  }
  CMatrix place = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m.enslaved.size()));
  for (std::size_t b = 0; b < m.enslaved.size(); ++b) place(static_cast<Eigen::Index>(m.enslaved[b]), static_cast<Eigen::Index>(b)) = 1.0;
  return xi + h.left_multiply(place);
}

inline CMatrix row_selector(const std::vector<std::size_t>& rows, std::size_t n) {
  CMatrix sel = CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < rows.size(); ++i) sel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rows[i])) = 1.0;
  return sel;
}

/// Nonlinear and forcing part of the invariance equation:
/// F_w(u, H) - D_u H F_u(u, H), with F = g + ε Σ P_m e^{i<m, φ>}.
inline FTSeries forced_right_side(const ModalSplit& m, const HarmonicPolyMaps& forcing, const FTSeries& h, const FTCaps& caps) {
  const FTSeries xi = forced_embedding(m, h).with_caps(caps);
  const FTSeries F = compose(m.g, xi, caps) + forcing_along(forcing, xi, m.dim(), caps);
  const FTSeries Fu = F.left_multiply(row_selector(m.master, m.dim()));
  FTSeries rhs = F.left_multiply(row_selector(m.enslaved, m.dim()));
  const FTSeries hc = h.with_caps(caps);
  for (std::size_t a = 0; a < m.q(); ++a) rhs = rhs - multiply(partial_derivative(hc, a), Fu.component(a), caps);
  return rhs;
}

inline complex forced_divisor(const ModalSplit& m, const FTKey& k, std::size_t b, const RVector& freq) {
  complex d(0.0, 0.0);
  for (std::size_t a = 0; a < m.q(); ++a) d += static_cast<double>(k.p[a]) * m.lambda_master[a];
  return d + complex(0.0, forcing_phase_rate(freq, k.m)) - m.lambda_enslaved[b];
}

}  // namespace detail

/// Forced SSM over E as a Fourier-Taylor graph.
///
/// Coefficients are solved level by level in w = |p| + l (l the ε-power) up
/// to taylor_order + eps_order, so every retained (|p| <= taylor_order,
/// l <= eps_order) coefficient is complete. A failed forced nonresonance
/// check is recorded, not thrown.
inline ForcedSSMExpansion compute_forced_ssm(const FirstOrderSystem& sys, const SpectralSubspace& E, int taylor_order, int eps_order,
                                             std::optional<int> harmonic_bound = std::nullopt, const ForcedOptions& opt = {}) {
  detail::require_forcing_shape(sys);
  if (taylor_order < 1) throw InvalidInput("compute_forced_ssm: taylor_order must be at least 1");
  if (eps_order < 0) throw InvalidInput("compute_forced_ssm: eps_order must be nonnegative");
  const Spectrum s = compute_spectrum(sys.A, opt.tolerances);
  s.require_semisimple();
  s.require_stable();
  const SpectralQuotients quot = spectral_quotients(s, E);
  const ModalSplit m = make_modal_split(sys, s, E);
  const RVector freq = detail::forcing_frequencies(sys);
  const std::size_t k = static_cast<std::size_t>(freq.size());
  const int H = harmonic_bound.value_or(default_harmonic_bound(sys, std::max(1, eps_order)));
  const int K = taylor_order, r = eps_order, W = K + r;

  ForcedSSMExpansion out;
  out.split = m;
  out.taylor_order = K;
  out.eps_order = r;
  out.harmonic_bound = H;
  out.frequencies = freq;
  out.commensurate = sys.forcing ? sys.forcing->commensurate : true;
  out.epsilon = sys.epsilon;
  out.Sigma = quot.Sigma;
  out.uniqueness_class = quot.Sigma + 1;
  out.nonresonance = check_nonresonance(s, E, ResonanceMode::forced, std::min(K, quot.Sigma), opt.tolerances);
  if (!out.nonresonance.passed) out.warnings.push_back("forced nonresonance check failed up to order " + std::to_string(out.nonresonance.max_order));
  for (const auto& nm : out.nonresonance.near_misses) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "near resonance: m = %s against eigenvalue %zu, margin %.4g", nm.m.to_string().c_str(), nm.l + 1, nm.margin);
    out.warnings.push_back(buf);
  }
  if (K < quot.Sigma + 1)
    out.warnings.push_back("taylor_order " + std::to_string(K) + " is below the uniqueness class " + std::to_string(quot.Sigma + 1));

  const int deg = std::max(max_f0_degree(sys), 1);
  const HarmonicPolyMaps forcing =
      sys.forcing ? forcing_in_basis(*sys.forcing, s.eigenvectors, s.eigenvectors_inverse, std::max(deg, W)) : HarmonicPolyMaps{};
  const std::size_t q = m.q(), ne = m.enslaved.size();
  const FTCaps caps{W, r, H, W};
  FTSeries h(q, ne, k, caps);

  for (int d = 1; d <= W; ++d) {
    for (int l = 0; l <= std::min(r, d); ++l) {
      const int pd = d - l;
      if (l == 0 && pd < 2) continue;
      const FTCaps level_caps{W, r, H, d};
      const FTSeries rhs = detail::forced_right_side(m, forcing, h, level_caps).level(d, l);
      for (const auto& [key, c] : rhs.terms()) {
        CVector v = CVector::Zero(static_cast<Eigen::Index>(ne));
        for (std::size_t b = 0; b < ne; ++b) {
          const complex dv = detail::forced_divisor(m, key, b, freq);
          const complex res = c(static_cast<Eigen::Index>(b));
          if (std::abs(dv) < opt.tolerances.resonance * (1.0 + std::abs(m.lambda_enslaved[b]))) {
            if (std::abs(res) > opt.residual_tolerance)
              throw ResonanceObstruction("forced resonance obstruction at monomial " + key.p.to_string() + ", eps^" + std::to_string(key.l) +
                                             ", enslaved eigenvalue " + std::to_string(m.enslaved[b] + 1) + ": divisor vanishes but the right-hand side is " +
                                             std::to_string(std::abs(res)),
                                         key.p.to_string(), static_cast<int>(m.enslaved[b]) + 1);
            out.free_coefficients.push_back({key.p, key.l, key.m, m.enslaved[b], dv});
            continue;
          }
          v(static_cast<Eigen::Index>(b)) = res / dv;
          out.divisor_log.push_back({key.p, key.l, key.m, m.enslaved[b], dv});
        }
        h.add_term(key, v);
      }
      h.prune();
    }
  }
  for (const auto& f : out.free_coefficients)
    out.warnings.push_back("free coefficient at monomial " + f.p.to_string() + ", eps^" + std::to_string(f.eps_power) + ", enslaved eigenvalue " +
                           std::to_string(f.l + 1) + ": set to 0");
  out.graph_complex = h;

  out.by_eps_order = realify(h, m.master_pairing, m.enslaved_pairing, K, r, freq);
  for (auto& level : out.by_eps_order)
    for (auto& kv : level) kv.second.harmonic_bound = H;
  out.coefficients = out.coefficients_at(out.epsilon);
  return out;
}

/// Complete invariance defect of the complex graph over its retained keys:
/// δ(p, m, l)·h - R with R the nonlinear right-hand side.
inline double forced_invariance_defect(const ForcedSSMExpansion& e, const FirstOrderSystem& sys) {
  const auto& m = e.split;
  const int W = e.taylor_order + e.eps_order;
  const HarmonicPolyMaps forcing = sys.forcing ? forcing_in_basis(*sys.forcing, m.spectrum.eigenvectors, m.spectrum.eigenvectors_inverse,
                                                                  std::max(max_f0_degree(sys), W))
                                               : HarmonicPolyMaps{};
  const FTCaps caps{W, e.eps_order, e.harmonic_bound, W};
  const FTSeries rhs = detail::forced_right_side(m, forcing, e.graph_complex, caps);
  std::map<FTKey, bool, FTKeyLess> keys;
  for (const auto& kv : rhs.terms()) keys[kv.first] = true;
  for (const auto& kv : e.graph_complex.terms()) keys[kv.first] = true;
  double worst = 0.0;
  for (const auto& [key, unused] : keys) {
    (void)unused;
    if (key.l == 0 && key.p.order() < 2) continue;
    const CVector hc = e.graph_complex.coefficient(key);
    const CVector rc = rhs.coefficient(key);
    for (std::size_t b = 0; b < m.enslaved.size(); ++b) {
      bool is_free = false;
      for (const auto& f : e.free_coefficients)
        if (f.p == key.p && f.eps_power == key.l && f.m == key.m && f.l == m.enslaved[b]) is_free = true;
      if (is_free) continue;
      const complex dv = detail::forced_divisor(m, key, b, e.frequencies);
      worst = std::max(worst, std::abs(dv * hc(static_cast<Eigen::Index>(b)) - rc(static_cast<Eigen::Index>(b))));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const NNMSolution& s) {
  nlohmann::json orders = nlohmann::json::array();
  for (std::size_t l = 0; l < s.per_order.size(); ++l) orders.push_back({{"order", l + 1}, {"series", to_json(s.per_order[l])}});
  nlohmann::json f = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.frequencies.size(); ++i) f.push_back(s.frequencies(i));
  return {{"eps_order", s.eps_order},   {"epsilon", s.epsilon}, {"frequencies", f},          {"harmonic_bound", s.harmonic_bound},
          {"commensurate", s.commensurate}, {"per_order", orders}, {"warnings", s.warnings}};
}

inline nlohmann::json to_json(const ForcedSSMExpansion& e) {
  nlohmann::json idx = nlohmann::json::array();
  for (std::size_t j : e.subspace().indices) idx.push_back(j + 1);
  nlohmann::json by = nlohmann::json::array();
  for (std::size_t l = 0; l < e.by_eps_order.size(); ++l) {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& [p, t] : e.by_eps_order[l]) cs.push_back({{"p", p.exponents()}, {"series", to_json(t)}});
    by.push_back({{"eps_power", l}, {"coefficients", cs}});
  }
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [p, t] : e.coefficients) coeffs.push_back({{"p", p.exponents()}, {"series", to_json(t)}});
  nlohmann::json fr = nlohmann::json::array();
  for (const auto& f : e.free_coefficients) fr.push_back({{"p", f.p.exponents()}, {"eps_power", f.eps_power}, {"m", f.m}, {"l", f.l + 1}});
  nlohmann::json meta = {{"subspace", idx},
                         {"taylor_order", e.taylor_order},
                         {"eps_order", e.eps_order},
                         {"harmonic_bound", e.harmonic_bound},
                         {"epsilon", e.epsilon},
                         {"commensurate", e.commensurate},
                         {"Sigma", e.Sigma},
                         {"uniqueness_class", e.uniqueness_class},
                         {"nonresonance", to_json(e.nonresonance)},
                         {"free_coefficients", fr},
                         {"warnings", e.warnings},
                         {"modal_transform", detail::matrix_to_json(e.split.spectrum.real_transform)}};
  return {{"coefficients", coeffs}, {"by_eps_order", by}, {"metadata", meta}};
}

}  // namespace ssmkit

#endif  // SSMKIT_FORCED_HPP
