#ifndef SSMKIT_FOURIER_TAYLOR_HPP
#define SSMKIT_FOURIER_TAYLOR_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/system.hpp"
#include "ssmkit/trig_series.hpp"

namespace ssmkit {

/// Monomial u^p, power ε^l and harmonic e^{i<m, φ>}.
struct FTKey {
  MultiIndex p;
  int l = 0;
  Harmonic m;

  int weight() const { return p.order() + l; }
};

struct FTKeyLess {
  bool operator()(const FTKey& a, const FTKey& b) const {
    if (a.p != b.p) return GradedLex{}(a.p, b.p);
    if (a.l != b.l) return a.l < b.l;
    return a.m < b.m;
  }
};

/// <m, Ω>.
inline double forcing_phase_rate(const RVector& freq, const Harmonic& m) {
  double w = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) w += m[i] * freq(static_cast<Eigen::Index>(i));
  return w;
}

/// Truncation of a Fourier-Taylor series. Negative entries mean unbounded.
struct FTCaps {
  int taylor = -1;
  int eps = -1;
  int harmonics = -1;
  int weight = -1;

  bool admits(const FTKey& k) const {
    if (taylor >= 0 && k.p.order() > taylor) return false;
    if (eps >= 0 && k.l > eps) return false;
    if (harmonics >= 0 && harmonic_order(k.m) > harmonics) return false;
    if (weight >= 0 && k.weight() > weight) return false;
    return true;
  }
};

/// Σ c_{p,l,m} u^p ε^l e^{i<m, φ>} with complex vector coefficients.
class FTSeries {
 public:
  using Map = std::map<FTKey, CVector, FTKeyLess>;

  FTSeries() = default;
  FTSeries(std::size_t n_vars, std::size_t n_out, std::size_t n_freq, FTCaps caps) : n_vars_(n_vars), n_out_(n_out), n_freq_(n_freq), caps_(caps) {}

  std::size_t n_vars() const noexcept { return n_vars_; }
  std::size_t n_out() const noexcept { return n_out_; }
  std::size_t n_freq() const noexcept { return n_freq_; }
  const FTCaps& caps() const noexcept { return caps_; }
  const Map& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  FTKey key(const MultiIndex& p, int l, const Harmonic& m) const { return FTKey{p, l, m}; }
  Harmonic zero_harmonic() const { return Harmonic(n_freq_, 0); }

  void add_term(const FTKey& k, const CVector& c) {
    if (k.p.size() != n_vars_ || k.m.size() != n_freq_) throw DimensionMismatch("FTSeries: key size mismatch");
    if (static_cast<std::size_t>(c.size()) != n_out_) throw DimensionMismatch("FTSeries: coefficient length mismatch");
    if (!caps_.admits(k)) return;
    auto it = terms_.find(k);
    if (it == terms_.end())
      terms_.emplace(k, c);
    else
      it->second += c;
  }

  CVector coefficient(const FTKey& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? CVector::Zero(static_cast<Eigen::Index>(n_out_)) : it->second;
  }

  void prune(double tol = kZeroPruneTolerance) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->second.cwiseAbs().maxCoeff() <= tol)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  FTSeries with_caps(FTCaps caps) const {
    FTSeries r(n_vars_, n_out_, n_freq_, caps);
    for (const auto& [k, c] : terms_) r.add_term(k, c);
    return r;
  }

  std::optional<int> min_weight() const {
    std::optional<int> w;
    for (const auto& kv : terms_) w = w ? std::min(*w, kv.first.weight()) : kv.first.weight();
    return w;
  }

  FTSeries component(std::size_t i) const {
    FTSeries r(n_vars_, 1, n_freq_, caps_);
    for (const auto& [k, c] : terms_)
      if (c(static_cast<Eigen::Index>(i)) != complex(0.0, 0.0)) r.terms_.emplace(k, CVector::Constant(1, c(static_cast<Eigen::Index>(i))));
    return r;
  }

  template <class M>
  FTSeries left_multiply(const M& mat) const {
    if (static_cast<std::size_t>(mat.cols()) != n_out_) throw DimensionMismatch("FTSeries::left_multiply: dimension mismatch");
    FTSeries r(n_vars_, static_cast<std::size_t>(mat.rows()), n_freq_, caps_);
    for (const auto& [k, c] : terms_) r.terms_.emplace(k, mat.template cast<complex>() * c);
    return r;
  }

  /// Terms with |p| + l == weight and ε-power l.
  FTSeries level(int weight, int l) const {
    FTSeries r(n_vars_, n_out_, n_freq_, caps_);
    for (const auto& [k, c] : terms_)
      if (k.l == l && k.weight() == weight) r.terms_.emplace(k, c);
    return r;
  }

  /// Multiplies by ε^dl e^{i<dm, φ>}.
  FTSeries shifted(int dl, const Harmonic& dm) const {
    FTSeries r(n_vars_, n_out_, n_freq_, caps_);
    for (const auto& [k, c] : terms_) {
      FTKey s = k;
      s.l += dl;
      for (std::size_t i = 0; i < n_freq_; ++i) s.m[i] += dm[i];
      r.add_term(s, c);
    }
    return r;
  }

  /// Coefficient ε-independent polynomial in u for a given (l, m).
  ComplexPolyMap slice(int l, const Harmonic& m, int order) const {
    ComplexPolyMap r(n_vars_, n_out_, order);
    for (const auto& [k, c] : terms_)
      if (k.l == l && k.m == m) r.add_term(k.p, c);
    return r;
  }

  /// Embeds a polynomial as the (ε^0, harmonic 0) part.
  static FTSeries from_poly(const ComplexPolyMap& p, std::size_t n_freq, FTCaps caps) {
    FTSeries r(p.n_in(), p.n_out(), n_freq, caps);
    const Harmonic z(n_freq, 0);
    for (const auto& [mi, c] : p.terms()) r.add_term(FTKey{mi, 0, z}, c);
    return r;
  }

  friend FTSeries operator+(const FTSeries& a, const FTSeries& b) {
    FTSeries r = a;
    for (const auto& [k, c] : b.terms_) r.add_term(k, c);
    return r;
  }

  friend FTSeries operator-(const FTSeries& a, const FTSeries& b) {
    FTSeries r = a;
    for (const auto& [k, c] : b.terms_) r.add_term(k, -c);
    return r;
  }

  FTSeries scaled(complex s) const {
    FTSeries r = *this;
    for (auto& kv : r.terms_) kv.second *= s;
    return r;
  }

 private:
  std::size_t n_vars_ = 0, n_out_ = 0, n_freq_ = 0;
  FTCaps caps_;
  Map terms_;
};

/// Truncated product; a scalar factor multiplies every component of the other.
inline FTSeries multiply(const FTSeries& a, const FTSeries& b, const FTCaps& caps) {
  if (a.n_vars() != b.n_vars() || a.n_freq() != b.n_freq()) throw DimensionMismatch("FTSeries multiply: shape mismatch");
  std::size_t n_out = a.n_out();
  if (a.n_out() != b.n_out()) {
    if (a.n_out() == 1)
      n_out = b.n_out();
    else if (b.n_out() != 1)
      throw DimensionMismatch("FTSeries multiply: output dimensions are neither equal nor scalar");
  }
  FTSeries r(a.n_vars(), n_out, a.n_freq(), caps);
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      FTKey k{ka.p + kb.p, ka.l + kb.l, ka.m};
      for (std::size_t i = 0; i < k.m.size(); ++i) k.m[i] += kb.m[i];
      if (!caps.admits(k)) continue;
      CVector prod;
      if (a.n_out() == b.n_out())
        prod = ca.cwiseProduct(cb);
      else if (a.n_out() == 1)
        prod = cb * ca(0);
      else
        prod = ca * cb(0);
      r.add_term(k, prod);
    }
  }
  return r;
}

/// outer(inner) for a polynomial outer map; inner must have no weight-0 terms
/// unless outer is affine.
inline FTSeries compose(const ComplexPolyMap& outer, const FTSeries& inner, const FTCaps& caps) {
  if (outer.n_in() != inner.n_out()) throw DimensionMismatch("FTSeries compose: outer.n_in != inner.n_out");
  const std::size_t nv = outer.n_in();
  std::vector<FTSeries> comps;
  std::vector<int> minw(nv, 0);
  constexpr int kNever = std::numeric_limits<int>::max() / 4;
  for (std::size_t i = 0; i < nv; ++i) {
    comps.push_back(inner.component(i).with_caps(caps));
    auto w = comps.back().min_weight();
    minw[i] = w ? *w : kNever;
  }
  FTSeries result(inner.n_vars(), outer.n_out(), inner.n_freq(), caps);
  const Harmonic z(inner.n_freq(), 0);
  std::map<MultiIndex, FTSeries, GradedLex> cache;
  auto mono = [&](auto&& self, const MultiIndex& m) -> const FTSeries& {
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    FTSeries val;
    if (m.is_zero()) {
      val = FTSeries(inner.n_vars(), 1, inner.n_freq(), caps);
      val.add_term(FTKey{MultiIndex(inner.n_vars()), 0, z}, CVector::Constant(1, complex(1.0, 0.0)));
    } else {
      std::size_t last = nv;
      for (std::size_t i = nv; i-- > 0;)
        if (m[i] > 0) {
          last = i;
          break;
        }
      val = multiply(self(self, m.lowered(last)), comps[last], caps);
    }
    return cache.emplace(m, std::move(val)).first->second;
  };
  for (const auto& [m, c] : outer.terms()) {
    long long lowest = 0;
    bool vanishes = false;
    for (std::size_t i = 0; i < nv; ++i) {
      if (m[i] == 0) continue;
      if (minw[i] == kNever) {
        vanishes = true;
        break;
      }
      lowest += static_cast<long long>(m[i]) * minw[i];
    }
    if (vanishes || (caps.weight >= 0 && lowest > caps.weight)) continue;
    for (const auto& [k, s] : mono(mono, m).terms()) result.add_term(k, c * s(0));
  }
  result.prune();
  return result;
}

/// ∂/∂u_var.
inline FTSeries partial_derivative(const FTSeries& a, std::size_t var) {
  FTSeries r(a.n_vars(), a.n_out(), a.n_freq(), a.caps());
  for (const auto& [k, c] : a.terms()) {
    if (k.p[var] == 0) continue;
    r.add_term(FTKey{k.p.lowered(var), k.l, k.m}, static_cast<double>(k.p[var]) * c);
  }
  return r;
}

/// Σ_j Ω_j ∂/∂φ_j.
inline FTSeries phase_derivative(const FTSeries& a, const RVector& freq) {
  FTSeries r(a.n_vars(), a.n_out(), a.n_freq(), a.caps());
  for (const auto& [k, c] : a.terms()) {
    const double w = forcing_phase_rate(freq, k.m);
    if (w != 0.0) r.add_term(k, complex(0.0, w) * c);
  }
  return r;
}

/// Forcing Σ_m P_m(ξ) e^{i<m, φ>} where x = basis·ξ, projected by basis_inverse.
using HarmonicPolyMaps = std::map<Harmonic, ComplexPolyMap>;

inline HarmonicPolyMaps forcing_in_basis(const Forcing& f, const CMatrix& basis, const CMatrix& basis_inverse, int order) {
  const std::size_t n = static_cast<std::size_t>(basis.rows());
  const complex I(0.0, 1.0);
  HarmonicPolyMaps out;
  const ComplexPolyMap lin = ComplexPolyMap::linear(basis, order);
  for (const auto& t : f.terms) {
    MultiIndex pw = t.powers.empty() ? MultiIndex(n) : MultiIndex(t.powers);
    const CVector cs = t.sin.cast<complex>(), cc = t.cos.cast<complex>();
    std::vector<std::pair<Harmonic, CVector>> parts;
    if (harmonic_order(t.harmonic) == 0) {
      parts.emplace_back(t.harmonic, cc);
    } else {
      parts.emplace_back(t.harmonic, 0.5 * (cc - I * cs));
      parts.emplace_back(negated(t.harmonic), 0.5 * (cc + I * cs));
    }
    for (const auto& [m, c] : parts) {
      ComplexPolyMap mono(n, n, std::max(order, pw.order()));
      mono.add_term(pw, c);
      ComplexPolyMap in_basis = compose(mono, lin, std::max(order, pw.order()), true).left_multiply(basis_inverse);
      auto it = out.find(m);
      if (it == out.end())
        out.emplace(m, in_basis);
      else
        it->second = add(it->second, in_basis);
    }
  }
  return out;
}

/// ε Σ_m P_m(inner) e^{i<m, φ>}.
inline FTSeries forcing_along(const HarmonicPolyMaps& forcing, const FTSeries& inner, std::size_t n_out, const FTCaps& caps) {
  FTSeries r(inner.n_vars(), n_out, inner.n_freq(), caps);
  for (const auto& [m, P] : forcing) r = r + compose(P, inner, caps).shifted(1, m);
  return r;
}

/// Real-coordinate form of a complex series, split by ε-power and truncated at
/// |p| <= order. Conjugate symmetry between harmonics m and -m is checked.
inline std::vector<TrigCoefficients> realify(const FTSeries& s, const ConjugatePairing& in, const ConjugatePairing& out, int order, int eps_order,
                                             const RVector& freq, double tol = 1e-9) {
  std::map<std::pair<int, Harmonic>, ComplexPolyMap> slices;
  for (const auto& kv : s.terms()) {
    if (kv.first.p.order() > order || kv.first.l > eps_order) continue;
    const auto key = std::make_pair(kv.first.l, kv.first.m);
    auto it = slices.find(key);
    if (it == slices.end()) it = slices.emplace(key, ComplexPolyMap(s.n_vars(), s.n_out(), order)).first;
    it->second.add_term(kv.first.p, kv.second);
  }
  double scale = 0.0, asym = 0.0;
  std::map<std::pair<int, Harmonic>, ComplexPolyMap> real;
  for (const auto& [key, sl] : slices) {
    ComplexPolyMap r = detail::to_real_coordinates(sl, in, out);
    scale = std::max(scale, r.max_abs_coefficient());
    real.emplace(key, std::move(r));
  }
  std::vector<std::map<MultiIndex, std::map<Harmonic, CVector>, GradedLex>> ex(static_cast<std::size_t>(std::max(eps_order, 0)) + 1);
  for (const auto& [key, r] : real) {
    auto it = real.find({key.first, negated(key.second)});
    for (const auto& [p, c] : r.terms()) {
      const CVector partner = it == real.end() ? CVector::Zero(c.size()) : it->second.coefficient(p);
      asym = std::max(asym, (c - partner.conjugate()).cwiseAbs().maxCoeff());
      ex[static_cast<std::size_t>(key.first)][p][key.second] = c;
    }
  }
  if (asym > tol * std::max(1.0, scale))
    throw ConjugateSymmetryError("realify: Fourier-Taylor coefficients are not conjugate-symmetric (residue " + std::to_string(asym) + ")");
  std::vector<TrigCoefficients> out_series(ex.size());
  for (std::size_t l = 0; l < ex.size(); ++l)
    for (const auto& [p, cm] : ex[l]) out_series[l].emplace(p, TrigSeries::from_exponential(freq, s.n_out(), cm));
  return out_series;
}

/// Σ_l ε^l by_order[l].
inline TrigCoefficients sum_eps_orders(const std::vector<TrigCoefficients>& by_order, double eps) {
  TrigCoefficients out;
  double w = 1.0;
  for (std::size_t l = 0; l < by_order.size(); ++l) {
    if (l > 0) w *= eps;
    for (const auto& [p, t] : by_order[l]) {
      auto it = out.find(p);
      if (it == out.end())
        out.emplace(p, t.scaled(w));
      else
        it->second += t.scaled(w);
    }
  }
  return out;
}

}  // namespace ssmkit

#endif  // SSMKIT_FOURIER_TAYLOR_HPP
