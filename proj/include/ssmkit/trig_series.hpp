#ifndef SSMKIT_TRIG_SERIES_HPP
#define SSMKIT_TRIG_SERIES_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"

namespace ssmkit {

using Harmonic = std::vector<int>;

/// First nonzero entry positive (the zero harmonic is canonical).
inline bool is_canonical(const Harmonic& m) {
  for (int v : m)
    if (v != 0) return v > 0;
  return true;
}

inline Harmonic negated(Harmonic m) {
  for (int& v : m) v = -v;
  return m;
}

inline int harmonic_order(const Harmonic& m) {
  int s = 0;
  for (int v : m) s += std::abs(v);
  return s;
}

inline std::string harmonic_to_string(const Harmonic& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + std::to_string(m[i]);
  return s + "]";
}

/// Real trigonometric polynomial Σ_m s_m sin<m, φ> + c_m cos<m, φ> with φ = Ω t,
/// stored over canonical harmonics only.
struct TrigSeries {
  struct Coeffs {
    RVector sin;
    RVector cos;
  };

  RVector frequencies;
  std::size_t dim = 0;
  std::map<Harmonic, Coeffs> terms;
  int harmonic_bound = 0;

  TrigSeries() = default;
  TrigSeries(RVector freq, std::size_t d) : frequencies(std::move(freq)), dim(d) {}

  std::size_t n_freq() const noexcept { return static_cast<std::size_t>(frequencies.size()); }

  void add(const Harmonic& m, const RVector& s, const RVector& c) {
    if (m.size() != n_freq()) throw DimensionMismatch("TrigSeries: harmonic length mismatch");
    if (static_cast<std::size_t>(s.size()) != dim || static_cast<std::size_t>(c.size()) != dim) throw DimensionMismatch("TrigSeries: coefficient length mismatch");
    Harmonic key = m;
    RVector ss = s;
    if (!is_canonical(m)) {
      key = negated(m);
      ss = -s;
    }
    auto it = terms.find(key);
    if (it == terms.end()) {
      Coeffs cf{ss, c};
      if (harmonic_order(key) == 0) cf.sin.setZero();
      terms.emplace(key, cf);
    } else {
      if (harmonic_order(key) != 0) it->second.sin += ss;
      it->second.cos += c;
    }
    harmonic_bound = std::max(harmonic_bound, harmonic_order(key));
  }

  /// Value at phases φ.
  RVector evaluate_phases(const RVector& phi) const {
    RVector out = RVector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& [m, c] : terms) {
      double th = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) th += m[i] * phi(static_cast<Eigen::Index>(i));
      out += c.sin * std::sin(th) + c.cos * std::cos(th);
    }
    return out;
  }

  RVector evaluate(double t) const { return evaluate_phases(frequencies * t); }

  /// Time derivative.
  TrigSeries derivative() const {
    TrigSeries d(frequencies, dim);
    for (const auto& [m, c] : terms) {
      double w = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) w += m[i] * frequencies(static_cast<Eigen::Index>(i));
      if (harmonic_order(m) == 0) continue;
      d.add(m, -w * c.cos, w * c.sin);
    }
    return d;
  }

  TrigSeries scaled(double s) const {
    TrigSeries r = *this;
    for (auto& kv : r.terms) {
      kv.second.sin *= s;
      kv.second.cos *= s;
    }
    return r;
  }

  TrigSeries left_multiply(const RMatrix& mat) const {
    if (static_cast<std::size_t>(mat.cols()) != dim) throw DimensionMismatch("TrigSeries::left_multiply: dimension mismatch");
    TrigSeries r(frequencies, static_cast<std::size_t>(mat.rows()));
    for (const auto& [m, c] : terms) r.add(m, mat * c.sin, mat * c.cos);
    return r;
  }

  TrigSeries& operator+=(const TrigSeries& o) {
    if (dim == 0 && terms.empty()) {
      *this = o;
      return *this;
    }
    if (o.dim != dim) throw DimensionMismatch("TrigSeries: adding series of different dimension");
    for (const auto& [m, c] : o.terms) add(m, c.sin, c.cos);
    return *this;
  }

  /// Exponential coefficients c_m over all (positive and negative) harmonics.
  std::map<Harmonic, CVector> to_exponential() const {
    std::map<Harmonic, CVector> out;
    const complex I(0.0, 1.0);
    for (const auto& [m, c] : terms) {
      if (harmonic_order(m) == 0) {
        out[m] = c.cos.cast<complex>();
        continue;
      }
      CVector cp = 0.5 * (c.cos.cast<complex>() - I * c.sin.cast<complex>());
      out[m] = cp;
      out[negated(m)] = cp.conjugate();
    }
    return out;
  }

  /// Folds exponential coefficients into sin/cos form; conjugate symmetry is
  /// assumed and enforced by averaging c_m with conj(c_{-m}).
  static TrigSeries from_exponential(const RVector& freq, std::size_t dim, const std::map<Harmonic, CVector>& coeffs) {
    TrigSeries t(freq, dim);
    for (const auto& [m, c] : coeffs) {
      if (!is_canonical(m)) continue;
      CVector cm = c;
      if (harmonic_order(m) != 0) {
        auto it = coeffs.find(negated(m));
        if (it != coeffs.end()) cm = 0.5 * (c + it->second.conjugate());
        t.add(m, -2.0 * cm.imag(), 2.0 * cm.real());
      } else {
        t.add(m, RVector::Zero(static_cast<Eigen::Index>(dim)), cm.real());
      }
    }
    for (const auto& [m, c] : coeffs)
      if (!is_canonical(m) && !coeffs.count(negated(m))) t.add(negated(m), -2.0 * c.conjugate().imag(), 2.0 * c.conjugate().real());
    return t;
  }

  double max_abs() const {
    double a = 0.0;
    for (const auto& kv : terms) a = std::max({a, kv.second.sin.cwiseAbs().maxCoeff(), kv.second.cos.cwiseAbs().maxCoeff()});
    return a;
  }
};

/// Monomial -> trigonometric coefficient.
using TrigCoefficients = std::map<MultiIndex, TrigSeries, GradedLex>;

inline nlohmann::json to_json(const TrigSeries& t) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [m, c] : t.terms) {
    nlohmann::json s = nlohmann::json::array(), k = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.sin.size(); ++i) {
      s.push_back(c.sin(i));
      k.push_back(c.cos(i));
    }
    terms.push_back({{"m", m}, {"sin", s}, {"cos", k}});
  }
  nlohmann::json f = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.frequencies.size(); ++i) f.push_back(t.frequencies(i));
  return {{"frequencies", f}, {"terms", terms}};
}

}  // namespace ssmkit

#endif  // SSMKIT_TRIG_SERIES_HPP
