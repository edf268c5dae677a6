#ifndef SSMKIT_POLY_MAP_HPP
#define SSMKIT_POLY_MAP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"

namespace ssmkit {

using complex = std::complex<double>;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// Coefficient vectors whose entries all fall below this are dropped.
inline constexpr double kZeroPruneTolerance = 1e-14;

/// Truncated multivariate polynomial map R^n_in -> R^n_out (or C^n_in -> C^n_out).
///
/// Terms are stored sparsely, keyed by exponent vector in graded-lex order, so
/// iteration and serialization are deterministic. Monomials above the
/// truncation order are never stored.
template <class T>
class PolyMap {
 public:
  using Scalar = T;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Terms = std::map<MultiIndex, Vector, GradedLex>;

  PolyMap() = default;
  PolyMap(std::size_t n_in, std::size_t n_out, int truncation_order)
      : n_in_(n_in), n_out_(n_out), order_(truncation_order) {
    if (truncation_order < 0) throw InvalidInput("PolyMap: negative truncation order");
  }

  static PolyMap identity(std::size_t n, int order) {
    return linear(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), order);
  }

  /// x -> m x.
  static PolyMap linear(const Matrix& m, int order) {
    PolyMap p(static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.rows()), order);
    if (order >= 1)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        p.add_term(MultiIndex::unit(p.n_in_, static_cast<std::size_t>(j)), m.col(j));
    return p;
  }

  static PolyMap constant(std::size_t n_in, const Vector& c, int order) {
    PolyMap p(n_in, static_cast<std::size_t>(c.size()), order);
    p.add_term(MultiIndex(n_in), c);
    return p;
  }

  /// Scalar-valued map equal to coeff * x^m.
  static PolyMap monomial(const MultiIndex& m, T coeff, int order) {
    PolyMap p(m.size(), 1, order);
    Vector c(1);
    c(0) = coeff;
    p.add_term(m, c);
    return p;
  }

  std::size_t n_in() const noexcept { return n_in_; }
  std::size_t n_out() const noexcept { return n_out_; }
  int truncation_order() const noexcept { return order_; }
  const Terms& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Accumulates c into the coefficient of x^m. Terms above the truncation order are ignored.
  void add_term(const MultiIndex& m, const Vector& c) {
    if (m.size() != n_in_) throw DimensionMismatch("PolyMap::add_term: multi-index length " + std::to_string(m.size()) + " != n_in " + std::to_string(n_in_));
    if (static_cast<std::size_t>(c.size()) != n_out_) throw DimensionMismatch("PolyMap::add_term: coefficient length mismatch");
    if (m.order() > order_) return;
    auto it = terms_.find(m);
    if (it == terms_.end())
      terms_.emplace(m, c);
    else
      it->second += c;
  }

  /// Overwrites the coefficient of x^m.
  void set_term(const MultiIndex& m, const Vector& c) {
    if (m.size() != n_in_ || static_cast<std::size_t>(c.size()) != n_out_) throw DimensionMismatch("PolyMap::set_term: dimension mismatch");
    if (m.order() > order_) return;
    terms_[m] = c;
  }

  Vector coefficient(const MultiIndex& m) const {
    auto it = terms_.find(m);
    if (it == terms_.end()) return Vector::Zero(static_cast<Eigen::Index>(n_out_));
    return it->second;
  }

  void prune(double tol = kZeroPruneTolerance) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->second.size() == 0 || it->second.cwiseAbs().maxCoeff() <= tol)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  template <class U>
  Eigen::Matrix<std::common_type_t<T, U>, Eigen::Dynamic, 1> evaluate(const Eigen::Matrix<U, Eigen::Dynamic, 1>& x) const {
    using R = std::common_type_t<T, U>;
    if (static_cast<std::size_t>(x.size()) != n_in_) throw DimensionMismatch("PolyMap::evaluate: point has length " + std::to_string(x.size()) + ", expected " + std::to_string(n_in_));
    Eigen::Matrix<R, Eigen::Dynamic, 1> out = Eigen::Matrix<R, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(n_out_));
    if (terms_.empty()) return out;
    const int max_deg = max_degree();
    std::vector<std::vector<R>> pw(n_in_, std::vector<R>(static_cast<std::size_t>(max_deg) + 1, R(1)));
    for (std::size_t i = 0; i < n_in_; ++i)
      for (int e = 1; e <= max_deg; ++e) pw[i][static_cast<std::size_t>(e)] = pw[i][static_cast<std::size_t>(e) - 1] * R(x(static_cast<Eigen::Index>(i)));
    for (const auto& [m, c] : terms_) {
      R mono(1);
      for (std::size_t i = 0; i < n_in_; ++i) mono *= pw[i][static_cast<std::size_t>(m[i])];
      out += c.template cast<R>() * mono;
    }
    return out;
  }

  template <class Derived>
  auto evaluate(const Eigen::MatrixBase<Derived>& x) const {
    return evaluate(Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>(x));
  }

  int max_degree() const {
    int d = 0;
    for (const auto& kv : terms_) d = std::max(d, kv.first.order());
    return d;
  }

  /// Lowest degree present, or nullopt for the zero map.
  std::optional<int> min_degree() const {
    if (terms_.empty()) return std::nullopt;
    return terms_.begin()->first.order();
  }

  PolyMap truncated(int order) const {
    PolyMap r(n_in_, n_out_, std::min(order, order_));
    for (const auto& [m, c] : terms_)
      if (m.order() <= r.order_) r.terms_.emplace(m, c);
    return r;
  }

  PolyMap homogeneous_part(int degree) const {
    PolyMap r(n_in_, n_out_, order_);
    for (const auto& [m, c] : terms_)
      if (m.order() == degree) r.terms_.emplace(m, c);
    return r;
  }

  PolyMap with_truncation_order(int order) const {
    PolyMap r(n_in_, n_out_, order);
    for (const auto& [m, c] : terms_)
      if (m.order() <= order) r.terms_.emplace(m, c);
    return r;
  }

  /// Scalar map for output component i.
  PolyMap component(std::size_t i) const {
    if (i >= n_out_) throw DimensionMismatch("PolyMap::component: index out of range");
    PolyMap r(n_in_, 1, order_);
    for (const auto& [m, c] : terms_) {
      Vector v(1);
      v(0) = c(static_cast<Eigen::Index>(i));
      r.terms_.emplace(m, v);
    }
    r.prune();
    return r;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& kv : terms_) m = std::max(m, kv.second.cwiseAbs().maxCoeff());
    return m;
  }

  PolyMap<complex> to_complex() const {
    PolyMap<complex> r(n_in_, n_out_, order_);
    for (const auto& [m, c] : terms_) r.set_term(m, c.template cast<complex>());
    return r;
  }

  /// Real part of every coefficient (complex maps only).
  PolyMap<double> real_part() const {
    PolyMap<double> r(n_in_, n_out_, order_);
    for (const auto& [m, c] : terms_) r.set_term(m, c.real());
    r.prune();
    return r;
  }

  PolyMap<double> imag_part() const {
    PolyMap<double> r(n_in_, n_out_, order_);
    if constexpr (is_complex_v<T>)
      for (const auto& [m, c] : terms_) r.set_term(m, c.imag());
    r.prune();
    return r;
  }

  /// Left-multiplies every coefficient vector: x -> mat * p(x).
  template <class M>
  PolyMap left_multiply(const M& mat) const {
    if (static_cast<std::size_t>(mat.cols()) != n_out_) throw DimensionMismatch("PolyMap::left_multiply: dimension mismatch");
    PolyMap r(n_in_, static_cast<std::size_t>(mat.rows()), order_);
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, Vector(mat * c));
    r.prune();
    return r;
  }

  friend bool operator==(const PolyMap& a, const PolyMap& b) {
    if (a.n_in_ != b.n_in_ || a.n_out_ != b.n_out_ || a.order_ != b.order_ || a.terms_.size() != b.terms_.size()) return false;
    auto ib = b.terms_.begin();
    for (const auto& [m, c] : a.terms_) {
      if (m != ib->first || c != ib->second) return false;
      ++ib;
    }
    return true;
  }

 private:
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  int order_ = 0;
  Terms terms_;
};

using RealPolyMap = PolyMap<double>;
using ComplexPolyMap = PolyMap<complex>;

namespace detail {

template <class T>
void require_same_shape(const PolyMap<T>& a, const PolyMap<T>& b, const char* op) {
  if (a.n_in() != b.n_in() || a.n_out() != b.n_out())
    throw DimensionMismatch(std::string(op) + ": dimension mismatch (" + std::to_string(a.n_in()) + "->" + std::to_string(a.n_out()) + " vs " +
                            std::to_string(b.n_in()) + "->" + std::to_string(b.n_out()) + ")");
}

}  // namespace detail

template <class T>
PolyMap<T> add(const PolyMap<T>& a, const PolyMap<T>& b) {
  detail::require_same_shape(a, b, "add");
  PolyMap<T> r(a.n_in(), a.n_out(), std::min(a.truncation_order(), b.truncation_order()));
  for (const auto& [m, c] : a.terms()) r.add_term(m, c);
  for (const auto& [m, c] : b.terms()) r.add_term(m, c);
  r.prune(0.0);
  return r;
}

template <class T>
PolyMap<T> scale(const PolyMap<T>& a, T s) {
  PolyMap<T> r(a.n_in(), a.n_out(), a.truncation_order());
  for (const auto& [m, c] : a.terms()) r.set_term(m, c * s);
  r.prune(0.0);
  return r;
}

template <class T>
PolyMap<T> subtract(const PolyMap<T>& a, const PolyMap<T>& b) {
  return add(a, scale(b, T(-1)));
}

template <class T>
PolyMap<T> operator+(const PolyMap<T>& a, const PolyMap<T>& b) {
  return add(a, b);
}
template <class T>
PolyMap<T> operator-(const PolyMap<T>& a, const PolyMap<T>& b) {
  return subtract(a, b);
}
template <class T>
PolyMap<T> operator*(T s, const PolyMap<T>& a) {
  return scale(a, s);
}

/// Product with every monomial of total degree above `order` discarded.
///
/// With equal output dimensions the product is taken componentwise; when one
/// factor is scalar-valued it multiplies every component of the other.
template <class T>
PolyMap<T> multiply_truncated(const PolyMap<T>& a, const PolyMap<T>& b, int order) {
  if (a.n_in() != b.n_in()) throw DimensionMismatch("multiply_truncated: input dimension mismatch");
  std::size_t n_out = 0;
  if (a.n_out() == b.n_out())
    n_out = a.n_out();
  else if (a.n_out() == 1)
    n_out = b.n_out();
  else if (b.n_out() == 1)
    n_out = a.n_out();
  else
    throw DimensionMismatch("multiply_truncated: output dimensions " + std::to_string(a.n_out()) + " and " + std::to_string(b.n_out()) +
                            " are neither equal nor scalar");
  PolyMap<T> r(a.n_in(), n_out, order);
  using V = typename PolyMap<T>::Vector;
  for (const auto& [ma, ca] : a.terms()) {
    const int oa = ma.order();
    if (oa > order) break;
    for (const auto& [mb, cb] : b.terms()) {
      if (oa + mb.order() > order) break;
      V prod;
      if (a.n_out() == b.n_out())
        prod = ca.cwiseProduct(cb);
      else if (a.n_out() == 1)
        prod = cb * ca(0);
      else
        prod = ca * cb(0);
      r.add_term(ma + mb, prod);
    }
  }
  r.prune();
  return r;
}

/// Taylor coefficients of outer(inner(x)) up to total degree `order`.
///
/// Exact for polynomial inputs. An inner map with a constant term is rejected
/// unless `allow_constant_term` is set; with it the result is still the exact
/// truncation because `outer` is a finite polynomial.
template <class T>
PolyMap<T> compose(const PolyMap<T>& outer, const PolyMap<T>& inner, int order, bool allow_constant_term = false) {
  if (outer.n_in() != inner.n_out())
    throw DimensionMismatch("compose: outer.n_in (" + std::to_string(outer.n_in()) + ") != inner.n_out (" + std::to_string(inner.n_out()) + ")");
  const std::size_t nv = outer.n_in();
  const bool has_const = !inner.coefficient(MultiIndex(inner.n_in())).isZero(0.0);
  if (has_const && !allow_constant_term) throw InvalidInput("compose: inner map has a constant term");

  std::vector<PolyMap<T>> comps;
  std::vector<int> min_deg(nv, 0);
  constexpr int kNever = std::numeric_limits<int>::max() / 4;
  for (std::size_t i = 0; i < nv; ++i) {
    comps.push_back(inner.component(i).with_truncation_order(order));
    auto md = comps.back().min_degree();
    min_deg[i] = md ? *md : kNever;
  }

  PolyMap<T> result(inner.n_in(), outer.n_out(), order);
  std::map<MultiIndex, PolyMap<T>, GradedLex> cache;
  auto mono = [&](auto&& self, const MultiIndex& m) -> const PolyMap<T>& {
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    PolyMap<T> val;
    if (m.is_zero()) {
      val = PolyMap<T>::monomial(MultiIndex(inner.n_in()), T(1), order);
    } else {
      std::size_t last = nv;
      for (std::size_t i = nv; i-- > 0;)
        if (m[i] > 0) {
          last = i;
          break;
        }
      val = multiply_truncated(self(self, m.lowered(last)), comps[last], order);
    }
    return cache.emplace(m, std::move(val)).first->second;
  };

  for (const auto& [m, c] : outer.terms()) {
    if (!has_const) {
      long long lowest = 0;
      bool vanishes = false;
      for (std::size_t i = 0; i < nv; ++i) {
        if (m[i] == 0) continue;
        if (min_deg[i] == kNever) {
          vanishes = true;
          break;
        }
        lowest += static_cast<long long>(m[i]) * min_deg[i];
      }
      if (vanishes || lowest > order) continue;
    }
    const PolyMap<T>& mv = mono(mono, m);
    for (const auto& [mm, s] : mv.terms()) result.add_term(mm, c * s(0));
  }
  result.prune();
  return result;
}

/// Term-by-term derivative with respect to input variable `var`.
template <class T>
PolyMap<T> partial_derivative(const PolyMap<T>& p, std::size_t var) {
  if (var >= p.n_in()) throw InvalidInput("partial_derivative: variable index " + std::to_string(var) + " out of range");
  PolyMap<T> r(p.n_in(), p.n_out(), std::max(0, p.truncation_order() - 1));
  for (const auto& [m, c] : p.terms()) {
    if (m[var] == 0) continue;
    r.add_term(m.lowered(var), c * T(static_cast<double>(m[var])));
  }
  r.prune();
  return r;
}

/// Stacks the outputs of several maps with a common input space.
template <class T>
PolyMap<T> stack(const std::vector<PolyMap<T>>& parts, int order) {
  if (parts.empty()) throw InvalidInput("stack: no parts");
  std::size_t n_out = 0;
  for (const auto& p : parts) {
    if (p.n_in() != parts.front().n_in()) throw DimensionMismatch("stack: input dimension mismatch");
    n_out += p.n_out();
  }
  PolyMap<T> r(parts.front().n_in(), n_out, order);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (const auto& [m, c] : p.terms()) {
      typename PolyMap<T>::Vector v = PolyMap<T>::Vector::Zero(static_cast<Eigen::Index>(n_out));
      v.segment(static_cast<Eigen::Index>(off), c.size()) = c;
      r.add_term(m, v);
    }
    off += p.n_out();
  }
  r.prune();
  return r;
}

// ---------------------------------------------------------------------------
// Conjugate-pair coordinates

/// Pairing of complex coordinates: partner[i] == i for a real direction,
/// partner[i] == i + 1 / partner[i + 1] == i for a conjugate pair.
///
/// For a pair (i, i+1) the complex coordinates relate to real ones (a, b) by
/// w_i = (a - i b) / 2, w_{i+1} = conj(w_i).
struct ConjugatePairing {
  std::vector<std::size_t> partner;

  static ConjugatePairing all_real(std::size_t n) {
    ConjugatePairing p;
    for (std::size_t i = 0; i < n; ++i) p.partner.push_back(i);
    return p;
  }

  std::size_t size() const noexcept { return partner.size(); }

  void validate() const {
    for (std::size_t i = 0; i < partner.size(); ++i) {
      const std::size_t j = partner[i];
      if (j >= partner.size() || partner[j] != i) throw InvalidInput("ConjugatePairing: partner table is not an involution");
      if (j != i && j != i + 1 && j + 1 != i) throw InvalidInput("ConjugatePairing: paired coordinates must be adjacent");
    }
  }

  /// S with w = S a, mapping real coordinates to complex ones.
  CMatrix real_to_complex() const {
    validate();
    const auto n = static_cast<Eigen::Index>(partner.size());
    CMatrix s = CMatrix::Zero(n, n);
    const complex I(0.0, 1.0);
    for (std::size_t i = 0; i < partner.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (partner[i] == i) {
        s(k, k) = 1.0;
      } else if (partner[i] == i + 1) {
        s(k, k) = 0.5;
        s(k, k + 1) = -0.5 * I;
        s(k + 1, k) = 0.5;
        s(k + 1, k + 1) = 0.5 * I;
      }
    }
    return s;
  }

  /// Inverse of real_to_complex().
  CMatrix complex_to_real() const {
    validate();
    const auto n = static_cast<Eigen::Index>(partner.size());
    CMatrix s = CMatrix::Zero(n, n);
    const complex I(0.0, 1.0);
    for (std::size_t i = 0; i < partner.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (partner[i] == i) {
        s(k, k) = 1.0;
      } else if (partner[i] == i + 1) {
        s(k, k) = 1.0;
        s(k, k + 1) = 1.0;
        s(k + 1, k) = I;
        s(k + 1, k + 1) = -I;
      }
    }
    return s;
  }
};

/// Rewrites a map between complex paired coordinates as a real map between the
/// corresponding real coordinates. Throws ConjugateSymmetryError when the
/// imaginary residue exceeds `tol` relative to the coefficient scale.
namespace detail {

inline ComplexPolyMap to_real_coordinates(const ComplexPolyMap& p, const ConjugatePairing& in, const ConjugatePairing& out) {
  if (in.size() != p.n_in() || out.size() != p.n_out()) throw DimensionMismatch("realify: pairing size mismatch");
  const int order = p.truncation_order();
  ComplexPolyMap sub = compose(p, ComplexPolyMap::linear(in.real_to_complex(), order), order);
  return sub.left_multiply(out.complex_to_real());
}

}  // namespace detail

/// Largest imaginary part left after the change to real coordinates, relative
/// to max(1, largest coefficient).
inline double realify_residue(const ComplexPolyMap& p, const ConjugatePairing& in, const ConjugatePairing& out) {
  const ComplexPolyMap mapped = detail::to_real_coordinates(p, in, out);
  double worst = 0.0;
  for (const auto& kv : mapped.terms()) worst = std::max(worst, kv.second.imag().cwiseAbs().maxCoeff());
  return worst / std::max(1.0, mapped.max_abs_coefficient());
}

inline RealPolyMap realify(const ComplexPolyMap& p, const ConjugatePairing& in, const ConjugatePairing& out, double tol = 1e-9) {
  const ComplexPolyMap mapped = detail::to_real_coordinates(p, in, out);
  const double scale = std::max(1.0, mapped.max_abs_coefficient());
  double worst = 0.0;
  for (const auto& kv : mapped.terms()) worst = std::max(worst, kv.second.imag().cwiseAbs().maxCoeff());
  if (worst > tol * scale)
    throw ConjugateSymmetryError("realify: imaginary residue " + std::to_string(worst) + " exceeds tolerance; coefficients are not conjugate-symmetric");
  RealPolyMap r = mapped.real_part();
  return r;
}

/// Inverse of realify.
inline ComplexPolyMap complexify(const RealPolyMap& p, const ConjugatePairing& in, const ConjugatePairing& out) {
  if (in.size() != p.n_in() || out.size() != p.n_out()) throw DimensionMismatch("complexify: pairing size mismatch");
  const int order = p.truncation_order();
  ComplexPolyMap sub = compose(p.to_complex(), ComplexPolyMap::linear(in.complex_to_real(), order), order);
  return sub.left_multiply(out.real_to_complex());
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json coeff_to_json(const RVector& c) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < c.size(); ++i) a.push_back(c(i));
  return a;
}

inline nlohmann::json coeff_to_json(const CVector& c) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < c.size(); ++i) a.push_back({c(i).real(), c(i).imag()});
  return a;
}

template <class T>
typename PolyMap<T>::Vector coeff_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("PolyMap JSON: coeff must be an array");
  typename PolyMap<T>::Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if constexpr (is_complex_v<T>) {
      if (e.is_array()) {
        if (e.size() != 2) throw InvalidInput("PolyMap JSON: complex coefficient must be [re, im]");
        v(static_cast<Eigen::Index>(i)) = T(e[0].get<double>(), e[1].get<double>());
      } else {
        v(static_cast<Eigen::Index>(i)) = T(e.get<double>(), 0.0);
      }
    } else {
      if (!e.is_number()) throw InvalidInput("PolyMap JSON: real coefficient expected");
      v(static_cast<Eigen::Index>(i)) = e.get<double>();
    }
  }
  return v;
}

}  // namespace detail

/// Array of {"powers": [...], "coeff": [...]} in graded-lex order.
template <class T>
nlohmann::json to_json_terms(const PolyMap<T>& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) arr.push_back({{"powers", m.exponents()}, {"coeff", detail::coeff_to_json(c)}});
  return arr;
}

/// Terms plus the dimensions, so that empty maps round-trip too.
template <class T>
nlohmann::json to_json(const PolyMap<T>& p) {
  return {{"n_in", p.n_in()},
          {"n_out", p.n_out()},
          {"truncation_order", p.truncation_order()},
          {"field", is_complex_v<T> ? "complex" : "real"},
          {"terms", to_json_terms(p)}};
}

/// Parses either the document form written by to_json or a bare term array.
/// For a bare array, missing dimensions are inferred from the first term and
/// the truncation order from the highest degree present.
template <class T>
PolyMap<T> poly_map_from_json(const nlohmann::json& j, std::optional<std::size_t> n_in = std::nullopt, std::optional<std::size_t> n_out = std::nullopt,
                              std::optional<int> order = std::nullopt) {
  const nlohmann::json* terms = &j;
  if (j.is_object()) {
    if (j.contains("n_in")) n_in = j.at("n_in").get<std::size_t>();
    if (j.contains("n_out")) n_out = j.at("n_out").get<std::size_t>();
    if (j.contains("truncation_order")) order = j.at("truncation_order").get<int>();
    if (!j.contains("terms")) throw InvalidInput("PolyMap JSON: missing \"terms\"");
    terms = &j.at("terms");
  }
  if (!terms->is_array()) throw InvalidInput("PolyMap JSON: terms must be an array");
  int max_deg = 0;
  for (const auto& t : *terms) {
    if (!t.contains("powers") || !t.contains("coeff")) throw InvalidInput("PolyMap JSON: term needs \"powers\" and \"coeff\"");
    const auto pw = t.at("powers").get<std::vector<int>>();
    if (!n_in) n_in = pw.size();
    if (!n_out) n_out = t.at("coeff").size();
    MultiIndex m(pw);
    max_deg = std::max(max_deg, m.order());
  }
  if (!n_in || !n_out) throw InvalidInput("PolyMap JSON: cannot infer dimensions of an empty term list");
  PolyMap<T> p(*n_in, *n_out, order.value_or(max_deg));
  for (const auto& t : *terms) {
    MultiIndex m(t.at("powers").get<std::vector<int>>());
    if (m.order() > p.truncation_order()) throw InvalidInput("PolyMap JSON: term " + m.to_string() + " exceeds truncation order");
    p.add_term(m, detail::coeff_from_json<T>(t.at("coeff")));
  }
  p.prune(0.0);
  return p;
}

}  // namespace ssmkit

#endif  // SSMKIT_POLY_MAP_HPP
