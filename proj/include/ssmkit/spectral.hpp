#ifndef SSMKIT_SPECTRAL_HPP
#define SSMKIT_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"

namespace ssmkit {

struct SpectralTolerances {
  /// |λ_i - conj(λ_j)| below pairing * (1 + |λ_i|) pairs two eigenvalues.
  double pairing = 1e-9;
  /// |lhs - λ_l| below resonance * (1 + |λ_l|) is an exact resonance.
  double resonance = 1e-8;
  /// Absolute margin below which a non-violating combination is reported as a near miss.
  double near_miss = 1e-2;
  /// Eigenvalues closer than this (relative) are treated as one repeated eigenvalue.
  double multiplicity = 1e-6;
  /// Relative singular-value threshold for rank decisions.
  double rank = 1e-8;
};

/// Ordered spectrum of a real matrix together with its modal transforms.
///
/// Eigenvalues are sorted by decreasing real part; equal real parts are sorted
/// by increasing |Im|, with the positive-imaginary member of a pair first.
/// Conjugate pairs therefore occupy adjacent slots (j, j+1) with Im λ_j > 0.
struct Spectrum {
  RMatrix matrix;
  std::vector<complex> eigenvalues;
  /// Unit-norm eigenvectors; conjugate pairs carry exactly conjugate columns.
  CMatrix eigenvectors;
  /// Inverse of eigenvectors (empty when not semisimple).
  CMatrix eigenvectors_inverse;
  /// conjugate[j] is the partner index of j, or j itself for a real eigenvalue.
  std::vector<std::size_t> conjugate;
  bool semisimple = true;
  /// Real modal transform: x = real_transform * y with the 2x2 blocks [[a, w], [-w, a]].
  RMatrix real_transform;
  RMatrix real_transform_inverse;

  std::size_t size() const noexcept { return eigenvalues.size(); }

  bool is_real(std::size_t j) const { return conjugate.at(j) == j; }

  ConjugatePairing pairing() const { return ConjugatePairing{conjugate}; }

  /// Pairing table restricted to a sorted, conjugate-closed index list.
  ConjugatePairing pairing(const std::vector<std::size_t>& indices) const {
    ConjugatePairing p;
    for (std::size_t a = 0; a < indices.size(); ++a) {
      const std::size_t partner = conjugate.at(indices[a]);
      auto it = std::find(indices.begin(), indices.end(), partner);
      if (it == indices.end()) throw InvalidInput("index set is not closed under conjugation");
      p.partner.push_back(static_cast<std::size_t>(it - indices.begin()));
    }
    return p;
  }

  bool all_stable() const {
    return std::all_of(eigenvalues.begin(), eigenvalues.end(), [](complex l) { return l.real() < 0.0; });
  }

  void require_semisimple() const {
    if (!semisimple) throw NotSemisimple("linear part is not semisimple (a repeated eigenvalue lacks a full set of eigenvectors)");
  }

  void require_stable() const {
    for (std::size_t j = 0; j < size(); ++j)
      if (!(eigenvalues[j].real() < 0.0))
        throw UnstableSpectrum("eigenvalue " + std::to_string(j + 1) + " has nonnegative real part " + std::to_string(eigenvalues[j].real()) +
                               " (zero damping or unstable direction)");
  }
};

namespace detail {

inline complex normalize_phase(CVector& v) {
  const double n = v.norm();
  if (n == 0.0) throw NumericalFailure("zero eigenvector");
  v /= n;
  Eigen::Index imax = 0;
  double amax = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > amax * (1.0 + 1e-12)) {
      amax = a;
      imax = i;
    }
  }
  const complex rot = std::conj(v(imax)) / std::abs(v(imax));
  v *= rot;
  v(imax) = complex(v(imax).real(), 0.0);
  return rot;
}

inline void fix_sign(CVector& v, bool pair) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = v(i).real();
    if (std::abs(re) > 1e-8) {
      const bool flip = pair ? re > 0.0 : re < 0.0;
      if (flip) v = -v;
      return;
    }
  }
}

}  // namespace detail

/// Eigen-analysis of a real square matrix.
inline Spectrum compute_spectrum(const RMatrix& a, const SpectralTolerances& tol = {}) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InvalidInput("compute_spectrum: matrix must be square and nonempty");
  if (!a.allFinite()) throw InvalidInput("compute_spectrum: matrix has non-finite entries");
  const auto n = a.rows();
  Eigen::EigenSolver<RMatrix> es(a, true);
  if (es.info() != Eigen::Success) throw NumericalFailure("compute_spectrum: eigen-solver failed to converge");
  CVector raw_values = es.eigenvalues();
  CMatrix raw_vectors = es.eigenvectors();

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto tie = [&](complex x, complex y) { return std::abs(x.real() - y.real()) <= tol.pairing * (1.0 + std::max(std::abs(x), std::abs(y))); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const complex x = raw_values(static_cast<Eigen::Index>(i)), y = raw_values(static_cast<Eigen::Index>(j));
    if (!tie(x, y)) return x.real() > y.real();
    const double ax = std::abs(x.imag()), ay = std::abs(y.imag());
    if (std::abs(ax - ay) > tol.pairing * (1.0 + std::max(std::abs(x), std::abs(y)))) return ax < ay;
    return x.imag() > y.imag();
  });

  Spectrum s;
  s.matrix = a;
  s.eigenvectors = CMatrix(n, n);
  s.conjugate.assign(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    s.eigenvalues.push_back(raw_values(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)])));
    s.eigenvectors.col(k) = raw_vectors.col(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]));
  }

  for (std::size_t j = 0; j < s.size(); ++j) {
    complex& l = s.eigenvalues[j];
    const auto jj = static_cast<Eigen::Index>(j);
    if (std::abs(l.imag()) <= tol.pairing * (1.0 + std::abs(l))) {
      l = complex(l.real(), 0.0);
      CVector v = s.eigenvectors.col(jj);
      detail::normalize_phase(v);
      v = v.real().cast<complex>();
      v /= v.norm();
      detail::fix_sign(v, false);
      s.eigenvectors.col(jj) = v;
      s.conjugate[j] = j;
      continue;
    }
    if (l.imag() < 0.0) continue;
    if (j + 1 >= s.size() || std::abs(s.eigenvalues[j + 1] - std::conj(l)) > tol.pairing * (1.0 + std::abs(l)))
      throw NumericalFailure("compute_spectrum: eigenvalue " + std::to_string(j + 1) + " has no conjugate partner");
    CVector v = s.eigenvectors.col(jj);
    detail::normalize_phase(v);
    detail::fix_sign(v, true);
    s.eigenvectors.col(jj) = v;
    s.eigenvectors.col(jj + 1) = v.conjugate();
    s.eigenvalues[j + 1] = std::conj(l);
    s.conjugate[j] = j + 1;
    s.conjugate[j + 1] = j;
  }
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s.conjugate[j] == s.size()) throw NumericalFailure("compute_spectrum: unpaired eigenvalue " + std::to_string(j + 1));

  // Semisimplicity: every cluster of (numerically) repeated eigenvalues needs a full eigenspace.
  const double anorm = std::max(1.0, a.norm());
  std::vector<bool> seen(s.size(), false);
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (seen[j]) continue;
    std::size_t alg = 0;
    complex mean(0.0, 0.0);
    for (std::size_t k = j; k < s.size(); ++k)
      if (std::abs(s.eigenvalues[k] - s.eigenvalues[j]) <= tol.multiplicity * (1.0 + std::abs(s.eigenvalues[j]))) {
        seen[k] = true;
        ++alg;
        mean += s.eigenvalues[k];
      }
    if (alg < 2) continue;
    mean /= static_cast<double>(alg);
    CMatrix shifted = a.cast<complex>() - mean * CMatrix::Identity(n, n);
    Eigen::JacobiSVD<CMatrix> svd(shifted);
    const auto& sv = svd.singularValues();
    std::size_t nullity = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) <= std::sqrt(tol.rank) * anorm) ++nullity;
    if (nullity < alg) s.semisimple = false;
  }
  if (s.semisimple) {
    Eigen::JacobiSVD<CMatrix> svd(s.eigenvectors);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= tol.rank * sv(0)) s.semisimple = false;
  }

  if (s.semisimple) {
    s.eigenvectors_inverse = s.eigenvectors.inverse();
    CMatrix t = s.eigenvectors * s.pairing().real_to_complex();
    s.real_transform = t.real();
    s.real_transform_inverse = s.real_transform.inverse();
  }
  return s;
}

/// Conjugate-closed selection of eigenvalue indices (0-based, sorted).
struct SpectralSubspace {
  std::vector<std::size_t> indices;
  std::string label;

  std::size_t dimension() const noexcept { return indices.size(); }
  bool contains(std::size_t j) const { return std::binary_search(indices.begin(), indices.end(), j); }
};

/// Builds a subspace and checks that it is nonempty, in range and closed under conjugation.
inline SpectralSubspace make_subspace(const Spectrum& s, std::vector<std::size_t> indices, std::string label = {}) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (indices.empty()) throw InvalidInput("spectral subspace must select at least one eigenvalue");
  for (std::size_t j : indices) {
    if (j >= s.size()) throw InvalidInput("subspace index " + std::to_string(j + 1) + " exceeds spectrum size " + std::to_string(s.size()));
    if (!std::binary_search(indices.begin(), indices.end(), s.conjugate[j]))
      throw InvalidInput("subspace is not closed under conjugation: index " + std::to_string(j + 1) + " selected without its partner " +
                         std::to_string(s.conjugate[j] + 1));
  }
  return SpectralSubspace{std::move(indices), std::move(label)};
}

inline SpectralSubspace slow_subspace(const Spectrum& s, std::size_t q) {
  std::vector<std::size_t> idx(q);
  std::iota(idx.begin(), idx.end(), 0);
  return make_subspace(s, idx, "slow:" + std::to_string(q));
}

inline SpectralSubspace fast_subspace(const Spectrum& s, std::size_t q) {
  if (q > s.size()) throw InvalidInput("fast subspace larger than the spectrum");
  std::vector<std::size_t> idx(q);
  std::iota(idx.begin(), idx.end(), s.size() - q);
  return make_subspace(s, idx, "fast:" + std::to_string(q));
}

/// Indices not in E, in spectral order.
inline std::vector<std::size_t> complement(const Spectrum& s, const SpectralSubspace& e) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (!e.contains(j)) out.push_back(j);
  return out;
}

/// Every subspace spanned by one eigenvalue together with its conjugate.
inline std::vector<SpectralSubspace> mode_subspaces(const Spectrum& s) {
  std::vector<SpectralSubspace> out;
  std::size_t mode = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s.conjugate[j] < j) continue;
    std::vector<std::size_t> idx{j};
    if (s.conjugate[j] != j) idx.push_back(s.conjugate[j]);
    out.push_back(make_subspace(s, idx, "E" + std::to_string(++mode)));
  }
  return out;
}

/// Integer part of a positive ratio, rounding values within a few ulps of an integer up.
inline int integer_part(double ratio) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw InvalidInput("integer_part: ratio must be finite and nonnegative");
  return static_cast<int>(std::floor(ratio * (1.0 + 1e-12)));
}

struct SpectralQuotients {
  /// Relative quotient; absent when E is the full spectrum.
  std::optional<int> sigma;
  int Sigma = 0;
};

inline SpectralQuotients spectral_quotients(const Spectrum& s, const SpectralSubspace& e) {
  s.require_stable();
  if (e.indices.empty()) throw InvalidInput("spectral_quotients: empty subspace");
  double max_inside = -std::numeric_limits<double>::infinity();
  for (std::size_t j : e.indices) max_inside = std::max(max_inside, s.eigenvalues.at(j).real());
  double min_all = std::numeric_limits<double>::infinity();
  double min_outside = std::numeric_limits<double>::infinity();
  bool any_outside = false;
  for (std::size_t j = 0; j < s.size(); ++j) {
    min_all = std::min(min_all, s.eigenvalues[j].real());
    if (!e.contains(j)) {
      any_outside = true;
      min_outside = std::min(min_outside, s.eigenvalues[j].real());
    }
  }
  SpectralQuotients q;
  q.Sigma = integer_part(min_all / max_inside);
  if (any_outside) q.sigma = integer_part(min_outside / max_inside);
  return q;
}

enum class ResonanceMode { autonomous, forced };

inline const char* to_string(ResonanceMode m) { return m == ResonanceMode::autonomous ? "autonomous" : "forced"; }

struct ResonanceRecord {
  MultiIndex m;
  /// Outer eigenvalue index (0-based).
  std::size_t l = 0;
  complex lhs;
  complex target;
  double margin = 0.0;
};

struct ResonanceReport {
  ResonanceMode mode = ResonanceMode::autonomous;
  int max_order = 0;
  /// Set when max_order < 2 so that nothing was checked.
  bool vacuous = false;
  std::vector<ResonanceRecord> violations;
  std::vector<ResonanceRecord> near_misses;
  bool passed = true;
  double min_margin = std::numeric_limits<double>::infinity();
};

/// Enumerates <m, λ>_E against every outer λ_l for 2 <= |m| <= max_order.
///
/// In forced mode only real parts are compared. Without max_order the
/// autonomous check runs to σ(E) and the forced check to Σ(E).
inline ResonanceReport check_nonresonance(const Spectrum& s, const SpectralSubspace& e, ResonanceMode mode, std::optional<int> max_order = std::nullopt,
                                          const SpectralTolerances& tol = {}) {
  if (e.indices.empty()) throw InvalidInput("check_nonresonance: empty subspace");
  ResonanceReport r;
  r.mode = mode;
  if (max_order) {
    r.max_order = *max_order;
  } else {
    const auto q = spectral_quotients(s, e);
    r.max_order = mode == ResonanceMode::autonomous ? q.sigma.value_or(q.Sigma) : q.Sigma;
  }
  if (r.max_order < 2) {
    r.vacuous = true;
    return r;
  }
  const auto outer = complement(s, e);
  const std::size_t nq = e.indices.size();
  for (const MultiIndex& m : monomials_up_to(nq, 2, r.max_order)) {
    complex lhs(0.0, 0.0);
    for (std::size_t i = 0; i < nq; ++i) {
      const complex li = s.eigenvalues[e.indices[i]];
      lhs += static_cast<double>(m[i]) * (mode == ResonanceMode::autonomous ? li : complex(li.real(), 0.0));
    }
    for (std::size_t l : outer) {
      const complex target = mode == ResonanceMode::autonomous ? s.eigenvalues[l] : complex(s.eigenvalues[l].real(), 0.0);
      const double margin = std::abs(lhs - target);
      r.min_margin = std::min(r.min_margin, margin);
      ResonanceRecord rec{m, l, lhs, target, margin};
      if (margin < tol.resonance * (1.0 + std::abs(target)))
        r.violations.push_back(rec);
      else if (margin < tol.near_miss)
        r.near_misses.push_back(rec);
    }
  }
  r.passed = r.violations.empty();
  return r;
}

enum class SubspaceClass { Slow, Intermediate, Fast };

inline const char* to_string(SubspaceClass c) {
  switch (c) {
    case SubspaceClass::Slow:
      return "slow";
    case SubspaceClass::Fast:
      return "fast";
    default:
      return "intermediate";
  }
}

inline SubspaceClass classify_subspace(const Spectrum& s, const SpectralSubspace& e) {
  const std::size_t q = e.indices.size();
  bool slow = true, fast = true;
  for (std::size_t i = 0; i < q; ++i) {
    if (e.indices[i] != i) slow = false;
    if (e.indices[i] != s.size() - q + i) fast = false;
  }
  if (slow) return SubspaceClass::Slow;
  if (fast) return SubspaceClass::Fast;
  return SubspaceClass::Intermediate;
}

/// Nested slow subspaces cut at successive largest real-part gaps.
struct SlowHierarchy {
  /// Cut sizes q_1 > q_2 > ... > 1 (1-based counts of retained eigenvalues).
  std::vector<std::size_t> cut_indices;
  std::vector<double> gaps;
  /// Whether the cut leaves every conjugate pair intact.
  std::vector<bool> conjugate_closed;
};

inline SlowHierarchy slow_hierarchy(const Spectrum& s) {
  s.require_stable();
  if (s.size() < 2) throw InvalidInput("slow_hierarchy: need at least two eigenvalues");
  SlowHierarchy h;
  std::size_t upper = s.size() - 1;
  while (upper >= 1) {
    std::size_t best = 1;
    double best_gap = -1.0;
    for (std::size_t j = 1; j <= upper; ++j) {
      const double g = std::abs(s.eigenvalues[j].real() - s.eigenvalues[j - 1].real());
      if (g > best_gap * (1.0 + 1e-12) + 1e-300) {
        best_gap = g;
        best = j;
      }
    }
    h.cut_indices.push_back(best);
    h.gaps.push_back(best_gap);
    h.conjugate_closed.push_back(s.conjugate[best - 1] < best);
    if (best == 1) break;
    upper = best - 1;
  }
  return h;
}

/// Closed-form family of linear invariant manifolds tangent to E in amplitude-phase variables.
struct LinearFlatFamily {
  SpectralSubspace subspace;
  /// Representative (positive-imaginary) index of each selected and each outer mode.
  std::vector<std::size_t> inner_modes;
  std::vector<std::size_t> outer_modes;
  /// C(l, i): amplitude constants, rows outer modes, columns inner modes.
  RMatrix C;
  /// D(l): phase offsets in [0, 2π).
  RVector D;
  /// Re λ_l / Re λ_{j_i}.
  RMatrix exponents;
  /// Int[Re λ_l / Re λ_{j_i}].
  Eigen::MatrixXi smoothness_class;
  /// Im λ_l / Im λ_{j_1}.
  RVector phase_rates;

  /// Outer amplitudes and phases for given inner amplitudes (all positive) and phases.
  std::pair<RVector, RVector> evaluate(const RVector& r_inner, const RVector& phi_inner) const {
    if (r_inner.size() != static_cast<Eigen::Index>(inner_modes.size()) || phi_inner.size() != r_inner.size())
      throw DimensionMismatch("LinearFlatFamily::evaluate: expected one amplitude and phase per selected mode");
    const auto no = static_cast<Eigen::Index>(outer_modes.size());
    RVector r = RVector::Zero(no), phi(no);
    for (Eigen::Index l = 0; l < no; ++l) {
      for (Eigen::Index i = 0; i < r_inner.size(); ++i)
        if (C(l, i) != 0.0) r(l) += C(l, i) * std::pow(r_inner(i), exponents(l, i));
      phi(l) = D(l) + phase_rates(l) * phi_inner(0);
    }
    return {r, phi};
  }
};

/// constants: C (outer x inner); D (per outer mode). Both default to zero.
inline LinearFlatFamily flat_family_member(const Spectrum& s, const SpectralSubspace& e, std::optional<RMatrix> c = std::nullopt,
                                           std::optional<RVector> d = std::nullopt) {
  s.require_stable();
  LinearFlatFamily f;
  f.subspace = e;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s.is_real(j)) throw InvalidInput("flat_family_member: eigenvalue " + std::to_string(j + 1) + " is real; amplitude-phase form needs underdamped modes");
    if (s.conjugate[j] < j) continue;
    (e.contains(j) ? f.inner_modes : f.outer_modes).push_back(j);
  }
  const auto ni = static_cast<Eigen::Index>(f.inner_modes.size());
  const auto no = static_cast<Eigen::Index>(f.outer_modes.size());
  f.C = c.value_or(RMatrix::Zero(no, ni));
  f.D = d.value_or(RVector::Zero(no));
  if (f.C.rows() != no || f.C.cols() != ni || f.D.size() != no) throw DimensionMismatch("flat_family_member: constant dimensions do not match the mode split");
  f.exponents.resize(no, ni);
  f.smoothness_class.resize(no, ni);
  f.phase_rates.resize(no);
  for (Eigen::Index l = 0; l < no; ++l) {
    const complex ll = s.eigenvalues[f.outer_modes[static_cast<std::size_t>(l)]];
    for (Eigen::Index i = 0; i < ni; ++i) {
      const complex li = s.eigenvalues[f.inner_modes[static_cast<std::size_t>(i)]];
      f.exponents(l, i) = ll.real() / li.real();
      f.smoothness_class(l, i) = integer_part(f.exponents(l, i));
    }
    f.phase_rates(l) = ll.imag() / s.eigenvalues[f.inner_modes.front()].imag();
  }
  return f;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json complex_to_json(complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline nlohmann::json to_json(const ResonanceRecord& r) {
  return {{"m", r.m.exponents()}, {"l", r.l + 1}, {"lhs", complex_to_json(r.lhs)}, {"target", complex_to_json(r.target)}, {"margin", r.margin}};
}

inline nlohmann::json to_json(const ResonanceReport& r) {
  nlohmann::json v = nlohmann::json::array(), n = nlohmann::json::array();
  for (const auto& x : r.violations) v.push_back(to_json(x));
  for (const auto& x : r.near_misses) n.push_back(to_json(x));
  nlohmann::json j = {{"mode", to_string(r.mode)}, {"max_order", r.max_order}, {"vacuous", r.vacuous}, {"passed", r.passed}, {"violations", v}, {"near_misses", n}};
  if (std::isfinite(r.min_margin)) j["min_margin"] = r.min_margin;
  if (r.mode == ResonanceMode::forced) j["note"] = "conditions at epsilon = 0; not a convergence guarantee for epsilon > 0";
  return j;
}

inline nlohmann::json to_json(const Spectrum& s) {
  nlohmann::json ev = nlohmann::json::array(), conj = nlohmann::json::array();
  for (std::size_t j = 0; j < s.size(); ++j) {
    ev.push_back(complex_to_json(s.eigenvalues[j]));
    conj.push_back(s.conjugate[j] + 1);
  }
  return {{"eigenvalues", ev}, {"conjugate", conj}, {"semisimple", s.semisimple}};
}

}  // namespace ssmkit

#endif  // SSMKIT_SPECTRAL_HPP
