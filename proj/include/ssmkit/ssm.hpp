#ifndef SSMKIT_SSM_HPP
#define SSMKIT_SSM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/parallel.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/system.hpp"

namespace ssmkit {

/// A system rewritten in the eigenbasis and split into master (E) and enslaved directions.
///
/// Real modal coordinates: x = T_master y + T_enslaved z. Complex coordinates
/// ξ (spectral order) satisfy x = V ξ and ξ' = diag(λ) ξ + g(ξ).
struct ModalSplit {
  Spectrum spectrum;
  SpectralSubspace subspace;
  std::vector<std::size_t> master;
  std::vector<std::size_t> enslaved;
  ConjugatePairing master_pairing;
  ConjugatePairing enslaved_pairing;
  RMatrix T_master, T_enslaved;
  RMatrix Tinv_master, Tinv_enslaved;
  /// Real linear parts T^{-1} A T restricted to each block.
  RMatrix A_master, A_enslaved;
  std::vector<complex> lambda_master, lambda_enslaved;
  /// V^{-1} f0(V ξ).
  ComplexPolyMap g;
  RealPolyMap f0;
  RMatrix A;

  std::size_t q() const noexcept { return master.size(); }
  std::size_t dim() const noexcept { return spectrum.size(); }

  RVector physical(const RVector& y, const RVector& z) const { return T_master * y + T_enslaved * z; }
};

inline ModalSplit make_modal_split(const FirstOrderSystem& sys, const Spectrum& s, const SpectralSubspace& e) {
  sys.validate();
  s.require_semisimple();
  if (static_cast<std::size_t>(sys.A.rows()) != s.size()) throw DimensionMismatch("spectrum does not belong to this system");
  ModalSplit m;
  m.spectrum = s;
  m.subspace = e;
  m.master = e.indices;
  m.enslaved = complement(s, e);
  m.master_pairing = s.pairing(m.master);
  m.enslaved_pairing = s.pairing(m.enslaved);
  const auto n = static_cast<Eigen::Index>(s.size());
  const auto nq = static_cast<Eigen::Index>(m.master.size());
  const auto ne = n - nq;
  m.T_master.resize(n, nq);
  m.T_enslaved.resize(n, ne);
  m.Tinv_master.resize(nq, n);
  m.Tinv_enslaved.resize(ne, n);
  for (Eigen::Index a = 0; a < nq; ++a) {
    const auto j = static_cast<Eigen::Index>(m.master[static_cast<std::size_t>(a)]);
    m.T_master.col(a) = s.real_transform.col(j);
    m.Tinv_master.row(a) = s.real_transform_inverse.row(j);
    m.lambda_master.push_back(s.eigenvalues[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index b = 0; b < ne; ++b) {
    const auto j = static_cast<Eigen::Index>(m.enslaved[static_cast<std::size_t>(b)]);
    m.T_enslaved.col(b) = s.real_transform.col(j);
    m.Tinv_enslaved.row(b) = s.real_transform_inverse.row(j);
    m.lambda_enslaved.push_back(s.eigenvalues[static_cast<std::size_t>(j)]);
  }
  m.A_master = m.Tinv_master * sys.A * m.T_master;
  m.A_enslaved = m.Tinv_enslaved * sys.A * m.T_enslaved;
  const int fo = std::max(2, sys.f0.truncation_order());
  m.g = compose(sys.f0.to_complex(), ComplexPolyMap::linear(s.eigenvectors, fo), fo).left_multiply(s.eigenvectors_inverse);
  m.f0 = sys.f0;
  m.A = sys.A;
  return m;
}

struct DivisorRecord {
  MultiIndex p;
  /// Enslaved eigenvalue index (0-based, spectral order).
  std::size_t l = 0;
  complex divisor;
};

struct FreeCoefficient {
  MultiIndex p;
  std::size_t l = 0;
  complex divisor;
  complex residual;
};

/// Graph z = h(y) of an SSM over E in real modal coordinates.
struct SSMExpansion {
  ModalSplit split;
  int order = 0;
  /// Relative spectral quotient σ(E), or Σ(E) when E is the whole spectrum; absent for formal series.
  std::optional<int> sigma;
  int uniqueness_class = 0;
  /// order >= uniqueness_class.
  bool unique = false;
  /// Computed without the stability and nonresonance guards.
  bool formal = false;
  RealPolyMap graph;
  ComplexPolyMap graph_complex;
  std::vector<DivisorRecord> divisor_log;
  std::vector<FreeCoefficient> free_coefficients;
  std::optional<ResonanceReport> nonresonance;
  std::vector<std::string> warnings;

  const SpectralSubspace& subspace() const { return split.subspace; }

  RVector evaluate(const RVector& y) const { return graph.evaluate(y); }

  /// Point of the manifold in the original coordinates.
  RVector physical_point(const RVector& y) const { return split.physical(y, graph.evaluate(y)); }
};

struct SSMOptions {
  SpectralTolerances tolerances;
  /// |R| above this at a vanishing divisor is an obstruction.
  double residual_tolerance = 1e-10;
  std::size_t threads = thread_limit();
};

namespace detail {

/// Rows `rows` of a map, in the given order.
inline ComplexPolyMap select_rows(const ComplexPolyMap& p, const std::vector<std::size_t>& rows) {
  CMatrix sel = CMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p.n_out()));
  for (std::size_t i = 0; i < rows.size(); ++i) sel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rows[i])) = 1.0;
  return p.left_multiply(sel);
}

/// ξ(u) = (u on the master slots, h(u) on the enslaved slots).
inline ComplexPolyMap graph_embedding(const ModalSplit& m, const ComplexPolyMap& h, int order) {
  const std::size_t n = m.dim(), q = m.q();
  ComplexPolyMap xi(q, n, order);
  for (std::size_t a = 0; a < q; ++a) {
    CVector e = CVector::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(m.master[a])) = 1.0;
    xi.add_term(MultiIndex::unit(q, a), e);
  }
  for (const auto& [p, c] : h.terms()) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t b = 0; b < m.enslaved.size(); ++b) v(static_cast<Eigen::Index>(m.enslaved[b])) = c(static_cast<Eigen::Index>(b));
    xi.add_term(p, v);
  }
  return xi;
}

/// Degree-`d` part of g_w(u, h) - Dh(u) g_u(u, h) for the current (lower-degree) h.
inline ComplexPolyMap graph_right_side(const ModalSplit& m, const ComplexPolyMap& h, int d) {
  const ComplexPolyMap xi = graph_embedding(m, h, d);
  const ComplexPolyMap gx = compose(m.g, xi, d);
  const ComplexPolyMap gu = select_rows(gx, m.master);
  ComplexPolyMap rhs = select_rows(gx, m.enslaved);
  for (std::size_t a = 0; a < m.q(); ++a) {
    const ComplexPolyMap dh = partial_derivative(h, a).with_truncation_order(d);
    rhs = subtract(rhs, multiply_truncated(dh, gu.component(a), d));
  }
  return rhs.homogeneous_part(d);
}

struct GraphSolve {
  ComplexPolyMap h;
  std::vector<DivisorRecord> log;
  std::vector<FreeCoefficient> free;
};

inline GraphSolve solve_graph(const ModalSplit& m, int order, const SSMOptions& opt) {
  const std::size_t q = m.q(), ne = m.enslaved.size();
  GraphSolve out;
  out.h = ComplexPolyMap(q, ne, order);
  for (int d = 2; d <= order; ++d) {
    const ComplexPolyMap rhs = graph_right_side(m, out.h, d);
    const auto monos = monomials_of_degree(q, d);
    const std::size_t count = monos.size() * ne;
    std::vector<complex> coeff(count), divisor(count), residual(count);
    std::vector<char> small(count, 0);
    parallel_for(
        count,
        [&](std::size_t k) {
          const MultiIndex& p = monos[k / ne];
          const std::size_t b = k % ne;
          complex lp(0.0, 0.0);
          for (std::size_t a = 0; a < q; ++a) lp += static_cast<double>(p[a]) * m.lambda_master[a];
          const complex dv = lp - m.lambda_enslaved[b];
          const complex r = rhs.coefficient(p)(static_cast<Eigen::Index>(b));
          divisor[k] = dv;
          residual[k] = r;
          if (std::abs(dv) < opt.tolerances.resonance * (1.0 + std::abs(m.lambda_enslaved[b])))
            small[k] = 1;
          else
            coeff[k] = r / dv;
        },
        opt.threads);
    for (std::size_t k = 0; k < count; ++k) {
      const MultiIndex& p = monos[k / ne];
      const std::size_t b = k % ne;
      if (small[k]) {
        if (std::abs(residual[k]) > opt.residual_tolerance)
          throw ResonanceObstruction("resonance obstruction at monomial " + p.to_string() + ", enslaved eigenvalue " + std::to_string(m.enslaved[b] + 1) +
                                         ": divisor vanishes but the right-hand side is " + std::to_string(std::abs(residual[k])),
                                     p.to_string(), static_cast<int>(m.enslaved[b]) + 1);
        out.free.push_back({p, m.enslaved[b], divisor[k], residual[k]});
        continue;
      }
      out.log.push_back({p, m.enslaved[b], divisor[k]});
    }
    for (std::size_t i = 0; i < monos.size(); ++i) {
      CVector v(static_cast<Eigen::Index>(ne));
      for (std::size_t b = 0; b < ne; ++b) v(static_cast<Eigen::Index>(b)) = coeff[i * ne + b];
      out.h.add_term(monos[i], v);
    }
    out.h.prune();
  }
  return out;
}

inline SSMExpansion assemble(const ModalSplit& m, int order, GraphSolve&& solved) {
  SSMExpansion e;
  e.split = m;
  e.order = order;
  e.graph_complex = std::move(solved.h);
  e.divisor_log = std::move(solved.log);
  e.free_coefficients = std::move(solved.free);
  e.graph = realify(e.graph_complex, m.master_pairing, m.enslaved_pairing);
  for (const auto& f : e.free_coefficients)
    e.warnings.push_back("free coefficient at monomial " + f.p.to_string() + ", enslaved eigenvalue " + std::to_string(f.l + 1) +
                         ": exact resonance with vanishing right-hand side; set to 0 (a family of invariant graphs exists)");
  return e;
}

}  // namespace detail

/// Autonomous SSM over E as a Taylor graph of the given order (default σ(E) + 1).
///
/// Forcing in `sys` is ignored. A failed nonresonance check is recorded, not
/// thrown: the recursion itself decides between an obstruction and a free
/// coefficient.
inline SSMExpansion compute_ssm(const FirstOrderSystem& sys, const SpectralSubspace& e, std::optional<int> order = std::nullopt, const SSMOptions& opt = {}) {
  const Spectrum s = compute_spectrum(sys.A, opt.tolerances);
  s.require_semisimple();
  s.require_stable();
  const SpectralQuotients quot = spectral_quotients(s, e);
  const int sigma = quot.sigma.value_or(quot.Sigma);
  const int K = order.value_or(sigma + 1);
  if (K < 1) throw InvalidInput("compute_ssm: order must be at least 1");
  const ModalSplit m = make_modal_split(sys, s, e);
  ResonanceReport report = check_nonresonance(s, e, ResonanceMode::autonomous, std::min(K, sigma), opt.tolerances);
  SSMExpansion out = detail::assemble(m, K, detail::solve_graph(m, K, opt));
  out.sigma = sigma;
  out.uniqueness_class = sigma + 1;
  out.unique = K >= sigma + 1;
  if (!report.passed) out.warnings.push_back("autonomous nonresonance check failed up to order " + std::to_string(report.max_order));
  if (!out.unique) out.warnings.push_back("non-unique truncation: order " + std::to_string(K) + " is below the uniqueness class " + std::to_string(sigma + 1));
  if (!sys.autonomous()) out.warnings.push_back("forcing ignored by the autonomous solver");
  out.nonresonance = std::move(report);
  return out;
}

/// Same recursion without the stability and nonresonance guards; only zero divisors stop it.
inline SSMExpansion formal_series_no_guard(const FirstOrderSystem& sys, const SpectralSubspace& e, int order, const SSMOptions& opt = {}) {
  const Spectrum s = compute_spectrum(sys.A, opt.tolerances);
  s.require_semisimple();
  const ModalSplit m = make_modal_split(sys, s, e);
  SSMOptions strict = opt;
  strict.residual_tolerance = -1.0;
  SSMExpansion out;
  try {
    out = detail::assemble(m, order, detail::solve_graph(m, order, strict));
  } catch (const ResonanceObstruction& err) {
    throw ResonanceObstruction(std::string("formal series: zero divisor; ") + err.what(), err.monomial(), err.direction());
  }
  out.formal = true;
  out.warnings.push_back("formal series: existence of an invariant manifold is not guaranteed");
  return out;
}

/// Rewrites the manifold as a graph over the original coordinates `over`,
/// returning the remaining coordinates (in increasing index order) as a map of
/// the chosen ones. Uses series reversion, so the chosen coordinates must
/// parametrize E to first order.
inline RealPolyMap graph_over_coordinates(const SSMExpansion& e, const std::vector<std::size_t>& over) {
  const std::size_t n = e.split.dim(), q = e.split.q();
  if (over.size() != q) throw InvalidInput("graph_over_coordinates: need exactly dim E coordinates");
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (std::find(over.begin(), over.end(), i) == over.end()) rest.push_back(i);
  const int K = e.order;
  // x(y) = T_m y + T_e h(y)
  RealPolyMap xy = add(RealPolyMap::linear(e.split.T_master, K), e.graph.left_multiply(e.split.T_enslaved));
  RMatrix ps = RMatrix::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n));
  RMatrix pr = RMatrix::Zero(static_cast<Eigen::Index>(rest.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < q; ++i) {
    if (over[i] >= n) throw InvalidInput("graph_over_coordinates: coordinate index out of range");
    ps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(over[i])) = 1.0;
  }
  for (std::size_t i = 0; i < rest.size(); ++i) pr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rest[i])) = 1.0;
  const RealPolyMap phi = xy.left_multiply(ps);
  const RMatrix L = ps * e.split.T_master;
  Eigen::FullPivLU<RMatrix> lu(L);
  if (!lu.isInvertible()) throw InvalidInput("graph_over_coordinates: chosen coordinates do not parametrize the subspace");
  const RMatrix Linv = lu.inverse();
  RealPolyMap nonlinear = subtract(phi, RealPolyMap::linear(L, K));
  // y(s) = L^{-1}(s - N(y(s))), one order gained per sweep.
  RealPolyMap y = RealPolyMap::linear(Linv, K);
  for (int it = 1; it < K; ++it) y = subtract(RealPolyMap::linear(Linv, K), compose(nonlinear, y, K).left_multiply(Linv));
  return compose(xy.left_multiply(pr), y, K);
}

struct DivergenceDiagnosis {
  /// magnitudes[d]: max-norm of the degree-d coefficients.
  std::vector<double> magnitudes;
  /// (degree, per-degree growth ratio) between consecutive nonzero degrees.
  std::vector<std::pair<int, double>> ratios;
  bool terminates = false;
  bool divergent = false;
  /// log-log slope of ratio versus degree.
  double growth_slope = 0.0;
  /// Estimated radius of convergence; infinity for a terminating series, 0 when divergent.
  double radius = std::numeric_limits<double>::infinity();

  std::string classification() const { return divergent ? "divergent" : "convergent-like"; }
};

/// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_loglog_slope: need at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidInput("fit_loglog_slope: samples must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Ratio test on per-degree coefficient magnitudes (index = degree).
inline DivergenceDiagnosis divergence_diagnostic(const std::vector<double>& magnitudes) {
  const int K = static_cast<int>(magnitudes.size()) - 1;
  if (K < 6) throw InvalidInput("divergence_diagnostic: need coefficients up to degree 6 at least (got " + std::to_string(std::max(K, 0)) + ")");
  DivergenceDiagnosis d;
  d.magnitudes = magnitudes;
  std::vector<int> nz;
  for (int k = 0; k <= K; ++k)
    if (magnitudes[static_cast<std::size_t>(k)] > 0.0) nz.push_back(k);
  if (nz.empty()) {
    d.terminates = true;
    return d;
  }
  int max_gap = 0;
  for (std::size_t i = 1; i < nz.size(); ++i) max_gap = std::max(max_gap, nz[i] - nz[i - 1] - 1);
  if (K - nz.back() > max_gap) {
    d.terminates = true;
    return d;
  }
  std::vector<double> deg, rat;
  for (std::size_t i = 1; i < nz.size(); ++i) {
    const double r = std::pow(magnitudes[static_cast<std::size_t>(nz[i])] / magnitudes[static_cast<std::size_t>(nz[i - 1])], 1.0 / (nz[i] - nz[i - 1]));
    d.ratios.emplace_back(nz[i], r);
    deg.push_back(nz[i]);
    rat.push_back(r);
  }
  if (rat.size() < 3) throw InvalidInput("divergence_diagnostic: fewer than three nonzero degree ratios");
  d.growth_slope = fit_loglog_slope(deg, rat);
  d.divergent = d.growth_slope >= 0.5;
  if (d.divergent) {
    d.radius = 0.0;
  } else {
    double tail = 0.0;
    for (std::size_t i = rat.size() / 2; i < rat.size(); ++i) tail = std::max(tail, rat[i]);
    d.radius = 1.0 / tail;
  }
  return d;
}

inline std::vector<double> degree_magnitudes(const RealPolyMap& p) {
  std::vector<double> mags(static_cast<std::size_t>(p.truncation_order()) + 1, 0.0);
  for (const auto& [m, c] : p.terms()) {
    double& slot = mags[static_cast<std::size_t>(m.order())];
    slot = std::max(slot, c.cwiseAbs().maxCoeff());
  }
  return mags;
}

inline DivergenceDiagnosis divergence_diagnostic(const RealPolyMap& series) { return divergence_diagnostic(degree_magnitudes(series)); }

inline DivergenceDiagnosis divergence_diagnostic(const SSMExpansion& e) { return divergence_diagnostic(e.graph); }

/// Unit directions in R^q: ±1 for q = 1, evenly spaced angles for q = 2, seeded Gaussian samples otherwise.
inline std::vector<RVector> sphere_directions(std::size_t q, std::size_t count = 64, unsigned long long seed = 20240917ULL) {
  std::vector<RVector> dirs;
  if (q == 1) {
    dirs.push_back(RVector::Constant(1, 1.0));
    dirs.push_back(RVector::Constant(1, -1.0));
    return dirs;
  }
  if (q == 2) {
    const double pi = std::acos(-1.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(count);
      RVector v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
    return dirs;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  while (dirs.size() < count) {
    RVector v(static_cast<Eigen::Index>(q));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
    if (v.norm() > 1e-8) dirs.push_back(v / v.norm());
  }
  return dirs;
}

struct ResidualSample {
  double radius = 0.0;
  double max_residual = 0.0;
};

/// Pointwise invariance defect |Dh(y) y' - z'| of the real graph on spheres |y| = ρ.
inline std::vector<ResidualSample> invariance_residual(const FirstOrderSystem& sys, const SSMExpansion& e, const std::vector<double>& radii,
                                                       unsigned long long seed = 20240917ULL) {
  const auto& m = e.split;
  const auto dirs = sphere_directions(m.q(), 64, seed);
  std::vector<RealPolyMap> jac;
  for (std::size_t a = 0; a < m.q(); ++a) jac.push_back(partial_derivative(e.graph, a));
  std::vector<ResidualSample> out;
  for (double rho : radii) {
    ResidualSample smp{rho, 0.0};
    for (const auto& dir : dirs) {
      const RVector y = rho * dir;
      const RVector z = e.graph.evaluate(y);
      const RVector x = m.physical(y, z);
      const RVector dx = sys.A * x + sys.f0.evaluate(x);
      const RVector ydot = m.Tinv_master * dx;
      const RVector zdot = m.Tinv_enslaved * dx;
      RVector zgraph = RVector::Zero(zdot.size());
      for (std::size_t a = 0; a < m.q(); ++a) zgraph += jac[a].evaluate(y) * ydot(static_cast<Eigen::Index>(a));
      smp.max_residual = std::max(smp.max_residual, (zgraph - zdot).norm());
    }
    out.push_back(smp);
  }
  return out;
}

/// Invariance defect Dh(y)·y' - z' of a real graph, expanded as a polynomial up to `order`.
inline RealPolyMap graph_invariance_defect(const ModalSplit& m, const RealPolyMap& h, int order) {
  const RealPolyMap x = add(RealPolyMap::linear(m.T_master, order), h.with_truncation_order(order).left_multiply(m.T_enslaved));
  const RealPolyMap fx = add(x.left_multiply(m.A), compose(m.f0, x, order));
  const RealPolyMap ydot = fx.left_multiply(m.Tinv_master);
  RealPolyMap defect = scale(fx.left_multiply(m.Tinv_enslaved), -1.0);
  for (std::size_t a = 0; a < m.q(); ++a) defect = add(defect, multiply_truncated(partial_derivative(h, a).with_truncation_order(order), ydot.component(a), order));
  return defect;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const SSMExpansion& e) {
  nlohmann::json idx = nlohmann::json::array();
  for (std::size_t j : e.subspace().indices) idx.push_back(j + 1);
  nlohmann::json log = nlohmann::json::array();
  for (const auto& r : e.divisor_log)
    log.push_back({{"p", r.p.exponents()}, {"l", r.l + 1}, {"divisor", complex_to_json(r.divisor)}, {"magnitude", std::abs(r.divisor)}});
  nlohmann::json fr = nlohmann::json::array();
  for (const auto& f : e.free_coefficients) fr.push_back({{"p", f.p.exponents()}, {"l", f.l + 1}, {"residual", complex_to_json(f.residual)}});
  nlohmann::json meta = {{"subspace", idx},
                         {"order", e.order},
                         {"uniqueness_class", e.uniqueness_class},
                         {"unique", e.unique},
                         {"formal", e.formal},
                         {"divisor_log", log},
                         {"free_coefficients", fr},
                         {"warnings", e.warnings},
                         {"modal_transform", detail::matrix_to_json(e.split.spectrum.real_transform)}};
  meta["sigma"] = e.sigma ? nlohmann::json(*e.sigma) : nlohmann::json(nullptr);
  if (e.nonresonance) meta["nonresonance"] = to_json(*e.nonresonance);
  return {{"graph", to_json(e.graph)}, {"metadata", meta}};
}

}  // namespace ssmkit

#endif  // SSMKIT_SSM_HPP
