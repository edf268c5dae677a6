// Seeded random test systems and a dense degree-by-degree oracle for graph coefficients.
#ifndef SSMKIT_TESTS_RANDOM_SYSTEMS_HPP
#define SSMKIT_TESTS_RANDOM_SYSTEMS_HPP

#include <cmath>
#include <random>
#include <vector>

#include "ssmkit.hpp"

namespace ssmkit::testing {

/// Underdamped system of dimension n (even) with pairs -a_k ± i w_k in random
/// real coordinates and random quadratic plus cubic f0. The slow pair is
/// nonresonant with the rest up to order `check_order`; seeds that fail are
/// skipped deterministically.
inline FirstOrderSystem random_nonresonant_system(unsigned seed, std::size_t n, int check_order = 3) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const auto N = static_cast<Eigen::Index>(n);
    RMatrix blocks = RMatrix::Zero(N, N);
    double damping = 0.05 + 0.05 * (u(rng) + 1.0);
    for (Eigen::Index k = 0; k < N; k += 2) {
      const double w = 1.0 + 0.6 * (u(rng) + 1.0) + 0.3 * static_cast<double>(k);
      blocks(k, k) = blocks(k + 1, k + 1) = -damping;
      blocks(k, k + 1) = w;
      blocks(k + 1, k) = -w;
      damping *= 2.0 + (u(rng) + 1.0);
    }
    RMatrix P = RMatrix::Identity(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < N; ++j) P(i, j) += 0.3 * u(rng);
    FirstOrderSystem sys;
    sys.A = P * blocks * P.inverse();
    sys.f0 = RealPolyMap(n, n, 3);
    for (const MultiIndex& m : monomials_up_to(n, 2, 3)) {
      RVector c(N);
      for (Eigen::Index i = 0; i < N; ++i) c(i) = 0.5 * u(rng);
      sys.f0.add_term(m, c);
    }
    const Spectrum s = compute_spectrum(sys.A);
    if (check_nonresonance(s, slow_subspace(s, 2), ResonanceMode::autonomous, check_order).passed) return sys;
  }
}

/// Degree-d graph coefficients from one dense real solve of
/// Dh_d A_y y - A_z h_d = [f_z(y, 0)]_d, valid when all lower nonlinear degrees vanish.
inline RealPolyMap dense_degree_solve(const FirstOrderSystem& sys, const SpectralSubspace& e, int d) {
  const Spectrum s = compute_spectrum(sys.A);
  const ModalSplit m = make_modal_split(sys, s, e);
  const std::size_t q = m.q(), ne = m.enslaved.size();
  const auto monos = monomials_of_degree(q, d);
  const auto nm = static_cast<Eigen::Index>(monos.size());
  const auto nz = static_cast<Eigen::Index>(ne);
  RMatrix L = RMatrix::Zero(nm * nz, nm * nz);
  RVector rhs(nm * nz);
  const RealPolyMap ay = RealPolyMap::linear(m.A_master, d);
  const RealPolyMap fz = compose(sys.f0, RealPolyMap::linear(m.T_master, d), d).left_multiply(m.Tinv_enslaved);
  for (Eigen::Index k = 0; k < nm; ++k) {
    const MultiIndex& p = monos[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < nz; ++r) {
      RealPolyMap h(q, ne, d);
      RVector unit = RVector::Zero(nz);
      unit(r) = 1.0;
      h.add_term(p, unit);
      RealPolyMap lhs = scale(h.left_multiply(m.A_enslaved), -1.0);
      for (std::size_t a = 0; a < q; ++a) lhs = add(lhs, multiply_truncated(partial_derivative(h, a), ay.component(a), d));
      for (Eigen::Index kk = 0; kk < nm; ++kk) L.block(kk * nz, k * nz + r, nz, 1) = lhs.coefficient(monos[static_cast<std::size_t>(kk)]);
    }
    rhs.segment(k * nz, nz) = fz.coefficient(p);
  }
  const RVector sol = L.fullPivLu().solve(rhs);
  RealPolyMap out(q, ne, d);
  for (Eigen::Index k = 0; k < nm; ++k) out.add_term(monos[static_cast<std::size_t>(k)], sol.segment(k * nz, nz));
  out.prune();
  return out;
}

/// log-log slope of the sampled invariance residual of an order-K graph.
inline double residual_slope(const FirstOrderSystem& sys, const SSMExpansion& e, const std::vector<double>& radii, unsigned long long seed) {
  std::vector<double> r;
  for (const auto& smp : invariance_residual(sys, e, radii, seed)) r.push_back(smp.max_residual);
  return fit_loglog_slope(radii, r);
}

}  // namespace ssmkit::testing

#endif  // SSMKIT_TESTS_RANDOM_SYSTEMS_HPP
