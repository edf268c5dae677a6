#ifndef SSMKIT_MECH_HPP
#define SSMKIT_MECH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/system.hpp"

namespace ssmkit {

/// M q'' + (C + G) q' + (K + B) q = F0(q, q') + ε F1(q, q', Ωt).
///
/// F0 takes the 2n inputs (q_1..q_n, q'_1..q'_n) and returns n outputs.
struct MechanicalSystem {
  RMatrix M, C, K, G, B;
  RealPolyMap F0;
  std::optional<Forcing> forcing;
  double epsilon = 0.0;

  std::size_t dofs() const noexcept { return static_cast<std::size_t>(M.rows()); }
};

/// Order of the first-order state vector.
enum class StateOrdering {
  /// (q_1, q'_1, q_2, q'_2, ...)
  interleaved,
  /// (q_1, ..., q_n, q'_1, ..., q'_n)
  blocked,
};

struct MechanicalCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct MechanicalDiagnostics {
  std::vector<MechanicalCheck> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const MechanicalCheck& c) { return c.passed; });
  }

  const MechanicalCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline std::string entry_string(Eigen::Index r, Eigen::Index c, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%ld,%ld) deviation %.3g", static_cast<long>(r + 1), static_cast<long>(c + 1), v);
  return buf;
}

inline MechanicalCheck symmetry_check(const std::string& name, const RMatrix& a, bool skew) {
  MechanicalCheck chk{name, true, "ok"};
  const RMatrix d = skew ? RMatrix(a + a.transpose()) : RMatrix(a - a.transpose());
  Eigen::Index r = 0, c = 0;
  const double dev = d.size() ? d.cwiseAbs().maxCoeff(&r, &c) : 0.0;
  const double tol = 1e-10 * std::max(1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
  if (dev > tol) {
    chk.passed = false;
    chk.detail = std::string(skew ? "not skew-symmetric" : "not symmetric") + ": max deviation at " + entry_string(r, c, dev);
  }
  return chk;
}

inline MechanicalCheck semidefinite_check(const std::string& name, const RMatrix& a, bool strict) {
  MechanicalCheck chk{name, true, "ok"};
  const RMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym);
  const double lmin = es.eigenvalues().minCoeff();
  const double scale = sym.norm();
  char buf[128];
  if (strict) {
    Eigen::LLT<RMatrix> llt(sym);
    bool neg_diag = false;
    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, i) <= 0.0) {
        neg_diag = true;
        bad = i;
        break;
      }
    if (llt.info() != Eigen::Success || lmin <= 0.0) {
      chk.passed = false;
      if (neg_diag)
        std::snprintf(buf, sizeof buf, "not positive definite: diagonal entry (%ld,%ld) = %.6g", static_cast<long>(bad + 1), static_cast<long>(bad + 1), a(bad, bad));
      else
        std::snprintf(buf, sizeof buf, "not positive definite: smallest eigenvalue %.6g", lmin);
      chk.detail = buf;
    }
  } else if (lmin < -1e-10 * scale) {
    chk.passed = false;
    std::snprintf(buf, sizeof buf, "not positive semidefinite: smallest eigenvalue %.6g", lmin);
    chk.detail = buf;
  }
  return chk;
}

inline std::vector<std::size_t> state_permutation(std::size_t n, StateOrdering ordering) {
  std::vector<std::size_t> perm(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) perm[i] = i;
  if (ordering == StateOrdering::interleaved)
    for (std::size_t i = 0; i < n; ++i) {
      perm[2 * i] = i;
      perm[2 * i + 1] = n + i;
    }
  return perm;
}

}  // namespace detail

/// Symmetry, skew-symmetry and definiteness report; never throws on bad matrices.
inline MechanicalDiagnostics validate(const MechanicalSystem& m) {
  MechanicalDiagnostics d;
  const auto n = m.M.rows();
  const std::pair<const char*, const RMatrix*> mats[] = {{"M", &m.M}, {"C", &m.C}, {"K", &m.K}, {"G", &m.G}, {"B", &m.B}};
  bool shapes = true;
  for (const auto& [name, mat] : mats)
    if (mat->rows() != n || mat->cols() != n) {
      d.checks.push_back({std::string(name) + " shape", false, "expected " + std::to_string(n) + "x" + std::to_string(n)});
      shapes = false;
    }
  if (!shapes || n == 0) return d;
  d.checks.push_back(detail::symmetry_check("M symmetric", m.M, false));
  d.checks.push_back(detail::semidefinite_check("M positive definite", m.M, true));
  d.checks.push_back(detail::symmetry_check("C symmetric", m.C, false));
  d.checks.push_back(detail::semidefinite_check("C positive semidefinite", m.C, false));
  d.checks.push_back(detail::symmetry_check("K symmetric", m.K, false));
  d.checks.push_back(detail::semidefinite_check("K positive semidefinite", m.K, false));
  d.checks.push_back(detail::symmetry_check("G skew-symmetric", m.G, true));
  d.checks.push_back(detail::symmetry_check("B skew-symmetric", m.B, true));
  MechanicalCheck f0{"F0 nonlinear", true, "ok"};
  if (m.F0.n_in() != 2 * static_cast<std::size_t>(n) || m.F0.n_out() != static_cast<std::size_t>(n)) {
    f0.passed = false;
    f0.detail = "F0 must map 2n = " + std::to_string(2 * n) + " inputs to n = " + std::to_string(n) + " outputs";
  } else if (auto md = m.F0.min_degree(); md && *md < 2) {
    f0.passed = false;
    f0.detail = "F0 has a term of degree " + std::to_string(*md) + "; constant and linear terms belong in K, C, G, B";
  }
  d.checks.push_back(f0);
  return d;
}

/// First-order form x' = A x + f0(x) + ε f1 with x = (q, q') in the chosen ordering.
inline FirstOrderSystem to_first_order(const MechanicalSystem& m, StateOrdering ordering = StateOrdering::interleaved) {
  const auto n = m.M.rows();
  const auto nn = static_cast<std::size_t>(n);
  if (n == 0 || m.M.cols() != n) throw InvalidInput("M must be square and nonempty");
  for (const RMatrix* mat : {&m.C, &m.K, &m.G, &m.B})
    if (mat->rows() != n || mat->cols() != n) throw DimensionMismatch("C, K, G, B must match the size of M");
  Eigen::LLT<RMatrix> llt(0.5 * (m.M + m.M.transpose()));
  if (llt.info() != Eigen::Success) throw InvalidInput("M is singular or not positive definite");
  if (m.F0.n_in() != 2 * nn || m.F0.n_out() != nn) throw DimensionMismatch("F0 must map 2n inputs to n outputs");

  RMatrix ab = RMatrix::Zero(2 * n, 2 * n);
  ab.topRightCorner(n, n).setIdentity();
  ab.bottomLeftCorner(n, n) = -llt.solve(m.K + m.B);
  ab.bottomRightCorner(n, n) = -llt.solve(m.C + m.G);

  const auto perm = detail::state_permutation(nn, ordering);
  // perm[new] = blocked index
  std::vector<std::size_t> inv(2 * nn);
  for (std::size_t i = 0; i < 2 * nn; ++i) inv[perm[i]] = i;

  FirstOrderSystem s;
  s.A.resize(2 * n, 2 * n);
  for (std::size_t r = 0; r < 2 * nn; ++r)
    for (std::size_t c = 0; c < 2 * nn; ++c) s.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ab(static_cast<Eigen::Index>(perm[r]), static_cast<Eigen::Index>(perm[c]));

  auto permute_powers = [&](const std::vector<int>& blocked) {
    std::vector<int> out(2 * nn, 0);
    for (std::size_t i = 0; i < 2 * nn; ++i) out[inv[i]] = blocked[i];
    return out;
  };
  auto lift = [&](const RVector& force) {
    RVector solved = llt.solve(force);
    RVector out = RVector::Zero(2 * n);
    for (std::size_t i = 0; i < nn; ++i) out(static_cast<Eigen::Index>(inv[nn + i])) = solved(static_cast<Eigen::Index>(i));
    return out;
  };

  s.f0 = RealPolyMap(2 * nn, 2 * nn, std::max(2, m.F0.truncation_order()));
  for (const auto& [mi, c] : m.F0.terms()) s.f0.add_term(MultiIndex(permute_powers(mi.exponents())), lift(c));
  s.f0.prune();

  if (m.forcing) {
    Forcing f;
    f.frequencies = m.forcing->frequencies;
    f.commensurate = m.forcing->commensurate;
    for (const auto& t : m.forcing->terms) {
      ForcingTerm ft;
      ft.harmonic = t.harmonic;
      ft.sin = lift(t.sin);
      ft.cos = lift(t.cos);
      if (!t.powers.empty()) ft.powers = permute_powers(t.powers);
      f.terms.push_back(std::move(ft));
    }
    s.forcing = std::move(f);
  }
  s.epsilon = m.epsilon;
  s.validate();
  return s;
}

/// Parses the mechanical JSON schema; C, G, B default to zero.
inline MechanicalSystem mechanical_from_json(const nlohmann::json& j) {
  MechanicalSystem m;
  m.M = detail::matrix_from_json(j.at("M"), "M");
  const auto n = m.M.rows();
  auto opt = [&](const char* key) { return j.contains(key) ? detail::matrix_from_json(j.at(key), key) : RMatrix(RMatrix::Zero(n, n)); };
  m.C = opt("C");
  m.K = opt("K");
  m.G = opt("G");
  m.B = opt("B");
  const auto nn = static_cast<std::size_t>(n);
  if (j.contains("F0"))
    m.F0 = poly_map_from_json<double>(j.at("F0"), 2 * nn, nn);
  else
    m.F0 = RealPolyMap(2 * nn, nn, 2);
  if (j.contains("forcing") && !j.at("forcing").is_null()) {
    m.forcing = forcing_from_json(j.at("forcing"), nn);
    m.forcing->validate(2 * nn, nn);
  }
  m.epsilon = j.value("epsilon", 0.0);
  return m;
}

}  // namespace ssmkit

#endif  // SSMKIT_MECH_HPP
