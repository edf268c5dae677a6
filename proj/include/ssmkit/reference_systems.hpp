#ifndef SSMKIT_REFERENCE_SYSTEMS_HPP
#define SSMKIT_REFERENCE_SYSTEMS_HPP

#include <algorithm>
#include <cmath>

#include "ssmkit/mech.hpp"
#include "ssmkit/poly_map.hpp"
#include "ssmkit/system.hpp"

namespace ssmkit {

/// x' = -x, y' = -√24 y + x^2 + x^3 + x^4 + x^5 (+ ε forcing on y).
inline FirstOrderSystem polynomial_slow_manifold_system() {
  FirstOrderSystem s;
  s.A = RMatrix::Zero(2, 2);
  s.A(0, 0) = -1.0;
  s.A(1, 1) = -std::sqrt(24.0);
  s.f0 = RealPolyMap(2, 2, 5);
  for (int j = 2; j <= 5; ++j) s.f0.add_term(MultiIndex{j, 0}, (RVector(2) << 0.0, 1.0).finished());
  return s;
}

/// The slow-manifold system forced by ε sin t on the y equation.
inline FirstOrderSystem periodically_forced_slow_manifold_system(double epsilon) {
  FirstOrderSystem s = polynomial_slow_manifold_system();
  Forcing f;
  f.frequencies = RVector::Constant(1, 1.0);
  f.terms.push_back({{1}, (RVector(2) << 0.0, 1.0).finished(), RVector::Zero(2), {}});
  s.forcing = f;
  s.epsilon = epsilon;
  return s;
}

/// The slow-manifold system forced by ε (sin t + sin √2 t) on the y equation.
inline FirstOrderSystem quasiperiodically_forced_slow_manifold_system(double epsilon) {
  FirstOrderSystem s = polynomial_slow_manifold_system();
  Forcing f;
  f.frequencies = (RVector(2) << 1.0, std::sqrt(2.0)).finished();
  f.commensurate = false;
  f.terms.push_back({{1, 0}, (RVector(2) << 0.0, 1.0).finished(), RVector::Zero(2), {}});
  f.terms.push_back({{0, 1}, (RVector(2) << 0.0, 1.0).finished(), RVector::Zero(2), {}});
  s.forcing = f;
  s.epsilon = epsilon;
  return s;
}

/// x' = -x, y' = -2y + x^power: resonant for power 2, free-coefficient family for power 3.
inline FirstOrderSystem resonant_slow_manifold_system(int power = 2) {
  FirstOrderSystem s;
  s.A = RMatrix::Zero(2, 2);
  s.A(0, 0) = -1.0;
  s.A(1, 1) = -2.0;
  s.f0 = RealPolyMap(2, 2, std::max(2, power));
  s.f0.add_term(MultiIndex{power, 0}, (RVector(2) << 0.0, 1.0).finished());
  return s;
}

/// x' = -x^2, y' = -y + x: formal center-manifold series with factorial growth.
inline FirstOrderSystem euler_system() {
  FirstOrderSystem s;
  s.A = RMatrix::Zero(2, 2);
  s.A(1, 0) = 1.0;
  s.A(1, 1) = -1.0;
  s.f0 = RealPolyMap(2, 2, 2);
  s.f0.add_term(MultiIndex{2, 0}, (RVector(2) << -1.0, 0.0).finished());
  return s;
}

/// Two coupled masses with a cubic spring on the first mass.
inline MechanicalSystem shaw_pierre_mechanical(double c = 0.3, double k = 1.0, double m = 1.0, double gamma = 0.5) {
  MechanicalSystem s;
  s.M = m * RMatrix::Identity(2, 2);
  s.C = (RMatrix(2, 2) << c, -c, -c, 2.0 * c).finished();
  s.K = (RMatrix(2, 2) << 2.0 * k, -k, -k, 2.0 * k).finished();
  s.G = RMatrix::Zero(2, 2);
  s.B = RMatrix::Zero(2, 2);
  s.F0 = RealPolyMap(4, 2, 3);
  s.F0.add_term(MultiIndex{3, 0, 0, 0}, (RVector(2) << -gamma, 0.0).finished());
  return s;
}

inline FirstOrderSystem shaw_pierre_system() { return to_first_order(shaw_pierre_mechanical()); }

/// Shaw-Pierre system with ε sin t acting on the second mass.
inline FirstOrderSystem shaw_pierre_forced_system(double epsilon) {
  MechanicalSystem m = shaw_pierre_mechanical();
  Forcing f;
  f.frequencies = RVector::Constant(1, 1.0);
  f.terms.push_back({{1}, (RVector(2) << 0.0, 1.0).finished(), RVector::Zero(2), {}});
  m.forcing = f;
  m.epsilon = epsilon;
  return to_first_order(m);
}

}  // namespace ssmkit

#endif  // SSMKIT_REFERENCE_SYSTEMS_HPP
