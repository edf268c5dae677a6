#ifndef SSMKIT_SYSTEM_HPP
#define SSMKIT_SYSTEM_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/multi_index.hpp"
#include "ssmkit/poly_map.hpp"

namespace ssmkit {

/// One forcing term: (sin * sin<m, θ> + cos * cos<m, θ>) * x^powers with θ = Ω t.
struct ForcingTerm {
  std::vector<int> harmonic;
  RVector sin;
  RVector cos;
  /// Exponents over the state; empty means constant in the state.
  std::vector<int> powers;
};

/// Trigonometric-polynomial forcing f1(x, Ωt).
struct Forcing {
  RVector frequencies;
  std::vector<ForcingTerm> terms;
  /// Declared by the user; rational independence is not tested numerically.
  bool commensurate = true;

  std::size_t n_freq() const noexcept { return static_cast<std::size_t>(frequencies.size()); }

  int max_harmonic() const {
    int h = 0;
    for (const auto& t : terms) {
      int a = 0;
      for (int m : t.harmonic) a += std::abs(m);
      h = std::max(h, a);
    }
    return h;
  }

  double phase_rate(const std::vector<int>& m) const {
    double w = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) w += m[i] * frequencies(static_cast<Eigen::Index>(i));
    return w;
  }

  void validate(std::size_t n_state, std::size_t n_out) const {
    for (Eigen::Index i = 0; i < frequencies.size(); ++i)
      if (!(frequencies(i) > 0.0)) throw InvalidInput("forcing frequencies must be positive");
    for (const auto& t : terms) {
      if (t.harmonic.size() != n_freq()) throw DimensionMismatch("forcing term harmonic length differs from the number of frequencies");
      if (static_cast<std::size_t>(t.sin.size()) != n_out || static_cast<std::size_t>(t.cos.size()) != n_out)
        throw DimensionMismatch("forcing term coefficient length must be " + std::to_string(n_out));
      if (!t.powers.empty() && t.powers.size() != n_state) throw DimensionMismatch("forcing term powers length must be " + std::to_string(n_state));
      for (int p : t.powers)
        if (p < 0) throw InvalidInput("forcing term powers must be nonnegative");
    }
  }

  RVector evaluate(const RVector& x, double t) const {
    RVector out = RVector::Zero(terms.empty() ? x.size() : terms.front().sin.size());
    for (const auto& term : terms) {
      const double th = phase_rate(term.harmonic) * t;
      double mono = 1.0;
      for (std::size_t i = 0; i < term.powers.size(); ++i) mono *= std::pow(x(static_cast<Eigen::Index>(i)), term.powers[i]);
      out += mono * (term.sin * std::sin(th) + term.cos * std::cos(th));
    }
    return out;
  }
};

enum class Smoothness { finite, infinite, analytic };

/// x' = A x + f0(x) + ε f1(x, Ωt).
struct FirstOrderSystem {
  RMatrix A;
  RealPolyMap f0;
  std::optional<Forcing> forcing;
  double epsilon = 0.0;
  Smoothness smoothness = Smoothness::analytic;
  int smoothness_order = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(A.rows()); }

  bool autonomous() const { return !forcing || forcing->terms.empty() || epsilon == 0.0; }

  void validate() const {
    if (A.rows() != A.cols() || A.rows() == 0) throw InvalidInput("A must be square and nonempty");
    if (!A.allFinite()) throw InvalidInput("A has non-finite entries");
    if (f0.n_in() != dim() || f0.n_out() != dim())
      throw DimensionMismatch("f0 must map R^" + std::to_string(dim()) + " to itself (got " + std::to_string(f0.n_in()) + " -> " + std::to_string(f0.n_out()) + ")");
    if (auto md = f0.min_degree(); md && *md < 2) throw InvalidInput("f0 must not contain constant or linear terms");
    if (forcing) forcing->validate(dim(), dim());
    if (epsilon < 0.0) throw InvalidInput("epsilon must be nonnegative");
  }

  RVector vector_field(const RVector& x, double t = 0.0) const {
    RVector dx = A * x + f0.evaluate(x);
    if (forcing && epsilon != 0.0) dx += epsilon * forcing->evaluate(x, t);
    return dx;
  }
};

inline FirstOrderSystem linear_system(const RMatrix& a, int order = 2) {
  FirstOrderSystem s;
  s.A = a;
  s.f0 = RealPolyMap(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.rows()), order);
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline RMatrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw InvalidInput(name + " must be a nonempty array of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  RMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidInput(name + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw InvalidInput(name + " entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline nlohmann::json matrix_to_json(const RMatrix& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

inline RVector vector_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw InvalidInput(name + " must be an array");
  RVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline nlohmann::json vector_to_json(const RVector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace detail

inline Forcing forcing_from_json(const nlohmann::json& j, std::size_t n_out) {
  Forcing f;
  f.frequencies = detail::vector_from_json(j.at("frequencies"), "forcing.frequencies");
  if (j.contains("commensurate")) f.commensurate = j.at("commensurate").get<bool>();
  for (const auto& t : j.value("terms", nlohmann::json::array())) {
    ForcingTerm term;
    term.harmonic = t.at("harmonic").get<std::vector<int>>();
    term.sin = t.contains("sin") ? detail::vector_from_json(t.at("sin"), "forcing.sin") : RVector::Zero(static_cast<Eigen::Index>(n_out));
    term.cos = t.contains("cos") ? detail::vector_from_json(t.at("cos"), "forcing.cos") : RVector::Zero(static_cast<Eigen::Index>(n_out));
    if (t.contains("powers")) term.powers = t.at("powers").get<std::vector<int>>();
    f.terms.push_back(std::move(term));
  }
  return f;
}

inline nlohmann::json to_json(const Forcing& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.terms) {
    nlohmann::json jt = {{"harmonic", t.harmonic}, {"sin", detail::vector_to_json(t.sin)}, {"cos", detail::vector_to_json(t.cos)}};
    if (!t.powers.empty()) jt["powers"] = t.powers;
    terms.push_back(jt);
  }
  return {{"frequencies", detail::vector_to_json(f.frequencies)}, {"commensurate", f.commensurate}, {"terms", terms}};
}

/// Parses {"A": [[...]], "f0": [terms], "forcing": {...}, "epsilon": x}.
inline FirstOrderSystem first_order_from_json(const nlohmann::json& j) {
  FirstOrderSystem s;
  s.A = detail::matrix_from_json(j.at("A"), "A");
  const auto n = static_cast<std::size_t>(s.A.rows());
  int order = 2;
  if (j.contains("f0")) {
    const auto& f = j.at("f0");
    s.f0 = poly_map_from_json<double>(f, n, n);
    order = std::max(2, s.f0.truncation_order());
    s.f0 = s.f0.with_truncation_order(order);
  } else {
    s.f0 = RealPolyMap(n, n, order);
  }
  if (j.contains("forcing") && !j.at("forcing").is_null()) s.forcing = forcing_from_json(j.at("forcing"), n);
  s.epsilon = j.value("epsilon", 0.0);
  s.validate();
  return s;
}

inline nlohmann::json to_json(const FirstOrderSystem& s) {
  nlohmann::json j = {{"A", detail::matrix_to_json(s.A)}, {"f0", to_json_terms(s.f0)}, {"epsilon", s.epsilon}};
  if (s.forcing) j["forcing"] = to_json(*s.forcing);
  return j;
}

}  // namespace ssmkit

#endif  // SSMKIT_SYSTEM_HPP
