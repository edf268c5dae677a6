#ifndef SSMKIT_MULTI_INDEX_HPP
#define SSMKIT_MULTI_INDEX_HPP

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ssmkit/error.hpp"

namespace ssmkit {

/// Exponent vector of a monomial, one nonnegative entry per variable.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t n_vars) : exps_(n_vars, 0) {}
  MultiIndex(std::initializer_list<int> exps) : exps_(exps) { validate(); }
  explicit MultiIndex(std::vector<int> exps) : exps_(std::move(exps)) { validate(); }

  static MultiIndex unit(std::size_t n_vars, std::size_t var) {
    MultiIndex m(n_vars);
    m.exps_.at(var) = 1;
    return m;
  }

  std::size_t size() const noexcept { return exps_.size(); }
  int operator[](std::size_t i) const { return exps_[i]; }
  const std::vector<int>& exponents() const noexcept { return exps_; }

  /// Total degree |m|.
  int order() const noexcept { return std::accumulate(exps_.begin(), exps_.end(), 0); }

  bool is_zero() const noexcept {
    return std::all_of(exps_.begin(), exps_.end(), [](int e) { return e == 0; });
  }

  MultiIndex operator+(const MultiIndex& other) const {
    check_same_size(other);
    MultiIndex r(*this);
    for (std::size_t i = 0; i < exps_.size(); ++i) r.exps_[i] += other.exps_[i];
    return r;
  }

  /// Index with one more power of `var`.
  MultiIndex raised(std::size_t var) const {
    MultiIndex r(*this);
    ++r.exps_.at(var);
    return r;
  }

  /// Index with one less power of `var`; the caller guarantees the exponent is positive.
  MultiIndex lowered(std::size_t var) const {
    MultiIndex r(*this);
    if (r.exps_.at(var) == 0) throw InvalidInput("MultiIndex::lowered: exponent already zero");
    --r.exps_[var];
    return r;
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(exps_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.exps_ == b.exps_; }
  friend bool operator!=(const MultiIndex& a, const MultiIndex& b) { return !(a == b); }

 private:
  void validate() const {
    for (int e : exps_)
      if (e < 0) throw InvalidInput("MultiIndex: negative exponent");
  }
  void check_same_size(const MultiIndex& other) const {
    if (other.size() != size()) throw DimensionMismatch("MultiIndex: size mismatch");
  }

  std::vector<int> exps_;
};

/// Graded lexicographic order: lower total degree first; within a degree the
/// index with the larger leading exponent comes first (x1^3 before x1^2 x2).
struct GradedLex {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int oa = a.order();
    const int ob = b.order();
    if (oa != ob) return oa < ob;
    const auto& ea = a.exponents();
    const auto& eb = b.exponents();
    if (ea.size() != eb.size()) return ea.size() < eb.size();
    for (std::size_t i = 0; i < ea.size(); ++i)
      if (ea[i] != eb[i]) return ea[i] > eb[i];
    return false;
  }
};

/// All multi-indices of exactly `degree` in `n_vars` variables, graded-lex sorted.
inline std::vector<MultiIndex> monomials_of_degree(std::size_t n_vars, int degree) {
  std::vector<MultiIndex> out;
  if (n_vars == 0) {
    if (degree == 0) out.emplace_back(0);
    return out;
  }
  std::vector<int> cur(n_vars, 0);
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == n_vars) {
      cur[pos] = left;
      out.emplace_back(cur);
      return;
    }
    for (int e = left; e >= 0; --e) {
      cur[pos] = e;
      self(self, pos + 1, left - e);
    }
  };
  rec(rec, 0, degree);
  return out;
}

/// All multi-indices with lo <= |m| <= hi, graded-lex sorted.
inline std::vector<MultiIndex> monomials_up_to(std::size_t n_vars, int lo, int hi) {
  std::vector<MultiIndex> out;
  for (int d = std::max(lo, 0); d <= hi; ++d) {
    auto part = monomials_of_degree(n_vars, d);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace ssmkit

#endif  // SSMKIT_MULTI_INDEX_HPP
