#ifndef SSMKIT_IO_HPP
#define SSMKIT_IO_HPP

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssmkit/error.hpp"
#include "ssmkit/mech.hpp"
#include "ssmkit/spectral.hpp"
#include "ssmkit/system.hpp"

namespace ssmkit {

/// Run options carried alongside a system description.
struct RunOptions {
  std::optional<std::string> subspace;
  std::optional<int> order;
  std::optional<int> eps_order;
  std::optional<int> harmonics;
  std::optional<double> tol_resonance;
  unsigned long long seed = 20240917ULL;
  std::optional<std::string> style;
  /// Unparsed options (initial conditions, sections, horizons).
  nlohmann::json raw = nlohmann::json::object();
};

struct SystemSpec {
  std::string name;
  FirstOrderSystem system;
  std::optional<MechanicalSystem> mechanical;
  StateOrdering ordering = StateOrdering::interleaved;
  RunOptions options;
};

namespace detail {

template <class T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput(std::string("options.") + key + " has the wrong type");
  }
}

}  // namespace detail

inline StateOrdering parse_ordering(const std::string& s) {
  if (s == "interleaved") return StateOrdering::interleaved;
  if (s == "blocked") return StateOrdering::blocked;
  throw InvalidInput("unknown state ordering '" + s + "' (expected interleaved or blocked)");
}

inline SystemSpec parse_system_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("system spec must be a JSON object");
  const bool fo = j.contains("first_order"), me = j.contains("mechanical");
  if (fo == me) throw InvalidInput("system spec needs exactly one of \"first_order\" or \"mechanical\"");
  SystemSpec s;
  s.name = j.value("name", std::string{});
  try {
    if (fo) {
      s.system = first_order_from_json(j.at("first_order"));
    } else {
      const auto& mj = j.at("mechanical");
      if (mj.contains("ordering")) s.ordering = parse_ordering(mj.at("ordering").get<std::string>());
      s.mechanical = mechanical_from_json(mj);
      s.system = to_first_order(*s.mechanical, s.ordering);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed system spec: ") + e.what());
  }
  if (j.contains("options")) {
    const auto& o = j.at("options");
    if (!o.is_object()) throw InvalidInput("\"options\" must be an object");
    s.options.subspace = detail::optional_field<std::string>(o, "subspace");
    s.options.order = detail::optional_field<int>(o, "order");
    s.options.eps_order = detail::optional_field<int>(o, "eps_order");
    s.options.harmonics = detail::optional_field<int>(o, "harmonics");
    s.options.tol_resonance = detail::optional_field<double>(o, "tol_resonance");
    s.options.style = detail::optional_field<std::string>(o, "style");
    if (auto seed = detail::optional_field<unsigned long long>(o, "seed")) s.options.seed = *seed;
    s.options.raw = o;
  }
  return s;
}

inline SystemSpec load_system_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open spec file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("spec file " + path + " is not valid JSON: " + e.what());
  }
  return parse_system_spec(j);
}

/// Subspace selector: 1-based indices "1,2", "slow:q", "fast:q" or "all".
inline SpectralSubspace parse_subspace(const Spectrum& s, const std::string& text) {
  auto count = [&](const std::string& tail) {
    try {
      std::size_t used = 0;
      const int q = std::stoi(tail, &used);
      if (used != tail.size() || q < 1) throw InvalidInput("");
      return static_cast<std::size_t>(q);
    } catch (const std::exception&) {
      throw InvalidInput("bad subspace size in '" + text + "'");
    }
  };
  if (text == "all") return slow_subspace(s, s.size());
  if (text.rfind("slow:", 0) == 0) return slow_subspace(s, count(text.substr(5)));
  if (text.rfind("fast:", 0) == 0) return fast_subspace(s, count(text.substr(5)));
  std::vector<std::size_t> idx;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t j = count(item);
    idx.push_back(j - 1);
  }
  return make_subspace(s, idx, text);
}

}  // namespace ssmkit

#endif  // SSMKIT_IO_HPP
