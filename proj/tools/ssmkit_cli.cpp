// ssmkit command-line driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "ssmkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssmkit;

namespace {

enum Exit : int {
  ok = 0,
  usage = 1,
  invalid_input = 2,
  spectral_precondition = 3,
  resonance = 4,
  demo_failure = 5,
  output_exists = 6,
  numerical = 7,
  internal = 8,
};

struct OutputExists : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string spec;
  std::optional<std::string> subspace;
  std::optional<int> order;
  std::optional<int> eps_order;
  std::optional<int> harmonics;
  std::optional<double> tol_resonance;
  std::string out = "ssmkit-out";
  std::optional<unsigned long long> seed;
  std::optional<std::string> style;
  bool force = false;
  std::string demo;
};

/// Spec options overridden by command-line flags.
struct Resolved {
  SystemSpec spec;
  SpectralTolerances tol;
  std::optional<std::string> subspace;
  std::optional<int> order;
  std::optional<int> eps_order;
  std::optional<int> harmonics;
  unsigned long long seed = 0;
  ParametrizationStyle style = ParametrizationStyle::graph;
};

Resolved resolve(const Flags& f) {
  Resolved r{load_system_spec(f.spec), {}, {}, {}, {}, {}, 0, ParametrizationStyle::graph};
  const RunOptions& o = r.spec.options;
  r.subspace = f.subspace ? f.subspace : o.subspace;
  r.order = f.order ? f.order : o.order;
  r.eps_order = f.eps_order ? f.eps_order : o.eps_order;
  r.harmonics = f.harmonics ? f.harmonics : o.harmonics;
  if (auto tol = f.tol_resonance ? f.tol_resonance : o.tol_resonance) r.tol.resonance = *tol;
  r.seed = f.seed.value_or(o.seed);
  if (auto st = f.style ? f.style : o.style) r.style = parse_style(*st);
  return r;
}

SpectralSubspace select_subspace(const Resolved& r, const Spectrum& s) {
  if (r.subspace) return parse_subspace(s, *r.subspace);
  return mode_subspaces(s).front();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json tolerances_json(const SpectralTolerances& t) {
  return {{"pairing", t.pairing}, {"resonance", t.resonance}, {"near_miss", t.near_miss}, {"multiplicity", t.multiplicity}, {"rank", t.rank}};
}

json versions_json() {
  char eigen[32], boost[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  std::snprintf(boost, sizeof boost, "%d.%d.%d", BOOST_VERSION / 100000, BOOST_VERSION / 100 % 1000, BOOST_VERSION % 100);
  char nl[32];
  std::snprintf(nl, sizeof nl, "%d.%d.%d", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH);
  return {{"ssmkit", "0.1.0"}, {"eigen", eigen}, {"boost", boost}, {"nlohmann_json", nl}};
}

/// Writes every artifact plus manifest.json; refuses to overwrite unless forced.
void write_outputs(const fs::path& dir, std::map<std::string, std::string> files, json manifest, bool force) {
  json names = json::array();
  for (const auto& kv : files) names.push_back(kv.first);
  manifest["artifacts"] = names;
  files["manifest.json"] = dump(manifest);
  if (!force)
    for (const auto& kv : files)
      if (fs::exists(dir / kv.first)) throw OutputExists((dir / kv.first).string() + " exists; pass --force to overwrite");
  fs::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + (dir / name).string());
    out << content;
  }
}

json base_manifest(const std::string& command, const Resolved* r) {
  json m = {{"command", command}, {"versions", versions_json()}, {"threads", thread_limit()}};
  if (r) {
    m["spec_name"] = r->spec.name;
    m["tolerances"] = tolerances_json(r->tol);
    m["seed"] = r->seed;
    m["style"] = to_string(r->style);
    m["subspace"] = r->subspace ? json(*r->subspace) : json(nullptr);
    m["order"] = r->order ? json(*r->order) : json(nullptr);
    m["eps_order"] = r->eps_order ? json(*r->eps_order) : json(nullptr);
    m["harmonics"] = r->harmonics ? json(*r->harmonics) : json(nullptr);
  }
  return m;
}

json indices_json(const SpectralSubspace& e) {
  json idx = json::array();
  for (std::size_t j : e.indices) idx.push_back(j + 1);
  return idx;
}

json subspace_report(const Spectrum& s, const SpectralSubspace& e, const SpectralTolerances& tol) {
  const SpectralQuotients q = spectral_quotients(s, e);
  json j = {{"indices", indices_json(e)}, {"label", e.label}, {"class", to_string(classify_subspace(s, e))}, {"Sigma", q.Sigma}};
  j["sigma"] = q.sigma ? json(*q.sigma) : json(nullptr);
  j["autonomous"] = to_json(check_nonresonance(s, e, ResonanceMode::autonomous, std::nullopt, tol));
  j["forced"] = to_json(check_nonresonance(s, e, ResonanceMode::forced, std::nullopt, tol));
  return j;
}

int cmd_analyze(const Flags& f) {
  const Resolved r = resolve(f);
  const Spectrum s = compute_spectrum(r.spec.system.A, r.tol);
  json report = {{"name", r.spec.name}, {"dimension", r.spec.system.dim()}, {"spectrum", to_json(s)}, {"semisimple", s.semisimple}, {"stable", s.all_stable()}};
  int code = Exit::ok;
  try {
    s.require_semisimple();
    s.require_stable();
    json subs = json::array();
    for (const auto& e : mode_subspaces(s)) subs.push_back(subspace_report(s, e, r.tol));
    report["mode_subspaces"] = subs;
    if (r.subspace) report["selected"] = subspace_report(s, parse_subspace(s, *r.subspace), r.tol);
    if (s.size() >= 2) {
      const SlowHierarchy h = slow_hierarchy(s);
      report["slow_hierarchy"] = {{"cut_indices", h.cut_indices}, {"gaps", h.gaps}, {"conjugate_closed", h.conjugate_closed}};
    }
  } catch (const SpectralPrecondition& e) {
    report["error"] = {{"class", "SpectralPrecondition"}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << "\n";
    code = Exit::spectral_precondition;
  }
  write_outputs(f.out, {{"report.json", dump(report)}}, base_manifest("analyze", &r), f.force);
  return code;
}

int cmd_ssm(const Flags& f) {
  const Resolved r = resolve(f);
  const FirstOrderSystem& sys = r.spec.system;
  const Spectrum s = compute_spectrum(sys.A, r.tol);
  const SpectralSubspace e = select_subspace(r, s);
  std::map<std::string, std::string> files;
  std::vector<std::string> warnings;
  if (sys.autonomous()) {
    SSMOptions opt;
    opt.tolerances = r.tol;
    const SSMExpansion x = compute_ssm(sys, e, r.order, opt);
    files["ssm.json"] = dump(to_json(x));
    warnings = x.warnings;
  } else {
    ForcedOptions opt;
    opt.tolerances = r.tol;
    s.require_stable();
    const int K = r.order.value_or(spectral_quotients(s, e).Sigma + 1);
    const ForcedSSMExpansion x = compute_forced_ssm(sys, e, K, r.eps_order.value_or(1), r.harmonics, opt);
    files["forced_ssm.json"] = dump(to_json(x));
    warnings = x.warnings;
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  write_outputs(f.out, files, base_manifest("ssm", &r), f.force);
  return Exit::ok;
}

int cmd_nnm(const Flags& f) {
  const Resolved r = resolve(f);
  ForcedOptions opt;
  opt.tolerances = r.tol;
  const NNMSolution n = compute_nnm(r.spec.system, r.eps_order.value_or(1), r.harmonics, opt);
  for (const auto& w : n.warnings) std::cerr << "warning: " << w << "\n";
  json j = to_json(n);
  const Spectrum s = compute_spectrum(r.spec.system.A, r.tol);
  json modal = json::array();
  for (const auto& ts : n.per_order) modal.push_back(to_json(ts.left_multiply(s.real_transform_inverse)));
  j["modal_per_order"] = modal;
  j["residual"] = nnm_residual(r.spec.system, n, r.spec.system.epsilon);
  write_outputs(f.out, {{"nnm.json", dump(j)}}, base_manifest("nnm", &r), f.force);
  return Exit::ok;
}

ReducedModel build_reduced(const Resolved& r) {
  const Spectrum s = compute_spectrum(r.spec.system.A, r.tol);
  const SpectralSubspace e = select_subspace(r, s);
  s.require_stable();
  const SpectralQuotients q = spectral_quotients(s, e);
  ReduceOptions opt;
  opt.tolerances = r.tol;
  opt.eps_order = r.eps_order.value_or(1);
  opt.harmonic_bound = r.harmonics;
  const int K = r.order.value_or(q.sigma.value_or(q.Sigma) + 1);
  return parametrize_ssm(r.spec.system, e, K, r.style, opt);
}

int cmd_reduce(const Flags& f) {
  const Resolved r = resolve(f);
  const ReducedModel rm = build_reduced(r);
  for (const auto& w : rm.warnings) std::cerr << "warning: " << w << "\n";
  json j = to_json(rm);
  j["invariance_defect"] = parametrization_invariance_defect(rm, r.spec.system);
  write_outputs(f.out, {{"reduced_model.json", dump(j)}}, base_manifest("reduce", &r), f.force);
  return Exit::ok;
}

RVector vector_option(const json& raw, const char* key) {
  try {
    const auto v = raw.at(key).get<std::vector<double>>();
    return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const json::exception&) {
    throw InvalidInput(std::string("options.") + key + " must be an array of numbers");
  }
}

double number_option(const json& raw, const char* key, double fallback) {
  if (!raw.contains(key)) return fallback;
  if (!raw.at(key).is_number()) throw InvalidInput(std::string("options.") + key + " must be a number");
  return raw.at(key).get<double>();
}

/// Initial state from options.x0, or the lift of options.eta0 through the reduced model.
RVector initial_state(const Resolved& r, double t0) {
  const json& raw = r.spec.options.raw;
  if (raw.contains("x0")) {
    RVector x0 = vector_option(raw, "x0");
    if (static_cast<std::size_t>(x0.size()) != r.spec.system.dim()) throw DimensionMismatch("options.x0 has the wrong dimension");
    return x0;
  }
  if (raw.contains("eta0")) return build_reduced(r).lift(vector_option(raw, "eta0"), t0);
  throw InvalidInput("simulation needs options.x0 or options.eta0");
}

int cmd_simulate(const Flags& f) {
  const Resolved r = resolve(f);
  const json& raw = r.spec.options.raw;
  const double t0 = number_option(raw, "t0", 0.0), t1 = number_option(raw, "t1", 20.0);
  std::map<std::string, std::string> files;
  if (raw.contains("eta0")) {
    const ReducedModel rm = build_reduced(r);
    const LiftComparison c = lift_and_compare(r.spec.system, rm, vector_option(raw, "eta0"), t0, t1);
    files["lift.json"] = dump(to_json(c));
    files["trajectory.csv"] = to_csv(c.full);
    files["reduced_trajectory.csv"] = to_csv(c.reduced);
    std::printf("max lift distance %.3e\n", c.max_distance);
  } else {
    files["trajectory.csv"] = to_csv(integrate(r.spec.system, initial_state(r, t0), t0, t1));
  }
  write_outputs(f.out, files, base_manifest("simulate", &r), f.force);
  return Exit::ok;
}

CrossingDirection parse_direction(const std::string& s) {
  if (s == "positive") return CrossingDirection::positive;
  if (s == "negative") return CrossingDirection::negative;
  if (s == "both") return CrossingDirection::both;
  throw InvalidInput("section direction must be positive, negative or both");
}

int cmd_poincare(const Flags& f) {
  const Resolved r = resolve(f);
  const json& raw = r.spec.options.raw;
  if (!raw.contains("section")) throw InvalidInput("poincare needs options.section {normal, offset, direction}");
  const json& sec = raw.at("section");
  Hyperplane hp{vector_option(sec, "normal"), number_option(sec, "offset", 0.0)};
  const CrossingDirection dir = parse_direction(sec.value("direction", std::string("both")));
  const double t0 = number_option(raw, "t0", 0.0), t1 = number_option(raw, "t1", 100.0);
  const Trajectory tr = integrate(r.spec.system, initial_state(r, t0), t0, t1);
  const PoincareSectionResult res = poincare_section(tr, hp, dir);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  write_outputs(f.out, {{"section.csv", to_csv(res)}, {"section.json", dump(to_json(res))}}, base_manifest("poincare", &r), f.force);
  return Exit::ok;
}

int cmd_demo(const Flags& f) {
  const DemoResult d = run_demo(f.demo);
  const std::string table = format_table(d);
  std::cout << table;
  json manifest = base_manifest("demo", nullptr);
  manifest["demo"] = f.demo;
  write_outputs(f.out, {{"comparison.json", dump(to_json(d))}, {"comparison.txt", table}, {"artifacts.json", dump(d.artifacts)}}, manifest, f.force);
  return d.passed() ? Exit::ok : Exit::demo_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral submanifolds and nonlinear normal modes of polynomial systems"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&f](CLI::App* sub, bool needs_spec) {
    if (needs_spec) sub->add_option("--spec", f.spec, "System spec JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory");
    sub->add_flag("--force", f.force, "Overwrite existing output files");
    if (!needs_spec) return;
    sub->add_option("--subspace", f.subspace, "1-based indices \"1,2\", slow:q, fast:q or all");
    sub->add_option("--order", f.order, "Taylor order")->check(CLI::PositiveNumber);
    sub->add_option("--eps-order", f.eps_order, "Order in the forcing amplitude")->check(CLI::PositiveNumber);
    sub->add_option("--harmonics", f.harmonics, "Harmonic bound")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol-resonance", f.tol_resonance, "Relative resonance tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "Seed for sampled diagnostics");
    sub->add_option("--style", f.style, "Parametrization style")->check(CLI::IsMember({"graph", "graph-normalized", "normal-form"}));
  };

  std::map<std::string, std::function<int(const Flags&)>> handlers = {{"analyze", cmd_analyze}, {"ssm", cmd_ssm},           {"nnm", cmd_nnm},
                                                                      {"reduce", cmd_reduce},   {"simulate", cmd_simulate}, {"poincare", cmd_poincare}};
  std::map<std::string, const char*> help = {{"analyze", "Spectrum, quotients, classification and resonance report"},
                                             {"ssm", "Graph-style SSM expansion (Fourier-Taylor when forced)"},
                                             {"nnm", "Forced NNM by harmonic balance in powers of epsilon"},
                                             {"reduce", "Parametrization-method reduced model"},
                                             {"simulate", "Integrate the full system, optionally against a lifted reduced model"},
                                             {"poincare", "Poincare section of a full trajectory"}};
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& [name, h] : help) {
    CLI::App* sub = app.add_subcommand(name, h);
    add_common(sub, true);
    subs.emplace_back(sub, name);
  }
  CLI::App* demo = app.add_subcommand("demo", "Reproduce a reference example and compare against stored values");
  demo->add_option("name", f.demo, "Demo name")->required()->check(CLI::IsMember(demo_names()));
  add_common(demo, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Exit::ok : Exit::usage;
  }

  try {
    if (demo->parsed()) return cmd_demo(f);
    for (const auto& [sub, name] : subs)
      if (sub->parsed()) return handlers.at(name)(f);
    return Exit::usage;
  } catch (const OutputExists& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::output_exists;
  } catch (const ResonanceObstruction& e) {
    std::cerr << "error: resonance obstruction: " << e.what() << "\n";
    return Exit::resonance;
  } catch (const SpectralPrecondition& e) {
    std::cerr << "error: spectral precondition: " << e.what() << "\n";
    return Exit::spectral_precondition;
  } catch (const InvalidInput& e) {
    std::cerr << "error: invalid input: " << e.what() << "\n";
    return Exit::invalid_input;
  } catch (const NumericalFailure& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return Exit::numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::internal;
  }
}
