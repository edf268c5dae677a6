// End-to-end runs of the command-line tool.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ssmkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ssmkit-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string spec(const std::string& name) { return std::string(SSMKIT_SPECS) + "/" + name + ".json"; }
  fs::path out(const std::string& sub) const { return dir_ / sub; }

  CliRun run(const std::string& args) const {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = std::string("\"") + SSMKIT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read(log);
    return r;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static json read_json(const fs::path& p) { return json::parse(read(p)); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, AnalyzeReportsQuotientsAndMargin) {
  const CliRun r = run("analyze --spec " + spec("shaw-pierre") + " --out " + out("a").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json rep = read_json(out("a") / "report.json");
  EXPECT_TRUE(rep.at("semisimple").get<bool>());
  const json& sel = rep.at("selected");
  EXPECT_EQ(sel.at("sigma").get<int>(), 5);
  EXPECT_EQ(sel.at("Sigma").get<int>(), 5);
  EXPECT_TRUE(sel.at("forced").at("passed").get<bool>());
  EXPECT_NEAR(sel.at("forced").at("min_margin").get<double>(), 0.0054, 5e-4);
  const json man = read_json(out("a") / "manifest.json");
  EXPECT_EQ(man.at("command"), "analyze");
  EXPECT_EQ(man.at("seed").get<unsigned long long>(), 20240917ull);
}

TEST_F(Cli, AnalyzeFlagsResonance) {
  const CliRun r = run("analyze --spec " + spec("example2") + " --out " + out("a").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json rep = read_json(out("a") / "report.json");
  EXPECT_FALSE(rep.at("selected").at("autonomous").at("passed").get<bool>());
  EXPECT_FALSE(rep.at("selected").at("autonomous").at("violations").empty());
}

TEST_F(Cli, AnalyzeRejectsUndampedSpectrum) {
  const CliRun r = run("analyze --spec " + spec("undamped") + " --out " + out("a").string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_TRUE(read_json(out("a") / "report.json").contains("error"));
}

TEST_F(Cli, SsmWritesExactSlowManifold) {
  const CliRun r = run("ssm --spec " + spec("example1") + " --out " + out("s").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = read_json(out("s") / "ssm.json");
  const ssmkit::RealPolyMap g = ssmkit::poly_map_from_json<double>(j.at("graph"));
  for (int k = 2; k <= 5; ++k) EXPECT_NEAR(g.coefficient(ssmkit::MultiIndex{k})(0), 1.0 / (std::sqrt(24.0) - k), 1e-12);
  EXPECT_EQ(j.at("metadata").at("order").get<int>(), 6);
}

TEST_F(Cli, SsmOnResonantSystemExitsWithObstruction) {
  const CliRun r = run("ssm --spec " + spec("example2") + " --out " + out("s").string());
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_NE(r.out.find("(2)"), std::string::npos) << r.out;
}

TEST_F(Cli, ForcedSsmAndNnm) {
  CliRun r = run("ssm --spec " + spec("shaw-pierre-forced") + " --order 6 --eps-order 2 --out " + out("f").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(out("f") / "forced_ssm.json"));
  r = run("nnm --spec " + spec("shaw-pierre-forced") + " --out " + out("n").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = read_json(out("n") / "nnm.json");
  const ssmkit::FirstOrderSystem sys = ssmkit::shaw_pierre_forced_system(0.1);
  EXPECT_NEAR(j.at("residual").get<double>(), ssmkit::nnm_residual(sys, ssmkit::compute_nnm(sys, 1), 0.1), 1e-15);
  EXPECT_EQ(j.at("modal_per_order").size(), 1u);
}

TEST_F(Cli, ReduceInBothStyles) {
  for (const std::string style : {"graph", "normal-form"}) {
    const CliRun r = run("reduce --spec " + spec("shaw-pierre") + " --style " + style + " --out " + out(style).string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_LE(read_json(out(style) / "reduced_model.json").at("invariance_defect").get<double>(), 1e-11);
  }
}

TEST_F(Cli, SimulateLiftsOntoExactManifold) {
  const CliRun r = run("simulate --spec " + spec("example1") + " --out " + out("sim").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_LE(read_json(out("sim") / "lift.json").at("max_distance").get<double>(), 1e-8);
  EXPECT_EQ(read(out("sim") / "trajectory.csv").substr(0, 8), "t,x1,x2\n");
}

TEST_F(Cli, PoincareSection) {
  const CliRun r = run("poincare --spec " + spec("shaw-pierre") + " --out " + out("p").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = read_json(out("p") / "section.json");
  EXPECT_FALSE(j.at("crossings").empty());
  for (const auto& c : j.at("crossings")) EXPECT_EQ(c.at("direction").get<int>(), -1);
}

TEST_F(Cli, DemosPass) {
  for (const auto& name : ssmkit::demo_names()) {
    const CliRun r = run("demo " + name + " --out " + out(name).string());
    EXPECT_EQ(r.code, 0) << name << "\n" << r.out;
    EXPECT_TRUE(fs::exists(out(name) / "comparison.json")) << name;
  }
}

TEST_F(Cli, UnknownDemoIsAUsageError) {
  const CliRun r = run("demo nosuch --out " + out("d").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("shaw-pierre"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(out("d")));
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  const std::string args = "ssm --spec " + spec("example1") + " --out " + out("s").string();
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(run(args).code, 6);
  EXPECT_EQ(run(args + " --force").code, 0);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("ssm").code, 1);
  EXPECT_EQ(run("ssm --spec " + spec("example1") + " --order notanumber").code, 1);
}

TEST_F(Cli, InvalidSpecIsRejected) {
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"name": "bad", "first_order": {"A": [[-1, 0]]}})";
  EXPECT_EQ(run("analyze --spec " + bad.string() + " --out " + out("b").string()).code, 2);
  const fs::path both = dir_ / "both.json";
  std::ofstream(both) << R"({"name": "x", "first_order": {"A": [[-1]]}, "mechanical": {"M": [[1]], "C": [[1]], "K": [[1]]}})";
  EXPECT_EQ(run("analyze --spec " + both.string() + " --out " + out("c").string()).code, 2);
  EXPECT_EQ(run("ssm --spec " + spec("example1") + " --subspace 0 --out " + out("d").string()).code, 2);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run("ssm --spec " + spec("shaw-pierre") + " --out " + out("x").string()).code, 0);
  ASSERT_EQ(run("ssm --spec " + spec("shaw-pierre") + " --out " + out("y").string()).code, 0);
  for (const char* f : {"ssm.json", "manifest.json"}) EXPECT_EQ(read(out("x") / f), read(out("y") / f)) << f;
}
