#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "lil/logscale.hpp"
#include "lil/normalizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run lil_run(std::vector<std::string> args) {
  args.insert(args.begin(), "lil");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = lil::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lil_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  static json load(const std::string& p) { return json::parse(slurp(p)); }

  /// Rows of a CSV after the header (comment lines skipped).
  static std::vector<std::vector<std::string>> rows(const std::string& p) {
    std::istringstream in(slurp(p));
    std::vector<std::vector<std::string>> out;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        header = true;
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      out.push_back(cells);
    }
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, AnalyzeGaussianLogLog) {
  const auto cfg = write("a.json", R"({
  "distribution": {"kind": "gaussian", "sigma": 1},
  "normalizer": {"family": "loglog-power", "param": 1}
})");
  const auto r = lil_run({"analyze", "--config", cfg, "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = load(path("o/report.json"));
  EXPECT_NEAR(rep["lambda_hat"].get<double>(), 1.0, 0.05);
  EXPECT_EQ(rep["outcome"], "two-sided LIL");
  EXPECT_TRUE(fs::exists(path("o/limsup.csv")));
  EXPECT_TRUE(fs::exists(path("o/blocks.csv")));
  const auto m = load(path("o/manifest.json"));
  EXPECT_EQ(m["verb"], "analyze");
  EXPECT_EQ(m["config"]["normalizer"]["family"], "loglog-power");
  EXPECT_TRUE(m["versions"].contains("lil"));
}

TEST_F(Cli, AnalyzeFellerPruittDivergentFlag) {
  const auto r = lil_run({"analyze", "--distribution.kind", "feller-pruitt", "--normalizer.family", "log-power",
                          "--normalizer.param", "1", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = load(path("o/report.json"));
  EXPECT_TRUE(rep["lambda_hat_divergent"].get<bool>());
  EXPECT_EQ(rep["lambda_hat"], "inf");
}

TEST_F(Cli, ConfigErrorsCarryLines) {
  const auto missing = write("m.json", "{\n  \"distribution\": {\"kind\": \"rademacher\"}\n}\n");
  auto r = lil_run({"analyze", "--config", missing, "--out", path("o")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing normalizer block"), std::string::npos);

  const auto syntax = write("s.json", "{\n  \"distribution\": {\"kind\": \"rademacher\"},\n  \"normalizer\": {\"family\" 1}\n}\n");
  r = lil_run({"analyze", "--config", syntax});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("s.json:3:"), std::string::npos) << r.err;

  const auto kind = write("k.json", "{\n  \"normalizer\": {\"family\": \"phi2\"},\n\n  \"distribution\": {\"kind\": \"cauchy\"}\n}\n");
  r = lil_run({"analyze", "--config", kind});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("k.json:4:"), std::string::npos) << r.err;

  r = lil_run({"simulate", "--distribution.kind", "rademacher", "--normalizer.family", "gamma", "--analysis.paths", "0",
               "--out", path("o")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--analysis.paths"), std::string::npos);

  r = lil_run({"klass-seq", "--distribution.kind", "rademacher", "--analysis.n", "[10, 0.5]"});
  EXPECT_EQ(r.code, 2);

  r = lil_run({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  r = lil_run({"analyze", "--config", path("nope.json")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, OverridesWinOverConfig) {
  const auto cfg = write("a.json", R"({"distribution": {"kind": "gaussian", "sigma": 3},
  "analysis": {"n": [1000]}, "output": {"dir": "ignored"}})");
  const auto r = lil_run({"klass-seq", "--config", cfg, "--distribution.sigma", "2", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = load(path("o/manifest.json"));
  EXPECT_EQ(m["config"]["distribution"]["sigma"], 2);
  EXPECT_EQ(m["config"]["output"]["dir"], path("o"));
}

TEST_F(Cli, KlassSeqTable) {
  // n = e^e k: LLn >= 1 and n / LLn >= 1, where gamma_n = sqrt(2 n LLn) for rademacher
  std::string ns = "[1";
  for (int k = 1; k <= 40; ++k) ns += "," + std::to_string(std::exp(M_E) * k * k * k);
  ns += "]";
  auto r = lil_run({"klass-seq", "--distribution.kind", "rademacher", "--analysis.n", ns, "--out", path("r")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rad = rows(path("r/klass_seq.csv"));
  ASSERT_EQ(rad.size(), 41u);
  EXPECT_EQ(std::stod(rad[0][0]), 1.0);
  EXPECT_DOUBLE_EQ(std::stod(rad[0][1]), std::sqrt(2.0));  // LL(1) = 1, K(1) = 1
  for (std::size_t i = 1; i < rad.size(); ++i) {
    const double n = std::stod(rad[i][0]);
    EXPECT_NEAR(std::stod(rad[i][1]) / std::sqrt(2.0 * n * lil::LL(n)), 1.0, 1e-8);
  }
  EXPECT_EQ(rad[0].size(), 3u);

  r = lil_run({"klass-seq", "--distribution.kind", "gaussian", "--distribution.sigma", "2", "--analysis.n", "[1e12]",
               "--normalizer.family", "loglog-power", "--normalizer.param", "1", "--out", path("g")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto g = rows(path("g/klass_seq.csv"));
  ASSERT_EQ(g[0].size(), 5u);
  EXPECT_NEAR(std::stod(g[0][1]) / (2.0 * std::sqrt(2e12 * lil::LL(1e12))), 1.0, 1e-3);
  EXPECT_NEAR(std::stod(g[0][4]), 0.5, 1e-3);
}

TEST_F(Cli, Alpha0GammaRademacher) {
  const auto r = lil_run({"alpha0", "--distribution.kind", "rademacher", "--normalizer.family", "gamma", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = load(path("o/alpha0.json"));
  EXPECT_TRUE(rep["bracket_found"].get<bool>());
  EXPECT_LE(rep["lo"].get<double>(), 1.0);
  EXPECT_GE(rep["hi"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(path("o/probes.csv")));
}

TEST_F(Cli, ConstructNormalizerTableIsReusable) {
  const auto r = lil_run({"construct-normalizer", "--distribution.kind", "feller-pruitt", "--normalizer.family",
                          "construct-from-phi", "--normalizer.phi.family", "phi2", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = load(path("o/report.json"));
  EXPECT_TRUE(rep["moment_finite"].get<bool>());
  const auto h = lil::SlowFunction::load_table(path("o/h_table.txt"));
  for (const auto& row : rows(path("o/construction.csv"))) {
    const double x = std::stod(row[0]);
    EXPECT_NEAR(h(x), std::stod(row[2]), 1e-12 * std::stod(row[2]));
  }
  const auto again = lil_run({"klass-seq", "--distribution.kind", "feller-pruitt", "--normalizer.family", "table",
                              "--normalizer.table", path("o/h_table.txt"), "--analysis.n", "[1e6]", "--out", path("k")});
  EXPECT_EQ(again.code, 0) << again.err;

  const auto wrong = lil_run({"construct-normalizer", "--distribution.kind", "feller-pruitt", "--normalizer.family", "phi2"});
  EXPECT_EQ(wrong.code, 2);
}

TEST_F(Cli, ManifestRerunIsByteIdentical) {
  auto r = lil_run({"simulate", "--distribution.kind", "gaussian", "--normalizer.family", "loglog-power",
                    "--normalizer.param", "1", "--analysis.n_max", "20000", "--analysis.paths", "3", "--seed", "11",
                    "--out", path("a")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = lil_run({"simulate", "--config", path("a/manifest.json"), "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto* f : {"paths.csv", "histogram.csv", "summary.json"}) EXPECT_EQ(slurp(path("a/") + f), slurp(path("b/") + f)) << f;
  EXPECT_NE(slurp(path("a/paths.csv")).find("seed=11"), std::string::npos);
  // a manifest belongs to its verb
  r = lil_run({"analyze", "--config", path("a/manifest.json")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, FormatSelection) {
  const auto r = lil_run({"simulate", "--distribution.kind", "rademacher", "--normalizer.family", "gamma",
                          "--analysis.n_max", "5000", "--analysis.paths", "2", "--format", "csv", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("o/paths.csv")));
  EXPECT_FALSE(fs::exists(path("o/summary.json")));
  EXPECT_TRUE(fs::exists(path("o/manifest.json")));
  EXPECT_EQ(lil_run({"simulate", "--format", "xml"}).code, 2);
}

TEST_F(Cli, CheckConditionsFamilies) {
  auto r = lil_run({"check-conditions", "--distribution.kind", "gaussian", "--normalizer.family", "loglog-power",
                    "--normalizer.param", "1", "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(load(path("o/report.json"))["lambda_hat"].get<double>(), 1.0, 0.05);
  r = lil_run({"check-conditions", "--distribution.kind", "gaussian", "--normalizer.family", "phi2"});
  EXPECT_EQ(r.code, 2);
}

TEST(CliConfig, NumbersRoundTrip) {
  const auto c = lil::cli::Config::parse(R"({"a": {"b": 0.1}})", "t.json");
  EXPECT_EQ(c.number("/a/b"), 0.1);
  EXPECT_THROW(c.number("/a/c"), lil::cli::ConfigError);
  EXPECT_THROW(c.string("/a/b"), lil::cli::ConfigError);
  auto d = c;
  d.override_with("--a.c", "rademacher");
  EXPECT_EQ(d.string("/a/c"), "rademacher");
  EXPECT_EQ(d.where("/a/c"), "--a.c");
  EXPECT_EQ(c.where("/a/b"), "t.json:1");
}
