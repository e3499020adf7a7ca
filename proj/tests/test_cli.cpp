#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ltts/cli.hpp"

using namespace ltts;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ltts_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string out(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

} // namespace

TEST(CliHelpers, GitBlobHash) {
  // git hash-object of an empty file and of "hello\n"
  EXPECT_EQ(cli::git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(cli::git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(CliHelpers, ParseConfigsAndFamilies) {
  using P = std::vector<std::pair<std::size_t, int>>;
  EXPECT_EQ(cli::parse_configs("4x3,6x2"), (P{{4, 3}, {6, 2}}));
  EXPECT_EQ(cli::parse_configs("4,3"), (P{{4, 3}}));
  EXPECT_THROW(cli::parse_configs("4x"), cli::ConfigError);
  EXPECT_EQ(cli::parse_families("separable"), (std::vector<FamilyKind>{FamilyKind::ExpSum, FamilyKind::ProductCos}));
  EXPECT_EQ(cli::parse_families("gauss,expsum"), (std::vector<FamilyKind>{FamilyKind::Gauss, FamilyKind::ExpSum}));
  EXPECT_EQ(cli::parse_families("all").size(), 7u);
  EXPECT_THROW(cli::parse_families("banana"), cli::ConfigError);
}

TEST(CliHelpers, MergeConfig) {
  auto base = cli::default_config("rank-scan");
  cli::merge_config(base, json{{"chi_max", 10}, {"counts", {{"poly", 2}}}}, "config");
  EXPECT_EQ(base["chi_max"], 10);
  EXPECT_EQ(base["counts"]["poly"], 2);
  EXPECT_EQ(base["counts"]["trig"], 4);
  EXPECT_THROW(cli::merge_config(base, json{{"bogus", 1}}, "config"), cli::ConfigError);
  EXPECT_THROW(cli::default_config("frobnicate"), cli::ConfigError);
}

TEST_F(CliTest, RankScanSubset) {
  EXPECT_EQ(run({"rank-scan", "--families", "separable", "--configs", "4,3", "--out", dir_.string()}), cli::kOk);
  const std::string csv = slurp(dir_ / "rank_scan.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 48);
  EXPECT_TRUE(fs::exists(dir_ / "rank_scan_summary.json"));
  auto run_info = json::parse(slurp(dir_ / "run.json"));
  EXPECT_EQ(run_info["subcommand"], "rank-scan");
  EXPECT_EQ(run_info["version"], cli::version());
  EXPECT_EQ(run_info["input_hash"].get<std::string>().size(), 40u);
  auto config = json::parse(slurp(dir_ / "config.json"));
  EXPECT_EQ(config["configs"], json::parse("[[4,3]]"));
}

TEST_F(CliTest, ConfigErrors) {
  EXPECT_EQ(run({"rank-scan", "--families", "banana", "--out", dir_.string()}), cli::kConfigError);
  EXPECT_NE(err_.str().find("famil"), std::string::npos);
  {
    std::ofstream(dir_ / "bad.json") << R"({"chi_max": 3, "colour": "red"})";
  }
  EXPECT_EQ(run({"rank-scan", "--config", out("bad.json"), "--out", dir_.string()}), cli::kConfigError);
  EXPECT_NE(err_.str().find("colour"), std::string::npos);
  EXPECT_EQ(run({"validate", "--noise", "0.1", "--shots", "10", "--out", dir_.string()}), cli::kConfigError);
  EXPECT_EQ(run({"eval", "--out", dir_.string()}), cli::kConfigError);
}

TEST_F(CliTest, ConfigFileThenFlags) {
  {
    std::ofstream(dir_ / "cfg.json") << R"({"chi_max": 3, "eps": [0.5]})";
  }
  EXPECT_EQ(run({"rank-scan", "--config", out("cfg.json"), "--chi-max", "7", "--families", "gauss", "--configs",
                 "4x3", "--out", dir_.string()}),
            cli::kOk);
  auto config = json::parse(slurp(dir_ / "config.json"));
  EXPECT_EQ(config["chi_max"], 7);
  EXPECT_EQ(config["eps"], json::parse("[0.5]"));
}

TEST_F(CliTest, CertifyMonotoneAndRoundTrips) {
  EXPECT_EQ(run({"certify", "--oracle", "Gauss", "--dim", "3", "--r", "0.1,0.2,0.4", "--chi", "1,3", "--out",
                 dir_.string(), "--strict"}),
            cli::kOk);
  auto doc = json::parse(slurp(dir_ / "certify.json"));
  ASSERT_EQ(doc["rows"].size(), 6u);
  double prev = 0.0;
  for (const auto& row : doc["rows"]) {
    if (row["chi"] != 3) continue;
    auto cert = certificate_from_json(row["certificate"]);
    EXPECT_GE(cert.e_det, prev);
    prev = cert.e_det;
    // chi = 3 is the full rank of a 3-mode tensor: only the Taylor term remains
    EXPECT_NEAR(cert.e_det, cert.e_taylor, 1e-12);
    EXPECT_EQ(to_json(cert), row["certificate"]);
  }
  EXPECT_TRUE(fs::exists(dir_ / "surrogates" / "r0_chi1.json"));
  EXPECT_TRUE(fs::exists(dir_ / "coefficients_r2.json"));
}

TEST_F(CliTest, CertifyQcnnStrictPasses) {
  EXPECT_EQ(run({"certify", "--r", "0.1", "--chi", "2", "--out", dir_.string(), "--strict"}), cli::kOk);
  EXPECT_NE(out_.str().find("E_det"), std::string::npos);
}

TEST_F(CliTest, ValidateRerunIsIdentical) {
  const std::vector<std::string> base{"validate", "--r", "0.1", "--chi", "1,2", "--n-train", "150", "--n-test",
                                      "200"};
  auto a = base;
  a.insert(a.end(), {"--out", out("a")});
  auto b = base;
  b.insert(b.end(), {"--out", out("b")});
  ASSERT_EQ(run(a), cli::kOk);
  ASSERT_EQ(run(b), cli::kOk);
  EXPECT_EQ(slurp(dir_ / "a" / "validation.csv"), slurp(dir_ / "b" / "validation.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "validation_summary.json"), slurp(dir_ / "b" / "validation_summary.json"));
  EXPECT_NE(out_.str().find("te_ratio"), std::string::npos);
}

TEST_F(CliTest, EvalFlagsOutOfPatchRows) {
  ASSERT_EQ(run({"certify", "--oracle", "ExpSum", "--dim", "2", "--r", "0.5", "--chi", "1", "--out", out("c")}),
            cli::kOk);
  const auto sur = dir_ / "c" / "surrogates" / "r0_chi1.json";
  auto surrogate = surrogate_from_json(json::parse(slurp(sur)));
  {
    std::ofstream pts(dir_ / "points.csv");
    pts << "x0,x1\n";
    for (std::size_t i = 0; i < 2; ++i) pts << surrogate.patch.x0[i] << (i ? "\n" : ",");
    pts << "5,5\n";
  }
  EXPECT_EQ(run({"eval", "--surrogate", sur.string(), "--points", out("points.csv"), "--out", out("e")}), cli::kOk);
  const std::string pred = slurp(dir_ / "e" / "predictions.csv");
  std::istringstream lines(pred);
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(header, "x0,x1,prediction,in_patch");
  std::vector<double> origin(2, 0.0);
  const std::string expected = format_double(tt_eval(surrogate.tt, origin));
  EXPECT_NE(first.find("," + expected + ",true"), std::string::npos) << first;
  EXPECT_EQ(second, "5,5,,false");
  EXPECT_EQ(run({"eval", "--surrogate", sur.string(), "--points", out("points.csv"), "--out", out("f"), "--strict"}),
            cli::kQualityGate);
}

TEST_F(CliTest, EvalBinarySidecar) {
  std::vector<std::size_t> ranks{2};
  std::mt19937_64 rng(1);
  Surrogate s{PatchSpec{{0.0, 0.0}, 1.0, 2, 2}, random_tt(2, 3, ranks, 1.0, rng)};
  json j = to_json(s);
  j["tt"] = to_json(s.tt, false);
  j["tt"]["sidecar"] = "s.bin";
  {
    std::ofstream(dir_ / "s.json") << j.dump();
    std::ofstream bin(dir_ / "s.bin", std::ios::binary);
    write_tt_binary(bin, s.tt);
    std::ofstream(dir_ / "p.csv") << "0.25,-0.5\n";
  }
  ASSERT_EQ(run({"eval", "--surrogate", out("s.json"), "--points", out("p.csv"), "--out", out("o")}), cli::kOk);
  std::vector<double> xi{0.25, -0.5};
  EXPECT_NE(slurp(dir_ / "o" / "predictions.csv").find(format_double(tt_eval(s.tt, xi))), std::string::npos);
}

TEST_F(CliTest, RuntimeFailureExitCode) {
  // the output path is a regular file, so the run cannot create its directory
  { std::ofstream(dir_ / "blocker") << "x"; }
  EXPECT_EQ(run({"rank-scan", "--families", "gauss", "--configs", "4x3", "--out", out("blocker")}),
            cli::kRuntimeError);
}
