#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli_commands.hpp"

using namespace cgfbound;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int code = cli::run_cli(std::move(args), o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "cgfbound_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Bound, GaussianAverage) {
  auto r = run({"bound", "--family", "gaussian:sigma2=1", "--alpha", "0.3", "--beta", "2", "--n", "100"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("rho=0.5 ", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("status=converged"), std::string::npos);
}

TEST(Bound, ZeroDivergence) {
  auto r = run({"bound", "--family", "bernoulli", "--alpha", "0.2", "--beta", "0", "--n", "10"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("rho=0.2 ", 0), 0u) << r.out;
}

TEST(Bound, PoissonXiMatchesLibrary) {
  auto r = run({"bound", "--family", "poisson", "--alpha", "1", "--beta", "100", "--n", "100", "--delta", "0.05",
                "--correction", "xi"});
  EXPECT_EQ(r.code, 0);
  double lib = pac_bound(BoundingFamily::poisson(), 1, 100, 100, 0.05, LogCorrection::xi()).rho;
  EXPECT_EQ(r.out.rfind("rho=" + format_g9(lib) + " ", 0), 0u) << r.out;
}

TEST(Bound, JsonAndKinds) {
  auto r = run({"bound", "--family", "bernoulli", "--alpha", "0.1", "--beta", "1", "--n", "50", "--kind",
                "catoni_inf", "--json"});
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["rho"].get<double>(), 0.17038362756882846317, 1e-6);
  EXPECT_TRUE(j["reference_only"].get<bool>());
}

TEST(Bound, ExitCodes) {
  EXPECT_EQ(run({"bound", "--family", "poisson", "--alpha", "1", "--beta", "1", "--n", "10", "--delta", "0.05",
                 "--correction", "chernoff=1"})
                .code,
            cli::kNoBound);
  EXPECT_EQ(run({"bound", "--family", "invgauss:lambda=1", "--alpha", "1", "--beta", "100", "--n", "1"}).code,
            cli::kNoBound);
  EXPECT_EQ(run({"bound", "--family", "bernoulli", "--alpha", "0.1", "--beta", "1"}).code, cli::kUsage);
  EXPECT_EQ(run({"bound", "--family", "nope", "--alpha", "0.1", "--beta", "1", "--n", "3"}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Sweep, ZeroDivergenceColumnEqualsAlpha) {
  auto r = run({"sweep", "--family", "bernoulli", "--kinds", "average_cramer,catoni_inf", "--alpha-lo", "0.1",
                "--alpha-hi", "0.6", "--alpha-steps", "2", "--bn-lo", "0", "--bn-hi", "1", "--bn-steps", "2",
                "--bn-scale", "linear", "--n", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "beta_over_n", "average_cramer", "catoni_inf", "diff"}));
  EXPECT_EQ(rows[1][0], "0.1");
  EXPECT_EQ(rows[1][1], "0");
  EXPECT_EQ(rows[1][2], "0.1");
  EXPECT_EQ(rows[3][2], "0.6");
}

TEST(Sweep, ByteIdenticalAcrossThreadsAndRuns) {
  std::vector<std::string> base{"sweep", "--family", "poisson", "--kinds", "poisson_diff_inf,average_cramer",
                                "--alpha-hi", "5", "--alpha-steps", "6", "--bn-steps", "6", "--n", "100"};
  auto a = run(base);
  auto again = run(base);
  auto threaded = base;
  threaded.insert(threaded.end(), {"--threads", "4"});
  auto b = run(threaded);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, again.out);
  EXPECT_EQ(a.out, b.out);
  for (std::size_t i = 1; i < csv_rows(a.out).size(); ++i) EXPECT_GE(std::stod(csv_rows(a.out)[i][4]), -1e-9);
}

TEST(Sweep, ConfigFileAndOverride) {
  auto cfg = scratch("small.cfg");
  {
    std::ofstream f(cfg);
    f << "# recipe\nfamily=bernoulli\nkinds=gaussian_diff_inf@gaussian:sigma2=0.25,average_cramer\n"
         "clamp=1\nalpha-steps=3\nbn-steps=3\nn=100\n";
  }
  auto out = scratch("small.csv");
  auto r = run({"sweep", "--config", cfg.string(), "--bn-steps", "4", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(slurp(out));
  EXPECT_EQ(rows.size(), 1u + 3 * 4);
  EXPECT_EQ(rows[0][2], "gaussian_diff_inf@gaussian:sigma2=0.25");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::stod(rows[i][2]), 1.0);
    EXPECT_GE(std::stod(rows[i][4]), 0.0);
  }
  EXPECT_EQ(run({"sweep", "--config", scratch("missing.cfg").string()}).code, cli::kIo);
}

TEST(Sweep, UnwritableOutput) {
  auto r = run({"sweep", "--family", "bernoulli", "--kinds", "average_cramer,catoni_inf", "--alpha-steps", "2",
                "--bn-steps", "2", "--out", "/nonexistent-dir/x.csv"});
  EXPECT_EQ(r.code, cli::kIo);
}

TEST(NDep, GammaDecreases) {
  auto r = run({"ndep", "--family", "gamma:k=5", "--alpha", "1", "--beta", "1000", "--nmin", "100", "--nmax",
                "100000", "--points", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "bound"}));
  double b2 = std::stod(rows[1][1]), b3 = std::stod(rows[2][1]);
  double b4 = std::stod(rows[3][1]), b5 = std::stod(rows[4][1]);
  EXPECT_NEAR(1 - b3 / b2, 0.89, 0.02);
  EXPECT_NEAR(1 - b5 / b4, 0.13, 0.02);
}

TEST(NDep, ZeroDivergenceIsConstant) {
  auto r = run({"ndep", "--family", "laplace:b=1", "--alpha", "0.7", "--beta", "0", "--nmin", "10", "--nmax",
                "1000", "--points", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][1], "0.7");
}

TEST(Upsilon, KlSingleSample) {
  auto r = run({"upsilon", "--comparator", "kl", "--family", "bernoulli", "--n", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["ln_upsilon"].get<double>(), std::log(2.0), 1e-12);
  EXPECT_EQ(j["mode"], "exact");
}

TEST(Upsilon, DivergentAndMonteCarlo) {
  auto d = run({"upsilon", "--comparator", "cramer", "--family", "poisson", "--n", "10"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(nlohmann::json::parse(d.out)["mode"], "divergent");
  auto m = run({"upsilon", "--comparator", "scaled:t=0", "--family", "laplace:b=1", "--n", "3", "--method", "mc",
                "--samples", "200", "--grid-points", "3"});
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_EQ(nlohmann::json::parse(m.out)["ln_upsilon"].get<double>(), 0.0);
}

TEST(Verify, SmallRunWritesJsonLines) {
  auto out = scratch("verify.jsonl");
  auto r = run({"verify", "--family", "bernoulli", "--bound", "mls", "--delta", "0.05", "--trials", "50", "--seed",
                "7", "--out", out.string()});
  // 50 trials cannot certify 0.05 at 95%, so only the format is checked here.
  EXPECT_TRUE(r.code == 0 || r.code == cli::kCheckFailed) << r.err;
  std::istringstream in(slurp(out));
  std::string line;
  int trials = 0, summaries = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j["type"] == "trial") ++trials;
    if (j["type"] == "summary") ++summaries;
  }
  EXPECT_EQ(trials, 50);
  EXPECT_EQ(summaries, 1);
}

TEST(Verify, RejectsIncompatibleBound) {
  EXPECT_EQ(run({"verify", "--family", "poisson", "--bound", "mls", "--delta", "0.05", "--trials", "5"}).code,
            cli::kUsage);
}

TEST(Checks, ConjugateSubsetPasses) {
  auto r = run({"conjugate-check", "--family", "gamma:k=5", "--family", "negbin:r=3", "--points", "8"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS conjugate gamma:k=5"), std::string::npos);
}

TEST(Checks, HelpersReportWorstError) {
  EXPECT_TRUE(cli::lambert_check(20).pass());
  EXPECT_TRUE(cli::catoni_kl_check(5).pass());
  EXPECT_TRUE(cli::laplace_identity_check(5).pass());
  cli::CheckLine bad{"x", 2.0, 1.0};
  EXPECT_FALSE(bad.pass());
}
