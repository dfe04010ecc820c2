#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "heavyrisk/error.hpp"
#include "heavyrisk/experiment.hpp"

using namespace heavyrisk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("heavyrisk_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config(const std::string& experiments, double rate = 0.03, const std::string& weights = "[0.5, 0.5]",
                   const std::string& set = R"({"type": "halfspace", "weights": [0.5, 0.5], "level": 1})") {
  return R"({
  "seed": 17,
  "model": {
    "claims": {"mode": "spectral", "radial": {"law": "pareto", "alpha": 2}, "atoms": [[1, 0], [0, 1]]},
    "arrivals": {"law": "exponential", "rate": 1},
    "returns": {"type": "deterministic", "rate": )" +
         std::to_string(rate) + R"(},
    "premiums": {"bounds": [0.01, 0.01]},
    "allocation": {"weights": )" +
         weights + R"(}
  },
  "set": )" + set + R"(,
  "ruin_set": "total-negative",
  "experiments": [)" +
         experiments + "]\n}\n";
}

const std::string kEntrance = R"({"id": "ent", "kind": "entrance", "x_grid": [5, 20, 50], "t_grid": [1, 10], "n": 2000})";

bool mentions(const RunOutcome& r, const std::string& text) {
  for (const auto& m : r.messages)
    if (m.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Run, MinimalConfigWritesGridRows) {
  const auto dir = scratch("minimal");
  RunOptions opt;
  opt.out_dir = dir / "out";
  const auto r = run_config(write(dir, config(kEntrance)), opt);
  ASSERT_EQ(r.exit_code, kExitOk);
  ASSERT_EQ(r.files.size(), 1u);
  const std::string csv = slurp(r.files[0]);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, kCsvHeader);
  int rows = 0;
  while (std::getline(lines, line)) {
    const ReportRow row = parse_row(line);
    EXPECT_EQ(format_row(row), line);
    EXPECT_EQ(row.experiment, "ent");
    EXPECT_EQ(row.seed, 17u);
    ++rows;
  }
  EXPECT_EQ(rows, 6);
}

TEST(Run, AllocationNotSummingToOne) {
  const auto dir = scratch("alloc");
  const auto r = run_config(write(dir, config(kEntrance, 0.03, "[0.5, 0.4]")), {});
  EXPECT_EQ(r.exit_code, kExitInvalid);
  EXPECT_TRUE(mentions(r, "model.allocation.weights"));
}

TEST(Run, StrictGlobalWithZeroRate) {
  const auto dir = scratch("strict");
  const std::string global = R"({"id": "glob", "kind": "global", "x_grid": [50], "t_grid": ["inf"], "n": 1000})";
  RunOptions opt;
  opt.out_dir = dir / "out";
  opt.strict = true;
  EXPECT_EQ(run_config(write(dir, config(global, 0.0)), opt).exit_code, kExitAssumption);
  opt.strict = false;
  const auto lax = run_config(write(dir, config(global, 0.0)), opt);
  EXPECT_EQ(lax.exit_code, kExitOk);
  const std::string csv = slurp(lax.files.at(0));
  EXPECT_NE(csv.find("assumption-violated"), std::string::npos);
}

TEST(Run, SeedOverrideAndDeterminism) {
  const auto dir = scratch("determinism");
  const auto path = write(dir, config(kEntrance));
  RunOptions a, b, c;
  a.out_dir = dir / "a";
  b.out_dir = dir / "b";
  b.threads = 3;
  c.out_dir = dir / "c";
  c.seed = 99;
  run_config(path, a);
  run_config(path, b);
  run_config(path, c);
  EXPECT_EQ(slurp(dir / "a" / "ent.csv"), slurp(dir / "b" / "ent.csv"));
  const std::string other = slurp(dir / "c" / "ent.csv");
  EXPECT_NE(other, slurp(dir / "a" / "ent.csv"));
  EXPECT_NE(other.find(",99,"), std::string::npos);
}

TEST(Run, EveryKindProducesParseableRows) {
  const auto dir = scratch("kinds");
  const std::string experiments = kEntrance + "," +
      R"({"id": "ruin", "kind": "ruin", "x_grid": [20], "t_grid": [5], "n": 2000},
         {"id": "glob", "kind": "global", "x_grid": [20], "t_grid": [50, "inf"], "n": 1000, "mc_horizon": 60},
         {"id": "br", "kind": "breiman", "x_grid": [10], "theta": {"law": "uniform", "lower": 0.5, "upper": 1.5}, "n": 5000},
         {"id": "bj", "kind": "big-jump", "x_grid": [10], "m": 2, "dependence": "comonotone", "n": 5000},
         {"id": "uni", "kind": "uniformity", "x_grid": [5, 20], "t_grid": [1, 2], "n": 2000},
         {"id": "chk", "kind": "assumption-check", "horizon": 5, "n": 1000})";
  RunOptions opt;
  opt.out_dir = dir / "out";
  const auto r = run_config(write(dir, config(experiments)), opt);
  ASSERT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(r.files.size(), 7u);
  for (const auto& f : r.files) {
    std::istringstream lines(slurp(f));
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, kCsvHeader);
    int rows = 0;
    while (std::getline(lines, line)) {
      EXPECT_EQ(format_row(parse_row(line)), line) << f;
      ++rows;
    }
    EXPECT_GT(rows, 0) << f;
  }
  EXPECT_TRUE(mentions(r, "moment condition"));
}

TEST(Validate, ValidConfigHasNoViolations) {
  const auto dir = scratch("valid");
  const auto r = validate_config(write(dir, config(kEntrance)));
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_TRUE(r.messages.empty());
}

TEST(Validate, OrSetThresholdsMustBePositive) {
  const auto dir = scratch("orset");
  const auto r = validate_config(
      write(dir, config(kEntrance, 0.03, "[0.5, 0.5]", R"({"type": "or", "thresholds": [0, 1]})")));
  EXPECT_EQ(r.exit_code, kExitInvalid);
  EXPECT_TRUE(mentions(r, "thresholds must be positive"));
  EXPECT_TRUE(mentions(r, "set.thresholds"));
}

TEST(Validate, NonPositiveDefiniteCopula) {
  const std::string text = R"({
    "seed": 1,
    "model": {
      "claims": {"mode": "margin-copula",
                 "margins": [{"law": "pareto", "alpha": 2}, {"law": "pareto", "alpha": 2}, {"law": "pareto", "alpha": 2}],
                 "copula": {"type": "gaussian", "correlation": [[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]]}},
      "arrivals": {"law": "exponential", "rate": 1},
      "returns": {"type": "deterministic", "rate": 0.03}
    },
    "set": {"type": "or", "thresholds": [1, 1, 1]},
    "experiments": [{"id": "e", "kind": "entrance", "x_grid": [10], "t_grid": [1], "n": 1000}]
  })";
  const auto result = parse_config(text);
  ASSERT_EQ(result.violations.size(), 1u);
  EXPECT_EQ(result.violations[0].field, "model.claims.copula.correlation");
  EXPECT_NE(result.violations[0].message.find("positive definite"), std::string::npos);
}

TEST(Validate, CollectsSeveralViolations) {
  const std::string text = R"({
    "model": {
      "claims": {"mode": "spectral", "radial": {"law": "pareto", "alpha": -1}, "atoms": [[1, 0]]},
      "arrivals": {"law": "exponential", "rate": 1},
      "returns": {"type": "brownian", "drift": 0.03, "volatility": -1}
    },
    "experiments": [{"id": "e", "kind": "entrance", "x_grid": [], "t_grid": [1], "n": 10}]
  })";
  const auto result = parse_config(text);
  EXPECT_FALSE(result.config);
  std::string all;
  for (const auto& v : result.violations) all += to_string(v) + "\n";
  EXPECT_NE(all.find("seed"), std::string::npos) << all;
  EXPECT_NE(all.find("model.claims.radial"), std::string::npos) << all;
  EXPECT_NE(all.find("model.returns"), std::string::npos) << all;
  EXPECT_NE(all.find("experiments[0].x_grid"), std::string::npos) << all;
  EXPECT_NE(all.find("experiments[0].n"), std::string::npos) << all;
}

TEST(Validate, TimeOutsideArrivalSupport) {
  std::string text = config(kEntrance);
  const std::string poisson = R"({"law": "exponential", "rate": 1})";
  text.replace(text.find(poisson), poisson.size(), R"({"law": "uniform", "lower": 2, "upper": 3})");
  const auto result = parse_config(text);
  ASSERT_FALSE(result.violations.empty());
  EXPECT_EQ(result.violations[0].field, "experiments[0].t_grid");
}

TEST(Validate, StrictAssumptionExit) {
  const auto dir = scratch("validate_strict");
  const std::string global = R"({"id": "glob", "kind": "global", "x_grid": [50], "t_grid": ["inf"], "n": 1000})";
  const auto path = write(dir, config(global, 0.0));
  EXPECT_EQ(validate_config(path, {}, true).exit_code, kExitAssumption);
  const auto lax = validate_config(path);
  EXPECT_EQ(lax.exit_code, kExitOk);
  EXPECT_TRUE(mentions(lax, "assumption"));
}

TEST(Validate, MalformedInput) {
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_EQ(validate_config("/nonexistent/heavyrisk.json").exit_code, kExitInvalid);
}

TEST(ReportRow, RoundTripsSpecialValues) {
  ReportRow row{"e.1", 0.1, kInfinity, 1.0 / 3.0, 0.0, 1e-300, std::nan(""), 123456.789012345678, 1000, ~0ull,
                RowFlag::PreAsymptotic};
  const std::string line = format_row(row);
  const ReportRow back = parse_row(line);
  EXPECT_EQ(back.x, row.x);
  EXPECT_TRUE(std::isinf(back.t));
  EXPECT_EQ(back.mc, row.mc);
  EXPECT_EQ(back.ci_hi, row.ci_hi);
  EXPECT_TRUE(std::isnan(back.asym));
  EXPECT_EQ(back.ratio, row.ratio);
  EXPECT_EQ(back.seed, row.seed);
  EXPECT_EQ(back.flags, RowFlag::PreAsymptotic);
  EXPECT_EQ(format_row(back), line);
  EXPECT_THROW(parse_row("a,1,2"), InvalidArgument);
  EXPECT_THROW(parse_row("a,1,2,3,4,5,6,7,8,9,bogus"), InvalidArgument);
}

TEST(ReportRow, FlagPriority) {
  EXPECT_EQ(combine_flags(true, true, true), RowFlag::AssumptionViolated);
  EXPECT_EQ(combine_flags(false, true, true), RowFlag::ZeroHits);
  EXPECT_EQ(combine_flags(false, false, true), RowFlag::PreAsymptotic);
  EXPECT_EQ(combine_flags(false, false, false), RowFlag::Ok);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string cli = HEAVYRISK_CLI;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  const auto good = write(dir, config(kEntrance));
  EXPECT_EQ(run("run --config " + good.string() + " --threads 2 --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "ent.csv"));
  EXPECT_EQ(run("validate --config " + good.string()), 0);
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << config(kEntrance, 0.03, "[0.45, 0.45]");
  EXPECT_EQ(run("run --config " + bad.string()), 2);
  const auto zero = dir / "zero.json";
  std::ofstream(zero) << config(R"({"id": "g", "kind": "global", "x_grid": [50], "t_grid": ["inf"], "n": 1000})", 0.0);
  EXPECT_EQ(run("run --strict --config " + zero.string() + " --out " + (dir / "z").string()), 3);
  EXPECT_EQ(run("run --config " + (dir / "missing.json").string()), 2);
}
