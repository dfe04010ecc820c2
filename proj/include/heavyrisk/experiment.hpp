#pragma once

// Declarative experiment runner: JSON config in, one CSV per experiment out.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "heavyrisk/error.hpp"
#include "heavyrisk/estimators.hpp"

namespace heavyrisk {

enum class ExperimentKind { Entrance, Ruin, Breiman, BigJump, Uniformity, AssumptionCheck, Global };

std::string_view kind_name(ExperimentKind kind);

struct ExperimentSpec {
  std::string id;
  ExperimentKind kind = ExperimentKind::Entrance;
  std::vector<double> x_grid;
  std::vector<double> t_grid;  // may hold kInfinity for kind global
  std::uint64_t n = 0;
  std::optional<UnivariateLaw> theta;  // breiman
  std::size_t m = 2;                   // big-jump
  SummandDependence dependence = SummandDependence::Iid;
  std::optional<std::pair<double, double>> exponents;  // global, assumption-check
  std::optional<double> mc_horizon;                    // global: Monte Carlo horizon for t = inf
  double horizon = 10.0;                               // assumption-check: path-bound horizon
};

struct ExperimentConfig {
  RiskModelSpec model;
  std::optional<RareSet> set;
  std::optional<RuinSet> ruin_set;
  std::vector<ExperimentSpec> experiments;
  std::uint64_t seed = 0;
  std::string output = "out";
};

struct Violation {
  std::string field;  // e.g. "model.allocation.weights"
  std::string message;
};

std::string to_string(const Violation& v);

struct LoadResult {
  std::optional<ExperimentConfig> config;
  std::vector<Violation> violations;
};

/// Parses and checks every type invariant, collecting all violations.
/// seed_override satisfies a missing config seed. Throws ConfigError when the
/// text is not JSON.
LoadResult parse_config(std::string_view text, std::optional<std::uint64_t> seed_override = {});
/// Throws ConfigError when the file cannot be read.
LoadResult load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

/// Path-bound and moment checks applicable to the config's experiments; no
/// Monte Carlo beyond the path-bound quantiles of non-deterministic returns.
std::vector<Violation> check_assumptions(const ExperimentConfig& config);

inline constexpr std::string_view kCsvHeader = "experiment,x,t,mc,ci_lo,ci_hi,asym,ratio,n,seed,flags";

enum class RowFlag { Ok, PreAsymptotic, ZeroHits, AssumptionViolated };

std::string_view flag_name(RowFlag flag);
RowFlag parse_flag(std::string_view text);

/// Highest-priority flag: assumption-violated > zero-hits > pre-asymptotic > ok.
RowFlag combine_flags(bool assumption_violated, bool zero_hits, bool pre_asymptotic);

struct ReportRow {
  std::string experiment;
  double x = 0.0;
  double t = 0.0;
  double mc = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double asym = 0.0;
  double ratio = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  RowFlag flags = RowFlag::Ok;
};

/// Reals with 17 significant digits; "nan" and "inf" for non-finite values.
std::string format_row(const ReportRow& row);
/// Inverse of format_row; throws InvalidArgument on malformed input.
ReportRow parse_row(std::string_view line);

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<std::string> messages;
  bool assumption_violated = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSpec& experiment,
                                unsigned threads);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool strict = false;
  std::optional<std::filesystem::path> out_dir;
};

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitAssumption = 3;

/// Loads, validates and runs every experiment; writes <out>/<id>.csv.
RunOutcome run_config(const std::filesystem::path& config_path, const RunOptions& options);

/// Parse, invariant and assumption checks without simulation. Assumption
/// failures exit with kExitAssumption only in strict mode.
RunOutcome validate_config(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed = {},
                           bool strict = false);

}  // namespace heavyrisk
