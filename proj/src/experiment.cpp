#include "heavyrisk/experiment.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "heavyrisk/error.hpp"

namespace heavyrisk {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kMinSamples = 1000;
constexpr std::uint64_t kPathBoundPaths = 10'000;

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kKinds{{
    {ExperimentKind::Entrance, "entrance"},
    {ExperimentKind::Ruin, "ruin"},
    {ExperimentKind::Breiman, "breiman"},
    {ExperimentKind::BigJump, "big-jump"},
    {ExperimentKind::Uniformity, "uniformity"},
    {ExperimentKind::AssumptionCheck, "assumption-check"},
    {ExperimentKind::Global, "global"},
}};

// Collects violations while walking the config tree.
class Checker {
 public:
  std::vector<Violation> violations;

  void fail(std::string field, std::string message) { violations.push_back({std::move(field), std::move(message)}); }

  // Runs f, turning InvalidArgument into a violation at field.
  template <class F>
  auto attempt(const std::string& field, F&& f) -> std::optional<decltype(f())> {
    try {
      return f();
    } catch (const InvalidArgument& e) {
      fail(field, e.what());
      return std::nullopt;
    }
  }

  const json* member(const json& obj, const std::string& field, const char* key, bool required = true) {
    if (!obj.is_object()) {
      fail(field, "expected an object");
      return nullptr;
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(join(field, key), "required field missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& field, const char* key, bool required = true) {
    const json* node = member(obj, field, key, required);
    if (!node) return std::nullopt;
    if (!node->is_number()) {
      fail(join(field, key), "expected a number");
      return std::nullopt;
    }
    return node->get<double>();
  }

  std::optional<std::vector<double>> numbers(const json& node, const std::string& field) {
    if (!node.is_array()) {
      fail(field, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& v : node) {
      if (!v.is_number()) {
        fail(field, "expected an array of numbers");
        return std::nullopt;
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::optional<std::string> text(const json& obj, const std::string& field, const char* key, bool required = true) {
    const json* node = member(obj, field, key, required);
    if (!node) return std::nullopt;
    if (!node->is_string()) {
      fail(join(field, key), "expected a string");
      return std::nullopt;
    }
    return node->get<std::string>();
  }

  static std::string join(const std::string& field, const char* key) {
    return field.empty() ? std::string(key) : field + "." + key;
  }
  static std::string index(const std::string& field, std::size_t i) { return field + "[" + std::to_string(i) + "]"; }
};

std::optional<UnivariateLaw> parse_law(Checker& c, const json& node, const std::string& field) {
  const auto name = c.text(node, field, "law");
  if (!name) return std::nullopt;
  auto num = [&](const char* key) { return c.number(node, field, key); };
  auto build = [&](auto make) -> std::optional<UnivariateLaw> { return c.attempt(field, make); };
  if (*name == "pareto") {
    const auto alpha = num("alpha");
    const auto scale = c.number(node, field, "scale", false);
    if (!alpha) return std::nullopt;
    return build([&] { return UnivariateLaw::pareto(*alpha, scale.value_or(1.0)); });
  }
  if (*name == "lognormal") {
    const auto mu = num("location"), sigma = num("scale");
    if (!mu || !sigma) return std::nullopt;
    return build([&] { return UnivariateLaw::lognormal(*mu, *sigma); });
  }
  if (*name == "exponential") {
    const auto rate = num("rate");
    if (!rate) return std::nullopt;
    return build([&] { return UnivariateLaw::exponential(*rate); });
  }
  if (*name == "gamma") {
    const auto shape = num("shape"), rate = num("rate");
    if (!shape || !rate) return std::nullopt;
    return build([&] { return UnivariateLaw::gamma(*shape, *rate); });
  }
  if (*name == "weibull") {
    const auto shape = num("shape"), scale = num("scale");
    if (!shape || !scale) return std::nullopt;
    return build([&] { return UnivariateLaw::weibull(*shape, *scale); });
  }
  if (*name == "uniform") {
    const auto lo = num("lower"), hi = num("upper");
    if (!lo || !hi) return std::nullopt;
    return build([&] { return UnivariateLaw::uniform(*lo, *hi); });
  }
  if (*name == "degenerate") {
    const auto v = num("value");
    if (!v) return std::nullopt;
    return build([&] { return UnivariateLaw::degenerate(*v); });
  }
  c.fail(Checker::join(field, "law"), "unknown law '" + *name + "'");
  return std::nullopt;
}

std::optional<std::vector<std::vector<double>>> parse_matrix(Checker& c, const json& node, const std::string& field) {
  if (!node.is_array()) {
    c.fail(field, "expected an array of arrays");
    return std::nullopt;
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < node.size(); ++i) {
    auto row = c.numbers(node[i], Checker::index(field, i));
    if (!row) return std::nullopt;
    rows.push_back(std::move(*row));
  }
  return rows;
}

std::optional<ClaimModel> parse_claims(Checker& c, const json& node, const std::string& field) {
  const auto mode = c.text(node, field, "mode");
  if (!mode) return std::nullopt;
  if (*mode == "spectral") {
    const json* radial_node = c.member(node, field, "radial");
    const json* atoms_node = c.member(node, field, "atoms");
    std::optional<UnivariateLaw> radial;
    if (radial_node) radial = parse_law(c, *radial_node, field + ".radial");
    std::optional<std::vector<std::vector<double>>> atoms;
    if (atoms_node) atoms = parse_matrix(c, *atoms_node, field + ".atoms");
    std::optional<std::vector<double>> weights;
    if (const json* w = c.member(node, field, "weights", false)) weights = c.numbers(*w, field + ".weights");
    if (!radial || !atoms) return std::nullopt;
    if (!weights) weights = std::vector<double>(atoms->size(), 1.0 / static_cast<double>(atoms->size()));
    if (weights->size() != atoms->size()) {
      c.fail(field + ".weights", "one weight per atom required");
      return std::nullopt;
    }
    std::vector<SpectralAtom> spectral;
    for (std::size_t i = 0; i < atoms->size(); ++i) spectral.push_back({(*atoms)[i], (*weights)[i]});
    try {
      return ClaimModel::spectral(*radial, std::move(spectral));
    } catch (const InvalidArgument& e) {
      const std::string what = e.what();
      c.fail(field + (what.find("weights") != std::string::npos ? ".weights" : ".atoms"), what);
      return std::nullopt;
    }
  }
  if (*mode == "margin-copula") {
    const json* margins_node = c.member(node, field, "margins");
    std::vector<UnivariateLaw> margins;
    bool ok = margins_node != nullptr;
    if (margins_node && !margins_node->is_array()) {
      c.fail(field + ".margins", "expected an array of laws");
      ok = false;
    } else if (margins_node) {
      for (std::size_t i = 0; i < margins_node->size(); ++i) {
        auto law = parse_law(c, (*margins_node)[i], Checker::index(field + ".margins", i));
        if (law) margins.push_back(*law);
        else ok = false;
      }
    }
    ComponentCopula copula = IndependentCopula{};
    std::string copula_field = field + ".copula";
    if (const json* cop = c.member(node, field, "copula", false)) {
      const auto type = c.text(*cop, copula_field, "type");
      if (!type) return std::nullopt;
      if (*type == "gaussian") {
        const json* corr = c.member(*cop, copula_field, "correlation");
        copula_field += ".correlation";
        if (!corr) return std::nullopt;
        const auto rows = parse_matrix(c, *corr, copula_field);
        if (!rows) return std::nullopt;
        Eigen::MatrixXd m(rows->size(), rows->size());
        for (std::size_t i = 0; i < rows->size(); ++i) {
          if ((*rows)[i].size() != rows->size()) {
            c.fail(copula_field, "correlation matrix must be square");
            return std::nullopt;
          }
          for (std::size_t j = 0; j < rows->size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*rows)[i][j];
        }
        copula = GaussianCopula{m};
      } else if (*type == "comonotone") {
        copula = ComonotoneCopula{};
      } else if (*type != "independent") {
        c.fail(copula_field + ".type", "unknown copula '" + *type + "'");
        return std::nullopt;
      }
    }
    if (!ok) return std::nullopt;
    try {
      return ClaimModel::margin_copula(std::move(margins), std::move(copula));
    } catch (const InvalidArgument& e) {
      const std::string what = e.what();
      c.fail(what.find("copula") != std::string::npos ? copula_field : field + ".margins", what);
      return std::nullopt;
    }
  }
  c.fail(field + ".mode", "unknown claim mode '" + *mode + "' (spectral | margin-copula)");
  return std::nullopt;
}

std::optional<InterClaimCoupling> parse_coupling(Checker& c, const json* node, const std::string& field) {
  if (!node) return InterClaimCoupling{IidCoupling{}};
  const auto type = c.text(*node, field, "type");
  if (!type) return std::nullopt;
  if (*type == "iid") return InterClaimCoupling{IidCoupling{}};
  if (*type == "comonotone-radii") return InterClaimCoupling{ComonotoneRadii{}};
  if (*type == "gaussian-radial") {
    const auto rho = c.number(*node, field, "rho");
    if (!rho) return std::nullopt;
    return c.attempt(field + ".rho", [&] { return gaussian_radial_coupling(*rho); });
  }
  c.fail(field + ".type", "unknown coupling '" + *type + "' (iid | gaussian-radial | comonotone-radii)");
  return std::nullopt;
}

std::optional<ReturnProcess> parse_returns(Checker& c, const json& node, const std::string& field) {
  const auto type = c.text(node, field, "type");
  if (!type) return std::nullopt;
  if (*type == "deterministic") {
    const auto r = c.number(node, field, "rate");
    if (!r) return std::nullopt;
    return c.attempt(field, [&] { return ReturnProcess::deterministic(*r); });
  }
  const auto drift = c.number(node, field, "drift");
  const auto vol = c.number(node, field, "volatility");
  if (*type == "brownian") {
    if (!drift || !vol) return std::nullopt;
    return c.attempt(field, [&] { return ReturnProcess::brownian(*drift, *vol); });
  }
  if (*type == "jump-diffusion") {
    const auto intensity = c.number(node, field, "intensity");
    const auto scale = c.number(node, field, "jump_scale", false);
    std::optional<UnivariateLaw> jumps;
    if (const json* j = c.member(node, field, "jump_law")) jumps = parse_law(c, *j, field + ".jump_law");
    if (!drift || !vol || !intensity || !jumps) return std::nullopt;
    return c.attempt(field, [&] {
      return ReturnProcess(JumpDiffusion{*drift, *vol, *intensity, *jumps, scale.value_or(1.0)});
    });
  }
  c.fail(field + ".type", "unknown return process '" + *type + "' (deterministic | brownian | jump-diffusion)");
  return std::nullopt;
}

std::optional<PremiumPlan> parse_premiums(Checker& c, const json* node, const std::string& field, std::size_t d) {
  if (!node) return PremiumPlan::zero(d);
  const json* bounds_node = c.member(*node, field, "bounds");
  if (!bounds_node) return std::nullopt;
  const auto bounds = c.numbers(*bounds_node, field + ".bounds");
  if (!bounds) return std::nullopt;
  if (bounds->size() != d) {
    c.fail(field + ".bounds", "one bound per line required (d = " + std::to_string(d) + ")");
    return std::nullopt;
  }
  const json* sched = c.member(*node, field, "schedules", false);
  if (!sched) return c.attempt(field + ".bounds", [&] { return PremiumPlan::constant(*bounds); });
  if (!sched->is_array()) {
    c.fail(field + ".schedules", "expected an array");
    return std::nullopt;
  }
  std::vector<PremiumSchedule> schedules;
  for (std::size_t i = 0; i < sched->size(); ++i) {
    const std::string f = Checker::index(field + ".schedules", i);
    const json* b = c.member((*sched)[i], f, "breaks");
    const json* r = c.member((*sched)[i], f, "rates");
    if (!b || !r) return std::nullopt;
    auto breaks = c.numbers(*b, f + ".breaks");
    auto rates = c.numbers(*r, f + ".rates");
    if (!breaks || !rates) return std::nullopt;
    schedules.push_back({std::move(*breaks), std::move(*rates)});
  }
  return c.attempt(field + ".schedules", [&] { return PremiumPlan(std::move(schedules), *bounds); });
}

std::optional<RareSet> parse_set(Checker& c, const json& node, const std::string& field) {
  const auto type = c.text(node, field, "type");
  if (!type) return std::nullopt;
  if (*type == "or") {
    const json* b = c.member(node, field, "thresholds");
    if (!b) return std::nullopt;
    const auto thresholds = c.numbers(*b, field + ".thresholds");
    if (!thresholds) return std::nullopt;
    return c.attempt(field + ".thresholds", [&] { return RareSet::or_set(*thresholds); });
  }
  if (*type == "halfspace") {
    const json* w = c.member(node, field, "weights");
    const auto level = c.number(node, field, "level", false);
    if (!w) return std::nullopt;
    const auto weights = c.numbers(*w, field + ".weights");
    if (!weights) return std::nullopt;
    return c.attempt(field, [&] { return RareSet::halfspace(*weights, level.value_or(1.0)); });
  }
  if (*type == "support") {
    const json* dirs = c.member(node, field, "directions");
    const auto level = c.number(node, field, "level", false);
    if (!dirs) return std::nullopt;
    const auto rows = parse_matrix(c, *dirs, field + ".directions");
    if (!rows) return std::nullopt;
    return c.attempt(field + ".directions", [&] { return RareSet::support_set(*rows, level.value_or(1.0)); });
  }
  c.fail(field + ".type", "unknown set '" + *type + "' (or | halfspace | support)");
  return std::nullopt;
}

std::optional<RuinSet> parse_ruin_set(Checker& c, const json& node, const std::string& field) {
  if (node == "any-line-negative") return RuinSet::AnyLineNegative;
  if (node == "total-negative") return RuinSet::TotalNegative;
  c.fail(field, "expected \"any-line-negative\" or \"total-negative\"");
  return std::nullopt;
}

std::optional<std::vector<double>> parse_grid(Checker& c, const json& node, const std::string& field,
                                              bool allow_infinity) {
  if (!node.is_array() || node.empty()) {
    c.fail(field, "grid must be a nonempty array");
    return std::nullopt;
  }
  std::vector<double> out;
  for (const auto& v : node) {
    if (v.is_string() && v == "inf" && allow_infinity) {
      out.push_back(kInfinity);
    } else if (v.is_number() && v.get<double>() > 0.0 && std::isfinite(v.get<double>())) {
      out.push_back(v.get<double>());
    } else {
      c.fail(field, allow_infinity ? "grid values must be positive reals or \"inf\"" : "grid values must be positive reals");
      return std::nullopt;
    }
  }
  return out;
}

std::optional<std::uint64_t> parse_count(Checker& c, const json& node, const std::string& field) {
  if (node.is_number_unsigned()) return node.get<std::uint64_t>();
  if (node.is_number_float()) {
    const double v = node.get<double>();
    if (v >= 0.0 && v < 1.8e19 && std::floor(v) == v) return static_cast<std::uint64_t>(v);
  }
  c.fail(field, "expected a nonnegative integer");
  return std::nullopt;
}

bool valid_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
  });
}

std::optional<ExperimentSpec> parse_experiment(Checker& c, const json& node, const std::string& field) {
  ExperimentSpec e;
  const auto id = c.text(node, field, "id");
  const auto kind = c.text(node, field, "kind");
  if (!id || !kind) return std::nullopt;
  if (!valid_id(*id)) {
    c.fail(field + ".id", "id must be nonempty and use only letters, digits, '_', '-', '.'");
    return std::nullopt;
  }
  e.id = *id;
  const auto k = std::find_if(kKinds.begin(), kKinds.end(), [&](const auto& p) { return p.second == *kind; });
  if (k == kKinds.end()) {
    c.fail(field + ".kind", "unknown kind '" + *kind + "'");
    return std::nullopt;
  }
  e.kind = k->first;
  const std::size_t before = c.violations.size();

  const bool check_only = e.kind == ExperimentKind::AssumptionCheck;
  const bool needs_t = e.kind == ExperimentKind::Entrance || e.kind == ExperimentKind::Ruin ||
                       e.kind == ExperimentKind::Uniformity || e.kind == ExperimentKind::Global;
  if (const json* x = c.member(node, field, "x_grid", !check_only)) {
    if (auto g = parse_grid(c, *x, field + ".x_grid", false)) e.x_grid = std::move(*g);
  }
  if (const json* t = c.member(node, field, "t_grid", needs_t)) {
    if (auto g = parse_grid(c, *t, field + ".t_grid", e.kind == ExperimentKind::Global)) e.t_grid = std::move(*g);
  }
  if (const json* n = c.member(node, field, "n")) {
    if (auto v = parse_count(c, *n, field + ".n")) {
      if (*v < kMinSamples) c.fail(field + ".n", "n must be at least 1e3");
      e.n = *v;
    }
  }
  if (e.kind == ExperimentKind::Breiman) {
    if (const json* th = c.member(node, field, "theta")) e.theta = parse_law(c, *th, field + ".theta");
  }
  if (e.kind == ExperimentKind::BigJump) {
    if (const json* m = c.member(node, field, "m", false)) {
      if (auto v = parse_count(c, *m, field + ".m")) {
        if (*v < 1) c.fail(field + ".m", "m must be at least 1");
        e.m = static_cast<std::size_t>(*v);
      }
    }
    if (const auto dep = c.text(node, field, "dependence", false)) {
      if (*dep == "comonotone") e.dependence = SummandDependence::Comonotone;
      else if (*dep != "iid") c.fail(field + ".dependence", "expected \"iid\" or \"comonotone\"");
    }
  }
  if (const json* ex = c.member(node, field, "exponents", false)) {
    const auto v = c.numbers(*ex, field + ".exponents");
    if (v && v->size() == 2) e.exponents = std::pair{(*v)[0], (*v)[1]};
    else if (v) c.fail(field + ".exponents", "expected [k1, k2]");
  }
  if (const auto h = c.number(node, field, "mc_horizon", false)) {
    if (!(*h > 0.0) || !std::isfinite(*h)) c.fail(field + ".mc_horizon", "must be a positive real");
    e.mc_horizon = *h;
  }
  if (const auto h = c.number(node, field, "horizon", false)) {
    if (!(*h > 0.0) || !std::isfinite(*h)) c.fail(field + ".horizon", "must be a positive real");
    e.horizon = *h;
  } else if (check_only && !e.t_grid.empty()) {
    e.horizon = *std::max_element(e.t_grid.begin(), e.t_grid.end());
  }
  if (c.violations.size() != before) return std::nullopt;
  return e;
}

// Cross-field checks once all parts parsed.
void check_consistency(Checker& c, const ExperimentConfig& cfg) {
  const std::size_t d = cfg.model.dimension();
  if (cfg.set && cfg.set->dimension() != d)
    c.fail("set", "set has dimension " + std::to_string(cfg.set->dimension()) + ", claims have " + std::to_string(d));
  const bool spectral_pareto =
      cfg.model.claims.mode() == ClaimMode::Spectral && cfg.model.claims.radial()->is_pareto();
  for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
    const ExperimentSpec& e = cfg.experiments[i];
    const std::string f = Checker::index("experiments", i);
    for (std::size_t j = 0; j < i; ++j)
      if (cfg.experiments[j].id == e.id) c.fail(f + ".id", "duplicate experiment id '" + e.id + "'");
    switch (e.kind) {
      case ExperimentKind::Entrance:
      case ExperimentKind::Uniformity:
      case ExperimentKind::Global:
      case ExperimentKind::Breiman:
      case ExperimentKind::BigJump:
        if (!cfg.set) c.fail("set", "experiment '" + e.id + "' needs a rare set");
        break;
      case ExperimentKind::Ruin:
        if (!cfg.ruin_set) c.fail("ruin_set", "experiment '" + e.id + "' needs a ruin set");
        break;
      case ExperimentKind::AssumptionCheck:
        break;
    }
    if ((e.kind == ExperimentKind::Uniformity || e.kind == ExperimentKind::Global ||
         e.kind == ExperimentKind::Breiman) && !spectral_pareto)
      c.fail("model.claims", "experiment '" + e.id + "' needs spectral claims with a Pareto radius");
    if (e.kind == ExperimentKind::Uniformity && cfg.model.returns.params().index() == 2)
      c.fail("model.returns", "uniformity needs deterministic or Brownian returns");
    for (double t : e.t_grid)
      if (std::isfinite(t) && !cfg.model.arrivals.in_lambda(t))
        c.fail(f + ".t_grid", "t = " + std::to_string(t) + " lies outside {t : lambda(t) > 0}");
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

double parse_real(std::string_view s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  const std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) throw InvalidArgument("report row: bad real '" + copy + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InvalidArgument("report row: bad integer '" + std::string(s) + "'");
  return v;
}

ReportRow mc_row(const std::string& id, double x, double t, const EstimateReport& r, double asym, bool pre,
                 bool violated, std::uint64_t seed) {
  ReportRow row;
  row.experiment = id;
  row.x = x;
  row.t = t;
  row.mc = r.estimate;
  row.ci_lo = r.ci_lo;
  row.ci_hi = r.ci_hi;
  row.asym = asym;
  row.ratio = std::isfinite(asym) && asym > 0.0 ? r.estimate / asym : kNaN;
  row.n = r.n;
  row.seed = seed;
  row.flags = combine_flags(violated, r.zero_hits, pre);
  return row;
}

std::string fmt(double v) { return format_real(v); }

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

std::string to_string(const Violation& v) { return v.field + ": " + v.message; }

LoadResult parse_config(std::string_view text, std::optional<std::uint64_t> seed_override) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Checker c;
  LoadResult out;
  if (!root.is_object()) {
    c.fail("", "config root must be an object");
    out.violations = std::move(c.violations);
    return out;
  }

  std::optional<std::uint64_t> seed = seed_override;
  if (const json* s = c.member(root, "", "seed", !seed_override)) {
    const auto v = parse_count(c, *s, "seed");
    if (!seed) seed = v;
  }
  std::string output = "out";
  if (const auto o = c.text(root, "", "output", false)) output = *o;

  std::optional<ClaimModel> claims;
  std::optional<InterClaimCoupling> coupling;
  std::optional<RenewalModel> arrivals;
  std::optional<ReturnProcess> returns;
  std::optional<PremiumPlan> premiums;
  std::optional<CapitalAllocation> allocation;
  if (const json* model = c.member(root, "", "model")) {
    if (const json* n = c.member(*model, "model", "claims")) claims = parse_claims(c, *n, "model.claims");
    coupling = parse_coupling(c, c.member(*model, "model", "coupling", false), "model.coupling");
    if (claims && coupling && claims->mode() == ClaimMode::MarginCopula &&
        !std::holds_alternative<IidCoupling>(*coupling)) {
      c.fail("model.coupling", "margin-copula claims support only IID coupling");
    }
    if (const json* n = c.member(*model, "model", "arrivals")) {
      if (auto law = parse_law(c, *n, "model.arrivals"))
        arrivals = c.attempt("model.arrivals", [&] { return RenewalModel(*law); });
    }
    if (const json* n = c.member(*model, "model", "returns")) returns = parse_returns(c, *n, "model.returns");
    if (claims)
      premiums = parse_premiums(c, c.member(*model, "model", "premiums", false), "model.premiums",
                                claims->dimension());
    if (const json* n = c.member(*model, "model", "allocation", false)) {
      const json* w = c.member(*n, "model.allocation", "weights");
      const auto capital = c.number(*n, "model.allocation", "capital", false);
      if (w) {
        if (auto weights = c.numbers(*w, "model.allocation.weights"))
          allocation = c.attempt("model.allocation.weights",
                                 [&] { return CapitalAllocation(capital.value_or(1.0), *weights); });
      }
    } else if (claims) {
      const std::size_t d = claims->dimension();
      allocation = CapitalAllocation(1.0, std::vector<double>(d, 1.0 / static_cast<double>(d)));
    }
    if (claims && allocation && allocation->dimension() != claims->dimension())
      c.fail("model.allocation.weights", "one weight per line required (d = " + std::to_string(claims->dimension()) + ")");
  }

  std::optional<RareSet> set;
  if (const json* n = c.member(root, "", "set", false)) set = parse_set(c, *n, "set");
  std::optional<RuinSet> ruin;
  if (const json* n = c.member(root, "", "ruin_set", false)) ruin = parse_ruin_set(c, *n, "ruin_set");

  std::vector<ExperimentSpec> experiments;
  if (const json* list = c.member(root, "", "experiments")) {
    if (!list->is_array() || list->empty()) {
      c.fail("experiments", "expected a nonempty array");
    } else {
      for (std::size_t i = 0; i < list->size(); ++i)
        if (auto e = parse_experiment(c, (*list)[i], Checker::index("experiments", i))) experiments.push_back(*e);
    }
  }

  if (c.violations.empty()) {
    ExperimentConfig cfg{RiskModelSpec{*claims, *coupling, *arrivals, *returns, *premiums, *allocation},
                         set, ruin, std::move(experiments), *seed, output};
    check_consistency(c, cfg);
    if (c.violations.empty()) out.config = std::move(cfg);
  }
  out.violations = std::move(c.violations);
  return out;
}

LoadResult load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), seed_override);
}

std::vector<Violation> check_assumptions(const ExperimentConfig& config) {
  std::vector<Violation> out;
  const RiskModelSpec& spec = config.model;
  const bool spectral_pareto = spec.claims.mode() == ClaimMode::Spectral && spec.claims.radial()->is_pareto();
  for (std::size_t i = 0; i < config.experiments.size(); ++i) {
    const ExperimentSpec& e = config.experiments[i];
    const std::string f = "experiments[" + std::to_string(i) + "]";
    if (e.kind != ExperimentKind::Global && e.kind != ExperimentKind::AssumptionCheck) continue;
    if (!spectral_pareto) {
      if (e.kind == ExperimentKind::AssumptionCheck)
        out.push_back({f, "moment condition needs spectral claims with a Pareto radius"});
      continue;
    }
    const double alpha = spec.claims.tail_index();
    const auto [k1, k2] = e.exponents.value_or(default_exponents(alpha));
    try {
      const MomentCheck m = check_moment_condition(spec.returns, spec.arrivals, alpha, k1, k2);
      if (!m.verdict)
        out.push_back({f, "moment condition on exp(-xi(T_i)) fails (ratios " + fmt(m.ratio1) + ", " +
                              fmt(m.ratio2) + ")"});
    } catch (const InvalidArgument& ex) {
      out.push_back({f + ".exponents", ex.what()});
    }
    const bool infinite = std::any_of(e.t_grid.begin(), e.t_grid.end(), [](double t) { return std::isinf(t); });
    if (infinite && !(spec.returns.laplace_exponent(alpha) < 0.0))
      out.push_back({f + ".t_grid", "phi(alpha) >= 0: the infinite-horizon integral diverges"});
  }
  return out;
}

std::string_view flag_name(RowFlag flag) {
  switch (flag) {
    case RowFlag::Ok: return "ok";
    case RowFlag::PreAsymptotic: return "pre-asymptotic";
    case RowFlag::ZeroHits: return "zero-hits";
    case RowFlag::AssumptionViolated: return "assumption-violated";
  }
  return "ok";
}

RowFlag parse_flag(std::string_view text) {
  for (RowFlag f : {RowFlag::Ok, RowFlag::PreAsymptotic, RowFlag::ZeroHits, RowFlag::AssumptionViolated})
    if (flag_name(f) == text) return f;
  throw InvalidArgument("report row: unknown flag '" + std::string(text) + "'");
}

RowFlag combine_flags(bool assumption_violated, bool zero_hits, bool pre_asymptotic) {
  if (assumption_violated) return RowFlag::AssumptionViolated;
  if (zero_hits) return RowFlag::ZeroHits;
  if (pre_asymptotic) return RowFlag::PreAsymptotic;
  return RowFlag::Ok;
}

std::string format_row(const ReportRow& r) {
  std::string s = r.experiment;
  for (double v : {r.x, r.t, r.mc, r.ci_lo, r.ci_hi, r.asym, r.ratio}) s += "," + format_real(v);
  s += "," + std::to_string(r.n) + "," + std::to_string(r.seed) + ",";
  s += flag_name(r.flags);
  return s;
}

ReportRow parse_row(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 11) throw InvalidArgument("report row: expected 11 fields, got " + std::to_string(f.size()));
  ReportRow r;
  r.experiment = std::string(f[0]);
  r.x = parse_real(f[1]);
  r.t = parse_real(f[2]);
  r.mc = parse_real(f[3]);
  r.ci_lo = parse_real(f[4]);
  r.ci_hi = parse_real(f[5]);
  r.asym = parse_real(f[6]);
  r.ratio = parse_real(f[7]);
  r.n = parse_u64(f[8]);
  r.seed = parse_u64(f[9]);
  r.flags = parse_flag(f[10]);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSpec& e, unsigned threads) {
  const RiskModelSpec& spec = config.model;
  const McSettings mc{e.n, config.seed, threads};
  ExperimentResult out;
  auto note = [&](std::string s) { out.messages.push_back(e.id + ": " + std::move(s)); };

  switch (e.kind) {
    case ExperimentKind::Entrance:
    case ExperimentKind::Ruin: {
      const bool ruin = e.kind == ExperimentKind::Ruin;
      const RareSet target = ruin ? ruin_to_rare(*config.ruin_set, spec.allocation) : *config.set;
      const auto hits = ruin ? count_ruins(spec, *config.ruin_set, spec.allocation, e.x_grid, e.t_grid, mc)
                             : count_entrances(spec, target, e.x_grid, e.t_grid, mc);
      const double xmin = pre_asymptotic_threshold(spec.claims, target);
      bool unsupported = false;
      for (std::size_t i = 0; i < e.x_grid.size(); ++i) {
        for (std::size_t j = 0; j < e.t_grid.size(); ++j) {
          const double x = e.x_grid[i], t = e.t_grid[j];
          double asym = kNaN;
          bool pre = x < xmin;
          if (!unsupported) {
            try {
              const auto a = asymptotic_entrance_finite(spec, target, x, t);
              asym = a.value;
              pre = a.pre_asymptotic;
            } catch (const InvalidArgument& ex) {
              unsupported = true;
              note(std::string("no finite-horizon asymptotic: ") + ex.what());
            }
          }
          const auto r = make_report(hits[i * e.t_grid.size() + j], e.n, config.seed);
          out.rows.push_back(mc_row(e.id, x, t, r, asym, pre, false, config.seed));
        }
      }
      break;
    }
    case ExperimentKind::Global: {
      const double alpha = spec.claims.tail_index();
      std::optional<double> truncation = e.mc_horizon;
      if (!truncation) {
        try {
          truncation = truncation_horizon(spec, alpha);
          note("truncation horizon T0 = " + fmt(*truncation));
        } catch (const AssumptionViolation& ex) {
          note(std::string("no truncation horizon: ") + ex.what());
        }
      }
      // Monte Carlo horizons: finite t as given, t = inf at T0.
      std::vector<double> horizons;
      for (double t : e.t_grid)
        if (std::isfinite(t)) horizons.push_back(t);
        else if (truncation) horizons.push_back(*truncation);
      std::sort(horizons.begin(), horizons.end());
      horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
      std::vector<std::uint64_t> hits;
      if (!horizons.empty()) hits = count_entrances(spec, *config.set, e.x_grid, horizons, mc);
      auto hit_count = [&](std::size_t i, double h) {
        const auto j = static_cast<std::size_t>(std::lower_bound(horizons.begin(), horizons.end(), h) - horizons.begin());
        return hits[i * horizons.size() + j];
      };
      for (std::size_t i = 0; i < e.x_grid.size(); ++i) {
        for (double t : e.t_grid) {
          const double x = e.x_grid[i];
          double asym = kNaN;
          bool violated = false, pre = false;
          try {
            const auto g = asymptotic_entrance_global(spec, *config.set, x, t, e.exponents);
            asym = g.value;
            pre = g.pre_asymptotic;
          } catch (const AssumptionViolation& ex) {
            violated = true;
            out.assumption_violated = true;
            if (i == 0) note(ex.what());
          }
          const bool have_mc = std::isfinite(t) || truncation.has_value();
          EstimateReport r;
          if (have_mc) {
            r = make_report(hit_count(i, std::isfinite(t) ? t : *truncation), e.n, config.seed);
          } else {
            r.estimate = r.ci_lo = r.ci_hi = kNaN;
            r.n = e.n;
          }
          out.rows.push_back(mc_row(e.id, x, t, r, asym, pre, violated, config.seed));
        }
      }
      break;
    }
    case ExperimentKind::Breiman: {
      try {
        const auto curve = breiman_check(spec.claims, *e.theta, *config.set, e.x_grid, mc);
        const double xmin = pre_asymptotic_threshold(spec.claims, *config.set);
        for (const RatioPoint& p : curve.points) {
          const auto r = make_report(p.hits, e.n, config.seed);
          out.rows.push_back(mc_row(e.id, p.x, kNaN, r, p.reference, p.x < xmin, false, config.seed));
        }
      } catch (const AssumptionViolation& ex) {
        out.assumption_violated = true;
        note(ex.what());
        for (double x : e.x_grid) {
          ReportRow row{e.id, x, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, e.n, config.seed, RowFlag::AssumptionViolated};
          out.rows.push_back(row);
        }
      }
      break;
    }
    case ExperimentKind::BigJump: {
      const auto curve = single_big_jump_check(spec.claims, *config.set, e.m, e.x_grid, mc, e.dependence);
      if (curve.flagged) note(curve.note);
      for (const RatioPoint& p : curve.points) {
        auto r = make_report(p.hits, e.n, config.seed);
        ReportRow row = mc_row(e.id, p.x, kNaN, r, p.reference, false, false, config.seed);
        row.ratio = p.ratio;
        out.rows.push_back(row);
      }
      break;
    }
    case ExperimentKind::Uniformity: {
      const RatioTable table = uniformity_diagnostic(spec, *config.set, e.x_grid, e.t_grid, mc);
      for (const RatioCell& cell : table.cells)
        out.rows.push_back(mc_row(e.id, cell.x, cell.t, cell.mc, cell.asymptotic, cell.pre_asymptotic, false,
                                  config.seed));
      for (std::size_t i = 0; i < table.x_grid.size(); ++i)
        note("x = " + fmt(table.x_grid[i]) + ": sup_t |ratio - 1| = " + fmt(table.sup_deviation[i]) + " (se " +
             fmt(table.sup_se[i]) + "), heterogeneity p = " + fmt(table.heterogeneity_p[i]));
      note(std::string("sup deviation nonincreasing in x: ") + (table.sup_nonincreasing ? "yes" : "no"));
      for (const auto& n : table.notes) note(n);
      break;
    }
    case ExperimentKind::AssumptionCheck: {
      Engine g = make_engine(config.seed, 0xA55C, 0);
      const PathBounds b = check_path_bounds(spec.returns, e.horizon, std::max<std::uint64_t>(e.n, kPathBoundPaths), g);
      note("path bounds on [0, " + fmt(e.horizon) + "]: C1 = " + fmt(b.c1) + ", C2 = " + fmt(b.c2) +
           (b.empirical ? " (empirical)" : " (exact)"));
      ReportRow row{e.id, kNaN, e.horizon, kNaN, kNaN, kNaN, kNaN, kNaN, e.n, config.seed, RowFlag::Ok};
      const bool spectral_pareto =
          spec.claims.mode() == ClaimMode::Spectral && spec.claims.radial()->is_pareto();
      if (spectral_pareto) {
        const double alpha = spec.claims.tail_index();
        const auto [k1, k2] = e.exponents.value_or(default_exponents(alpha));
        const MomentCheck m = check_moment_condition(spec.returns, spec.arrivals, alpha, k1, k2);
        row.asym = m.certificate;
        note("moment condition (k1 = " + fmt(k1) + ", k2 = " + fmt(k2) + "): ratios " + fmt(m.ratio1) + ", " +
             fmt(m.ratio2) + ", certificate " + fmt(m.certificate) + (m.verdict ? ", holds" : ", fails"));
        if (!m.verdict) {
          row.flags = RowFlag::AssumptionViolated;
          out.assumption_violated = true;
        }
      } else {
        note("moment condition not checked: needs spectral claims with a Pareto radius");
      }
      out.rows.push_back(row);
      break;
    }
  }
  return out;
}

RunOutcome validate_config(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                           bool strict) {
  RunOutcome out;
  LoadResult loaded;
  try {
    loaded = load_config(config_path, seed);
  } catch (const ConfigError& e) {
    out.messages.push_back(e.what());
    out.exit_code = kExitInvalid;
    return out;
  }
  for (const auto& v : loaded.violations) out.messages.push_back(to_string(v));
  if (!loaded.config) {
    out.exit_code = kExitInvalid;
    return out;
  }
  for (const auto& v : check_assumptions(*loaded.config)) {
    out.messages.push_back("assumption: " + to_string(v));
    if (strict) out.exit_code = kExitAssumption;
  }
  return out;
}

RunOutcome run_config(const std::filesystem::path& config_path, const RunOptions& options) {
  RunOutcome out;
  LoadResult loaded;
  try {
    loaded = load_config(config_path, options.seed);
  } catch (const ConfigError& e) {
    out.messages.push_back(e.what());
    out.exit_code = kExitInvalid;
    return out;
  }
  for (const auto& v : loaded.violations) out.messages.push_back(to_string(v));
  if (!loaded.config) {
    out.exit_code = kExitInvalid;
    return out;
  }
  const ExperimentConfig& cfg = *loaded.config;
  const std::filesystem::path dir = options.out_dir.value_or(cfg.output);

  bool violated = false;
  std::vector<std::pair<std::filesystem::path, std::string>> reports;
  for (const ExperimentSpec& e : cfg.experiments) {
    ExperimentResult result = run_experiment(cfg, e, options.threads);
    violated = violated || result.assumption_violated;
    for (auto& m : result.messages) out.messages.push_back(std::move(m));
    std::string csv(kCsvHeader);
    csv += '\n';
    for (const ReportRow& row : result.rows) csv += format_row(row) + '\n';
    reports.emplace_back(dir / (e.id + ".csv"), std::move(csv));
  }

  std::filesystem::create_directories(dir);
  for (const auto& [path, csv] : reports) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << csv;
    out.files.push_back(path);
  }
  if (violated && options.strict) out.exit_code = kExitAssumption;
  return out;
}

}  // namespace heavyrisk
