#include "vmse/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <regex>

#include "vmse/error.hpp"

namespace vmse {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& kind, const std::string& message) {
  throw Error("cli_orchestrator", kind, message);
}

// Numbers may be written as JSON numbers or as strings of the form "2^-6".
double as_number(const json& v, const std::string& name) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    static const std::regex pow2(R"(^\s*2\s*\^\s*\(?\s*([-+]?[0-9]*\.?[0-9]+)\s*\)?\s*$)");
    std::smatch m;
    const std::string s = v.get<std::string>();
    if (std::regex_match(s, m, pow2)) return std::pow(2.0, std::stod(m[1].str()));
  }
  config_error("schema", "key '" + name + "' expects a number");
}

struct Field {
  std::string section;
  std::string key;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&, const std::string&)> set;
  std::string name() const { return section + "." + key; }
};

template <class Acc>
Field number_field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const ExperimentConfig& c) { return json(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const json& v, const std::string& n) { acc(c) = as_number(v, n); }};
}

template <class Acc>
Field integer_field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const ExperimentConfig& c) { return json(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const json& v, const std::string& n) {
            const double d = as_number(v, n);
            if (d != std::floor(d)) config_error("schema", "key '" + n + "' expects an integer");
            using T = std::remove_reference_t<decltype(acc(c))>;
            acc(c) = static_cast<T>(d);
          }};
}

template <class Acc>
Field bool_field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const ExperimentConfig& c) { return json(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const json& v, const std::string& n) {
            if (!v.is_boolean()) config_error("schema", "key '" + n + "' expects true or false");
            acc(c) = v.get<bool>();
          }};
}

template <class Acc>
Field string_field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const ExperimentConfig& c) { return json(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const json& v, const std::string& n) {
            if (!v.is_string()) config_error("schema", "key '" + n + "' expects a string");
            acc(c) = v.get<std::string>();
          }};
}

template <class Acc>
Field list_field(std::string section, std::string key, Acc acc) {
  return {std::move(section), std::move(key), [acc](const ExperimentConfig& c) { return json(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const json& v, const std::string& n) {
            std::vector<double> out;
            if (v.is_array()) {
              for (const auto& e : v) out.push_back(as_number(e, n));
            } else {
              out.push_back(as_number(v, n));
            }
            acc(c) = std::move(out);
          }};
}

template <class Acc, class Parse, class Print>
Field enum_field(std::string section, std::string key, Acc acc, Parse parse, Print print) {
  return {std::move(section), std::move(key),
          [acc, print](const ExperimentConfig& c) { return json(print(acc(const_cast<ExperimentConfig&>(c)))); },
          [acc, parse](ExperimentConfig& c, const json& v, const std::string& n) {
            if (!v.is_string()) config_error("schema", "key '" + n + "' expects a string");
            try {
              acc(c) = parse(v.get<std::string>());
            } catch (const Error& e) {
              config_error("schema", "key '" + n + "': " + e.what());
            }
          }};
}

DeltaTreatment parse_delta(const std::string& s) {
  if (s == "delta") return DeltaTreatment::Delta;
  if (s == "regularized") return DeltaTreatment::Regularized;
  throw Error("cli_orchestrator", "schema", "unknown mode '" + s + "' (expected delta or regularized)");
}
std::string print_delta(DeltaTreatment d) { return d == DeltaTreatment::Delta ? "delta" : "regularized"; }

using C = ExperimentConfig;

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(number_field("domain", "L", [](C& c) -> double& { return c.domain.L; }));
    f.push_back(number_field("domain", "T", [](C& c) -> double& { return c.domain.T; }));
    f.push_back(number_field("packet", "A", [](C& c) -> double& { return c.packet.A; }));
    f.push_back(number_field("packet", "x0", [](C& c) -> double& { return c.packet.x0; }));
    f.push_back(number_field("packet", "p0", [](C& c) -> double& { return c.packet.p0; }));
    f.push_back(list_field("schrodinger", "eps", [](C& c) -> std::vector<double>& { return c.schrodinger.eps; }));
    f.push_back(number_field("schrodinger", "dx_offset", [](C& c) -> double& { return c.schrodinger.dx_offset; }));
    f.push_back(number_field("schrodinger", "dt_slope", [](C& c) -> double& { return c.schrodinger.dt_slope; }));
    f.push_back(number_field("schrodinger", "dt_offset", [](C& c) -> double& { return c.schrodinger.dt_offset; }));
    f.push_back(number_field("schrodinger", "dx", [](C& c) -> double& { return c.schrodinger.dx; }));
    f.push_back(number_field("schrodinger", "dt", [](C& c) -> double& { return c.schrodinger.dt; }));
    f.push_back(number_field("schrodinger", "tolerance", [](C& c) -> double& { return c.schrodinger.tolerance; }));
    f.push_back(enum_field("mass", "kind", [](C& c) -> MassKind& { return c.mass.kind; },
                           [](const std::string& s) { return parse_mass_kind(s); },
                           [](MassKind k) { return to_string(k); }));
    f.push_back(enum_field("mass", "potential", [](C& c) -> PotentialKind& { return c.mass.potential; },
                           [](const std::string& s) { return parse_potential_kind(s); },
                           [](PotentialKind k) { return to_string(k); }));
    f.push_back(number_field("mass", "gamma", [](C& c) -> double& { return c.mass.gamma; }));
    f.push_back(list_field("mass", "gammas", [](C& c) -> std::vector<double>& { return c.mass.gammas; }));
    f.push_back(number_field("mass", "oscillation_x", [](C& c) -> double& { return c.mass.oscillation_x; }));
    f.push_back(number_field("mass", "oscillation_t", [](C& c) -> double& { return c.mass.oscillation_t; }));
    f.push_back(number_field("mass", "constant_value", [](C& c) -> double& { return c.mass.constant_value; }));
    f.push_back(number_field("mass", "bump_depth", [](C& c) -> double& { return c.mass.bump_depth; }));
    f.push_back(number_field("mass", "bump_height", [](C& c) -> double& { return c.mass.bump_height; }));
    f.push_back(number_field("mass", "potential_slope", [](C& c) -> double& { return c.mass.potential_slope; }));
    f.push_back(number_field("random", "a", [](C& c) -> double& { return c.random.a; }));
    f.push_back(number_field("random", "b", [](C& c) -> double& { return c.random.b; }));
    f.push_back(number_field("random", "D", [](C& c) -> double& { return c.random.D; }));
    f.push_back(number_field("random", "threshold", [](C& c) -> double& { return c.random.threshold; }));
    f.push_back(enum_field("random", "distribution", [](C& c) -> XiDistribution& { return c.random.distribution; },
                           [](const std::string& s) { return parse_xi_distribution(s); },
                           [](XiDistribution d) { return to_string(d); }));
    f.push_back(integer_field("random", "N", [](C& c) -> int& { return c.random.N; }));
    f.push_back(integer_field("random", "seed", [](C& c) -> std::uint64_t& { return c.random.seed; }));
    f.push_back(bool_field("random", "covariance", [](C& c) -> bool& { return c.random.covariance; }));
    f.push_back(integer_field("random", "min_slope_samples", [](C& c) -> int& { return c.random.min_slope_samples; }));
    f.push_back(number_field("rte", "dx", [](C& c) -> double& { return c.rte.dx; }));
    f.push_back(number_field("rte", "dk", [](C& c) -> double& { return c.rte.dk; }));
    f.push_back(number_field("rte", "dt", [](C& c) -> double& { return c.rte.dt; }));
    f.push_back(number_field("rte", "k_min", [](C& c) -> double& { return c.rte.k_min; }));
    f.push_back(number_field("rte", "k_max", [](C& c) -> double& { return c.rte.k_max; }));
    f.push_back(number_field("rte", "band", [](C& c) -> double& { return c.rte.band; }));
    f.push_back(number_field("rte", "skip_tolerance", [](C& c) -> double& { return c.rte.skip_tolerance; }));
    f.push_back(enum_field("liouville", "mode", [](C& c) -> DeltaTreatment& { return c.liouville.mode; }, parse_delta,
                           print_delta));
    f.push_back(number_field("liouville", "tolerance", [](C& c) -> double& { return c.liouville.tolerance; }));
    f.push_back(number_field("liouville", "scan_min", [](C& c) -> double& { return c.liouville.scan_min; }));
    f.push_back(number_field("liouville", "scan_max", [](C& c) -> double& { return c.liouville.scan_max; }));
    f.push_back(integer_field("liouville", "scan_points", [](C& c) -> int& { return c.liouville.scan_points; }));
    f.push_back(number_field("liouville", "dk", [](C& c) -> double& { return c.liouville.dk; }));
    f.push_back(number_field("liouville", "k_min", [](C& c) -> double& { return c.liouville.k_min; }));
    f.push_back(number_field("liouville", "k_max", [](C& c) -> double& { return c.liouville.k_max; }));
    f.push_back(list_field("output", "times", [](C& c) -> std::vector<double>& { return c.output.times; }));
    f.push_back(string_field("output", "dir", [](C& c) -> std::string& { return c.output.dir; }));
    f.push_back(bool_field("output", "phase_density", [](C& c) -> bool& { return c.output.phase_density; }));
    f.push_back(integer_field("run", "workers", [](C& c) -> int& { return c.workers; }));
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : registry()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    config_error("schema", "override '" + assignment + "' is not of the form key=value");
  }
  const std::string lhs = assignment.substr(0, eq);
  const json value = parse_value(assignment.substr(eq + 1));
  if (lhs == "experiment") return;  // handled before the preset is chosen
  const auto dot = lhs.find('.');
  const Field* field = nullptr;
  if (dot != std::string::npos) {
    field = find_field(lhs.substr(0, dot), lhs.substr(dot + 1));
  } else {
    for (const auto& f : registry()) {
      if (f.key != lhs) continue;
      if (field != nullptr) {
        config_error("ambiguous_key", "key '" + lhs + "' is ambiguous; qualify it as " + field->name() + " or " + f.name());
      }
      field = &f;
    }
  }
  if (field == nullptr) config_error("unknown_key", "unknown key '" + lhs + "'");
  field->set(c, value, field->name());
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
  if (name == "DeterministicExample1") return Experiment::DeterministicExample1;
  if (name == "DiodeExample") return Experiment::DiodeExample;
  if (name == "RandomRTEComparison") return Experiment::RandomRTEComparison;
  if (name == "ScalingStudy") return Experiment::ScalingStudy;
  if (name == "ConvergenceStudy") return Experiment::ConvergenceStudy;
  if (name == "Custom") return Experiment::Custom;
  config_error("schema", "unknown experiment '" + std::string(name) + "'");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::DeterministicExample1: return "DeterministicExample1";
    case Experiment::DiodeExample: return "DiodeExample";
    case Experiment::RandomRTEComparison: return "RandomRTEComparison";
    case Experiment::ScalingStudy: return "ScalingStudy";
    case Experiment::ConvergenceStudy: return "ConvergenceStudy";
    case Experiment::Custom: return "Custom";
  }
  return "?";
}

ExperimentConfig preset(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  const std::vector<double> deterministic_eps = {0.0625, 0.03125, 0.015625, 0.0078125};
  switch (e) {
    case Experiment::DeterministicExample1:
    case Experiment::ConvergenceStudy:
    case Experiment::Custom:
      c.schrodinger.eps = deterministic_eps;
      break;
    case Experiment::DiodeExample:
      c.domain.L = 2.0;
      c.mass.kind = MassKind::DiodeBumps;
      c.mass.potential = PotentialKind::DiodeBumps;
      c.schrodinger.dt_slope = 1.5;
      c.schrodinger.eps = {0.0625, 0.03125, 0.015625};
      break;
    case Experiment::RandomRTEComparison:
    case Experiment::ScalingStudy:
      c.domain = {1.625, 0.4};
      c.packet = {256.0, 0.3, 1.5};
      c.mass.kind = MassKind::Constant;
      c.mass.constant_value = 1.0;
      c.schrodinger.eps = {0.015625, 0.00390625, 0.0009765625};
      if (e == Experiment::ScalingStudy) c.mass.gammas = {0.5, 1.0, 0.4};
      break;
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["experiment"] = to_string(c.experiment);
  for (const auto& f : registry()) doc[f.section][f.key] = f.get(c);
  return doc;
}

ExperimentConfig parse_config_json(const json& input, const std::vector<std::string>& overrides, Experiment fallback) {
  const json& doc = input.is_object() && input.contains("config") && input["config"].is_object() ? input.at("config") : input;
  if (!doc.is_object()) config_error("schema", "config root must be an object");
  Experiment e = fallback;
  if (doc.contains("experiment")) {
    if (!doc["experiment"].is_string()) config_error("schema", "key 'experiment' expects a string");
    e = parse_experiment(doc["experiment"].get<std::string>());
  }
  for (const auto& o : overrides) {
    if (o.rfind("experiment=", 0) == 0) e = parse_experiment(o.substr(11));
  }
  ExperimentConfig c = preset(e);
  for (const auto& [section, body] : doc.items()) {
    if (section == "experiment") continue;
    if (!body.is_object()) {
      config_error("unknown_key", "unknown key '" + section + "'");
    }
    for (const auto& [key, value] : body.items()) {
      const Field* f = find_field(section, key);
      if (f == nullptr) config_error("unknown_key", "unknown key '" + section + "." + key + "'");
      f->set(c, value, f->name());
    }
  }
  for (const auto& o : overrides) apply_override(c, o);
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides,
                              Experiment fallback) {
  json doc = json::object();
  if (path) {
    std::ifstream is(*path);
    if (!is) config_error("missing_file", "cannot open config file '" + path->string() + "'");
    const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        doc = json::parse(text);
      } catch (const json::parse_error& err) {
        config_error("schema", "cannot parse '" + path->string() + "': " + err.what());
      }
    }
  }
  return parse_config_json(doc, overrides, fallback);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) config_error("out_of_range", "key '" + key + "' " + what);
  };
  require(c.domain.L > 0.0, "domain.L", "must be positive");
  require(c.domain.T > 0.0, "domain.T", "must be positive");
  require(c.packet.A > 0.0, "packet.A", "must be positive");
  require(c.packet.x0 > 0.0 && c.packet.x0 < c.domain.L, "packet.x0", "must lie inside (0, L)");
  require(!c.schrodinger.eps.empty(), "schrodinger.eps", "must list at least one value");
  for (double e : c.schrodinger.eps) require(e > 0.0 && e < 1.0, "schrodinger.eps", "values must lie in (0, 1)");
  require(c.schrodinger.dx >= 0.0 && c.schrodinger.dt >= 0.0, "schrodinger.dx", "overrides must be non-negative");
  require(c.schrodinger.tolerance > 0.0, "schrodinger.tolerance", "must be positive");
  require(c.mass.gamma > 0.0 && c.mass.gamma <= 1.5, "mass.gamma", "must lie in (0, 1.5]");
  for (double g : c.mass.gammas) require(g > 0.0 && g <= 1.5, "mass.gammas", "values must lie in (0, 1.5]");
  require(c.random.a > 0.0 && c.random.b > 0.0, "random.a", "correlation lengths must be positive");
  require(c.random.D >= 0.0, "random.D", "must be non-negative");
  require(c.random.threshold > 0.0 && c.random.threshold <= 1.0, "random.threshold", "must lie in (0, 1]");
  const bool random = c.experiment == Experiment::RandomRTEComparison || c.experiment == Experiment::ScalingStudy;
  if (random) require(c.random.N >= 2, "random.N", "must be at least 2");
  require(c.rte.dx > 0.0 && c.rte.dk > 0.0 && c.rte.dt > 0.0, "rte.dt", "rte steps must be positive");
  require(c.rte.k_min < c.packet.p0 && c.packet.p0 < c.rte.k_max, "rte.k_max", "velocity range must contain p0");
  require(c.rte.band >= 0.0, "rte.band", "must be non-negative");
  require(c.liouville.tolerance > 0.0 && c.liouville.tolerance <= 1e-6, "liouville.tolerance", "must lie in (0, 1e-6]");
  require(c.liouville.scan_points >= 2 && c.liouville.scan_max > c.liouville.scan_min, "liouville.scan_points",
          "needs at least two points over a non-empty range");
  for (double t : c.output.times) require(t >= 0.0 && t <= c.domain.T, "output.times", "values must lie in [0, T]");
  require(c.workers >= 0, "run.workers", "must be non-negative");
}

GridSpec resolve_grid(const ExperimentConfig& c, double eps) {
  const double n = -std::log2(eps);
  const double dx = c.schrodinger.dx > 0.0 ? c.schrodinger.dx : std::exp2(-n - c.schrodinger.dx_offset);
  const double dt = c.schrodinger.dt > 0.0 ? c.schrodinger.dt : std::exp2(-c.schrodinger.dt_slope * n - c.schrodinger.dt_offset);
  const double cells = c.domain.L / dx;
  const int M = static_cast<int>(std::lround(cells));
  if (std::abs(cells - M) > 1e-9 * cells) {
    config_error("out_of_range", "space step " + std::to_string(dx) + " does not divide L = " + std::to_string(c.domain.L));
  }
  return make_grid(c.domain.L, M, c.domain.T, dt);
}

MassModel build_model(const ExperimentConfig& c, double gamma) {
  MassParameters p;
  p.oscillation_x = c.mass.oscillation_x;
  p.oscillation_t = c.mass.oscillation_t;
  p.constant_value = c.mass.constant_value;
  p.bump_depth = c.mass.bump_depth;
  p.bump_height = c.mass.bump_height;
  p.potential_slope = c.mass.potential_slope;
  return MassModel(c.mass.kind, c.mass.potential, p, gamma, c.domain.L, c.domain.T);
}

MassModel build_model(const ExperimentConfig& c) { return build_model(c, c.mass.gamma); }

}  // namespace vmse
