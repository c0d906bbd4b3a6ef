#include "pdhjb/harness/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pdhjb/errors.hpp"

namespace pdhjb::harness {

namespace {

std::string with_location(const std::string& message, const std::string& field, int line) {
  std::string out = "config error";
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  if (!field.empty()) out += " at " + field;
  return out + ": " + message;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::string field, int line)
    : std::runtime_error(with_location(message, field, line)), field_(std::move(field)), line_(line) {}

const std::vector<ScenarioId>& all_scenarios() {
  static const std::vector<ScenarioId> ids{ScenarioId::parabolic_control, ScenarioId::hyperbolic_control,
                                           ScenarioId::quadratic_growth, ScenarioId::markovian_benchmark,
                                           ScenarioId::gauge_suite};
  return ids;
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::parabolic_control: return "parabolic_control";
    case ScenarioId::hyperbolic_control: return "hyperbolic_control";
    case ScenarioId::quadratic_growth: return "quadratic_growth";
    case ScenarioId::markovian_benchmark: return "markovian_benchmark";
    case ScenarioId::gauge_suite: return "gauge_suite";
  }
  return "?";
}

ScenarioId parse_scenario(const std::string& name) {
  for (ScenarioId id : all_scenarios())
    if (to_string(id) == name) return id;
  std::string known;
  for (ScenarioId id : all_scenarios()) known += (known.empty() ? "" : ", ") + to_string(id);
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")", "/scenario");
}

std::string describe(ScenarioId id) {
  switch (id) {
    case ScenarioId::parabolic_control:
      return "controlled stochastic heat equation: value, BSDE, Ito inequality, Yosida, DPP";
    case ScenarioId::hyperbolic_control:
      return "controlled stochastic wave equation as a first-order system: value, Ito inequality, DPP";
    case ScenarioId::quadratic_growth:
      return "unbounded controls with quadratic cost: energy-ball reduction, time regularity";
    case ScenarioId::markovian_benchmark:
      return "one-mode benchmark: Monte Carlo vs finite differences vs dynamic programming vs Hopf-Cole";
    case ScenarioId::gauge_suite:
      return "gauge functional invariants, derivative oracles, Borwein-Preiss certificates";
  }
  return "";
}

// ---------------------------------------------------------------------------------------------
// YAML to JSON

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

json scalar_to_json(const YAML::Node& n) {
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  {
    std::size_t pos = 0;
    try {
      if (!s.empty() && s[0] != '-' && s[0] != '+') {
        const unsigned long long v = std::stoull(s, &pos, 10);
        if (pos == s.size()) return static_cast<std::uint64_t>(v);
      } else {
        const long long v = std::stoll(s, &pos, 10);
        if (pos == s.size()) return static_cast<std::int64_t>(v);
      }
    } catch (const std::exception&) {
    }
    try {
      const double d = std::stod(s, &pos);
      if (pos == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  return s;
}

json yaml_to_json(const YAML::Node& n, const std::string& ptr, LineMap* lines) {
  if (lines) (*lines)[ptr] = n.Mark().line + 1;
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      std::size_t i = 0;
      for (const auto& item : n) {
        arr.push_back(yaml_to_json(item, ptr + "/" + std::to_string(i), lines));
        ++i;
      }
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        const std::string child = ptr + "/" + escape_pointer(key);
        if (obj.contains(key)) {
          throw ConfigError("duplicate key '" + key + "'", child, kv.first.Mark().line + 1);
        }
        obj[key] = yaml_to_json(kv.second, child, lines);
        if (lines) (*lines)[child] = kv.first.Mark().line + 1;
      }
      return obj;
    }
  }
  return nullptr;
}

}  // namespace

json parse_config_text(const std::string& text, LineMap* lines) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, "", e.mark.line + 1);
  }
  json j = yaml_to_json(root, "", lines);
  if (j.is_null()) j = json::object();
  if (!j.is_object()) throw ConfigError("top level must be a mapping", "", 1);
  return j;
}

json load_config_file(const std::string& path, LineMap* lines) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), lines);
}

void apply_env_overrides(json& j, char** envp) {
  if (!envp) return;
  static const std::string prefix = "PDHJB_";
  for (char** e = envp; *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    const std::string value = entry.substr(eq + 1);
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string ptr;
    std::size_t start = 0;
    while (true) {
      const auto sep = key.find("__", start);
      ptr += "/" + escape_pointer(key.substr(start, sep == std::string::npos ? std::string::npos : sep - start));
      if (sep == std::string::npos) break;
      start = sep + 2;
    }
    json v;
    try {
      v = yaml_to_json(YAML::Load(value), "", nullptr);
    } catch (const YAML::Exception& ex) {
      throw ConfigError("cannot parse environment override " + entry.substr(0, eq) + ": " + ex.msg, ptr);
    }
    j[json::json_pointer(ptr)] = v;
  }
}

// ---------------------------------------------------------------------------------------------
// Defaults

namespace {

json constant_controls(const std::vector<double>& values) {
  json arr = json::array();
  for (double u : values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u=%g", u);
    arr.push_back({{"label", buf}, {"switch_times", json::array({0.0})}, {"values", json::array({u})}});
  }
  return arr;
}

json base_defaults(ScenarioId id) {
  return {{"scenario", to_string(id)},
          {"seed", 1},
          {"output_dir", "out/" + to_string(id)},
          {"threads", 0},
          {"operator", {{"preset", "dirichlet_laplacian"}, {"scale", 0.1}, {"eigenvalues", json::array()}}},
          {"truncation", 4},
          {"noise_rank", 2},
          {"dt", 1.0 / 64.0},
          {"final_time", 1.0},
          {"samples", {{"paths", 2000}, {"outer", 64}, {"inner", 32}}},
          {"controls", constant_controls({-1.0, 0.0, 1.0})},
          {"budget", {{"max_path_steps", 2e9}, {"max_inner_paths", 2e6}}},
          {"params", json::object()}};
}

}  // namespace

json default_config_json(ScenarioId id) {
  json j = base_defaults(id);
  switch (id) {
    case ScenarioId::parabolic_control:
      j["params"] = {{"measure", "dirac"},
                     {"theta", 1.0},
                     {"sigma", 0.5},
                     {"rho", 1.0},
                     {"initial_amplitude", 1.0},
                     {"anchor_scale", 0.5},
                     {"gauge_m", 3},
                     {"gauge_M", 3.0},
                     {"yosida_mus", {10.0, 100.0, 1000.0}},
                     {"yosida_samples", 500},
                     {"dpp_delta", 0.25},
                     {"comparison_shift", 0.1},
                     {"stages", {"value", "bsde", "ito", "yosida", "dpp", "assumptions"}}};
      break;
    case ScenarioId::hyperbolic_control:
      j["operator"]["preset"] = "wave";
      j["truncation"] = 3;
      j["samples"] = {{"paths", 1000}, {"outer", 32}, {"inner", 16}};
      j["params"] = {{"measure", "dirac"},
                     {"theta", 0.5},
                     {"sigma", 0.5},
                     {"rho", 1.0},
                     {"initial_amplitude", 1.0},
                     {"anchor_scale", 0.5},
                     {"gauge_m", 3},
                     {"gauge_M", 3.0},
                     {"dpp_delta", 0.25},
                     {"stages", {"value", "ito", "dpp", "assumptions"}}};
      break;
    case ScenarioId::quadratic_growth:
      j["samples"] = {{"paths", 1000}, {"outer", 1}, {"inner", 1}};
      j["controls"] = constant_controls({-16, -8, -4, -2, -1, -0.5, 0, 0.5, 1, 2, 4, 8, 16});
      j["params"] = {{"nu1", 1.0},
                     {"bound", 1.0},
                     {"sigma", 0.5},
                     {"initial_amplitude", 0.5},
                     {"holder_gaps", {1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0}}};
      break;
    case ScenarioId::markovian_benchmark:
      j["operator"]["preset"] = "zero";
      j["truncation"] = 1;
      j["noise_rank"] = 1;
      j["dt"] = 1.0 / 256.0;
      j["samples"] = {{"paths", 5000}, {"outer", 1}, {"inner", 1}};
      j["controls"] = constant_controls({-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0});
      j["params"] = {{"amplitude", 0.2},
                     {"points", {{0.0, -0.5}, {0.0, 0.0}, {0.0, 0.5}}},
                     {"fd_h", 0.005},
                     {"domain", {-6.0, 6.0}},
                     {"dp_dt", 1.0 / 64.0},
                     {"dp_h", 0.02},
                     {"dp_nodes", 24},
                     {"tangency_tests", 20},
                     {"residual_points", 50},
                     {"kappa", 0.05}};
      break;
    case ScenarioId::gauge_suite:
      j["samples"] = {{"paths", 10000}, {"outer", 1}, {"inner", 1}};
      j["controls"] = json::array();
      j["params"] = {{"max_dim", 8},
                     {"path_steps", 16},
                     {"pairs", 10000},
                     {"oracle_paths", 100},
                     {"epsilons", {0.1, 1.0}},
                     {"convexity_grid", 10000},
                     {"bp_families", 50},
                     {"bp_size", 200},
                     {"bp_epsilon", 1.0}};
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------------------------
// Validation

namespace {

class Reader {
 public:
  Reader(const json& j, const LineMap* lines) : j_(j), lines_(lines) {}

  int line(const std::string& ptr) const {
    if (!lines_) return 0;
    std::string p = ptr;
    while (true) {
      auto it = lines_->find(p);
      if (it != lines_->end()) return it->second;
      const auto cut = p.rfind('/');
      if (cut == std::string::npos || p.empty()) return 0;
      p = p.substr(0, cut);
    }
  }

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw ConfigError(msg, ptr, line(ptr));
  }

  const json& at(const std::string& ptr) const {
    const json::json_pointer p(ptr);
    if (!j_.contains(p)) fail(ptr, "missing field");
    return j_.at(p);
  }

  double number(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "must be finite");
    return d;
  }

  double positive(const std::string& ptr) const {
    const double d = number(ptr);
    if (!(d > 0.0)) fail(ptr, "must be positive");
    return d;
  }

  std::int64_t integer(const std::string& ptr) const {
    const json& v = at(ptr);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    fail(ptr, "expected an integer");
  }

  std::size_t count(const std::string& ptr) const {
    const auto n = integer(ptr);
    if (n <= 0) fail(ptr, "must be a positive integer");
    return static_cast<std::size_t>(n);
  }

  std::string string(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_array()) fail(ptr, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(ptr + "/" + std::to_string(i)));
    return out;
  }

 private:
  const json& j_;
  const LineMap* lines_;
};

// Keys present in `given` but not in `schema`, recursively through objects (params included).
void reject_unknown(const json& given, const json& schema, const std::string& ptr, const Reader& r) {
  if (!given.is_object() || !schema.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string child = ptr + "/" + escape_pointer(it.key());
    if (!schema.contains(it.key())) r.fail(child, "unknown key '" + it.key() + "'");
    reject_unknown(it.value(), schema.at(it.key()), child, r);
  }
}

json normalize_controls(const json& c, const Reader& r) {
  if (!c.is_array()) r.fail("/controls", "expected a list");
  json out = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::string ptr = "/controls/" + std::to_string(i);
    if (c[i].is_number()) {
      const double u = c[i].get<double>();
      char buf[32];
      std::snprintf(buf, sizeof buf, "u=%g", u);
      out.push_back({{"label", buf}, {"switch_times", json::array({0.0})}, {"values", json::array({u})}});
    } else if (c[i].is_object()) {
      json e = c[i];
      for (auto it = e.begin(); it != e.end(); ++it) {
        if (it.key() != "label" && it.key() != "switch_times" && it.key() != "values")
          r.fail(ptr + "/" + it.key(), "unknown key '" + it.key() + "'");
      }
      if (!e.contains("values")) r.fail(ptr, "control needs 'values'");
      if (!e.contains("switch_times")) {
        if (!e["values"].is_array() || e["values"].size() != 1)
          r.fail(ptr, "'switch_times' is required unless the control is constant");
        e["switch_times"] = json::array({0.0});
      }
      if (!e.contains("label")) e["label"] = "control" + std::to_string(i);
      out.push_back(e);
    } else {
      r.fail(ptr, "expected a number or a mapping");
    }
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& given, const LineMap* lines) {
  const Reader raw(given, lines);
  if (!given.is_object()) raw.fail("", "top level must be a mapping");
  if (!given.contains("scenario")) raw.fail("/scenario", "missing field (one of parabolic_control, hyperbolic_control, quadratic_growth, markovian_benchmark, gauge_suite)");
  if (!given["scenario"].is_string()) raw.fail("/scenario", "expected a string");
  ScenarioId id;
  try {
    id = parse_scenario(given["scenario"].get<std::string>());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()).substr(std::string(e.what()).find(": ") + 2), "/scenario",
                      raw.line("/scenario"));
  }
  const json defaults = default_config_json(id);
  json patch = given;
  if (patch.contains("controls")) patch["controls"] = normalize_controls(patch["controls"], raw);
  {
    json schema = defaults;
    schema["controls"] = patch.contains("controls") ? patch["controls"] : defaults["controls"];
    reject_unknown(patch, schema, "", raw);
  }
  json j = defaults;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && j[it.key()].is_object()) {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) j[it.key()][jt.key()] = jt.value();
    } else {
      j[it.key()] = it.value();
    }
  }
  const Reader r(j, lines);

  ExperimentConfig c;
  c.scenario = id;
  {
    const json& s = r.at("/seed");
    if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    else r.fail("/seed", "expected a nonnegative integer");
  }
  c.output_dir = r.string("/output_dir");
  {
    const auto t = r.integer("/threads");
    if (t < 0 || t > 1024) r.fail("/threads", "must be in 0..1024 (0: all cores)");
    c.threads = static_cast<int>(t);
  }
  c.operator_preset = r.string("/operator/preset");
  c.operator_scale = r.positive("/operator/scale");
  c.eigenvalues = r.numbers("/operator/eigenvalues");
  c.truncation = static_cast<int>(r.count("/truncation"));
  if (c.truncation > 64) r.fail("/truncation", "must be in 1..64");
  c.noise_rank = static_cast<int>(r.count("/noise_rank"));
  if (c.noise_rank > c.truncation) r.fail("/noise_rank", "must not exceed the truncation");
  c.final_time = r.positive("/final_time");
  c.dt = r.positive("/dt");
  {
    const double n = c.final_time / c.dt;
    if (std::abs(n - std::round(n)) > 1e-9 * n) r.fail("/dt", "must divide final_time");
  }
  c.samples = r.count("/samples/paths");
  c.samples_outer = r.count("/samples/outer");
  c.samples_inner = r.count("/samples/inner");
  c.max_path_steps = r.positive("/budget/max_path_steps");
  c.max_inner_paths = r.positive("/budget/max_inner_paths");

  const std::string& preset = c.operator_preset;
  if (preset != "dirichlet_laplacian" && preset != "zero" && preset != "wave" && preset != "eigenvalues")
    r.fail("/operator/preset", "unknown operator preset '" + preset + "' (dirichlet_laplacian, zero, wave, eigenvalues)");
  if (preset == "eigenvalues") {
    if (static_cast<int>(c.eigenvalues.size()) != c.truncation)
      r.fail("/operator/eigenvalues", "needs exactly `truncation` entries");
    for (std::size_t i = 0; i < c.eigenvalues.size(); ++i)
      if (c.eigenvalues[i] > 0.0) r.fail("/operator/eigenvalues/" + std::to_string(i), "eigenvalues must be <= 0");
  }
  if (id == ScenarioId::hyperbolic_control && preset != "wave")
    r.fail("/operator/preset", "hyperbolic_control needs the wave preset");
  if (id != ScenarioId::hyperbolic_control && preset == "wave")
    r.fail("/operator/preset", "the wave preset belongs to hyperbolic_control");
  if (id == ScenarioId::markovian_benchmark) {
    if (preset != "zero") r.fail("/operator/preset", "markovian_benchmark uses the zero operator");
    if (c.truncation != 1) r.fail("/truncation", "markovian_benchmark keeps one mode");
  }

  const json& ctl = r.at("/controls");
  for (std::size_t i = 0; i < ctl.size(); ++i) {
    const std::string ptr = "/controls/" + std::to_string(i);
    ControlSpec s;
    s.label = r.string(ptr + "/label");
    s.switch_times = r.numbers(ptr + "/switch_times");
    s.values = r.numbers(ptr + "/values");
    if (s.values.size() != s.switch_times.size() || s.values.empty())
      r.fail(ptr, "switch_times and values need equal nonzero length");
    for (std::size_t k = 1; k < s.switch_times.size(); ++k)
      if (!(s.switch_times[k] > s.switch_times[k - 1])) r.fail(ptr + "/switch_times", "must increase");
    c.controls.push_back(std::move(s));
  }
  if (c.controls.empty() && id != ScenarioId::gauge_suite) r.fail("/controls", "control family is empty");

  // Scenario knobs: types follow the defaults.
  c.params = r.at("/params");
  for (auto it = defaults["params"].begin(); it != defaults["params"].end(); ++it) {
    const std::string ptr = "/params/" + it.key();
    const json& v = c.params[it.key()];
    if (it.value().is_number() && !v.is_number()) r.fail(ptr, "expected a number");
    if (it.value().is_number_integer() && !v.is_number_integer()) r.integer(ptr);
    if (it.value().is_string() && !v.is_string()) r.fail(ptr, "expected a string");
    if (it.value().is_array() && !v.is_array()) r.fail(ptr, "expected a list");
    if (it.value().is_number() && v.is_number() && !std::isfinite(v.get<double>())) r.fail(ptr, "must be finite");
  }
  if (id == ScenarioId::parabolic_control || id == ScenarioId::hyperbolic_control) {
    const std::string m = c.params["measure"].get<std::string>();
    if (m != "dirac" && m != "dirac_plus_uniform") r.fail("/params/measure", "expected dirac or dirac_plus_uniform");
    for (const auto& s : c.params["stages"]) {
      if (!s.is_string()) r.fail("/params/stages", "expected stage names");
    }
    const double d = c.params["dpp_delta"].get<double>();
    if (!(d > 0.0 && d <= 1.0)) r.fail("/params/dpp_delta", "must be a fraction of T in (0, 1]");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json ctl = json::array();
  for (const auto& s : c.controls)
    ctl.push_back({{"label", s.label}, {"switch_times", s.switch_times}, {"values", s.values}});
  return {{"scenario", to_string(c.scenario)},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"operator", {{"preset", c.operator_preset}, {"scale", c.operator_scale}, {"eigenvalues", c.eigenvalues}}},
          {"truncation", c.truncation},
          {"noise_rank", c.noise_rank},
          {"dt", c.dt},
          {"final_time", c.final_time},
          {"samples", {{"paths", c.samples}, {"outer", c.samples_outer}, {"inner", c.samples_inner}}},
          {"controls", ctl},
          {"budget", {{"max_path_steps", c.max_path_steps}, {"max_inner_paths", c.max_inner_paths}}},
          {"params", c.params}};
}

json config_identity(const ExperimentConfig& c) {
  json j = config_to_json(c);
  j.erase("output_dir");
  j.erase("threads");
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = config_identity(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SpectralOperator make_operator(const ExperimentConfig& c) {
  if (c.operator_preset == "dirichlet_laplacian") return SpectralOperator::dirichlet_laplacian(c.truncation, c.operator_scale);
  if (c.operator_preset == "zero") return SpectralOperator::zero(c.truncation);
  if (c.operator_preset == "wave") return SpectralOperator::wave(c.truncation, c.operator_scale);
  return SpectralOperator::diagonal(c.eigenvalues);
}

std::vector<ControlProcess> make_family(const ExperimentConfig& c) {
  std::vector<ControlProcess> out;
  for (const auto& s : c.controls) {
    ControlProcess p;
    p.label = s.label;
    p.switch_times = s.switch_times;
    for (double v : s.values) p.values.push_back(ControlPoint::Constant(1, v));
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pdhjb::harness
