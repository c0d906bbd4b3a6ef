#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdhjb/hilbert.hpp"
#include "pdhjb/problem.hpp"

namespace pdhjb::harness {

using json = nlohmann::json;

enum class ScenarioId { parabolic_control, hyperbolic_control, quadratic_growth, markovian_benchmark, gauge_suite };

const std::vector<ScenarioId>& all_scenarios();
std::string to_string(ScenarioId id);
ScenarioId parse_scenario(const std::string& name);  // throws ConfigError
std::string describe(ScenarioId id);

// Parse or validation failure; `field` is a JSON pointer, `line` is 1-based or 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string field = {}, int line = 0);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct ControlSpec {
  std::string label;
  std::vector<double> switch_times;
  std::vector<double> values;
};

struct ExperimentConfig {
  ScenarioId scenario = ScenarioId::gauge_suite;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int threads = 0;

  std::string operator_preset = "dirichlet_laplacian";  // dirichlet_laplacian | zero | wave | eigenvalues
  double operator_scale = 0.1;
  std::vector<double> eigenvalues;

  int truncation = 4;
  int noise_rank = 2;
  double dt = 1.0 / 64.0;
  double final_time = 1.0;

  std::size_t samples = 2000;
  std::size_t samples_outer = 64;
  std::size_t samples_inner = 32;

  std::vector<ControlSpec> controls;

  double max_path_steps = 2e9;    // samples * steps per simulated ensemble
  double max_inner_paths = 2e6;   // |family| * outer * inner for nested estimates

  json params = json::object();   // scenario-specific knobs, defaults filled in
};

// Source positions of the keys of a parsed file, by JSON pointer.
using LineMap = std::map<std::string, int>;

// YAML (or JSON, which YAML accepts) text into JSON, recording key lines.
json parse_config_text(const std::string& text, LineMap* lines = nullptr);
json load_config_file(const std::string& path, LineMap* lines = nullptr);

// PDHJB_<KEY> environment overrides; "__" separates nesting levels, keys are lowercased.
// PDHJB_SAMPLES__PATHS=500 sets /samples/paths. Values are parsed as YAML scalars.
void apply_env_overrides(json& j, char** envp);

// Defaults of a scenario as canonical JSON.
json default_config_json(ScenarioId id);

// Defaults for the file's scenario, then the file on top (merge patch), then validation.
ExperimentConfig config_from_json(const json& j, const LineMap* lines = nullptr);
json config_to_json(const ExperimentConfig& c);

// Canonical JSON without output_dir and threads: what determines the results.
json config_identity(const ExperimentConfig& c);
// FNV-1a 64 of the compact dump of config_identity, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

SpectralOperator make_operator(const ExperimentConfig& c);
std::vector<ControlProcess> make_family(const ExperimentConfig& c);

}  // namespace pdhjb::harness
