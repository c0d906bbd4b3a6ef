#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pdhjb/errors.hpp"
#include "pdhjb/harness/config.hpp"
#include "pdhjb/harness/output.hpp"
#include "pdhjb/harness/problems.hpp"
#include "pdhjb/harness/runner.hpp"
#include "pdhjb/harness/scenarios.hpp"

using namespace pdhjb;
using namespace pdhjb::harness;

TEST_CASE("scenario ids round-trip") {
  for (ScenarioId id : all_scenarios()) {
    CHECK(parse_scenario(to_string(id)) == id);
    CHECK(!describe(id).empty());
  }
  CHECK_THROWS_AS(parse_scenario("no_such_scenario"), ConfigError);
}

TEST_CASE("defaults validate and survive a round trip") {
  for (ScenarioId id : all_scenarios()) {
    const auto c = config_from_json(default_config_json(id));
    const auto again = config_from_json(config_to_json(c));
    CHECK(config_hash(c) == config_hash(again));
    CHECK(config_to_json(c) == config_to_json(again));
  }
}

TEST_CASE("yaml with line diagnostics") {
  const std::string text =
      "scenario: parabolic_control\n"
      "seed: 3\n"
      "samples:\n"
      "  paths: 100\n"
      "  bogus: 1\n";
  LineMap lines;
  const json j = parse_config_text(text, &lines);
  try {
    config_from_json(j, &lines);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "/samples/bogus");
    CHECK(e.line() == 5);
  }

  LineMap l2;
  const json bad = parse_config_text("scenario: parabolic_control\ndt: 0.3\n", &l2);
  try {
    config_from_json(bad, &l2);
    FAIL("dt that does not divide T accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(config_from_json(parse_config_text("scenario: parabolic_control\nnoise_rank: 9\n")), ConfigError);
  CHECK_THROWS_AS(config_from_json(parse_config_text("scenario: parabolic_control\nseed: abc\n")), ConfigError);
}

TEST_CASE("control shorthand and explicit switching controls") {
  const auto c = config_from_json(parse_config_text(
      "scenario: hyperbolic_control\n"
      "controls:\n"
      "  - 0.5\n"
      "  - label: flip\n"
      "    switch_times: [0.0, 0.5]\n"
      "    values: [1.0, -1.0]\n"));
  REQUIRE(c.controls.size() == 2);
  const auto fam = make_family(c);
  CHECK(fam[0].label == "u=0.5");
  CHECK(fam[1].at(0.75)[0] == -1.0);
}

TEST_CASE("environment overrides sit between the file and flags") {
  json j = parse_config_text("scenario: parabolic_control\nseed: 3\nsamples:\n  paths: 100\n");
  std::string a = "PDHJB_SAMPLES__PATHS=250", b = "PDHJB_SEED=9", other = "HOME=/root";
  std::vector<char*> env = {a.data(), b.data(), other.data(), nullptr};
  apply_env_overrides(j, env.data());
  const auto c = config_from_json(j);
  CHECK(c.samples == 250);
  CHECK(c.seed == 9);

  Overrides o;
  o.seed = 42;
  const auto r = resolve_config("", env.data(), o, "parabolic_control");
  CHECK(r.seed == 42);
  CHECK(r.samples == 250);
}

TEST_CASE("hash ignores output location and threads") {
  json j = default_config_json(ScenarioId::gauge_suite);
  const auto a = config_from_json(j);
  j["output_dir"] = "elsewhere";
  j["threads"] = 3;
  const auto b = config_from_json(j);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  j["seed"] = 2;
  CHECK(config_hash(config_from_json(j)) != config_hash(a));
}

TEST_CASE("summary json is deterministic and carries the hash") {
  json j = default_config_json(ScenarioId::gauge_suite);
  j["samples"]["paths"] = 50;
  j["params"]["pairs"] = 50;
  j["params"]["oracle_paths"] = 5;
  j["params"]["convexity_grid"] = 50;
  j["params"]["bp_families"] = 2;
  j["params"]["bp_size"] = 20;
  const auto c = config_from_json(j);
  const auto b1 = run_scenario(c);
  const auto b2 = run_scenario(c);
  const std::string s = summary_json(b1, c);
  CHECK(s == summary_json(b2, c));
  const json parsed = json::parse(s);
  CHECK(parsed["config_hash"] == config_hash(c));
  CHECK(parsed["schema_version"] == kSummarySchemaVersion);
  CHECK(parsed["contracts"].size() == b1.contracts.size());
  CHECK(table_csv(b1.tables.at("gauge_suite"), config_hash(c)).rfind("# config_hash=", 0) == 0);
}

TEST_CASE("path budget") {
  auto c = config_from_json(default_config_json(ScenarioId::parabolic_control));
  c.max_path_steps = 1000;
  CHECK_THROWS_AS(check_path_budget(c, 100, 64, "value"), BudgetExceeded);
  CHECK_NOTHROW(check_path_budget(c, 10, 64, "value"));
  CHECK_THROWS_AS(run(c, false), BudgetExceeded);
}

TEST_CASE("problem coefficients") {
  const auto chi = indicator_coefficients(6);
  CHECK(chi[1] == 0.0);
  CHECK(chi[0] == doctest::Approx(2.0 * std::sqrt(2.0) / std::numbers::pi));
  BenchmarkParams p;
  CHECK(benchmark_regime_holds(p));
  // Terminal condition is reproduced at t = T.
  CHECK(benchmark_value(p, p.final_time, 0.3).value == doctest::Approx(benchmark_terminal(p, 0.3)));
}
