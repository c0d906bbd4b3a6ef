#pragma once

#include <map>
#include <string>
#include <vector>

#include "pdhjb/harness/config.hpp"

namespace pdhjb::harness {

inline constexpr int kSummarySchemaVersion = 1;

// A checked inequality. `slack` >= 0 means it holds; `required` contracts decide the exit code,
// the others are reported only.
struct Contract {
  std::string name;
  bool passed = false;
  double slack = 0.0;
  bool required = true;
  std::string detail;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

// Whitespace-separated numeric columns for gnuplot.
struct PlotData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultBundle {
  ScenarioId scenario = ScenarioId::gauge_suite;
  json results = json::object();
  std::vector<Contract> contracts;
  std::map<std::string, Table> tables;
  std::map<std::string, PlotData> plots;

  void add(Contract c) { contracts.push_back(std::move(c)); }
  bool passed() const;
  const Contract* find(const std::string& name) const;
};

// Deterministic summary: sorted keys, no timings, schema version and config hash.
std::string summary_json(const ResultBundle& bundle, const ExperimentConfig& config);
std::string table_csv(const Table& table, const std::string& hash);
std::string plot_dat(const PlotData& plot, const std::string& hash);

// summary.json, <table>.csv and <plot>.dat under config.output_dir.
std::vector<std::string> write_bundle(const ResultBundle& bundle, const ExperimentConfig& config);

}  // namespace pdhjb::harness
