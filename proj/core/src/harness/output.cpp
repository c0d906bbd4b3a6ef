#include "pdhjb/harness/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pdhjb/errors.hpp"

namespace pdhjb::harness {

bool ResultBundle::passed() const {
  for (const auto& c : contracts)
    if (c.required && !c.passed) return false;
  return true;
}

const Contract* ResultBundle::find(const std::string& name) const {
  for (const auto& c : contracts)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  }
  if (v.is_number_float()) return fmt(v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string summary_json(const ResultBundle& bundle, const ExperimentConfig& config) {
  json contracts = json::array();
  for (const auto& c : bundle.contracts) {
    contracts.push_back({{"name", c.name},
                         {"passed", c.passed},
                         {"slack", finite_or_null(c.slack)},
                         {"required", c.required},
                         {"detail", c.detail}});
  }
  const json out = {{"schema_version", kSummarySchemaVersion},
                    {"scenario", to_string(bundle.scenario)},
                    {"config_hash", config_hash(config)},
                    {"seed", config.seed},
                    {"config", config_identity(config)},
                    {"results", bundle.results},
                    {"contracts", contracts},
                    {"passed", bundle.passed()}};
  return out.dump(2) + "\n";
}

std::string table_csv(const Table& table, const std::string& hash) {
  std::string out = "# config_hash=" + hash + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
    out += "\n";
  }
  return out;
}

std::string plot_dat(const PlotData& plot, const std::string& hash) {
  std::string out = "# config_hash=" + hash + "\n#";
  for (const auto& c : plot.columns) out += " " + c;
  out += "\n";
  for (const auto& row : plot.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + fmt(row[i]);
    out += "\n";
  }
  return out;
}

std::vector<std::string> write_bundle(const ResultBundle& bundle, const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + config.output_dir + "': " + ec.message());
  const std::string hash = config_hash(config);
  std::vector<std::string> written;
  auto put = [&](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write '" + p.string() + "'");
    f << text;
    written.push_back(p.string());
  };
  put(dir / "summary.json", summary_json(bundle, config));
  for (const auto& [name, t] : bundle.tables) put(dir / (name + ".csv"), table_csv(t, hash));
  for (const auto& [name, p] : bundle.plots) put(dir / (name + ".dat"), plot_dat(p, hash));
  return written;
}

}  // namespace pdhjb::harness
