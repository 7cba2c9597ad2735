#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltg/config.hpp"

namespace ltg {

inline constexpr const char* kToolVersion = "ltg 1.0.0";

inline const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> kinds = {"uniformize-check", "mpe-verify", "inertia",    "dominance",
                                                 "monotonicity",     "pivot",      "impossibility"};
  return kinds;
}

struct ScenarioConfig {
  std::string name;
  std::string kind;
  std::filesystem::path source;  // config file; relative input paths resolve against its directory
  std::map<std::string, std::string> files;  // role -> path as written in the config
  std::optional<Rational> gamma;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  Json params = Json::object();
};

/// Throws ParseError on malformed documents or unknown keys.
ScenarioConfig scenario_from_json(const Json& doc, const std::filesystem::path& source);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::size_t column(const std::string& name) const;
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Everything a run emits. Output is a pure function of the config, its inputs and the seed.
struct Report {
  std::string name;
  std::string kind;
  Json summary = Json::object();  // headline numbers and parameters
  std::vector<Assertion> assertions;
  std::map<std::string, Table> tables;     // written as <key>.csv
  std::map<std::string, Json> documents;   // written as <key>.json

  bool passed() const;
  void check(std::string name, bool passed, std::string detail);
};

Report run_scenario(const ScenarioConfig& config);

/// summary.json, assertions.csv, one CSV per table and one JSON per document.
void write_report(const Report& report, const std::filesystem::path& dir);

/// Re-derives every headline number from the emitted tables and documents of a report
/// directory. Each returned assertion compares one recomputed value with the summary.
std::vector<Assertion> verify_report(const std::filesystem::path& dir);

/// Exit status 0 when every assertion passes, 1 otherwise.
int exit_status(const std::vector<Assertion>& assertions);

std::string format_double(double value);
std::string sha256_file(const std::filesystem::path& path);

/// LTG_OUT_ROOT or "ltg-out".
std::filesystem::path default_output_root();

}  // namespace ltg
