#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

namespace jetqd::cli {

// Typed access to one TOML table; keys never read are reported by finish().
class Reader {
 public:
  Reader(const toml::table* table, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  long integer(const std::string& key, long fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string text(const std::string& key);
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
  std::vector<std::vector<double>> rows(const std::string& key);
  std::vector<long> integers(const std::string& key, std::vector<long> fallback);
  // Missing tables read as empty.
  Reader& table(const std::string& key);

  // Throws ConfigError naming the first unknown key here or in any child table.
  void finish() const;

 private:
  const toml::node* get(const std::string& key);
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
  std::deque<Reader> children_;
};

// Command-line values that replace config entries.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> truncation;
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<std::string> closure;
  std::optional<int> threads;
  bool no_detectors = false;

  nlohmann::json to_json() const;
};

struct RunOutcome {
  int exit_code = 0;
  std::filesystem::path output_dir;
};

struct CatalogEntry {
  std::string name;
  std::string kind;
  std::string summary;
  std::string exercises;  // the quantities and equations the run checks
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry* find_scenario(const std::string& name);

// Parses and runs a scenario file, writing CSV outputs and manifest.json into
// output_dir (default out/<name>). Throws ConfigError and NumericalError.
RunOutcome run_scenario(const std::filesystem::path& file, const Overrides& overrides,
                        const std::optional<std::filesystem::path>& output_dir);

}  // namespace jetqd::cli
