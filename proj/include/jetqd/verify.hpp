#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace jetqd {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;  // headline numbers against their thresholds
  nlohmann::json details;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
};

struct CriterionInfo {
  int id;
  std::string name;
  std::string statement;
};

// The thirteen acceptance criteria in order.
const std::vector<CriterionInfo>& criteria();

// Runs one criterion; numerical failures inside a check are reported as a failing result.
CriterionResult run_criterion(int id, const VerifyOptions& options = {});
std::vector<CriterionResult> run_criteria(const std::vector<int>& ids, const VerifyOptions& options = {});

// "[PASS] 1 exact-closure regression: ..." per result.
void print_results(std::ostream& os, const std::vector<CriterionResult>& results);

}  // namespace jetqd
