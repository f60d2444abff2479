#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netlab/metrics.hpp"
#include "netlab/scenario.hpp"

namespace netlab {

struct Check {
  std::string what;
  double measured = 0.0;
  std::string expected;  // target and tolerance, human readable
  bool pass = false;
};

struct CriterionReport {
  int id = 0;
  std::string key;
  std::vector<Check> checks;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  MetricsSink metrics;

  bool pass() const;
};

struct ExperimentId {
  int id;
  std::string key;
  double budget_seconds;
};
const std::vector<ExperimentId>& experiment_ids();
// Accepts "4" or "icn-delay-scaling"; throws ScenarioError listing the ids.
int experiment_from_key(const std::string& key);

// Criteria 1..10. Criterion 11 needs earlier reports; see check_determinism.
CriterionReport run_criterion(int id, std::uint64_t seed = 1);
// Re-runs each report's criterion and compares CSV bytes.
CriterionReport check_determinism(const std::vector<CriterionReport>& first, std::uint64_t seed = 1);

// One line: "criterion N key PASS|FAIL (s)"; details() lists every check.
std::string summary_line(const CriterionReport& r);
std::string details(const CriterionReport& r);

// Scenario builders behind the ICN criteria, exposed for tests and the CLI.
Json icn_delay_scenario(const std::string& mode, int Nc, std::uint64_t seed);
Json icn_rate_scenario(const std::string& mode, double K1, double K2, int red_per_batch, std::int64_t horizon,
                       std::uint64_t seed);

}  // namespace netlab
