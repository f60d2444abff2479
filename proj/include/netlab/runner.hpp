#pragma once

#include <string>
#include <vector>

#include "netlab/metrics.hpp"
#include "netlab/scenario.hpp"

namespace netlab {

struct RunOutput {
  std::string model;
  std::string run_id;
  Json summary;
  MetricsSink metrics;
};

// Dispatches a merged scenario (see load_scenario_text) on its "model".
RunOutput run_scenario(const Json& scenario);

// Independent runs, one per scenario, results in input order. Runs share
// nothing, so output is identical to run_batch_serial for any thread count.
// The first failing run's exception is rethrown after all runs finish.
std::vector<RunOutput> run_batch(const std::vector<Json>& scenarios, int threads = 0);
std::vector<RunOutput> run_batch_serial(const std::vector<Json>& scenarios);

// One scenario per value of `key`; run_id gets "/<key>=<value>" appended.
std::vector<Json> sweep_scenarios(const Json& base, const std::string& key, const std::vector<std::string>& values);

}  // namespace netlab
