// netlab: run, sweep, oracle, reproduce, validate.
// Exit codes: 0 ok, 1 failed reproduction or other error, 2 bad scenario or
// arguments, 3 invariant violation during a run.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "netlab/experiments.hpp"
#include "netlab/icn.hpp"
#include "netlab/invariant.hpp"
#include "netlab/mobility.hpp"
#include "netlab/runner.hpp"
#include "netlab/tcp_rlc.hpp"

namespace fs = std::filesystem;
using namespace netlab;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::vector<std::string> sets;
  long long seed = -1;
};

void add_common(CLI::App* app, Common& c, bool need_out) {
  app->add_option("--scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* o = app->add_option("--out", c.out, "output directory");
  if (need_out) o->required();
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--set", c.sets, "dotted.key=value override (repeatable)");
}

Json load(const Common& c) {
  Json j = load_scenario_file(c.scenario);
  apply_overrides(j, c.sets);
  if (c.seed >= 0) j["seed"] = static_cast<std::uint64_t>(c.seed);
  return j;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_number()) {
    out.emplace_back(prefix, format_value(j.get<double>()));
  } else {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

void print_summary(const RunOutput& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(r.summary, "", rows);
  std::cout << r.model << " run " << r.run_id << "\n";
  for (const auto& [k, v] : rows) std::cout << "  " << k << " = " << v << "\n";
}

int cmd_run(const Common& c) {
  Json j = load(c);
  RunOutput r = run_scenario(j);
  if (!c.out.empty()) {
    r.metrics.save((fs::path(c.out) / "metrics.csv").string());
    write_file(fs::path(c.out) / "summary.json", r.summary.dump(2) + "\n");
  }
  print_summary(r);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& key, const std::vector<std::string>& values, int parallel) {
  Json base = load(c);
  auto scenarios = sweep_scenarios(base, key, values);
  auto runs = parallel > 1 ? run_batch(scenarios, parallel) : run_batch_serial(scenarios);
  std::ostringstream table;
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    fs::path dir = fs::path(c.out) / (key + "=" + values[i]);
    runs[i].metrics.save((dir / "metrics.csv").string());
    write_file(dir / "summary.json", runs[i].summary.dump(2) + "\n");
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(runs[i].summary, "", rows);
    if (i == 0) {
      table << key;
      for (const auto& [k, v] : rows) {
        table << "," << csv_escape(k);
        cols.push_back(k);
      }
      table << "\n";
    }
    table << csv_escape(values[i]);
    for (const auto& [k, v] : rows) table << "," << csv_escape(v);
    table << "\n";
  }
  write_file(fs::path(c.out) / "summary.csv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_validate(const Common& c) {
  Json j = load(c);
  const std::string model = j.at("model").get<std::string>();
  // A zero-length run exercises every config check without simulating.
  if (model == "icn") {
    j["horizon"] = 0;
  } else if (model == "mobility") {
    j["minutes"] = 0;
  } else {
    j["slots"] = 0;
  }
  run_scenario(j);
  std::cout << "ok: " << model << " scenario " << c.scenario << "\n";
  return 0;
}

int cmd_oracle(const std::string& name, const Common& c) {
  Json j = load(c);
  const std::string model = j.at("model").get<std::string>();
  std::cout.precision(10);
  if (name == "lp" || name == "supportable") {
    if (model != "mobility") throw ScenarioError("oracle " + name + " needs a mobility scenario");
    auto cfg = mob::mob_config_from_json(j);
    if (name == "supportable") {
      std::cout << "supportable = " << (mob::supportability_check(cfg.net) ? "true" : "false") << "\n";
      return 0;
    }
    auto r = mob::reference_lp_solve(cfg.net, cfg.K);
    if (!r.feasible) {
      std::cout << "infeasible\n";
      return 0;
    }
    std::cout << "cost = " << r.cost << "\n";
    for (std::size_t k = 0; k < r.f.size(); ++k) std::cout << "f " << cfg.net.routes[k].name << " = " << r.f[k] << "\n";
    for (std::size_t i = 0; i < r.y.size(); ++i)
      for (std::size_t k = 0; k < r.y[i].size(); ++k)
        if (cfg.net.P(i, k) > 0)
          std::cout << "y " << cfg.net.flows[i].source << "@" << cfg.net.routes[k].name << " = " << r.y[i][k] << "\n";
    return 0;
  }
  if (model != "tcp_rlc") throw ScenarioError("oracle " + name + " needs a tcp_rlc scenario");
  auto cfg = rlc::rlc_config_from_json(j);
  const int C = cfg.total_capacity / cfg.paths;
  if (name == "beta") {
    auto b = rlc::solve_beta(cfg.paths, C, cfg.rho, cfg.channel);
    std::cout << "regime = " << rlc::to_string(b.regime) << "\n";
    if (b.beta) std::cout << "beta = " << *b.beta << "\n";
    std::cout << "interval = [" << b.lo << ", " << b.hi << "]\n";
    std::cout << "bound = " << rlc::throughput_lower_bound(cfg.paths, C, cfg.rho, cfg.channel) << "\n";
    return 0;
  }
  if (name == "aimd") {
    auto s = rlc::steady_state_oracle(std::vector<double>(cfg.w_max, cfg.chain_f_eff), cfg.w_max);
    std::cout << "mean_W = " << s.mean << "\niterations = " << s.iterations << "\n";
    return 0;
  }
  if (name == "fchan") {
    auto f = rlc::f_chan_exact(cfg.paths, C, cfg.channel);
    for (std::size_t w = 0; w < f.size(); ++w) std::cout << w << "," << f[w] << "\n";
    return 0;
  }
  throw ScenarioError("unknown oracle '" + name + "' (lp, supportable, beta, aimd, fchan)");
}

int cmd_reproduce(const std::string& key, const std::string& out, long long seed) {
  int id = experiment_from_key(key);
  std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 1;
  CriterionReport r;
  if (id == 11) {
    std::vector<CriterionReport> first;
    for (int k = 1; k <= 10; ++k) first.push_back(run_criterion(k, s));
    r = check_determinism(first, s);
  } else {
    r = run_criterion(id, s);
  }
  if (!out.empty()) r.metrics.save((fs::path(out) / (r.key + ".csv")).string());
  std::cout << summary_line(r) << "\n" << details(r);
  return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netlab: slotted network simulators and reference oracles"};
  app.require_subcommand(1);

  Common run_c, sweep_c, val_c, oracle_c;
  auto* run = app.add_subcommand("run", "run one scenario");
  add_common(run, run_c, false);

  auto* sweep = app.add_subcommand("sweep", "one run per value of a key");
  add_common(sweep, sweep_c, true);
  std::string key;
  std::vector<std::string> values;
  int parallel = 1;
  sweep->add_option("--key", key, "dotted key to vary")->required();
  sweep->add_option("--values", values, "values (comma separated)")->required()->delimiter(',');
  sweep->add_option("--parallel", parallel, "worker threads");

  auto* oracle = app.add_subcommand("oracle", "evaluate a reference oracle");
  std::string oracle_name;
  oracle->add_option("name", oracle_name, "lp, supportable, beta, aimd or fchan")->required();
  add_common(oracle, oracle_c, false);

  auto* rep = app.add_subcommand("reproduce", "run one acceptance experiment");
  std::string exp;
  std::string rep_out;
  long long rep_seed = -1;
  rep->add_option("id", exp, "experiment id or number")->required();
  rep->add_option("--out", rep_out, "directory for the experiment CSV");
  rep->add_option("--seed", rep_seed, "seed (default 1)");

  auto* val = app.add_subcommand("validate", "check a scenario without running it");
  add_common(val, val_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_c);
    if (*sweep) return cmd_sweep(sweep_c, key, values, parallel);
    if (*oracle) return cmd_oracle(oracle_name, oracle_c);
    if (*rep) return cmd_reproduce(exp, rep_out, rep_seed);
    if (*val) return cmd_validate(val_c);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation at " << e.what() << "\n";
    return 3;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
