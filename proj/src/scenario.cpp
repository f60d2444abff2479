#include "netlab/scenario.hpp"

#include <fstream>
#include <sstream>

namespace netlab {

namespace {

const char* kIcnDefaults = R"({
  "model": "icn",
  "run_id": "icn",
  "seed": 1,
  "horizon": 400000,
  "metrics_every": 5000,
  "topology": {"builder": "line", "n_left": 2, "n_right": 3, "rows": 3, "cols": 4, "clusters": 3,
               "gateways": 2, "leaves": 3, "mobiles": 1, "directed": false, "capacity": 1},
  "interference": {"kind": "greedy", "sets": [["1.100->1.104"]]},
  "algorithm": {"mode": "two_scale", "T": 500, "T_estimate": 0, "R": 650, "eta": 3,
                "beta": 20.0, "kappa": 3, "decision_interval": 1, "rate_filter": 0.999,
                "shadow_red_per_batch": 0, "loop_prevention": true,
                "regulated": false, "regulated_delta": 0.1, "thresholds": [25, 13, 5],
                "check_invariants": true},
  "mobility": [{"preset": "shuttle", "transition": [[0.0, 1.0], [1.0, 0.0]], "initial": 0}],
  "flows": [
    {"source": "1.100", "destination": "2.100", "rate": 0.0, "rate_control": true, "K": 200.0},
    {"source": "2.101", "destination": "2.100", "rate": 0.0, "rate_control": true, "K": 200.0}
  ]
})";

const char* kMobilityDefaults = R"({
  "model": "mobility",
  "run_id": "mobility",
  "seed": 1,
  "slots_per_minute": 60,
  "minutes": 6000,
  "metrics_every": 50,
  "preset": "",
  "controller": {"K": 600.0, "kappa": 0.0, "practical": true, "eta_pickup": 100, "eta_dropoff": 100,
                 "arrivals": "poisson", "forced_cycle": []},
  "routes": [
    {"name": "R1", "visits": [{"node": "S1", "count": 1}, {"node": "S2", "count": 1}], "minutes": 1.0, "cost": 1.0, "floor": 0.0},
    {"name": "R2", "visits": [{"node": "S1", "count": 1}, {"node": "S2", "count": 1}], "minutes": 2.0, "cost": 0.0, "floor": 0.1},
    {"name": "R3", "visits": [{"node": "S3", "count": 1}, {"node": "S4", "count": 1}], "minutes": 1.0, "cost": 1.0, "floor": 0.0},
    {"name": "R4", "visits": [{"node": "S3", "count": 1}, {"node": "S4", "count": 1}], "minutes": 2.0, "cost": 0.0, "floor": 0.1}
  ],
  "flows": [
    {"source": "S1", "destination": "S2", "rate_per_min": 40.0, "pickup_cost": [1.0, 0.0, 1.0, 0.0]},
    {"source": "S2", "destination": "S3", "rate_per_min": 30.0, "pickup_cost": [1.0, 0.0, 1.0, 0.0]}
  ]
})";

const char* kTcpDefaults = R"({
  "model": "tcp_rlc",
  "run_id": "tcp_rlc",
  "seed": 1,
  "variant": "multipath",
  "slots": 20000,
  "metrics_every": 100,
  "paths": 8,
  "total_capacity": 73,
  "redundancy": 19,
  "coded": true,
  "carryover": true,
  "rtt_ms": 150.0,
  "rto_factor": 3,
  "w_max": 400,
  "channel": {"levels": [{"p": 0.1, "prob": 0.1}, {"p": 1.0, "prob": 0.9}], "hold_lo_ms": 100.0, "hold_hi_ms": 200.0},
  "aqm": {"enabled": false, "rho": 1.2, "fchan_trials": 0},
  "fec": {"fraction": 0.1, "d_good": 0.05, "d_bad": 0.15, "p_good": 0.5},
  "chain": {"f_eff": 0.01}
})";

std::string type_name(const Json& j) {
  if (j.is_number()) return "number";
  return j.type_name();
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) {
    // Integers may not silently become fractional.
    if (a.is_number_integer() && !b.is_number_integer()) return false;
    return true;
  }
  return a.type() == b.type();
}

}  // namespace

Json default_scenario(const std::string& model) {
  if (model == "icn") return Json::parse(kIcnDefaults);
  if (model == "mobility") return Json::parse(kMobilityDefaults);
  if (model == "tcp_rlc") return Json::parse(kTcpDefaults);
  throw ScenarioError("unknown model '" + model + "' (expected icn, mobility or tcp_rlc)");
}

void strict_merge(Json& base, const Json& user, const std::string& where) {
  if (base.is_object()) {
    if (!user.is_object()) throw ScenarioError(where + ": expected an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
      const std::string key = where.empty() ? it.key() : where + "." + it.key();
      if (!base.contains(it.key())) throw ScenarioError("unknown key '" + key + "'");
      strict_merge(base[it.key()], it.value(), key);
    }
    return;
  }
  if (base.is_array()) {
    if (!user.is_array()) throw ScenarioError(where + ": expected an array");
    if (!base.empty() && base.front().is_object()) {
      Json tmpl = base.front();
      Json out = Json::array();
      for (std::size_t i = 0; i < user.size(); ++i) {
        Json el = tmpl;
        strict_merge(el, user[i], where + "." + std::to_string(i));
        out.push_back(std::move(el));
      }
      base = std::move(out);
    } else {
      base = user;
    }
    return;
  }
  if (!same_kind(base, user))
    throw ScenarioError(where + ": expected " + type_name(base) + ", got " + type_name(user));
  base = user;
}

Json load_scenario_text(const std::string& text) {
  Json user;
  try {
    user = Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  if (!user.is_object()) throw ScenarioError("scenario must be a JSON object");
  if (!user.contains("model") || !user["model"].is_string()) throw ScenarioError("scenario needs a string 'model'");
  Json cfg = default_scenario(user["model"].get<std::string>());
  strict_merge(cfg, user);
  return cfg;
}

Json load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError("cannot open scenario " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_scenario_text(ss.str());
}

Json& at_path(Json& cfg, const std::string& dotted) {
  Json* cur = &cfg;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (cur->is_object()) {
      if (!cur->contains(part)) throw ScenarioError("unknown key '" + dotted + "'");
      cur = &(*cur)[part];
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ScenarioError("'" + dotted + "': '" + part + "' is not an index");
      }
      if (idx >= cur->size()) throw ScenarioError("'" + dotted + "': index out of range");
      cur = &(*cur)[idx];
    } else {
      throw ScenarioError("unknown key '" + dotted + "'");
    }
  }
  return *cur;
}

void apply_override(Json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ScenarioError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  if (key == "model") throw ScenarioError("the model cannot be overridden");
  Json& slot = at_path(cfg, key);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  strict_merge(slot, value, key);
}

void apply_overrides(Json& cfg, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) apply_override(cfg, a);
}

}  // namespace netlab
