#include "netlab/runner.hpp"

#include <exception>

#include "netlab/icn.hpp"
#include "netlab/mobility.hpp"
#include "netlab/tcp_rlc.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace netlab {

namespace {

Json icn_summary(const IcnConfig& cfg, const IcnSummary& s) {
  Json j;
  j["slots"] = s.slots;
  j["locality_violations"] = s.locality_violations;
  j["max_internal_q"] = s.max_internal_q;
  j["max_source_u"] = s.max_source_u;
  j["max_gateway_backlog"] = s.max_gateway_backlog;
  j["max_mobile_backlog"] = s.max_mobile_backlog;
  j["flows"] = Json::array();
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    const auto& f = s.flows[i];
    j["flows"].push_back({{"flow", cfg.flows[i].source + "->" + cfg.flows[i].destination},
                          {"admitted_rate", f.admitted_rate},
                          {"blue_admitted_rate", f.blue_admitted_rate},
                          {"delivered_rate", f.delivered_rate},
                          {"mean_delay", f.mean_delay},
                          {"mean_pickup_delay", f.mean_pickup_delay},
                          {"delivered", f.delivered},
                          {"x_estimate", f.x_estimate}});
  }
  return j;
}

Json mobility_summary(const mob::MobConfig& cfg, const mob::MobSummary& s) {
  Json j;
  j["selections"] = s.selections;
  j["cost"] = s.cost;
  j["max_source_q_first_half"] = s.max_source_q_first;
  j["max_source_q_last_half"] = s.max_source_q_last;
  j["max_Q"] = s.max_Q;
  j["max_w"] = s.max_w;
  j["admitted"] = s.admitted;
  j["delivered"] = s.delivered;
  Json f = Json::object();
  for (std::size_t r = 0; r < cfg.net.routes.size(); ++r) f[cfg.net.routes[r].name] = s.f[r];
  j["f"] = f;
  Json y = Json::object();
  for (std::size_t i = 0; i < cfg.net.flows.size(); ++i)
    for (std::size_t r = 0; r < cfg.net.routes.size(); ++r)
      if (cfg.net.P(i, r) > 0) y[cfg.net.flows[i].source + "@" + cfg.net.routes[r].name] = s.y[i][r];
  j["y"] = y;
  Json sl = Json::object();
  for (std::size_t i = 0; i < cfg.net.flows.size(); ++i) sl[cfg.net.flows[i].source] = s.source_q_slope[i];
  j["source_q_slope"] = sl;
  return j;
}

Json rlc_summary(const rlc::RlcSummary& s) {
  return {{"goodput", s.goodput},
          {"goodput_fraction", s.goodput_fraction},
          {"mean_W", s.mean_W},
          {"mean_path_w", s.mean_path_w},
          {"delivered_fraction", s.delivered_fraction},
          {"saturated_fraction", s.saturated_fraction},
          {"decode_failures", s.decode_failures},
          {"timeouts", s.timeouts},
          {"slots", s.slots}};
}

}  // namespace

RunOutput run_scenario(const Json& scenario) {
  RunOutput out;
  out.model = scenario.at("model").get<std::string>();
  out.run_id = scenario.at("run_id").get<std::string>();
  if (out.model == "icn") {
    IcnConfig cfg = icn_config_from_json(scenario);
    out.summary = icn_summary(cfg, run_icn(cfg, &out.metrics));
  } else if (out.model == "mobility") {
    mob::MobConfig cfg = mob::mob_config_from_json(scenario);
    out.summary = mobility_summary(cfg, mob::run_mobility(cfg, &out.metrics));
  } else if (out.model == "tcp_rlc") {
    out.summary = rlc_summary(rlc::run_rlc(rlc::rlc_config_from_json(scenario), &out.metrics));
  } else {
    throw ScenarioError("unknown model '" + out.model + "'");
  }
  return out;
}

std::vector<RunOutput> run_batch_serial(const std::vector<Json>& scenarios) {
  std::vector<RunOutput> out;
  for (const auto& s : scenarios) out.push_back(run_scenario(s));
  return out;
}

std::vector<RunOutput> run_batch(const std::vector<Json>& scenarios, int threads) {
  const long n = static_cast<long>(scenarios.size());
  std::vector<RunOutput> out(n);
  std::vector<std::exception_ptr> err(n);
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = run_scenario(scenarios[i]);
    } catch (...) {
      err[i] = std::current_exception();
    }
  }
  (void)threads;
  for (const auto& e : err)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<Json> sweep_scenarios(const Json& base, const std::string& key, const std::vector<std::string>& values) {
  if (values.empty()) throw ScenarioError("sweep needs at least one value");
  std::vector<Json> out;
  for (const auto& v : values) {
    Json s = base;
    apply_override(s, key + "=" + v);
    s["run_id"] = base.at("run_id").get<std::string>() + "/" + key + "=" + v;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace netlab
