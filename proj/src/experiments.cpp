#include "netlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "netlab/icn.hpp"
#include "netlab/mobility.hpp"
#include "netlab/rng.hpp"
#include "netlab/tcp_rlc.hpp"

namespace netlab {

bool CriterionReport::pass() const {
  if (seconds > budget_seconds) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<ExperimentId>& experiment_ids() {
  static const std::vector<ExperimentId> ids = {
      {1, "mobility-exp1", 10},        {2, "mobility-exp2", 30},          {3, "mobility-illustrative", 5},
      {4, "icn-delay-scaling", 60},    {5, "icn-locality", 60},           {6, "icn-rate-control", 60},
      {7, "icn-shadow", 60},           {8, "rlc-multipath", 120},         {9, "aimd-oracle", 30},
      {10, "analytic-consistency", 5}, {11, "determinism", 1e9},
  };
  return ids;
}

int experiment_from_key(const std::string& key) {
  for (const auto& e : experiment_ids())
    if (e.key == key || std::to_string(e.id) == key) return e.id;
  std::string list;
  for (const auto& e : experiment_ids()) list += "\n  " + std::to_string(e.id) + "  " + e.key;
  throw ScenarioError("unknown experiment '" + key + "'; known ids:" + list);
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Check at_least(std::string what, double v, double lo) { return {std::move(what), v, ">= " + fmt(lo), v >= lo}; }
Check at_most(std::string what, double v, double hi) { return {std::move(what), v, "<= " + fmt(hi), v <= hi}; }
Check below(std::string what, double v, double hi) { return {std::move(what), v, "< " + fmt(hi), v < hi}; }
Check above(std::string what, double v, double lo) { return {std::move(what), v, "> " + fmt(lo), v > lo}; }
Check near_abs(std::string what, double v, double target, double tol) {
  return {std::move(what), v, fmt(target) + " +- " + fmt(tol), std::abs(v - target) <= tol};
}
Check near_rel(std::string what, double v, double target, double rel) {
  return {std::move(what), v, fmt(target) + " +- " + fmt(100 * rel) + "%", std::abs(v - target) <= rel * std::abs(target)};
}

// ---- mobility ----------------------------------------------------------------

mob::MobConfig mobility_config(const std::string& preset, double K, double minutes, std::uint64_t seed,
                               const std::string& run_id) {
  Json j = default_scenario("mobility");
  j["preset"] = preset;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["minutes"] = minutes;
  j["metrics_every"] = 500;
  j["controller"]["K"] = K;
  if (preset == "illustrative") j["controller"]["eta_pickup"] = j["controller"]["eta_dropoff"] = 200;
  return mob::mob_config_from_json(j);
}

// Values of y over routes that can reach each flow's source, flattened.
std::vector<double> reachable(const mob::Network& net, const std::vector<std::vector<double>>& y) {
  std::vector<double> out;
  for (std::size_t i = 0; i < net.flows.size(); ++i)
    for (std::size_t j = 0; j < net.routes.size(); ++j)
      if (net.P(i, j) > 0) out.push_back(y[i][j]);
  return out;
}

std::vector<std::string> reachable_names(const mob::Network& net) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < net.flows.size(); ++i)
    for (std::size_t j = 0; j < net.routes.size(); ++j)
      if (net.P(i, j) > 0) out.push_back(net.flows[i].source + "@" + net.routes[j].name);
  return out;
}

void mobility_table(CriterionReport& r, const std::string& preset, const std::vector<double>& Ks,
                    const std::vector<double>& lp_expected, const std::vector<double>& target_col, double minutes,
                    std::uint64_t seed, bool check_floors) {
  const mob::Network net = mob::preset_network(preset);
  const auto names = reachable_names(net);
  auto lp = mob::reference_lp_solve(net, 1.0);
  r.checks.push_back({"LP feasible", lp.feasible ? 1.0 : 0.0, "1", lp.feasible});
  auto lpy = reachable(net, lp.y);
  for (std::size_t k = 0; k < lpy.size(); ++k) r.checks.push_back(near_abs("LP y " + names[k], lpy[k], lp_expected[k], 1e-6));
  std::vector<double> gaps;
  for (double K : Ks) {
    auto cfg = mobility_config(preset, K, minutes, seed, preset + "/K=" + fmt(K));
    auto s = mob::run_mobility(cfg, &r.metrics);
    auto y = reachable(net, s.y);
    double gap = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) gap += std::abs(y[k] - lpy[k]);
    gaps.push_back(gap);
    r.metrics.record("summary/" + preset, 0, "lp_gap", "K=" + fmt(K), gap);
    if (K == Ks.back())
      for (std::size_t k = 0; k < y.size(); ++k)
        r.checks.push_back(near_rel("online y " + names[k] + " at K=" + fmt(K), y[k], target_col[k], 0.15));
    if (check_floors)
      for (std::size_t j = 0; j < net.routes.size(); ++j)
        if (net.routes[j].floor > 0)
          r.checks.push_back(at_least("f " + net.routes[j].name + " at K=" + fmt(K), s.f[j], net.routes[j].floor - 0.01));
  }
  for (std::size_t k = 1; k < gaps.size(); ++k)
    r.checks.push_back(at_most("L1 gap to LP at K=" + fmt(Ks[k]) + " vs K=" + fmt(Ks[k - 1]), gaps[k], gaps[k - 1]));
}

void criterion_mobility_exp1(CriterionReport& r, std::uint64_t seed) {
  mobility_table(r, "exp1", {150, 300, 600}, {15, 25, 5, 25}, {15.8, 24.2, 5.97, 24.03}, 100000, seed, false);
}

void criterion_mobility_exp2(CriterionReport& r, std::uint64_t seed) {
  mobility_table(r, "exp2", {150, 450, 900}, {8.5, 14.5, 5.5, 14.5, 5.5, 14.5, 8.5, 14.5},
                 {8.51, 14.49, 5.4, 14.6, 5.378, 14.622, 8.372, 14.628}, 100000, seed, true);
}

void criterion_mobility_illustrative(CriterionReport& r, std::uint64_t seed) {
  const mob::Network net = mob::preset_network("illustrative");
  bool forced_ok = mob::supportability_check(net, std::vector<double>{0.5, 0.5});
  bool free_ok = mob::supportability_check(net);
  r.checks.push_back({"supportable with f=(0.5,0.5)", forced_ok ? 1.0 : 0.0, "0", !forced_ok});
  r.checks.push_back({"supportable with free f", free_ok ? 1.0 : 0.0, "1", free_ok});
  auto forced = mobility_config("illustrative", 100, 4000, seed, "illustrative/forced");
  forced.forced_cycle = {"L", "R"};
  auto sf = mob::run_mobility(forced, &r.metrics);
  r.checks.push_back(above("forced: S1 queue slope over final half (pkts/min)", sf.source_q_slope[0], 0.0));
  auto ctl = mobility_config("illustrative", 100, 4000, seed, "illustrative/free");
  auto sc = mob::run_mobility(ctl, &r.metrics);
  r.checks.push_back(below("free: max source queue final half / first half", sc.max_source_q_last / sc.max_source_q_first, 2.0));
}

// ---- ICN ---------------------------------------------------------------------

const double kGamma = 0.7;
const double kEps = 0.05;

IcnSummary icn_run(const Json& j, MetricsSink& sink) { return run_icn(icn_config_from_json(j), &sink); }

void criterion_icn_delay(CriterionReport& r, std::uint64_t seed) {
  const int Ncs[] = {5, 10, 20};
  std::vector<double> bp, sr;
  for (int Nc : Ncs) {
    auto s = icn_run(icn_delay_scenario("bp", Nc, seed), r.metrics);
    bp.push_back(s.flows[0].mean_pickup_delay);
    auto b = bpsr_delay_bounds(Nc, 200, kGamma, kEps);
    r.checks.push_back(at_least("BP pickup delay N_c=" + std::to_string(Nc) + " vs lower bound", bp.back(), b.bp_lower));
  }
  r.checks.push_back(at_least("BP delay(20)/delay(5)", bp[2] / bp[0], 3.0));
  for (int Nc : Ncs) {
    auto s = icn_run(icn_delay_scenario("bpsr", Nc, seed), r.metrics);
    sr.push_back(s.flows[0].mean_pickup_delay);
    auto b = bpsr_delay_bounds(Nc, 200, kGamma, kEps);
    r.checks.push_back(at_most("BP+SR pickup delay N_c=" + std::to_string(Nc), sr.back(), b.bpsr_upper));
  }
  auto [mn, mx] = std::minmax_element(sr.begin(), sr.end());
  r.checks.push_back(below("BP+SR delay spread (max-min)/min", (*mx - *mn) / *mn, 0.25));
}

void criterion_icn_locality(CriterionReport& r, std::uint64_t seed) {
  const double T = 200, tenth = 0.1 * T;
  for (int Nc : {5, 10, 20}) {
    auto s = icn_run(icn_delay_scenario("bpsr", Nc, seed), r.metrics);
    std::string n = " N_c=" + std::to_string(Nc);
    r.checks.push_back(at_most("locality violations" + n, static_cast<double>(s.locality_violations), 0));
    r.checks.push_back(below("max internal type-I queue" + n, s.max_internal_q, tenth));
    r.checks.push_back(above("max source u" + n, s.max_source_u, tenth));
    r.checks.push_back(above("max gateway/mobile backlog" + n, std::max(s.max_gateway_backlog, s.max_mobile_backlog), tenth));
  }
}

void criterion_icn_rates(CriterionReport& r, std::uint64_t seed) {
  const std::pair<double, double> Ks[] = {{200, 200}, {800, 200}, {400, 200}};
  for (auto [K1, K2] : Ks) {
    std::string n = " K=(" + fmt(K1) + "," + fmt(K2) + ")";
    double o1 = K1 / (2 * (K1 + K2)), o2 = K2 / (K1 + K2);
    auto s = icn_run(icn_rate_scenario("two_scale", K1, K2, 0, 3000000, seed), r.metrics);
    double x1 = s.flows[0].admitted_rate, x2 = s.flows[1].admitted_rate;
    r.checks.push_back(near_rel("two-scale x1" + n, x1, o1, 0.15));
    r.checks.push_back(near_rel("two-scale x2" + n, x2, o2, 0.15));
    r.checks.push_back(near_rel("two-scale x2/x1" + n, x2 / x1, o2 / o1, 0.20));
    auto b = icn_run(icn_rate_scenario("bp", K1, K2, 0, 1000000, seed), r.metrics);
    r.checks.push_back(below("traditional BP x1 / optimum" + n, b.flows[0].admitted_rate / o1, 0.5));
  }
}

void criterion_icn_shadow(CriterionReport& r, std::uint64_t seed) {
  auto plain = icn_run(icn_rate_scenario("two_scale", 200, 200, 0, 3000000, seed), r.metrics);
  auto shadow = icn_run(icn_rate_scenario("two_scale", 200, 200, 1, 3000000, seed), r.metrics);
  double d0 = plain.flows[0].mean_delay, d1 = shadow.flows[0].mean_delay;
  r.metrics.record("summary/shadow", 0, "delay_no_shadow", "1.100->2.100", d0);
  r.metrics.record("summary/shadow", 0, "delay_shadow", "1.100->2.100", d1);
  r.checks.push_back(at_least("inter-cluster delay no-shadow / shadow", d1 > 0 ? d0 / d1 : 0.0, 5.0));
  const auto& f = shadow.flows[0];
  r.checks.push_back(at_least("useful (blue) / admitted", f.admitted_rate > 0 ? f.blue_admitted_rate / f.admitted_rate : 0.0, 0.6));
}

// ---- TCP-RLC -----------------------------------------------------------------

rlc::RlcConfig rlc_config(std::uint64_t seed, const std::string& run_id) {
  Json j = default_scenario("tcp_rlc");
  j["seed"] = seed;
  j["run_id"] = run_id;
  return rlc::rlc_config_from_json(j);
}

void criterion_rlc_multipath(CriterionReport& r, std::uint64_t seed) {
  std::vector<double> good;
  double bound = 0.0;
  for (int M : {1, 2, 4, 8}) {
    auto c = rlc_config(seed, "rlc/M=" + std::to_string(M));
    c.paths = M;
    bound = 0.8 * c.channel.mean() * c.total_capacity;
    good.push_back(rlc::run_rlc(c, &r.metrics).goodput);
    auto p = c;
    p.run_id = "rlc-plain/M=" + std::to_string(M);
    p.coded = false;
    p.redundancy = 0;
    double g = rlc::run_rlc(p, &r.metrics).goodput;
    r.checks.push_back(below("plain AIMD goodput M=" + std::to_string(M), g, 0.3 * c.total_capacity));
  }
  for (std::size_t k = 1; k < good.size(); ++k)
    r.checks.push_back(at_least("goodput M=" + std::to_string(1 << k) + " vs M=" + std::to_string(1 << (k - 1)), good[k], good[k - 1]));
  r.checks.push_back(at_least("goodput M=8 (pkts/RTT)", good.back(), bound));
}

void criterion_aimd_oracle(CriterionReport& r, std::uint64_t seed) {
  for (double f : {0.3, 0.1, 0.01}) {
    auto c = rlc_config(seed, "chain/f=" + fmt(f));
    c.variant = "aimd_chain";
    c.slots = 10000000;
    c.metrics_every = 100000;
    c.chain_f_eff = f;
    double sim = rlc::run_rlc(c, &r.metrics).mean_W;
    double oracle = rlc::steady_state_oracle(std::vector<double>(c.w_max, f), c.w_max).mean;
    r.checks.push_back(near_rel("mean W at f=" + fmt(f), sim, oracle, 0.05));
  }
}

void criterion_analytic(CriterionReport& r, std::uint64_t seed) {
  const double rho = 1.2;
  double worst = 0.0, worst_bound = -1e300;
  int solved = 0, idx = 0;
  for (int M : {1, 2, 4, 8, 16})
    for (int C : {10, 40, 73, 200, 1000})
      for (double p1 : {0.1, 0.3}) {
        auto prof = rlc::ChannelProfile::bimodal(p1, 0.1);
        auto b = rlc::solve_beta(M, C, rho, prof);
        double lb = rlc::throughput_lower_bound(M, C, rho, prof);
        double cap = prof.mean() * M * C / (rho * rho);
        worst_bound = std::max(worst_bound, lb - cap);
        if (b.beta) {
          ++solved;
          worst = std::max(worst, std::abs(rlc::beta_residual(*b.beta, M, C, rho, prof)) * *b.beta);
        }
        r.metrics.record("analytic", idx++, "bound", "M=" + std::to_string(M) + ",C=" + std::to_string(C) + ",p1=" + fmt(p1), lb);
      }
  r.metrics.record("analytic", idx, "solved", "grid", solved);
  r.checks.push_back(below("worst relative beta residual over solved grid points", worst, 1e-8));
  r.checks.push_back(at_most("max over grid of bound - E[P]MC/rho^2", worst_bound, 0.0));
  CounterRng rng(seed, "analytic/profiles");
  double worst_l = 0.0;
  for (int k = 0; k < 20; ++k) {
    rlc::ChannelProfile prof;
    int n = 2 + static_cast<int>(rng.below(3));
    double tot = 0.0;
    for (int i = 0; i < n; ++i) {
      prof.levels.push_back({0.05 + 0.95 * rng.uniform(), 0.05 + rng.uniform()});
      tot += prof.levels.back().prob;
    }
    for (auto& l : prof.levels) l.prob /= tot;
    worst_l = std::max(worst_l, rlc::rate_function_lprime(1.0 - prof.mean(), prof));
  }
  r.checks.push_back(below("max l'(1 - E[P]) over 20 random profiles", worst_l, 1e-9));
}

using Runner = std::function<void(CriterionReport&, std::uint64_t)>;

Runner runner_for(int id) {
  switch (id) {
    case 1: return criterion_mobility_exp1;
    case 2: return criterion_mobility_exp2;
    case 3: return criterion_mobility_illustrative;
    case 4: return criterion_icn_delay;
    case 5: return criterion_icn_locality;
    case 6: return criterion_icn_rates;
    case 7: return criterion_icn_shadow;
    case 8: return criterion_rlc_multipath;
    case 9: return criterion_aimd_oracle;
    case 10: return criterion_analytic;
  }
  throw ScenarioError("criterion " + std::to_string(id) + " has no standalone runner");
}

}  // namespace

Json icn_delay_scenario(const std::string& mode, int Nc, std::uint64_t seed) {
  Json j = default_scenario("icn");
  j["run_id"] = "delay/" + mode + "/Nc=" + std::to_string(Nc);
  j["seed"] = seed;
  j["horizon"] = 200000;
  j["metrics_every"] = 2000;
  j["topology"]["n_left"] = Nc;
  j["topology"]["n_right"] = 2;
  j["topology"]["directed"] = true;
  j["interference"]["kind"] = "unconstrained";
  auto& a = j["algorithm"];
  a["mode"] = mode;
  a["T"] = 200;
  a["R"] = 400;
  a["eta"] = 1;
  j["flows"] = Json::array({{{"source", "1.100"}, {"destination", "2.100"}, {"rate", 1.0 - kGamma},
                             {"rate_control", false}, {"K", 1.0}}});
  return j;
}

Json icn_rate_scenario(const std::string& mode, double K1, double K2, int red_per_batch, std::int64_t horizon,
                       std::uint64_t seed) {
  Json j = default_scenario("icn");
  j["run_id"] = "rates/" + mode + "/K=" + fmt(K1) + "," + fmt(K2) + "/red=" + std::to_string(red_per_batch);
  j["seed"] = seed;
  j["horizon"] = horizon;
  j["metrics_every"] = horizon / 100;
  auto& a = j["algorithm"];
  a["mode"] = mode;
  a["T"] = 1000;
  a["R"] = 1300;
  a["beta"] = 20.0;
  a["kappa"] = 3;
  a["shadow_red_per_batch"] = red_per_batch;
  j["flows"][0]["K"] = K1;
  j["flows"][1]["K"] = K2;
  return j;
}

CriterionReport run_criterion(int id, std::uint64_t seed) {
  CriterionReport r;
  r.id = id;
  for (const auto& e : experiment_ids())
    if (e.id == id) {
      r.key = e.key;
      r.budget_seconds = e.budget_seconds;
    }
  auto run = runner_for(id);
  auto t0 = std::chrono::steady_clock::now();
  run(r, seed);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

CriterionReport check_determinism(const std::vector<CriterionReport>& first, std::uint64_t seed) {
  CriterionReport r;
  r.id = 11;
  r.key = "determinism";
  r.budget_seconds = 1e9;
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& f : first) {
    CriterionReport again = run_criterion(f.id, seed);
    bool same = again.metrics.to_csv() == f.metrics.to_csv();
    r.checks.push_back({"criterion " + std::to_string(f.id) + " CSV identical on re-run (" +
                            std::to_string(f.metrics.size()) + " rows)",
                        same ? 1.0 : 0.0, "1", same});
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string summary_line(const CriterionReport& r) {
  std::ostringstream os;
  int failed = 0;
  for (const auto& c : r.checks) failed += c.pass ? 0 : 1;
  os << "criterion " << r.id << " " << r.key << ": " << (r.pass() ? "PASS" : "FAIL") << " (" << r.checks.size() - failed
     << "/" << r.checks.size() << " checks, " << fmt(r.seconds) << " s";
  if (r.budget_seconds < 1e8) os << ", budget " << fmt(r.budget_seconds) << " s";
  os << ")";
  return os.str();
}

std::string details(const CriterionReport& r) {
  std::ostringstream os;
  for (const auto& c : r.checks)
    os << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.what << ": measured " << fmt(c.measured) << ", expected "
       << c.expected << "\n";
  if (r.budget_seconds < 1e8 && r.seconds > r.budget_seconds)
    os << "  [FAIL] runtime " << fmt(r.seconds) << " s over budget " << fmt(r.budget_seconds) << " s\n";
  return os.str();
}

}  // namespace netlab
