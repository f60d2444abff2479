#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netlab/metrics.hpp"
#include "netlab/scenario.hpp"

namespace netlab::mob {

struct Visit {
  std::string node;
  int count = 1;
};

struct RouteSpec {
  std::string name;
  std::vector<Visit> visits;  // contact order
  double minutes = 1.0;
  double cost = 0.0;          // b_j
  double floor = 0.0;         // surveillance floor p_j

  int contacts_with(const std::string& node) const;
  int total_contacts() const;
};

struct FlowSpec {
  std::string source;
  std::string destination;
  double rate_per_min = 0.0;
  std::vector<double> pickup_cost;  // a_{l,j}, one per route
};

// Routes, flows and per-contact budgets; rates are per minute.
struct Network {
  std::vector<RouteSpec> routes;
  std::vector<FlowSpec> flows;
  int eta_pickup = 100;
  int eta_dropoff = 100;

  void validate() const;
  std::vector<std::string> destinations() const;  // sorted, unique
  int destination_index(const std::string& node) const;
  // Pickup rate of flow i's source on route j, pkts/min.
  double P(std::size_t i, std::size_t j) const;
  // Drop-off rate to destination d (index into destinations()) on route j.
  double D(std::size_t d, std::size_t j) const;
};

// Presets: "exp1", "exp2", "illustrative".
Network preset_network(const std::string& name);

// ---- controller operations --------------------------------------------------

// argmin_j K a[j] + q[j] over routes with P[j] > 0; lowest j on ties.
int stationary_enqueue(const std::vector<double>& a, const std::vector<double>& q, const std::vector<double>& P,
                       double K);
// 1 iff P > 0 and q - Q_dest > 0.
bool pickup_decision(double P, double q, double Q_dest);

struct SelectionInput {
  std::vector<std::vector<double>> q;  // [flow][route], possibly stale
  std::vector<double> Q;               // [destination]
  std::vector<double> w;               // deficit per route
  std::vector<std::vector<double>> P;  // [flow][route]
  std::vector<std::vector<double>> D;  // [destination][route]
  std::vector<int> flow_dest;          // destination index of each flow
  std::vector<double> b;
  std::vector<double> floors;
  double K = 1.0;
  double kappa = 1.0;
};

struct Selection {
  int route = 0;
  std::vector<double> scores;
  std::vector<std::vector<char>> delta;  // [flow][route]
};
Selection select_route(const SelectionInput& in);

// [q + in - out]^+
double queue_update(double q, double in, double out);
// [w + T p - 1{chosen} T]^+
double update_deficit(double w, bool chosen, double T, double p);

// Last observed q per (flow, route), stamped with the selection index of the contact.
class StaleSnapshot {
 public:
  StaleSnapshot(std::size_t flows, std::size_t routes);
  void observe(std::size_t flow, const std::vector<double>& q_row, std::int64_t k);
  double value(std::size_t flow, std::size_t route) const { return v_.at(flow).at(route); }
  std::int64_t stamp(std::size_t flow) const { return stamp_.at(flow); }  // -1: never seen
  const std::vector<std::vector<double>>& values() const { return v_; }

 private:
  std::vector<std::vector<double>> v_;
  std::vector<std::int64_t> stamp_;
};

// ---- LP reference -----------------------------------------------------------

struct LpResult {
  bool feasible = false;
  std::vector<double> f;               // time fraction per route
  std::vector<std::vector<double>> y;  // [flow][route], pkts/min
  double cost = 0.0;                   // K (sum a y + sum b f)
};

// Minimum-cost (f, y) with z = delta f linearisation. Among optima, returns
// the one with the smallest max f_j so the answer is unique where it matters.
LpResult reference_lp_solve(const Network& net, double K);
// Feasibility only; `forced_f` pins every f_j.
bool supportability_check(const Network& net, const std::optional<std::vector<double>>& forced_f = std::nullopt);

// ---- simulator --------------------------------------------------------------

struct MobConfig {
  std::string run_id = "mobility";
  std::uint64_t seed = 1;
  int slots_per_minute = 60;
  double minutes = 6000;
  std::int64_t metrics_every = 50;  // selections
  double K = 600.0;
  double kappa = 0.0;  // 0: eta_max / T_max
  bool practical = true;
  std::string arrivals = "poisson";  // poisson or fluid
  std::vector<std::string> forced_cycle;
  Network net;
};

MobConfig mob_config_from_json(const Json& j);

struct MobSummary {
  std::vector<std::vector<double>> y;  // admitted split [flow][route], pkts/min, final half
  std::vector<double> f;               // time fraction per route, final half
  double cost = 0.0;                   // K (sum a y + sum b f), final half
  double max_source_q_first = 0.0;     // per-source total, first half
  double max_source_q_last = 0.0;
  std::vector<double> source_q_slope;  // per flow, pkts/min over the final half
  double max_Q = 0.0;
  double max_w = 0.0;
  std::int64_t selections = 0;
  std::int64_t delivered = 0;
  std::int64_t admitted = 0;
};

MobSummary run_mobility(const MobConfig& cfg, MetricsSink* sink = nullptr);

}  // namespace netlab::mob
