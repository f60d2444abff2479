#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netlab/bp.hpp"
#include "netlab/metrics.hpp"
#include "netlab/scenario.hpp"
#include "netlab/topology.hpp"

namespace netlab {

// ---- Markov mobility ----------------------------------------------------

using Matrix = std::vector<std::vector<double>>;

// Rows must be stochastic and the chain irreducible; throws otherwise.
// Periodic chains (a two-gateway shuttle) are accepted.
void validate_chain(const Matrix& P);
// Solves pi P = pi, sum pi = 1 by elimination (works for periodic chains).
std::vector<double> stationary_distribution(const Matrix& P);
// Next state given a uniform draw in [0,1).
int mobility_step(const Matrix& P, int current, double uniform01);
// "shuttle": i -> i+1 mod n. "forward"/"backward": 0.8 on, 0.1 stay, 0.1 back.
Matrix chain_preset(const std::string& name, int n);
// Mean gap between consecutive contact slots; a Theta(T) estimate of T.
double estimate_super_slot(const std::vector<std::int64_t>& contact_slots);

// ---- two-scale operations -------------------------------------------------

// argmin over (i, j) of u_s[i] + u_gg[i][j] + u_d[j]; lowest (i, j) on ties.
std::pair<int, int> select_gateways(const std::vector<double>& u_s, const Matrix& u_gg,
                                    const std::vector<double>& u_d);
// Moves min(eta, available) iff u_tau / K > q (strict).
int transfer_source(double u_tau, double q, double K, int eta, std::size_t available);
int transfer_destination(double u_tau, double q, double K, int eta, std::size_t available);

struct GatewayBalance {
  int commodity = -1;  // l_{g1,g2}
  double theta = 0.0;
};
// l = argmax_l (u1[l] - u2[l]); theta = that difference / K.
GatewayBalance gateway_balance(const std::map<int, double>& u1, const std::map<int, double>& u2, double K);
int transfer_gateway_balance(const GatewayBalance& b, double q, int eta, std::size_t available);

struct Exchange {
  int up_commodity = -1;    // mobile -> gateway
  std::size_t up = 0;
  int down_commodity = -1;  // gateway -> mobile
  std::size_t down = 0;
};
// Each direction picks the commodity with the largest positive differential
// and moves min(R, length) packets; zero when no differential is positive.
Exchange mobile_gateway_exchange(const std::map<int, double>& u_mobile, const std::map<int, double>& u_gateway,
                                 std::size_t R);

double advertise_gateway_queue(double hq, double T);
// Moves min(eta, hq) iff hq / T >= q (non-strict).
int destination_gateway_release(double hq, double q, double T, int eta);
// Blue first, red only with leftover budget.
std::pair<int, int> shadow_serve(int blue, int red, int budget);
// A mobile never hands a packet back to the gateway it came from.
bool loop_prevention_filter(int last_gateway, int candidate);

struct DelayBounds {
  double bp_lower = 0.0;
  double bpsr_upper = 0.0;
};
DelayBounds bpsr_delay_bounds(int Nc, double T, double gamma, double eps);

// ---- simulator ----------------------------------------------------------

enum class IcnMode { Traditional, Bpsr, TwoScale };
IcnMode parse_icn_mode(const std::string& s);

struct IcnFlowSpec {
  std::string source;
  std::string destination;
  double rate = 0.0;  // pkts/slot for uncontrolled flows
  bool rate_control = false;
  double K = 1.0;
};

struct IcnChainSpec {
  std::string preset;  // empty: use transition
  Matrix transition;
  int initial = 0;
};

struct IcnConfig {
  std::string run_id = "icn";
  std::uint64_t seed = 1;
  std::int64_t horizon = 0;
  std::int64_t metrics_every = 0;
  TopologySpec topology;
  std::string interference = "greedy";
  std::vector<std::vector<std::string>> interference_sets;  // "a->b" link names
  IcnMode mode = IcnMode::TwoScale;
  std::int64_t T = 1000;
  std::int64_t T_estimate = 0;  // 0: use T
  int R = 1000;
  int eta = 10;
  double beta = 1.0;
  int kappa = 3;
  int decision_interval = 1;
  double rate_filter = 0.999;
  int shadow_red_per_batch = 0;
  bool loop_prevention = true;
  bool regulated = false;
  double regulated_delta = 0.1;
  bool check_invariants = true;
  std::vector<IcnChainSpec> mobility;
  std::vector<IcnFlowSpec> flows;
};

IcnConfig icn_config_from_json(const Json& j);

struct IcnFlowStats {
  double admitted_rate = 0.0;       // pkts/slot over the final half
  double blue_admitted_rate = 0.0;
  double delivered_rate = 0.0;
  double mean_delay = 0.0;          // end-to-end, blue packets delivered in the final half
  double mean_pickup_delay = 0.0;   // creation to first mobile pickup, final half
  std::int64_t delivered = 0;
  std::int64_t picked = 0;
  double x_estimate = 0.0;
};

struct IcnSummary {
  std::vector<IcnFlowStats> flows;
  std::int64_t slots = 0;
  std::int64_t locality_violations = 0;  // internal q_n^c >= hop(n, c) + 1, any slot
  double max_internal_q = 0;             // type-I at internal nodes, whole run
  double max_source_u = 0;               // type-II at sources (BP+SR)
  double max_gateway_backlog = 0;        // largest single gateway queue
  double max_mobile_backlog = 0;
  std::vector<std::vector<std::int64_t>> contacts;  // [mobile][super slot]: gateway node met
};

// Runs one scenario; records to sink when given. Throws InvariantViolation.
IcnSummary run_icn(const IcnConfig& cfg, MetricsSink* sink = nullptr);

}  // namespace netlab
