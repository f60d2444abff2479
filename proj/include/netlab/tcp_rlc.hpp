#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "netlab/metrics.hpp"
#include "netlab/rng.hpp"
#include "netlab/scenario.hpp"

namespace netlab::rlc {

// ---- AIMD ---------------------------------------------------------------

int window_step(int W, bool success);       // W+1, or ceil(W/2)
int path_window_step(int w, bool success);  // same arithmetic per path
double f_eff(double f_aqm, double f_chan);  // f + fc - f*fc

// ---- channel ------------------------------------------------------------

struct ChannelLevel {
  double p = 1.0;     // delivery probability
  double prob = 1.0;  // stationary weight
};

struct ChannelProfile {
  std::vector<ChannelLevel> levels;  // ascending p after validate()
  double hold_lo_ms = 100.0;
  double hold_hi_ms = 200.0;

  void validate() const;
  double mean() const;   // E[P]
  double p_min() const;
  static ChannelProfile bimodal(double p1, double prob1, double p2 = 1.0);
};

struct ChannelState {
  double p = 1.0;
  double remaining_ms = 0.0;
};

ChannelState channel_init(const ChannelProfile& prof, CounterRng& rng);
// Consumes `elapsed_ms`; each expiry redraws the level and the hold time.
ChannelState channel_evolve(ChannelState s, const ChannelProfile& prof, CounterRng& rng, double elapsed_ms);
int channel_transmit(double p, int n, CounterRng& rng);

// ---- coding ---------------------------------------------------------------

inline constexpr std::uint32_t kField = 8191;

std::uint32_t gf_add(std::uint32_t a, std::uint32_t b);
std::uint32_t gf_mul(std::uint32_t a, std::uint32_t b);
std::uint32_t gf_inv(std::uint32_t a);  // a != 0
// Rank over GF(8191); rows are reduced in place.
int gf_rank(std::vector<std::vector<std::uint32_t>> rows);

// Recoverable iff missing data <= coded packets received.
bool decode_abstract(int W, int data_received, int coded_received);
// Recoverable iff unit rows of the received data plus coded vectors span GF^W.
bool decode_concrete(int W, const std::vector<int>& data_received,
                     const std::vector<std::vector<std::uint32_t>>& coded);
std::vector<std::uint32_t> random_coefficients(int W, CounterRng& rng);

// ---- router ---------------------------------------------------------------

// High-priority FIFO (tail drop) and low-priority LIFO (oldest dropped),
// each holding at most `cap` packets; tags are block ids.
class RouterQueues {
 public:
  explicit RouterQueues(int cap = 0) : cap_(cap) {}
  void push_high(std::int64_t tag);
  void push_low(std::int64_t tag);
  struct Sent {
    std::int64_t tag;
    bool high;
  };
  // Serves up to C packets, high first; low pops newest first.
  std::vector<Sent> serve(int C);
  void clear();
  std::size_t high_size() const { return hi_.size(); }
  std::size_t low_size() const { return lo_.size(); }
  std::int64_t dropped() const { return dropped_; }

 private:
  int cap_;
  std::deque<std::int64_t> hi_, lo_;
  std::int64_t dropped_ = 0;
};

struct RouterServe {
  int high = 0;
  int low = 0;
  std::vector<std::int64_t> low_tags;  // in transmit order
};
// Pushes h high and l low packets (low tags 0..l-1 in arrival order) into
// uncapped queues and serves C.
RouterServe router_serve(int C, int h, int l);

// ---- receiver -------------------------------------------------------------

enum class AckKind { Cumulative, Pseudo, Duplicate };
std::string to_string(AckKind k);

struct AckEvent {
  AckKind kind;
  int ack_through;  // data packets 1..ack_through acknowledged
};

// One coding block at the destination, abstract-rank model.
class RlcReceiver {
 public:
  explicit RlcReceiver(int W);
  std::vector<AckEvent> on_data(int index);  // 1-based
  std::vector<AckEvent> on_coded();
  bool decoded() const { return decoded_; }
  int next_expected() const { return next_; }

 private:
  bool try_decode();
  int W_;
  std::vector<char> have_;
  int data_ = 0;
  int coded_ = 0;
  int next_ = 1;
  bool decoded_ = false;
};

double rtt_estimator(double measured, double sample);  // 0.9 old + 0.1 new
inline double rto(double measured) { return 3.0 * measured; }

// ---- analytic oracles -------------------------------------------------------

inline constexpr double kRateSentinel = 1e6;

// Legendre transform of log E[exp(theta (1 - P))]; kRateSentinel outside the support.
double rate_function_lprime(double a, const ChannelProfile& prof);

enum class BetaRegime { Solved, NoDiversity, FullDiversity };
std::string to_string(BetaRegime r);

struct BetaSolution {
  BetaRegime regime = BetaRegime::Solved;
  std::optional<double> beta;  // set when Solved
  double lo = 0.0;             // p1 MC / rho^2
  double hi = 0.0;             // E[P] MC / rho^2
};
// Residual 1/beta - exp(-M l'(1 - rho beta / (M C))), decreasing in beta.
double beta_residual(double beta, int M, double C, double rho, const ChannelProfile& prof);
BetaSolution solve_beta(int M, double C, double rho, const ChannelProfile& prof);

double throughput_lower_bound(int M, double C, double rho, const ChannelProfile& prof, double delta1 = 0.0,
                              double delta2 = 0.0);

struct SteadyState {
  std::vector<double> pi;  // pi[w-1] for w = 1..W_max
  double mean = 0.0;
  int iterations = 0;
};
// f[w-1] = drop probability at window w. Power iteration to 1e-12 (L1).
SteadyState steady_state_oracle(const std::vector<double>& f, int W_max);

// Exact P[sum of M*C channel successes < w] for w = 0..M*C, where each
// path draws its level independently and sends C packets.
std::vector<double> f_chan_exact(int M, int C, const ChannelProfile& prof);
// Monte Carlo estimate of the same table; OpenMP over trials when built
// with it, serial otherwise. Deterministic for a given seed.
std::vector<double> f_chan_monte_carlo(int M, int C, const ChannelProfile& prof, std::int64_t trials,
                                       std::uint64_t seed);
std::vector<double> f_chan_monte_carlo_serial(int M, int C, const ChannelProfile& prof, std::int64_t trials,
                                              std::uint64_t seed);

// AQM marking with beta from solve_beta; f_chan from f_chan_exact.
// Marks never go negative.
std::vector<double> aqm_marking(const std::vector<double>& f_chan, const BetaSolution& b, int W_max);

// ---- multipath controller -------------------------------------------------

struct PathPlan {
  int data = 0;   // high priority
  int coded = 0;  // low priority
};

struct ControllerStep {
  int W = 1;
  std::vector<int> w;
  std::vector<PathPlan> plan;
};

// Applies AIMD to W (decode outcome) and each w_l (path outcome), then plans
// the next block: path l carries min(w_l, remaining of W) data and r*w_l coded.
ControllerStep multipath_controller_step(int W, const std::vector<int>& w, const std::vector<bool>& path_ok,
                                         bool decoded, int r, int W_max = 1 << 30);
std::vector<PathPlan> plan_block(int W, const std::vector<int>& w, int r);

// ---- simulators -----------------------------------------------------------

struct RlcConfig {
  std::string run_id = "tcp_rlc";
  std::uint64_t seed = 1;
  std::string variant = "multipath";  // multipath, fixed_fec, aimd_chain
  std::int64_t slots = 20000;
  std::int64_t metrics_every = 100;
  int paths = 8;
  int total_capacity = 73;  // pkts per RTT over all paths
  int redundancy = 19;
  bool coded = true;
  bool carryover = true;
  double rtt_ms = 150.0;
  int rto_factor = 3;
  int w_max = 400;
  ChannelProfile channel = ChannelProfile::bimodal(0.1, 0.1);
  bool aqm = false;
  double rho = 1.2;
  std::int64_t fchan_trials = 0;  // 0: exact table
  double fec_fraction = 0.1;
  double fec_d_good = 0.05;
  double fec_d_bad = 0.15;
  double fec_p_good = 0.5;
  double chain_f_eff = 0.01;
};

RlcConfig rlc_config_from_json(const Json& j);

struct RlcSummary {
  double goodput = 0.0;            // data pkts decoded per slot
  double goodput_fraction = 0.0;   // goodput / total capacity
  double mean_W = 0.0;
  double mean_path_w = 0.0;
  double delivered_fraction = 0.0; // raw packets received / capacity
  double saturated_fraction = 0.0; // path-slots where the router sent C
  std::int64_t decode_failures = 0;
  std::int64_t timeouts = 0;
  std::int64_t slots = 0;
};

RlcSummary run_rlc(const RlcConfig& cfg, MetricsSink* sink = nullptr);

}  // namespace netlab::rlc
