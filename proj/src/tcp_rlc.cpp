#include "netlab/tcp_rlc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace netlab::rlc {

int window_step(int W, bool success) {
  if (W < 1) throw std::invalid_argument("window must be >= 1");
  return success ? W + 1 : (W + 1) / 2;
}

int path_window_step(int w, bool success) { return window_step(w, success); }

double f_eff(double f_aqm, double f_chan) {
  if (f_aqm < 0 || f_aqm > 1 || f_chan < 0 || f_chan > 1) throw std::invalid_argument("probabilities must be in [0,1]");
  return f_aqm + f_chan - f_aqm * f_chan;
}

// ---- channel ------------------------------------------------------------

void ChannelProfile::validate() const {
  if (levels.empty()) throw std::invalid_argument("channel profile has no levels");
  double s = 0.0;
  for (const auto& l : levels) {
    if (!(l.p > 0 && l.p <= 1)) throw std::invalid_argument("channel level p must be in (0,1]");
    if (l.prob < 0) throw std::invalid_argument("channel level weight must be >= 0");
    s += l.prob;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("channel level weights must sum to 1");
  if (!(hold_lo_ms > 0 && hold_hi_ms >= hold_lo_ms)) throw std::invalid_argument("hold time range invalid");
}

double ChannelProfile::mean() const {
  double m = 0.0;
  for (const auto& l : levels) m += l.p * l.prob;
  return m;
}

double ChannelProfile::p_min() const {
  double m = 1.0;
  for (const auto& l : levels)
    if (l.prob > 0) m = std::min(m, l.p);
  return m;
}

ChannelProfile ChannelProfile::bimodal(double p1, double prob1, double p2) {
  ChannelProfile c;
  c.levels = {{p1, prob1}, {p2, 1.0 - prob1}};
  return c;
}

namespace {

double draw_level(const ChannelProfile& prof, CounterRng& rng) {
  double u = rng.uniform(), acc = 0.0;
  for (const auto& l : prof.levels) {
    acc += l.prob;
    if (u < acc) return l.p;
  }
  return prof.levels.back().p;
}

}  // namespace

ChannelState channel_init(const ChannelProfile& prof, CounterRng& rng) {
  ChannelState s;
  s.p = draw_level(prof, rng);
  s.remaining_ms = rng.uniform(prof.hold_lo_ms, prof.hold_hi_ms);
  return s;
}

ChannelState channel_evolve(ChannelState s, const ChannelProfile& prof, CounterRng& rng, double elapsed_ms) {
  if (elapsed_ms < 0) throw std::invalid_argument("elapsed time must be >= 0");
  s.remaining_ms -= elapsed_ms;
  while (s.remaining_ms <= 0) {
    s.p = draw_level(prof, rng);
    s.remaining_ms += rng.uniform(prof.hold_lo_ms, prof.hold_hi_ms);
  }
  return s;
}

int channel_transmit(double p, int n, CounterRng& rng) {
  if (n < 0) throw std::invalid_argument("packet count must be >= 0");
  int got = 0;
  for (int i = 0; i < n; ++i) got += rng.bernoulli(p) ? 1 : 0;
  return got;
}

// ---- coding ---------------------------------------------------------------

std::uint32_t gf_add(std::uint32_t a, std::uint32_t b) { return (a + b) % kField; }

std::uint32_t gf_mul(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) % kField);
}

std::uint32_t gf_inv(std::uint32_t a) {
  if (a % kField == 0) throw std::domain_error("zero has no inverse");
  // Fermat: a^(p-2).
  std::uint32_t r = 1, b = a % kField;
  for (std::uint32_t e = kField - 2; e; e >>= 1) {
    if (e & 1) r = gf_mul(r, b);
    b = gf_mul(b, b);
  }
  return r;
}

int gf_rank(std::vector<std::vector<std::uint32_t>> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c] % kField == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[rank], rows[piv]);
    std::uint32_t inv = gf_inv(rows[rank][c]);
    for (auto& v : rows[rank]) v = gf_mul(v, inv);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == static_cast<std::size_t>(rank) || rows[r][c] == 0) continue;
      std::uint32_t f = rows[r][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] = (rows[r][k] + kField - gf_mul(f, rows[rank][k])) % kField;
    }
    ++rank;
  }
  return rank;
}

bool decode_abstract(int W, int data_received, int coded_received) {
  if (W < 0 || data_received < 0 || coded_received < 0 || data_received > W)
    throw std::invalid_argument("inconsistent block counts");
  return W - data_received <= coded_received;
}

bool decode_concrete(int W, const std::vector<int>& data_received, const std::vector<std::vector<std::uint32_t>>& coded) {
  std::vector<std::vector<std::uint32_t>> rows;
  for (int i : data_received) {
    if (i < 0 || i >= W) throw std::invalid_argument("data index out of block");
    std::vector<std::uint32_t> e(W, 0);
    e[i] = 1;
    rows.push_back(e);
  }
  for (const auto& c : coded) {
    if (static_cast<int>(c.size()) != W) throw std::invalid_argument("coefficient vector length differs from block");
    rows.push_back(c);
  }
  return gf_rank(rows) == W;
}

std::vector<std::uint32_t> random_coefficients(int W, CounterRng& rng) {
  std::vector<std::uint32_t> v(W);
  for (auto& x : v) x = static_cast<std::uint32_t>(rng.below(kField));
  return v;
}

// ---- router ---------------------------------------------------------------

void RouterQueues::push_high(std::int64_t tag) {
  if (cap_ > 0 && static_cast<int>(hi_.size()) >= cap_) {
    ++dropped_;
    return;
  }
  hi_.push_back(tag);
}

void RouterQueues::push_low(std::int64_t tag) {
  lo_.push_back(tag);
  if (cap_ > 0 && static_cast<int>(lo_.size()) > cap_) {
    lo_.pop_front();
    ++dropped_;
  }
}

std::vector<RouterQueues::Sent> RouterQueues::serve(int C) {
  if (C < 0) throw std::invalid_argument("capacity must be >= 0");
  std::vector<Sent> out;
  while (static_cast<int>(out.size()) < C) {
    if (!hi_.empty()) {
      out.push_back({hi_.front(), true});
      hi_.pop_front();
    } else if (!lo_.empty()) {
      out.push_back({lo_.back(), false});
      lo_.pop_back();
    } else {
      break;
    }
  }
  return out;
}

void RouterQueues::clear() {
  hi_.clear();
  lo_.clear();
}

RouterServe router_serve(int C, int h, int l) {
  if (C < 0 || h < 0 || l < 0) throw std::invalid_argument("negative router input");
  RouterQueues q;
  for (int i = 0; i < h; ++i) q.push_high(-1);
  for (int i = 0; i < l; ++i) q.push_low(i);
  RouterServe r;
  for (const auto& s : q.serve(C)) {
    if (s.high) {
      ++r.high;
    } else {
      ++r.low;
      r.low_tags.push_back(s.tag);
    }
  }
  return r;
}

// ---- receiver -------------------------------------------------------------

std::string to_string(AckKind k) {
  switch (k) {
    case AckKind::Cumulative: return "ack";
    case AckKind::Pseudo: return "pseudo_ack";
    case AckKind::Duplicate: return "dup_ack";
  }
  return "?";
}

RlcReceiver::RlcReceiver(int W) : W_(W), have_(W + 1, 0) {
  if (W < 1) throw std::invalid_argument("block size must be >= 1");
}

bool RlcReceiver::try_decode() {
  if (!decoded_ && decode_abstract(W_, data_, coded_)) {
    decoded_ = true;
    next_ = W_ + 1;
  }
  return decoded_;
}

std::vector<AckEvent> RlcReceiver::on_data(int index) {
  if (index < 1 || index > W_) throw std::invalid_argument("data index out of block");
  if (decoded_ || have_[index]) return {{AckKind::Duplicate, next_ - 1}};
  have_[index] = 1;
  ++data_;
  if (index == next_) {
    while (next_ <= W_ && have_[next_]) ++next_;
    try_decode();
    return {{AckKind::Cumulative, next_ - 1}};
  }
  if (try_decode()) return {{AckKind::Pseudo, index}, {AckKind::Cumulative, W_}};
  return {{AckKind::Pseudo, next_ - 1}};
}

std::vector<AckEvent> RlcReceiver::on_coded() {
  if (decoded_) return {{AckKind::Duplicate, next_ - 1}};
  ++coded_;
  if (try_decode()) return {{AckKind::Pseudo, W_}, {AckKind::Cumulative, W_}};
  return {{AckKind::Pseudo, next_ - 1}};
}

double rtt_estimator(double measured, double sample) {
  if (!(sample > 0)) throw std::invalid_argument("RTT sample must be positive");
  return 0.9 * measured + 0.1 * sample;
}

// ---- analytic oracles -------------------------------------------------------

namespace {

// log E[exp(theta X)] with X = 1 - P, via log-sum-exp.
double log_mgf(double theta, const ChannelProfile& prof) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& l : prof.levels)
    if (l.prob > 0) mx = std::max(mx, theta * (1.0 - l.p));
  double s = 0.0;
  for (const auto& l : prof.levels)
    if (l.prob > 0) s += l.prob * std::exp(theta * (1.0 - l.p) - mx);
  return mx + std::log(s);
}

double tilted_mean(double theta, const ChannelProfile& prof) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& l : prof.levels)
    if (l.prob > 0) mx = std::max(mx, theta * (1.0 - l.p));
  double num = 0.0, den = 0.0;
  for (const auto& l : prof.levels) {
    if (l.prob <= 0) continue;
    double w = l.prob * std::exp(theta * (1.0 - l.p) - mx);
    num += w * (1.0 - l.p);
    den += w;
  }
  return num / den;
}

}  // namespace

double rate_function_lprime(double a, const ChannelProfile& prof) {
  double xmin = 2.0, xmax = -1.0, wmin = 0.0, wmax = 0.0;
  for (const auto& l : prof.levels) {
    if (l.prob <= 0) continue;
    xmin = std::min(xmin, 1.0 - l.p);
    xmax = std::max(xmax, 1.0 - l.p);
  }
  for (const auto& l : prof.levels) {
    if (l.prob <= 0) continue;
    if (1.0 - l.p == xmin) wmin += l.prob;
    if (1.0 - l.p == xmax) wmax += l.prob;
  }
  const double eps = 1e-15;
  if (a < xmin - eps || a > xmax + eps) return kRateSentinel;
  if (xmax - xmin < eps) return 0.0;
  if (std::abs(a - xmin) <= eps) return -std::log(wmin);
  if (std::abs(a - xmax) <= eps) return -std::log(wmax);
  double lo = -1.0, hi = 1.0;
  while (tilted_mean(lo, prof) > a) lo *= 2.0;
  while (tilted_mean(hi, prof) < a) hi *= 2.0;
  for (int i = 0; i < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    double mid = 0.5 * (lo + hi);
    if (tilted_mean(mid, prof) < a) lo = mid;
    else hi = mid;
  }
  double th = 0.5 * (lo + hi);
  return std::max(0.0, th * a - log_mgf(th, prof));
}

std::string to_string(BetaRegime r) {
  switch (r) {
    case BetaRegime::Solved: return "solved";
    case BetaRegime::NoDiversity: return "no_diversity";
    case BetaRegime::FullDiversity: return "full_diversity";
  }
  return "?";
}

double beta_residual(double beta, int M, double C, double rho, const ChannelProfile& prof) {
  double a = 1.0 - rho * beta / (M * C);
  return 1.0 / beta - std::exp(-M * rate_function_lprime(a, prof));
}

BetaSolution solve_beta(int M, double C, double rho, const ChannelProfile& prof) {
  if (!(rho > 1) || M < 1 || C < 1) throw std::invalid_argument("need rho > 1, M >= 1, C >= 1");
  prof.validate();
  BetaSolution s;
  s.lo = prof.p_min() * M * C / (rho * rho);
  s.hi = prof.mean() * M * C / (rho * rho);
  double glo = beta_residual(s.lo, M, C, rho, prof);
  double ghi = beta_residual(s.hi, M, C, rho, prof);
  if (glo < 0) {
    s.regime = BetaRegime::NoDiversity;
    return s;
  }
  if (ghi > 0) {
    s.regime = BetaRegime::FullDiversity;
    return s;
  }
  double lo = s.lo, hi = s.hi;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    if (beta_residual(mid, M, C, rho, prof) > 0) lo = mid;
    else hi = mid;
  }
  double b = 0.5 * (lo + hi);
  // A sign change across the jump where l' leaves the support is not a root.
  if (std::abs(beta_residual(b, M, C, rho, prof)) > 1e-8 / b) {
    s.regime = BetaRegime::NoDiversity;
    return s;
  }
  s.regime = BetaRegime::Solved;
  s.beta = b;
  return s;
}

double throughput_lower_bound(int M, double C, double rho, const ChannelProfile& prof, double delta1, double delta2) {
  BetaSolution s = solve_beta(M, C, rho, prof);
  const double rho2 = rho * rho;
  const double nodiv = 0.75 * prof.p_min() * M * C / rho2 - 1.0;
  auto term = [&](double beta) {
    double fl = std::floor(beta);
    if (fl < 1) return -std::numeric_limits<double>::infinity();
    return beta * (1.0 - 3.0 / fl - 2.0 * (std::exp(-1.0) + delta2));
  };
  switch (s.regime) {
    case BetaRegime::NoDiversity: return nodiv;
    case BetaRegime::FullDiversity: return std::max(nodiv, term(s.hi));
    case BetaRegime::Solved: {
      double full = s.hi * (1.0 - 3.0 * delta1 - 2.0 * (std::exp(-1.0) + delta2));
      return std::max(nodiv, std::min(full, term(*s.beta)));
    }
  }
  return nodiv;
}

SteadyState steady_state_oracle(const std::vector<double>& f, int W_max) {
  if (W_max < 2) throw std::invalid_argument("W_max must be >= 2");
  if (static_cast<int>(f.size()) < W_max) throw std::invalid_argument("need f for every window 1..W_max");
  std::vector<double> pi(W_max, 1.0 / W_max), nx(W_max);
  SteadyState out;
  for (int it = 1; it <= 20000000; ++it) {
    std::fill(nx.begin(), nx.end(), 0.0);
    for (int w = 1; w <= W_max; ++w) {
      double m = pi[w - 1];
      if (m == 0.0) continue;
      double fw = f[w - 1];
      nx[std::min(w + 1, W_max) - 1] += m * (1.0 - fw);
      nx[(w + 1) / 2 - 1] += m * fw;
    }
    double diff = 0.0;
    for (int w = 0; w < W_max; ++w) diff += std::abs(nx[w] - pi[w]);
    pi.swap(nx);
    if (diff < 1e-12) {
      out.iterations = it;
      break;
    }
  }
  if (out.iterations == 0) throw std::runtime_error("steady state did not converge");
  out.pi = pi;
  for (int w = 1; w <= W_max; ++w) out.mean += w * pi[w - 1];
  return out;
}

std::vector<double> f_chan_exact(int M, int C, const ChannelProfile& prof) {
  if (M < 1 || C < 0) throw std::invalid_argument("need M >= 1, C >= 0");
  prof.validate();
  std::vector<double> path(C + 1, 0.0);
  for (const auto& l : prof.levels) {
    if (l.prob <= 0) continue;
    for (int k = 0; k <= C; ++k) {
      double lp;
      if (l.p >= 1.0) lp = k == C ? 0.0 : -std::numeric_limits<double>::infinity();
      else
        lp = std::lgamma(C + 1.0) - std::lgamma(k + 1.0) - std::lgamma(C - k + 1.0) + k * std::log(l.p) +
             (C - k) * std::log1p(-l.p);
      path[k] += l.prob * std::exp(lp);
    }
  }
  std::vector<double> dist{1.0};
  for (int m = 0; m < M; ++m) {
    std::vector<double> nd(dist.size() + C, 0.0);
    for (std::size_t i = 0; i < dist.size(); ++i)
      for (int k = 0; k <= C; ++k) nd[i + k] += dist[i] * path[k];
    dist.swap(nd);
  }
  std::vector<double> f(M * C + 1, 0.0);
  double cdf = 0.0;
  for (int w = 0; w <= M * C; ++w) {
    f[w] = std::min(1.0, cdf);
    cdf += dist[w];
  }
  return f;
}

namespace {

int mc_trial(int M, int C, const ChannelProfile& prof, std::uint64_t seed, std::int64_t i) {
  CounterRng rng(seed, static_cast<std::uint64_t>(i));
  int s = 0;
  for (int m = 0; m < M; ++m) {
    double p = draw_level(prof, rng);
    for (int k = 0; k < C; ++k) s += rng.bernoulli(p) ? 1 : 0;
  }
  return s;
}

std::vector<double> hist_to_f(const std::vector<std::int64_t>& hist, std::int64_t trials) {
  std::vector<double> f(hist.size(), 0.0);
  std::int64_t below = 0;
  for (std::size_t w = 0; w < hist.size(); ++w) {
    f[w] = static_cast<double>(below) / static_cast<double>(trials);
    below += hist[w];
  }
  return f;
}

}  // namespace

std::vector<double> f_chan_monte_carlo_serial(int M, int C, const ChannelProfile& prof, std::int64_t trials,
                                              std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  prof.validate();
  std::vector<std::int64_t> hist(M * C + 1, 0);
  for (std::int64_t i = 0; i < trials; ++i) ++hist[mc_trial(M, C, prof, seed, i)];
  return hist_to_f(hist, trials);
}

std::vector<double> f_chan_monte_carlo(int M, int C, const ChannelProfile& prof, std::int64_t trials,
                                       std::uint64_t seed) {
#ifdef _OPENMP
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  prof.validate();
  const int bins = M * C + 1;
  std::vector<std::int64_t> hist(bins, 0);
#pragma omp parallel
  {
    std::vector<std::int64_t> local(bins, 0);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < trials; ++i) ++local[mc_trial(M, C, prof, seed, i)];
#pragma omp critical
    for (int b = 0; b < bins; ++b) hist[b] += local[b];
  }
  return hist_to_f(hist, trials);
#else
  return f_chan_monte_carlo_serial(M, C, prof, trials, seed);
#endif
}

std::vector<double> aqm_marking(const std::vector<double>& f_chan, const BetaSolution& b, int W_max) {
  std::vector<double> f(W_max, 0.0);
  if (b.regime == BetaRegime::NoDiversity) return f;
  const bool solved = b.regime == BetaRegime::Solved;
  const double beta = solved ? *b.beta : b.hi;
  const double thr = solved ? std::floor(beta) : beta;
  const double target = (solved ? 2.0 : 1.0) / beta;
  for (int w = 1; w <= W_max; ++w) {
    if (w >= thr) {
      f[w - 1] = 1.0;
      continue;
    }
    double fc = w < static_cast<int>(f_chan.size()) ? f_chan[w] : 1.0;
    f[w - 1] = fc >= 1.0 ? 0.0 : std::clamp((target - fc) / (1.0 - fc), 0.0, 1.0);
  }
  return f;
}

// ---- multipath controller -------------------------------------------------

std::vector<PathPlan> plan_block(int W, const std::vector<int>& w, int r) {
  std::vector<PathPlan> plan(w.size());
  int rem = W;
  for (std::size_t l = 0; l < w.size(); ++l) {
    plan[l].data = std::min(w[l], rem);
    rem -= plan[l].data;
    plan[l].coded = r * w[l];
  }
  return plan;
}

ControllerStep multipath_controller_step(int W, const std::vector<int>& w, const std::vector<bool>& path_ok,
                                         bool decoded, int r, int W_max) {
  if (w.size() != path_ok.size()) throw std::invalid_argument("one outcome per path");
  if (w.empty()) throw std::invalid_argument("need at least one path");
  ControllerStep s;
  s.W = std::min(window_step(W, decoded), W_max);
  s.w.resize(w.size());
  for (std::size_t l = 0; l < w.size(); ++l) s.w[l] = std::min(path_window_step(w[l], path_ok[l]), W_max);
  s.plan = plan_block(s.W, s.w, r);
  return s;
}

// ---- simulators -----------------------------------------------------------

RlcConfig rlc_config_from_json(const Json& j) {
  RlcConfig c;
  c.run_id = j.at("run_id").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.variant = j.at("variant").get<std::string>();
  c.slots = j.at("slots").get<std::int64_t>();
  c.metrics_every = j.at("metrics_every").get<std::int64_t>();
  c.paths = j.at("paths").get<int>();
  c.total_capacity = j.at("total_capacity").get<int>();
  c.redundancy = j.at("redundancy").get<int>();
  c.coded = j.at("coded").get<bool>();
  c.carryover = j.at("carryover").get<bool>();
  c.rtt_ms = j.at("rtt_ms").get<double>();
  c.rto_factor = j.at("rto_factor").get<int>();
  c.w_max = j.at("w_max").get<int>();
  const Json& ch = j.at("channel");
  c.channel.levels.clear();
  for (const auto& l : ch.at("levels")) c.channel.levels.push_back({l.at("p").get<double>(), l.at("prob").get<double>()});
  std::sort(c.channel.levels.begin(), c.channel.levels.end(),
            [](const ChannelLevel& a, const ChannelLevel& b) { return a.p < b.p; });
  c.channel.hold_lo_ms = ch.at("hold_lo_ms").get<double>();
  c.channel.hold_hi_ms = ch.at("hold_hi_ms").get<double>();
  c.aqm = j.at("aqm").at("enabled").get<bool>();
  c.rho = j.at("aqm").at("rho").get<double>();
  c.fchan_trials = j.at("aqm").at("fchan_trials").get<std::int64_t>();
  c.fec_fraction = j.at("fec").at("fraction").get<double>();
  c.fec_d_good = j.at("fec").at("d_good").get<double>();
  c.fec_d_bad = j.at("fec").at("d_bad").get<double>();
  c.fec_p_good = j.at("fec").at("p_good").get<double>();
  c.chain_f_eff = j.at("chain").at("f_eff").get<double>();
  return c;
}

namespace {

void check_config(const RlcConfig& c) {
  if (c.slots < 0) throw ScenarioError("slots must be >= 0");
  if (c.metrics_every < 0) throw ScenarioError("metrics_every must be >= 0");
  if (c.paths < 1) throw ScenarioError("paths must be >= 1");
  if (c.total_capacity < c.paths) throw ScenarioError("total_capacity must give every path at least 1");
  if (c.redundancy < 0) throw ScenarioError("redundancy must be >= 0");
  if (!(c.rtt_ms > 0)) throw ScenarioError("rtt_ms must be positive");
  if (c.rto_factor < 1) throw ScenarioError("rto_factor must be >= 1");
  if (c.w_max < 2) throw ScenarioError("w_max must be >= 2");
  try {
    c.channel.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("channel: ") + e.what());
  }
  if (c.aqm && !(c.rho > 1)) throw ScenarioError("aqm.rho must be > 1");
  if (c.fec_fraction < 0 || c.fec_p_good < 0 || c.fec_p_good > 1 || c.fec_d_good < 0 || c.fec_d_good > 1 ||
      c.fec_d_bad < 0 || c.fec_d_bad > 1)
    throw ScenarioError("fec parameters out of range");
  if (c.chain_f_eff < 0 || c.chain_f_eff > 1) throw ScenarioError("chain.f_eff must be in [0,1]");
}

RlcSummary run_multipath(const RlcConfig& cfg, MetricsSink* sink) {
  const int M = cfg.paths;
  const std::int64_t S = cfg.slots;
  std::vector<int> cap(M, cfg.total_capacity / M);
  for (int l = 0; l < cfg.total_capacity % M; ++l) ++cap[l];
  const int r = cfg.coded ? cfg.redundancy : 0;

  std::vector<double> mark;
  CounterRng aqm_rng(cfg.seed, "aqm");
  if (cfg.aqm) {
    int Cp = cfg.total_capacity / M;
    auto fc = cfg.fchan_trials > 0 ? f_chan_monte_carlo(M, Cp, cfg.channel, cfg.fchan_trials, cfg.seed)
                                   : f_chan_exact(M, Cp, cfg.channel);
    mark = aqm_marking(fc, solve_beta(M, Cp, cfg.rho, cfg.channel), cfg.w_max);
  }

  std::vector<RouterQueues> router;
  std::vector<ChannelState> chan(M);
  std::vector<double> chan_clock(M, 0.0);
  std::vector<CounterRng> chan_rng, deliver_rng;
  for (int l = 0; l < M; ++l) {
    router.emplace_back(cfg.carryover ? cap[l] : 0);
    chan_rng.emplace_back(cfg.seed, "channel/" + std::to_string(l));
    deliver_rng.emplace_back(cfg.seed, "deliver/" + std::to_string(l));
    chan[l] = channel_init(cfg.channel, chan_rng[l]);
  }

  std::vector<int> size(S, 0), recv(S, 0);
  std::vector<char> decoded(S, 0);
  int W = 1;
  std::vector<int> w(M, 1);
  RlcSummary out;
  double good = 0, sumW = 0, sumw = 0, raw = 0;
  std::int64_t saturated = 0, idle_slots = 0;
  double win_good = 0;
  std::int64_t win_fail = 0;

  for (std::int64_t t = 0; t < S; ++t) {
    size[t] = W;
    sumW += W;
    for (int x : w) sumw += x;
    auto plan = plan_block(W, w, r);
    for (int l = 0; l < M; ++l) {
      for (int k = 0; k < plan[l].data; ++k) router[l].push_high(t);
      for (int k = 0; k < plan[l].coded; ++k) router[l].push_low(t);
    }
    std::vector<bool> ok(M);
    int slot_got = 0;
    for (int l = 0; l < M; ++l) {
      auto sent = router[l].serve(cap[l]);
      if (static_cast<int>(sent.size()) == cap[l]) ++saturated;
      int got = 0;
      for (std::size_t k = 0; k < sent.size(); ++k) {
        double at = static_cast<double>(t) * cfg.rtt_ms + static_cast<double>(k) * cfg.rtt_ms / cap[l];
        chan[l] = channel_evolve(chan[l], cfg.channel, chan_rng[l], at - chan_clock[l]);
        chan_clock[l] = at;
        if (!deliver_rng[l].bernoulli(chan[l].p)) continue;
        ++got;
        std::int64_t b = sent[k].tag;
        if (decoded[b]) continue;
        if (++recv[b] >= size[b]) {
          decoded[b] = 1;
          good += size[b];
          win_good += size[b];
        }
      }
      raw += got;
      slot_got += got;
      ok[l] = got >= w[l];
      if (!cfg.carryover) router[l].clear();
    }
    bool success = decoded[t] != 0;
    if (success && cfg.aqm) success = !aqm_rng.bernoulli(mark[std::min(W, cfg.w_max) - 1]);
    if (!decoded[t]) {
      ++out.decode_failures;
      ++win_fail;
    }
    W = std::min(window_step(W, success), cfg.w_max);
    for (int l = 0; l < M; ++l) w[l] = std::min(path_window_step(w[l], ok[l]), cfg.w_max);
    idle_slots = slot_got == 0 ? idle_slots + 1 : 0;
    if (idle_slots >= cfg.rto_factor) {
      // Retransmission timeout: restart from one packet per window.
      ++out.timeouts;
      W = 1;
      std::fill(w.begin(), w.end(), 1);
      idle_slots = 0;
    }
    if (sink && cfg.metrics_every > 0 && (t + 1) % cfg.metrics_every == 0) {
      sink->record(cfg.run_id, t, "W", "flow", W);
      for (int l = 0; l < M; ++l) sink->record(cfg.run_id, t, "w", "path" + std::to_string(l), w[l]);
      sink->record(cfg.run_id, t, "goodput", "flow", win_good / static_cast<double>(cfg.metrics_every));
      sink->record(cfg.run_id, t, "decode_failures", "flow", static_cast<double>(win_fail));
      win_good = 0;
      win_fail = 0;
    }
  }
  out.slots = S;
  out.goodput = good / S;
  out.goodput_fraction = out.goodput / cfg.total_capacity;
  out.mean_W = sumW / S;
  out.mean_path_w = sumw / (static_cast<double>(S) * M);
  out.delivered_fraction = raw / (static_cast<double>(S) * cfg.total_capacity);
  out.saturated_fraction = static_cast<double>(saturated) / (static_cast<double>(S) * M);
  return out;
}

RlcSummary run_fixed_fec(const RlcConfig& cfg, MetricsSink* sink) {
  CounterRng state_rng(cfg.seed, "fec/state"), loss_rng(cfg.seed, "fec/loss");
  int W = 1;
  RlcSummary out;
  double good = 0, sumW = 0;
  for (std::int64_t t = 0; t < cfg.slots; ++t) {
    sumW += W;
    double d = state_rng.bernoulli(cfg.fec_p_good) ? cfg.fec_d_good : cfg.fec_d_bad;
    int extra = static_cast<int>(std::ceil(cfg.fec_fraction * W));
    int got = channel_transmit(1.0 - d, W + extra, loss_rng);
    bool ok = got >= W;
    if (ok) good += W;
    else ++out.decode_failures;
    W = std::min(window_step(W, ok), cfg.w_max);
    if (sink && cfg.metrics_every > 0 && (t + 1) % cfg.metrics_every == 0) sink->record(cfg.run_id, t, "W", "flow", W);
  }
  out.slots = cfg.slots;
  out.goodput = good / cfg.slots;
  out.goodput_fraction = out.goodput / cfg.total_capacity;
  out.mean_W = sumW / cfg.slots;
  out.mean_path_w = out.mean_W;
  return out;
}

RlcSummary run_chain(const RlcConfig& cfg, MetricsSink* sink) {
  CounterRng rng(cfg.seed, "chain");
  int W = 1;
  double sumW = 0;
  RlcSummary out;
  for (std::int64_t t = 0; t < cfg.slots; ++t) {
    sumW += W;
    bool drop = rng.bernoulli(cfg.chain_f_eff);
    if (drop) ++out.decode_failures;
    W = std::min(window_step(W, !drop), cfg.w_max);
    if (sink && cfg.metrics_every > 0 && (t + 1) % cfg.metrics_every == 0) sink->record(cfg.run_id, t, "W", "flow", W);
  }
  out.slots = cfg.slots;
  out.mean_W = sumW / cfg.slots;
  out.mean_path_w = out.mean_W;
  return out;
}

}  // namespace

RlcSummary run_rlc(const RlcConfig& cfg, MetricsSink* sink) {
  check_config(cfg);
  if (cfg.slots == 0 && (cfg.variant == "multipath" || cfg.variant == "fixed_fec" || cfg.variant == "aimd_chain"))
    return {};
  if (cfg.variant == "multipath") return run_multipath(cfg, sink);
  if (cfg.variant == "fixed_fec") return run_fixed_fec(cfg, sink);
  if (cfg.variant == "aimd_chain") return run_chain(cfg, sink);
  throw ScenarioError("unknown tcp_rlc variant '" + cfg.variant + "' (multipath, fixed_fec, aimd_chain)");
}

}  // namespace netlab::rlc
