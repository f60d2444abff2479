#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "netlab/rng.hpp"
#include "netlab/tcp_rlc.hpp"

using namespace netlab;
using namespace netlab::rlc;

// Reference values below come from tests/oracles/reference_values.py.

TEST_CASE("aimd arithmetic") {
  CHECK(window_step(1, false) == 1);
  CHECK(window_step(10, true) == 11);
  CHECK(window_step(10, false) == 5);
  CHECK(window_step(11, false) == 6);
  CHECK(path_window_step(10, false) == 5);
  CHECK(f_eff(0, 0) == 0);
  CHECK(f_eff(1, 0.3) == 1);
  CHECK(f_eff(0.1, 0.2) == doctest::Approx(0.28));
}

TEST_CASE("channel transmit") {
  CounterRng rng(1, "tx");
  CHECK(channel_transmit(1.0, 50, rng) == 50);
  CHECK(channel_transmit(0.3, 0, rng) == 0);
  const int n = 1000000;
  double frac = channel_transmit(0.05, n, rng) / double(n);
  CHECK(std::abs(frac - 0.05) < 0.001);
  CHECK_THROWS(channel_transmit(0.5, -1, rng));
}

TEST_CASE("channel evolution") {
  ChannelProfile one;
  one.levels = {{0.7, 1.0}};
  CounterRng rng(2, "chan");
  ChannelState s = channel_init(one, rng);
  for (int i = 0; i < 100; ++i) {
    s = channel_evolve(s, one, rng, 150);
    CHECK(s.p == 0.7);
  }

  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  s = channel_init(bi, rng);
  double low = 0, total = 0;
  for (int i = 0; i < 400000; ++i) {
    s = channel_evolve(s, bi, rng, 10);
    total += 10;
    if (s.p == 0.1) low += 10;
  }
  CHECK(std::abs(low / total - 0.1) < 0.01);

  for (double p1 = 0.1; p1 < 0.55; p1 += 0.1) {
    double m = ChannelProfile::bimodal(p1, 0.1).mean();
    CHECK(m >= 0.91 - 1e-12);
    CHECK(m <= 0.95 + 1e-12);
  }
  CHECK_THROWS(channel_evolve(s, bi, rng, -1));
}

TEST_CASE("field arithmetic") {
  for (std::uint32_t a : {1u, 2u, 17u, 4095u, 8190u}) CHECK(gf_mul(a, gf_inv(a)) == 1);
  CHECK(gf_add(8190, 5) == 4);
  CHECK(gf_rank({{1, 2}, {2, 4}}) == 1);
  CHECK(gf_rank({{1, 2}, {2, 5}}) == 2);
}

TEST_CASE("decode examples") {
  CHECK(decode_abstract(5, 5, 0));
  CHECK(decode_abstract(4, 1, 3));
  CHECK_FALSE(decode_abstract(4, 1, 2));

  CounterRng rng(3, "coef");
  std::vector<std::vector<std::uint32_t>> coded;
  for (int k = 0; k < 3; ++k) coded.push_back(random_coefficients(4, rng));
  CHECK(decode_concrete(4, {0}, coded));
  CHECK_FALSE(decode_concrete(4, {0}, {coded[0], coded[1]}));
  // A repeated vector is not innovative.
  CHECK_FALSE(decode_concrete(4, {0}, {coded[0], coded[0], coded[1]}));
}

TEST_CASE("concrete and abstract decoding agree") {
  CounterRng rng(4, "agree");
  int disagree = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    int W = 1 + static_cast<int>(rng.below(20));
    std::vector<int> data;
    for (int i = 0; i < W; ++i)
      if (rng.bernoulli(0.6)) data.push_back(i);
    int ncoded = static_cast<int>(rng.below(W + 2));
    std::vector<std::vector<std::uint32_t>> coded;
    for (int k = 0; k < ncoded; ++k) coded.push_back(random_coefficients(W, rng));
    bool a = decode_abstract(W, static_cast<int>(data.size()), ncoded);
    bool c = decode_concrete(W, data, coded);
    if (c) REQUIRE(a);  // the field can only lose rank
    if (a != c) ++disagree;
  }
  CHECK(disagree < trials / 100);
}

TEST_CASE("router priority service") {
  auto s = router_serve(7, 7, 4);
  CHECK(s.high == 7);
  CHECK(s.low == 0);
  s = router_serve(7, 0, 7);
  CHECK(s.high == 0);
  CHECK(s.low == 7);
  s = router_serve(7, 3, 10);
  CHECK(s.high == 3);
  CHECK(s.low == 4);
  CHECK(s.low_tags == std::vector<std::int64_t>{9, 8, 7, 6});

  RouterQueues q(3);
  for (int i = 0; i < 5; ++i) q.push_high(i);
  CHECK(q.high_size() == 3);
  CHECK(q.dropped() == 2);
  for (int i = 0; i < 5; ++i) q.push_low(i);
  CHECK(q.low_size() == 3);
  auto sent = q.serve(5);
  REQUIRE(sent.size() == 5);
  CHECK(sent[0].high);
  CHECK(sent[0].tag == 0);
  CHECK_FALSE(sent[3].high);
  CHECK(sent[3].tag == 4);  // newest low first; the oldest were dropped
  CHECK(sent[4].tag == 3);
}

TEST_CASE("receiver acknowledgements") {
  RlcReceiver in_order(3);
  auto ev = in_order.on_data(1);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == AckKind::Cumulative);
  CHECK(ev[0].ack_through == 1);

  // P1 arrives, then three coded packets: pseudo ACKs, then an ACK through P4.
  RlcReceiver r(4);
  r.on_data(1);
  ev = r.on_coded();
  CHECK(ev.back().kind == AckKind::Pseudo);
  ev = r.on_coded();
  CHECK(ev.back().kind == AckKind::Pseudo);
  ev = r.on_coded();
  CHECK(r.decoded());
  CHECK(ev.front().kind == AckKind::Pseudo);
  CHECK(ev.back().kind == AckKind::Cumulative);
  CHECK(ev.back().ack_through == 4);

  // Anything after decoding, or a repeat, is not innovative.
  ev = r.on_data(3);
  CHECK(ev.back().kind == AckKind::Duplicate);
  RlcReceiver d(4);
  d.on_data(2);
  ev = d.on_data(2);
  CHECK(ev.back().kind == AckKind::Duplicate);
  CHECK(ev.back().ack_through == 0);
}

TEST_CASE("rtt estimator") {
  CHECK(rtt_estimator(100, 100) == 100);
  CHECK(rtt_estimator(100, 200) == doctest::Approx(110));
  double m = 10;
  for (int i = 0; i < 500; ++i) m = rtt_estimator(m, 42);
  CHECK(m == doctest::Approx(42));
  CHECK(rto(110) == doctest::Approx(330));
  CHECK_THROWS(rtt_estimator(100, 0));
}

TEST_CASE("rate function") {
  ChannelProfile half;
  half.levels = {{0.05, 0.5}, {0.95, 0.5}};
  CHECK(rate_function_lprime(0.6, half) == doctest::Approx(0.024898702895406633).epsilon(1e-9));
  // Legendre transform on a 10^4-point theta grid over [-200, 200].
  CHECK(std::abs(rate_function_lprime(0.6, half) - 0.024898255558308158) < 1e-6);
  CHECK(rate_function_lprime(1 - half.mean(), half) < 1e-12);

  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  CHECK(rate_function_lprime(0.5, bi) == doctest::Approx(0.639079259802847).epsilon(1e-9));

  ChannelProfile point;
  point.levels = {{0.3, 1.0}};
  CHECK(rate_function_lprime(0.7, point) < 1e-12);
  CHECK(rate_function_lprime(0.5, point) >= kRateSentinel);

  CounterRng rng(8, "lprime");
  for (int t = 0; t < 50; ++t) CHECK(rate_function_lprime(rng.uniform(0.01, 0.89), bi) >= 0);
}

TEST_CASE("beta solve") {
  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  struct Case {
    int M, C;
    double beta;
  } cases[] = {{8, 9, 34.707026158331146}, {4, 18, 26.252449128211936}, {16, 40, 328.1303861554433}};
  for (const auto& c : cases) {
    CAPTURE(c.M);
    auto s = solve_beta(c.M, c.C, 1.2, bi);
    REQUIRE(s.regime == BetaRegime::Solved);
    CHECK(*s.beta == doctest::Approx(c.beta).epsilon(1e-9));
    CHECK(std::abs(beta_residual(*s.beta, c.M, c.C, 1.2, bi)) < 1e-8 / *s.beta);
  }
  CHECK_THROWS(solve_beta(8, 9, 1.0, bi));
}

TEST_CASE("throughput bound regimes") {
  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  for (int M : {1, 2, 4, 8, 16}) {
    for (int C : {1, 5, 40, 1000}) {
      auto s = solve_beta(M, C, 1.2, bi);
      double b = throughput_lower_bound(M, C, 1.2, bi);
      const double cap = bi.mean() * M * C / 1.44;
      CHECK(b <= cap);
      const double nodiv = 0.75 * 0.1 * M * C / 1.44 - 1;
      if (s.regime == BetaRegime::NoDiversity) CHECK(b == doctest::Approx(nodiv));
      if (s.regime == BetaRegime::FullDiversity) {
        const double full = s.hi * (1 - 3 / std::floor(s.hi) - 2 * std::exp(-1.0));
        CHECK(b == doctest::Approx(std::max(nodiv, full)));
      }
    }
  }
  // A single-level channel has no diversity to gain.
  ChannelProfile flat;
  flat.levels = {{0.9, 1.0}};
  auto s = solve_beta(4, 10, 1.2, flat);
  CHECK(s.regime != BetaRegime::Solved);
}

TEST_CASE("steady state oracle") {
  auto s = steady_state_oracle(std::vector<double>(400, 1.0), 400);
  CHECK(s.pi[0] == doctest::Approx(1));
  s = steady_state_oracle(std::vector<double>(400, 0.0), 400);
  CHECK(s.pi[399] == doctest::Approx(1));
  CHECK(s.mean == doctest::Approx(400));

  const double ref[][2] = {{0.3, 5.168423166956774}, {0.1, 18.499979680970586}, {0.01, 188.10356786349053}};
  for (const auto& r : ref) {
    s = steady_state_oracle(std::vector<double>(400, r[0]), 400);
    CHECK(s.mean == doctest::Approx(r[1]).epsilon(1e-8));
    CHECK(std::accumulate(s.pi.begin(), s.pi.end(), 0.0) == doctest::Approx(1));
  }
  CHECK_THROWS(steady_state_oracle({0.5}, 1));
}

TEST_CASE("channel failure table") {
  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  const double ref[] = {0.0, 0.00531441, 0.008857350000000002, 0.009841500000000001,
                        0.1412073, 0.18495945000000003, 0.18981999};
  auto f = f_chan_exact(2, 3, bi);
  REQUIRE(f.size() == 7);
  for (int w = 0; w < 7; ++w) CHECK(f[w] == doctest::Approx(ref[w]).epsilon(1e-12));

  auto mc = f_chan_monte_carlo(2, 3, bi, 200000, 9);
  for (int w = 0; w < 7; ++w) CHECK(std::abs(mc[w] - ref[w]) < 0.005);
  CHECK(mc == f_chan_monte_carlo_serial(2, 3, bi, 200000, 9));
  // Monotone in w.
  auto big = f_chan_exact(8, 9, bi);
  for (std::size_t w = 1; w < big.size(); ++w) CHECK(big[w] >= big[w - 1]);
}

TEST_CASE("aqm marking") {
  ChannelProfile bi = ChannelProfile::bimodal(0.1, 0.1);
  auto fc = f_chan_exact(8, 9, bi);
  auto b = solve_beta(8, 9, 1.2, bi);
  auto m = aqm_marking(fc, b, 400);
  REQUIRE(m.size() >= 72);
  for (double v : m) {
    CHECK(v >= 0);
    CHECK(v <= 1);
  }
}

TEST_CASE("multipath controller") {
  auto s = multipath_controller_step(5, {5}, {true}, true, 2);
  CHECK(s.W == 6);
  CHECK(s.w == std::vector<int>{6});
  CHECK(s.plan[0].data == 6);
  CHECK(s.plan[0].coded == 12);

  s = multipath_controller_step(10, {4, 6}, {true, true}, true, 3);
  CHECK(s.W == 11);
  CHECK(s.w == std::vector<int>{5, 7});

  s = multipath_controller_step(10, {6, 6}, {true, false}, true, 3);
  CHECK(s.W == 11);
  CHECK(s.w == std::vector<int>{7, 3});
  CHECK(s.plan[0].data == 7);
  CHECK(s.plan[1].data == 3);
  CHECK(s.plan[1].coded == 9);

  s = multipath_controller_step(10, {6, 6}, {false, false}, false, 3);
  CHECK(s.W == 5);

  CHECK_THROWS(multipath_controller_step(1, {1}, {true, true}, true, 1));
}

TEST_CASE("aimd chain stays within bounds and matches the oracle") {
  RlcConfig c;
  c.variant = "aimd_chain";
  c.slots = 2000000;
  c.chain_f_eff = 0.1;
  c.metrics_every = 0;
  auto s = run_rlc(c);
  CHECK(s.mean_W == doctest::Approx(18.499979680970586).epsilon(0.05));
}

TEST_CASE("fixed fec window falls with the good-channel share") {
  double prev = 1e18;
  for (double pg : {0.9, 0.5, 0.1}) {
    RlcConfig c;
    c.variant = "fixed_fec";
    c.slots = 100000;
    c.metrics_every = 0;
    c.fec_p_good = pg;
    auto s = run_rlc(c);
    CAPTURE(pg);
    CHECK(s.mean_W < c.w_max);
    CHECK(s.mean_W < prev);
    prev = s.mean_W;
  }
}

TEST_CASE("coded paths saturate the router") {
  RlcConfig c;
  c.paths = 8;
  c.redundancy = 19;  // > 2 (1 - p1) / p1 = 18
  c.slots = 20000;
  c.metrics_every = 0;
  auto s = run_rlc(c);
  CHECK(s.saturated_fraction >= 0.99);
}

TEST_CASE("rlc zero slots and determinism") {
  RlcConfig c;
  c.slots = 0;
  MetricsSink empty;
  run_rlc(c, &empty);
  CHECK(empty.empty());

  c.slots = 3000;
  c.paths = 4;
  MetricsSink a, b;
  run_rlc(c, &a);
  run_rlc(c, &b);
  CHECK_FALSE(a.empty());
  CHECK(a.to_csv() == b.to_csv());
}
