#include <cmath>

#include "doctest.h"
#include "netlab/experiments.hpp"
#include "netlab/icn.hpp"
#include "netlab/rng.hpp"

using namespace netlab;

TEST_CASE("select gateways") {
  CHECK(select_gateways({7}, {{3}}, {2}) == std::pair<int, int>{0, 0});
  // gA, gB at the source; gD at the destination.
  CHECK(select_gateways({10, 50}, {{100}, {20}}, {0}) == std::pair<int, int>{1, 0});
  CHECK(select_gateways({4, 4}, {{4, 4}, {4, 4}}, {4, 4}) == std::pair<int, int>{0, 0});
}

TEST_CASE("source transfer uses a strict test") {
  // T = 1000 and 10 nodes give K_s = 100.
  CHECK(transfer_source(500, 4, 100, 3, 500) == 3);
  CHECK(transfer_source(500, 5, 100, 3, 500) == 0);
  CHECK(transfer_source(0, 0, 100, 3, 0) == 0);
  CHECK(transfer_source(500, 0, 100, 3, 2) == 2);
}

TEST_CASE("destination transfer") {
  const double K = 1000.0 / 12;
  CHECK(transfer_destination(0, 0, K, 3, 0) == 0);
  CHECK(transfer_destination(3 * K + 1, 3, K, 3, 10) == 3);
  CHECK(transfer_destination(3 * K, 3, K, 3, 10) == 0);
}

TEST_CASE("gateway balance") {
  const int X = 4, Y = 5;
  auto b = gateway_balance({{X, 10}}, {{X, 10}}, 100);
  CHECK(b.theta == 0);
  CHECK(transfer_gateway_balance(b, 0, 3, 10) == 0);

  b = gateway_balance({{X, 900}}, {{X, 100}}, 100);
  CHECK(b.commodity == X);
  CHECK(b.theta == doctest::Approx(8));
  CHECK(transfer_gateway_balance(b, 3, 3, 900) == 3);

  b = gateway_balance({{X, 300}, {Y, 900}}, {{X, 100}, {Y, 100}}, 100);
  CHECK(b.commodity == Y);
}

TEST_CASE("mobile gateway exchange") {
  const int gX = 2, gY = 3;
  auto e = mobile_gateway_exchange({{gX, 2000}}, {{gX, 0}}, 1500);
  CHECK(e.up_commodity == gX);
  CHECK(e.up == 1500);
  CHECK(e.down == 0);

  e = mobile_gateway_exchange({}, {{gY, 40}}, 1500);
  CHECK(e.up == 0);
  CHECK(e.down_commodity == gY);
  CHECK(e.down == 40);

  e = mobile_gateway_exchange({{gX, 7}}, {{gX, 7}}, 1500);
  CHECK(e.up == 0);
  CHECK(e.down == 0);
}

TEST_CASE("markov mobility") {
  Matrix shuttle{{0, 1}, {1, 0}};
  int s = 0;
  for (int i = 0; i < 6; ++i) {
    int n = mobility_step(shuttle, s, 0.5);
    CHECK(n == 1 - s);
    s = n;
  }
  auto pi2 = stationary_distribution(shuttle);
  CHECK(pi2[0] == doctest::Approx(0.5));

  Matrix P = chain_preset("forward", 3);
  auto pi = stationary_distribution(P);
  for (double v : pi) CHECK(v == doctest::Approx(1.0 / 3));

  CounterRng rng(5, "chain");
  int cur = 0;
  long on = 0, stay = 0, back = 0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    int n = mobility_step(P, cur, rng.uniform());
    if (n == (cur + 1) % 3) ++on;
    else if (n == cur) ++stay;
    else ++back;
    cur = n;
  }
  CHECK(std::abs(on / double(steps) - 0.8) < 0.02);
  CHECK(std::abs(stay / double(steps) - 0.1) < 0.02);
  CHECK(std::abs(back / double(steps) - 0.1) < 0.02);

  CHECK_THROWS(validate_chain({{1, 0}, {0, 1}}));
  CHECK_THROWS(validate_chain({{0.5, 0.4}, {1, 0}}));
  CHECK(estimate_super_slot({100, 300, 500, 700}) == doctest::Approx(200));
}

TEST_CASE("advertised gateway queue and release") {
  CHECK(advertise_gateway_queue(0, 6000) == 0);
  CHECK(advertise_gateway_queue(50000, 6000) == doctest::Approx(8.3333333333));
  CHECK(advertise_gateway_queue(6000, 6000) == 1.0);

  CHECK(destination_gateway_release(6000, 1, 6000, 3) == 3);  // equality moves
  CHECK(destination_gateway_release(0, 0, 6000, 3) == 0);
  CHECK(destination_gateway_release(12000, 1, 6000, 3) == 3);
  CHECK(destination_gateway_release(12000, 3, 6000, 3) == 0);
}

TEST_CASE("shadow service") {
  CHECK(shadow_serve(5, 5, 5) == std::pair<int, int>{5, 0});
  CHECK(shadow_serve(2, 5, 5) == std::pair<int, int>{2, 3});
  CHECK(shadow_serve(0, 0, 5) == std::pair<int, int>{0, 0});
}

TEST_CASE("loop prevention") {
  const int gA = 3, gB = 4;
  CHECK_FALSE(loop_prevention_filter(gA, gA));
  CHECK(loop_prevention_filter(gA, gB));
  CHECK(loop_prevention_filter(-1, gA));
}

TEST_CASE("delay bounds") {
  auto d = bpsr_delay_bounds(2, 100, 0.2, 0.05);
  CHECK(d.bp_lower == doctest::Approx(149));
  CHECK(d.bpsr_upper == doctest::Approx(304));
  auto d3 = bpsr_delay_bounds(3, 100, 0.2, 0.05);
  CHECK(d3.bp_lower - d.bp_lower == doctest::Approx(2 * 100 * 0.75 - 1));
  auto near = bpsr_delay_bounds(5, 100, 0.5, 0.5 - 1e-12);
  CHECK(near.bp_lower == doctest::Approx(-4).epsilon(1e-6));
  CHECK_THROWS(bpsr_delay_bounds(5, 100, 0.5, 0.5));
}

namespace {

IcnConfig small_line(const std::string& mode) {
  Json j = icn_delay_scenario(mode, 5, 3);
  j["horizon"] = 20000;
  j["metrics_every"] = 1000;
  return icn_config_from_json(j);
}

}  // namespace

TEST_CASE("icn run with zero horizon writes only the header") {
  IcnConfig c = small_line("bpsr");
  c.horizon = 0;
  MetricsSink sink;
  auto s = run_icn(c, &sink);
  CHECK(s.slots == 0);
  CHECK(sink.to_csv() == std::string(MetricsSink::header()) + "\n");
}

TEST_CASE("icn runs are deterministic and local") {
  for (const char* mode : {"bp", "bpsr"}) {
    CAPTURE(mode);
    IcnConfig c = small_line(mode);
    MetricsSink a, b;
    auto sa = run_icn(c, &a);
    run_icn(c, &b);
    CHECK(a.to_csv() == b.to_csv());
    CHECK_FALSE(a.empty());
    CHECK(sa.flows.at(0).delivered > 0);
    if (std::string(mode) == "bpsr") CHECK(sa.locality_violations == 0);
  }
}

TEST_CASE("icn shuttle meets one gateway per super slot") {
  IcnConfig c = small_line("bpsr");
  auto s = run_icn(c);
  REQUIRE(s.contacts.size() == 1);
  const auto& seq = s.contacts[0];
  CHECK(static_cast<std::int64_t>(seq.size()) == (c.horizon + c.T - 1) / c.T);
  for (std::size_t k = 1; k < seq.size(); ++k) CHECK(seq[k] != seq[k - 1]);
}

TEST_CASE("icn config rejects bad input") {
  Json j = icn_delay_scenario("bpsr", 5, 1);
  j["algorithm"]["mode"] = "maxflow";
  CHECK_THROWS_AS(icn_config_from_json(j), ScenarioError);
  j = icn_delay_scenario("bpsr", 5, 1);
  j["flows"][0]["source"] = "9.999";
  CHECK_THROWS(run_icn(icn_config_from_json(j)));
}
