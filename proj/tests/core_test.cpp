#include <set>
#include <sstream>

#include "doctest.h"
#include "netlab/clock.hpp"
#include "netlab/metrics.hpp"
#include "netlab/rng.hpp"
#include "netlab/scenario.hpp"
#include "netlab/topology.hpp"

using namespace netlab;

TEST_CASE("clock advances slot and super slot") {
  SlotClock c(1000);
  c = advance(c);
  CHECK(c.t == 1);
  CHECK(c.tau == 0);

  c = advance(SlotClock(1000, 999));
  CHECK(c.t == 1000);
  CHECK(c.tau == 1);
  CHECK(c.at_super_boundary());

  c = advance(SlotClock(1000, 1999));
  CHECK(c.t == 2000);
  CHECK(c.tau == 2);

  CHECK_THROWS(SlotClock(0));
}

TEST_CASE("metrics sink keeps per-run order") {
  MetricsSink s;
  s.record("r", 5, "queue_len", "u[1.100->1.104]", 37);
  s.record("r", 5, "rate_kbps", "flow_1", 110.0);
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.record("r", 4, "queue_len", "x", 1), std::logic_error);
  // Another run has its own clock.
  s.record("other", 1, "queue_len", "x", 1);
  CHECK(s.size() == 3);
}

TEST_CASE("metrics csv format") {
  MetricsSink empty;
  CHECK(empty.to_csv() == std::string(MetricsSink::header()) + "\n");

  MetricsSink s;
  s.record("a,b", 3, "q", "say \"hi\"", 0.5);
  CHECK(s.to_csv() == "run_id,t,metric,subject,value\n\"a,b\",3,q,\"say \"\"hi\"\"\",0.5\n");
  CHECK(format_value(0.0) == "0");
  CHECK(format_value(-0.0) == "0");
  CHECK(format_value(0.1) == "0.1");
}

TEST_CASE("counter rng streams are reproducible and independent") {
  CounterRng a(7, "arrivals"), b(7, "arrivals"), c(7, "mobility");
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  // Draw i never depends on earlier draws.
  CounterRng d(7, "arrivals");
  CHECK(d.at(50) == CounterRng(7, "arrivals").at(50));

  CounterRng u(3, 0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    double v = u.uniform();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    sum += v;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("scenario merge is strict") {
  Json j = load_scenario_text(R"({"model": "tcp_rlc", "paths": 4})");
  CHECK(j["paths"] == 4);
  CHECK(j["total_capacity"] == 73);

  CHECK_THROWS_AS(load_scenario_text(R"({"model": "tcp_rlc", "pathz": 4})"), ScenarioError);
  CHECK_THROWS_AS(load_scenario_text(R"({"model": "tcp_rlc", "paths": 4.5})"), ScenarioError);
  CHECK_THROWS_AS(load_scenario_text(R"({"model": "tcp_rlc", "paths": "4"})"), ScenarioError);
  CHECK_THROWS_AS(load_scenario_text(R"({"model": "nope"})"), ScenarioError);
  CHECK_THROWS_AS(load_scenario_text("{not json"), ScenarioError);
  CHECK_THROWS_AS(load_scenario_text("[1, 2]"), ScenarioError);

  // Array elements take the first default element as template.
  Json m = load_scenario_text(R"({"model": "mobility", "routes": [{"name": "X", "visits": [{"node": "A"}]}]})");
  CHECK(m["routes"].size() == 1);
  CHECK(m["routes"][0]["visits"][0]["count"] == 1);
  CHECK(m["routes"][0]["minutes"] == 1.0);
}

TEST_CASE("overrides need existing keys") {
  Json j = default_scenario("icn");
  apply_overrides(j, {"algorithm.T=200", "flows.1.K=800", "algorithm.mode=bpsr", "topology.directed=true"});
  CHECK(j["algorithm"]["T"] == 200);
  CHECK(j["flows"][1]["K"] == 800.0);
  CHECK(j["algorithm"]["mode"] == "bpsr");
  CHECK(j["topology"]["directed"] == true);
  CHECK_THROWS_AS(apply_override(j, "algorithm.nope=1"), ScenarioError);
  CHECK_THROWS_AS(apply_override(j, "flows.9.K=1"), ScenarioError);
  CHECK_THROWS_AS(apply_override(j, "algorithm.T"), ScenarioError);
  CHECK_THROWS_AS(apply_override(j, "algorithm.T=abc"), ScenarioError);
}

TEST_CASE("line topology") {
  TopologyGraph g = line_topology(2, 3, 1);
  CHECK_NOTHROW(g.validate());
  CHECK(g.cluster_count() == 2);
  auto gw = g.all_gateways();
  REQUIRE(gw.size() == 2);
  std::set<std::string> names{g.node(gw[0]).name, g.node(gw[1]).name};
  CHECK(names == std::set<std::string>{"1.104", "2.103"});
  REQUIRE(g.mobiles().size() == 1);
  std::set<int> touched(g.mobiles()[0].contacts.begin(), g.mobiles()[0].contacts.end());
  CHECK(touched == std::set<int>(gw.begin(), gw.end()));
  CHECK(g.has_node("1.100"));
  CHECK(g.has_node("2.100"));
}

TEST_CASE("grid topology") {
  TopologyGraph g = grid_topology(3, 4, 3, 2);
  CHECK_NOTHROW(g.validate());
  CHECK(g.node_count() == 36);
  CHECK(g.all_gateways().size() == 6);
  CHECK(g.mobiles().size() == 2);
  for (int c = 0; c < 3; ++c) CHECK(g.cluster_nodes(c).size() == 12);
  // Mobiles only ever meet gateways.
  for (const auto& m : g.mobiles())
    for (int n : m.contacts) CHECK(g.is_gateway(n));
}

TEST_CASE("degenerate line has no mobile contacts") {
  TopologyGraph g = line_topology(1, 1, 0);
  CHECK_NOTHROW(g.validate());
  CHECK(g.cluster_count() == 2);
  CHECK(g.mobiles().empty());
}

TEST_CASE("build_topology dispatch") {
  TopologySpec s;
  s.builder = "star";
  s.clusters = 4;
  s.leaves = 2;
  TopologyGraph g = build_topology(s);
  CHECK(g.cluster_count() == 4);
  CHECK(g.node_count() == 12);
  s.builder = "ring";
  CHECK_THROWS(build_topology(s));
}
