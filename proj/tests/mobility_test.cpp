#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "netlab/mobility.hpp"
#include "netlab/rng.hpp"
#include "netlab/simplex.hpp"

using namespace netlab;
using namespace netlab::mob;

TEST_CASE("simplex small programs") {
  // min -x - y s.t. x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2).
  LinearProgram lp;
  lp.c = {-1, -1};
  lp.add_row({1, 2}, RowSense::Le, 4);
  lp.add_row({3, 1}, RowSense::Le, 6);
  auto s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(1.6));
  CHECK(s.x[1] == doctest::Approx(1.2));
  CHECK(s.objective == doctest::Approx(-2.8));

  LinearProgram eq;
  eq.c = {1, 2};
  eq.add_row({1, 1}, RowSense::Eq, 3);
  eq.add_row({1, 0}, RowSense::Ge, 1);
  s = solve_lp(eq);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.x[0] == doctest::Approx(3));
  CHECK(s.objective == doctest::Approx(3));

  LinearProgram inf;
  inf.c = {1};
  inf.add_row({1}, RowSense::Le, 1);
  inf.add_row({1}, RowSense::Ge, 2);
  CHECK(solve_lp(inf).status == LpStatus::Infeasible);

  LinearProgram unb;
  unb.c = {-1, 0};
  unb.add_row({1, -1}, RowSense::Le, 1);
  CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("stationary enqueue") {
  CHECK(stationary_enqueue({3}, {99}, {1}, 10) == 0);
  CHECK(stationary_enqueue({0, 1}, {15, 0}, {1, 1}, 10) == 1);
  CHECK(stationary_enqueue({0, 0}, {5, 5}, {1, 1}, 10) == 0);
  // Routes that never visit the source are skipped.
  CHECK(stationary_enqueue({0, 5}, {0, 0}, {0, 1}, 10) == 1);
}

TEST_CASE("pickup decision") {
  CHECK_FALSE(pickup_decision(1, 0, 0));
  CHECK(pickup_decision(1, 100, 40));
  CHECK_FALSE(pickup_decision(1, 40, 40));
  CHECK_FALSE(pickup_decision(0, 100, 0));
}

namespace {

SelectionInput exp1_input(const Network& net, double K) {
  SelectionInput in;
  const auto F = net.flows.size(), J = net.routes.size();
  const auto dests = net.destinations();
  in.q.assign(F, std::vector<double>(J, 0));
  in.Q.assign(dests.size(), 0);
  in.w.assign(J, 0);
  in.P.assign(F, std::vector<double>(J, 0));
  in.D.assign(dests.size(), std::vector<double>(J, 0));
  for (std::size_t i = 0; i < F; ++i) {
    in.flow_dest.push_back(net.destination_index(net.flows[i].destination));
    for (std::size_t j = 0; j < J; ++j) in.P[i][j] = net.P(i, j);
  }
  for (std::size_t d = 0; d < dests.size(); ++d)
    for (std::size_t j = 0; j < J; ++j) in.D[d][j] = net.D(d, j);
  for (const auto& r : net.routes) {
    in.b.push_back(r.cost);
    in.floors.push_back(r.floor);
  }
  in.K = K;
  in.kappa = 1;
  return in;
}

}  // namespace

TEST_CASE("route selection") {
  Network net = preset_network("exp1");
  SelectionInput in = exp1_input(net, 600);
  // Empty network: only -K b survives, so a zero-cost route wins.
  auto s = select_route(in);
  CHECK(in.b[s.route] == 0);

  in.q[0][1] = 1000;  // S1 backlog on R2
  s = select_route(in);
  CHECK(net.routes[s.route].name == "R2");
  CHECK(s.delta[0][1] == 1);

  in = exp1_input(net, 600);
  in.q[0][0] = 500;
  in.q[1][2] = 500;
  in.w[1] = 1e7;
  s = select_route(in);
  CHECK(net.routes[s.route].name == "R2");
}

TEST_CASE("route selection is invariant to common scaling") {
  Network net = preset_network("exp2");
  CounterRng rng(17, "scaling");
  for (int trial = 0; trial < 200; ++trial) {
    SelectionInput in = exp1_input(net, rng.uniform(10, 1000));
    for (auto& row : in.q)
      for (auto& v : row) v = std::floor(rng.uniform(0, 500));
    for (auto& v : in.Q) v = std::floor(rng.uniform(0, 500));
    for (auto& v : in.w) v = rng.uniform(0, 200);
    in.kappa = rng.uniform(0.1, 2);
    const int base = select_route(in).route;
    const double c = rng.uniform(0.01, 100);
    for (auto& row : in.q)
      for (auto& v : row) v *= c;
    for (auto& v : in.Q) v *= c;
    in.kappa *= c;
    in.K *= c;
    CHECK(select_route(in).route == base);
  }
}

TEST_CASE("queue and deficit updates") {
  CHECK(queue_update(30, 0, 0) == 30);
  CHECK(queue_update(30, 40, 100) == 0);
  CHECK(queue_update(50, 0, 200) == 0);
  CHECK(update_deficit(0, false, 2, 0) == 0);
  CHECK(update_deficit(5, false, 2, 0.1) == doctest::Approx(5.2));
  CHECK(update_deficit(5, true, 2, 0.1) == doctest::Approx(3.2));
}

TEST_CASE("stale snapshot") {
  StaleSnapshot s(2, 3);
  CHECK(s.value(1, 2) == 0);
  CHECK(s.stamp(1) == -1);
  s.observe(0, {120, 1, 2}, 7);
  CHECK(s.value(0, 0) == 120);
  CHECK(s.stamp(0) == 7);
  s.observe(0, {80, 1, 2}, 9);
  CHECK(s.value(0, 0) == 80);
  CHECK(s.stamp(0) == 9);
  CHECK_THROWS(s.observe(0, {1}, 10));
}

TEST_CASE("reference LP reproduces the tabulated optima") {
  Network e1 = preset_network("exp1");
  auto r = reference_lp_solve(e1, 600);
  REQUIRE(r.feasible);
  CHECK(std::abs(r.y[0][0] - 15) < 1e-6);
  CHECK(std::abs(r.y[0][1] - 25) < 1e-6);
  CHECK(std::abs(r.y[1][0] - 5) < 1e-6);
  CHECK(std::abs(r.y[1][1] - 25) < 1e-6);

  Network e2 = preset_network("exp2");
  r = reference_lp_solve(e2, 900);
  REQUIRE(r.feasible);
  // Flow i's source sits on region routes 2g (fast) and 2g+1 (slow).
  const int region[] = {0, 0, 2, 2};
  const double fast[] = {8.5, 5.5, 5.5, 8.5};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(r.y[i][2 * region[i]] - fast[i]) < 1e-6);
    CHECK(std::abs(r.y[i][2 * region[i] + 1] - 14.5) < 1e-6);
  }
  for (std::size_t j = 0; j < e2.routes.size(); ++j) CHECK(r.f[j] >= e2.routes[j].floor - 1e-9);
  CHECK(std::accumulate(r.f.begin(), r.f.end(), 0.0) == doctest::Approx(1));
}

TEST_CASE("reference LP with no traffic") {
  Network net = preset_network("exp1");
  for (auto& f : net.flows) f.rate_per_min = 0;
  auto r = reference_lp_solve(net, 600);
  REQUIRE(r.feasible);
  CHECK(r.cost == doctest::Approx(0));
  for (std::size_t j = 0; j < net.routes.size(); ++j) {
    CHECK(r.f[j] >= net.routes[j].floor - 1e-9);
    if (net.routes[j].cost > 0) CHECK(r.f[j] == doctest::Approx(0));
  }
}

TEST_CASE("supportability") {
  Network net = preset_network("illustrative");
  CHECK_FALSE(supportability_check(net, std::vector<double>{0.5, 0.5}));
  CHECK(supportability_check(net));

  Network idle = net;
  for (auto& f : idle.flows) f.rate_per_min = 0;
  CHECK(supportability_check(idle));
  CHECK(supportability_check(idle, std::vector<double>{0.5, 0.5}));

  Network over = net;
  double cap = 0;
  for (std::size_t j = 0; j < over.routes.size(); ++j) cap += over.P(0, j);
  over.flows[0].rate_per_min = cap + 1;
  CHECK_FALSE(supportability_check(over));
}

TEST_CASE("mobility simulator properties") {
  MobConfig c;
  c.net = preset_network("exp1");
  c.minutes = 3000;
  c.K = 150;
  MetricsSink a, b;
  auto s = run_mobility(c, &a);
  run_mobility(c, &b);
  CHECK(a.to_csv() == b.to_csv());

  CHECK(s.selections > 0);
  CHECK(s.delivered <= s.admitted);
  CHECK(s.admitted > 0);
  double fsum = 0;
  for (std::size_t j = 0; j < s.f.size(); ++j) {
    fsum += s.f[j];
    CHECK(s.f[j] >= c.net.routes[j].floor - 0.01);
  }
  CHECK(fsum == doctest::Approx(1).epsilon(1e-9));
  // Stable: queues stay far below a run-length-proportional backlog.
  CHECK(s.max_source_q_last < 2 * std::max(1.0, s.max_source_q_first));
  // Everything admitted in the final half leaves on some route.
  for (std::size_t i = 0; i < c.net.flows.size(); ++i) {
    double y = 0;
    for (double v : s.y[i]) y += v;
    CHECK(y == doctest::Approx(c.net.flows[i].rate_per_min).epsilon(0.05));
  }
}

TEST_CASE("mobility with zero minutes") {
  MobConfig c;
  c.net = preset_network("exp1");
  c.minutes = 0;
  MetricsSink sink;
  auto s = run_mobility(c, &sink);
  CHECK(s.selections == 0);
  CHECK(sink.empty());
}
