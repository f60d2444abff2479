#include "netlab/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "netlab/rng.hpp"
#include "netlab/simplex.hpp"

namespace netlab::mob {

int RouteSpec::contacts_with(const std::string& node) const {
  int n = 0;
  for (const auto& v : visits)
    if (v.node == node) n += v.count;
  return n;
}

int RouteSpec::total_contacts() const {
  int n = 0;
  for (const auto& v : visits) n += v.count;
  return n;
}

void Network::validate() const {
  if (routes.empty()) throw ScenarioError("mobility needs at least one route");
  if (eta_pickup < 0 || eta_dropoff < 0) throw ScenarioError("contact budgets must be >= 0");
  double floors = 0.0;
  std::set<std::string> names;
  for (const auto& r : routes) {
    if (!names.insert(r.name).second) throw ScenarioError("duplicate route '" + r.name + "'");
    if (!(r.minutes > 0)) throw ScenarioError("route '" + r.name + "' needs positive duration");
    if (r.cost < 0) throw ScenarioError("route '" + r.name + "' has negative cost");
    if (r.floor < 0 || r.floor > 1) throw ScenarioError("route '" + r.name + "' floor outside [0,1]");
    for (const auto& v : r.visits)
      if (v.count < 1) throw ScenarioError("route '" + r.name + "' has a visit with count < 1");
    floors += r.floor;
  }
  if (floors > 1.0 + 1e-12) throw ScenarioError("surveillance floors sum above 1");
  std::set<std::string> sources;
  for (const auto& f : flows) {
    if (!sources.insert(f.source).second) throw ScenarioError("two flows share source '" + f.source + "'");
    if (f.source == f.destination) throw ScenarioError("flow source equals destination");
    if (f.rate_per_min < 0) throw ScenarioError("negative flow rate");
    if (f.pickup_cost.size() != routes.size()) throw ScenarioError("pickup_cost needs one entry per route");
    for (double a : f.pickup_cost)
      if (a < 0) throw ScenarioError("negative pickup cost");
    bool reach = false;
    for (const auto& r : routes) reach = reach || r.contacts_with(f.source) > 0;
    if (!reach) throw ScenarioError("no route visits source '" + f.source + "'");
  }
}

std::vector<std::string> Network::destinations() const {
  std::set<std::string> s;
  for (const auto& f : flows) s.insert(f.destination);
  return {s.begin(), s.end()};
}

int Network::destination_index(const std::string& node) const {
  auto d = destinations();
  auto it = std::find(d.begin(), d.end(), node);
  return it == d.end() ? -1 : static_cast<int>(it - d.begin());
}

double Network::P(std::size_t i, std::size_t j) const {
  return eta_pickup * routes.at(j).contacts_with(flows.at(i).source) / routes[j].minutes;
}

double Network::D(std::size_t d, std::size_t j) const {
  return eta_dropoff * routes.at(j).contacts_with(destinations().at(d)) / routes[j].minutes;
}

namespace {

RouteSpec route(const std::string& name, std::vector<std::string> nodes, double minutes, double cost, double floor) {
  RouteSpec r{name, {}, minutes, cost, floor};
  for (auto& n : nodes) r.visits.push_back({n, 1});
  return r;
}

}  // namespace

Network preset_network(const std::string& name) {
  Network n;
  if (name == "exp1") {
    n.routes = {route("R1", {"S1", "S2"}, 1, 1, 0), route("R2", {"S1", "S2"}, 2, 0, 0.1),
                route("R3", {"S3", "S4"}, 1, 1, 0), route("R4", {"S3", "S4"}, 2, 0, 0.1)};
    n.flows = {{"S1", "S2", 40, {1, 0, 1, 0}}, {"S2", "S3", 30, {1, 0, 1, 0}}};
    return n;
  }
  if (name == "exp2") {
    const char* reg[] = {"A", "B", "C"};
    for (int g = 0; g < 3; ++g) {
      std::vector<std::string> nodes;
      for (int s = 1; s <= 4; ++s) nodes.push_back("S" + std::to_string(4 * g + s));
      n.routes.push_back(route(std::string(reg[g]) + "f", nodes, 1, 1, 0));
      n.routes.push_back(route(std::string(reg[g]) + "s", nodes, 2, 0, 0.1));
    }
    std::vector<double> a{1, 0, 1, 0, 1, 0};
    n.flows = {{"S1", "S3", 23, a}, {"S4", "S6", 20, a}, {"S9", "S8", 20, a}, {"S12", "S10", 23, a}};
    return n;
  }
  if (name == "illustrative") {
    n.eta_pickup = n.eta_dropoff = 200;
    n.routes = {route("L", {"S1", "S2"}, 2, 0, 0.15), route("R", {"S3", "S4"}, 2, 0, 0.15)};
    n.flows = {{"S1", "S2", 70, {0, 0}}, {"S3", "S4", 20, {0, 0}}};
    return n;
  }
  throw ScenarioError("unknown mobility preset '" + name + "' (exp1, exp2, illustrative)");
}

// ---- controller operations --------------------------------------------------

int stationary_enqueue(const std::vector<double>& a, const std::vector<double>& q, const std::vector<double>& P,
                       double K) {
  if (a.size() != q.size() || q.size() != P.size()) throw std::invalid_argument("one entry per route");
  int best = -1;
  double bv = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!(P[j] > 0)) continue;
    double v = K * a[j] + q[j];
    if (best < 0 || v < bv) {
      best = static_cast<int>(j);
      bv = v;
    }
  }
  if (best < 0) throw std::invalid_argument("no route reaches this stationary");
  return best;
}

bool pickup_decision(double P, double q, double Q_dest) { return P > 0 && q - Q_dest > 0; }

Selection select_route(const SelectionInput& in) {
  const std::size_t J = in.b.size(), F = in.q.size();
  if (J == 0) throw std::invalid_argument("no routes");
  Selection s;
  s.delta.assign(F, std::vector<char>(J, 0));
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t j = 0; j < J; ++j)
      s.delta[i][j] = pickup_decision(in.P[i][j], in.q[i][j], in.Q[in.flow_dest[i]]) ? 1 : 0;
  s.scores.assign(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < F; ++i) v += in.q[i][j] * s.delta[i][j] * in.P[i][j];
    for (std::size_t d = 0; d < in.Q.size(); ++d) {
      double out = in.D[d][j];
      for (std::size_t i = 0; i < F; ++i)
        if (in.flow_dest[i] == static_cast<int>(d)) out -= s.delta[i][j] * in.P[i][j];
      v += in.Q[d] * out;
    }
    v += in.kappa * in.w[j] * (1.0 - in.floors[j]) - in.K * in.b[j];
    s.scores[j] = v;
  }
  s.route = static_cast<int>(std::max_element(s.scores.begin(), s.scores.end()) - s.scores.begin());
  return s;
}

double queue_update(double q, double in, double out) { return std::max(0.0, q + in - out); }

double update_deficit(double w, bool chosen, double T, double p) {
  return std::max(0.0, w + T * p - (chosen ? T : 0.0));
}

StaleSnapshot::StaleSnapshot(std::size_t flows, std::size_t routes)
    : v_(flows, std::vector<double>(routes, 0.0)), stamp_(flows, -1) {}

void StaleSnapshot::observe(std::size_t flow, const std::vector<double>& q_row, std::int64_t k) {
  if (q_row.size() != v_.at(flow).size()) throw std::invalid_argument("snapshot row width");
  v_[flow] = q_row;
  stamp_[flow] = k;
}

// ---- LP reference -----------------------------------------------------------

namespace {

// Variables: f_j (J), z_ij (F*J). With forced f the f columns are pinned.
struct MobLp {
  LinearProgram lp;
  std::size_t J, F;
  std::size_t z(std::size_t i, std::size_t j) const { return J + i * J + j; }
};

MobLp build_lp(const Network& net, const std::optional<std::vector<double>>& forced_f) {
  net.validate();
  MobLp m;
  m.J = net.routes.size();
  m.F = net.flows.size();
  const std::size_t nv = m.J + m.F * m.J;
  m.lp.c.assign(nv, 0.0);
  for (std::size_t j = 0; j < m.J; ++j) m.lp.c[j] = net.routes[j].cost;
  for (std::size_t i = 0; i < m.F; ++i)
    for (std::size_t j = 0; j < m.J; ++j) m.lp.c[m.z(i, j)] = net.flows[i].pickup_cost[j] * net.P(i, j);
  std::vector<double> row(nv, 0.0);
  auto reset = [&] { std::fill(row.begin(), row.end(), 0.0); };
  for (std::size_t i = 0; i < m.F; ++i) {
    reset();
    for (std::size_t j = 0; j < m.J; ++j) row[m.z(i, j)] = net.P(i, j);
    m.lp.add_row(row, RowSense::Eq, net.flows[i].rate_per_min);
  }
  reset();
  for (std::size_t j = 0; j < m.J; ++j) row[j] = 1.0;
  m.lp.add_row(row, RowSense::Le, 1.0);
  for (std::size_t j = 0; j < m.J; ++j) {
    reset();
    row[j] = 1.0;
    if (forced_f) m.lp.add_row(row, RowSense::Eq, forced_f->at(j));
    else m.lp.add_row(row, RowSense::Ge, net.routes[j].floor);
  }
  for (std::size_t i = 0; i < m.F; ++i)
    for (std::size_t j = 0; j < m.J; ++j) {
      reset();
      row[m.z(i, j)] = 1.0;
      row[j] = -1.0;
      m.lp.add_row(row, RowSense::Le, 0.0);
    }
  auto dests = net.destinations();
  for (std::size_t d = 0; d < dests.size(); ++d) {
    reset();
    for (std::size_t i = 0; i < m.F; ++i)
      if (net.flows[i].destination == dests[d])
        for (std::size_t j = 0; j < m.J; ++j) row[m.z(i, j)] += net.P(i, j);
    for (std::size_t j = 0; j < m.J; ++j) row[j] -= net.D(d, j);
    m.lp.add_row(row, RowSense::Le, 0.0);
  }
  return m;
}

}  // namespace

LpResult reference_lp_solve(const Network& net, double K) {
  MobLp m = build_lp(net, std::nullopt);
  LpResult r;
  LpSolution s1 = solve_lp(m.lp);
  if (s1.status != LpStatus::Optimal) return r;
  // Second stage: hold the cost at its optimum and minimise max_j f_j.
  LinearProgram lp2 = m.lp;
  for (auto& row : lp2.A) row.push_back(0.0);
  std::vector<double> cost_row = m.lp.c;
  cost_row.push_back(0.0);
  lp2.c.assign(cost_row.size(), 0.0);
  lp2.c.back() = 1.0;
  lp2.add_row(cost_row, RowSense::Le, s1.objective + 1e-9 * (1.0 + std::abs(s1.objective)));
  for (std::size_t j = 0; j < m.J; ++j) {
    std::vector<double> row(lp2.c.size(), 0.0);
    row[j] = 1.0;
    row.back() = -1.0;
    lp2.add_row(row, RowSense::Le, 0.0);
  }
  LpSolution s2 = solve_lp(lp2);
  const LpSolution& s = s2.status == LpStatus::Optimal ? s2 : s1;
  r.feasible = true;
  r.f.assign(s.x.begin(), s.x.begin() + m.J);
  r.y.assign(m.F, std::vector<double>(m.J, 0.0));
  for (std::size_t i = 0; i < m.F; ++i)
    for (std::size_t j = 0; j < m.J; ++j) r.y[i][j] = s.x[m.z(i, j)] * net.P(i, j);
  double c = 0.0;
  for (std::size_t j = 0; j < m.J; ++j) c += m.lp.c[j] * s.x[j];
  for (std::size_t i = 0; i < m.F; ++i)
    for (std::size_t j = 0; j < m.J; ++j) c += m.lp.c[m.z(i, j)] * s.x[m.z(i, j)];
  r.cost = K * c;
  return r;
}

bool supportability_check(const Network& net, const std::optional<std::vector<double>>& forced_f) {
  if (forced_f && forced_f->size() != net.routes.size()) throw std::invalid_argument("forced f needs one entry per route");
  MobLp m = build_lp(net, forced_f);
  std::fill(m.lp.c.begin(), m.lp.c.end(), 0.0);
  return solve_lp(m.lp).status == LpStatus::Optimal;
}

// ---- simulator --------------------------------------------------------------

MobConfig mob_config_from_json(const Json& j) {
  MobConfig c;
  c.run_id = j.at("run_id").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.slots_per_minute = j.at("slots_per_minute").get<int>();
  c.minutes = j.at("minutes").get<double>();
  c.metrics_every = j.at("metrics_every").get<std::int64_t>();
  const Json& ctl = j.at("controller");
  c.K = ctl.at("K").get<double>();
  c.kappa = ctl.at("kappa").get<double>();
  c.practical = ctl.at("practical").get<bool>();
  c.net.eta_pickup = ctl.at("eta_pickup").get<int>();
  c.net.eta_dropoff = ctl.at("eta_dropoff").get<int>();
  c.arrivals = ctl.at("arrivals").get<std::string>();
  c.forced_cycle = ctl.at("forced_cycle").get<std::vector<std::string>>();
  for (const auto& r : j.at("routes")) {
    RouteSpec rs;
    rs.name = r.at("name").get<std::string>();
    for (const auto& v : r.at("visits")) rs.visits.push_back({v.at("node").get<std::string>(), v.at("count").get<int>()});
    rs.minutes = r.at("minutes").get<double>();
    rs.cost = r.at("cost").get<double>();
    rs.floor = r.at("floor").get<double>();
    c.net.routes.push_back(rs);
  }
  for (const auto& f : j.at("flows")) {
    c.net.flows.push_back({f.at("source").get<std::string>(), f.at("destination").get<std::string>(),
                           f.at("rate_per_min").get<double>(), f.at("pickup_cost").get<std::vector<double>>()});
  }
  // A preset replaces routes and flows; budgets still come from the controller block.
  const auto preset = j.at("preset").get<std::string>();
  if (!preset.empty()) {
    Network p = preset_network(preset);
    c.net.routes = p.routes;
    c.net.flows = p.flows;
  }
  return c;
}

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

MobSummary run_mobility(const MobConfig& cfg, MetricsSink* sink) {
  const Network& net = cfg.net;
  net.validate();
  if (cfg.slots_per_minute < 1) throw ScenarioError("slots_per_minute must be >= 1");
  if (cfg.minutes < 0) throw ScenarioError("minutes must be >= 0");
  if (!(cfg.K > 0)) throw ScenarioError("controller.K must be positive");
  if (cfg.kappa < 0) throw ScenarioError("controller.kappa must be >= 0");
  if (cfg.arrivals != "poisson" && cfg.arrivals != "fluid") throw ScenarioError("arrivals must be poisson or fluid");
  const std::size_t J = net.routes.size(), F = net.flows.size();
  const auto dests = net.destinations();
  std::vector<int> forced;
  for (const auto& n : cfg.forced_cycle) {
    auto it = std::find_if(net.routes.begin(), net.routes.end(), [&](const RouteSpec& r) { return r.name == n; });
    if (it == net.routes.end()) throw ScenarioError("forced_cycle names unknown route '" + n + "'");
    forced.push_back(static_cast<int>(it - net.routes.begin()));
  }

  const double spm = cfg.slots_per_minute;
  std::vector<std::int64_t> T(J);
  std::int64_t T_max = 1;
  for (std::size_t j = 0; j < J; ++j) {
    T[j] = std::max<std::int64_t>(1, std::llround(net.routes[j].minutes * spm));
    T_max = std::max(T_max, T[j]);
  }
  const double kappa = cfg.kappa > 0 ? cfg.kappa : std::max(net.eta_pickup, net.eta_dropoff) / static_cast<double>(T_max);

  SelectionInput sel;
  sel.P.assign(F, std::vector<double>(J));
  sel.D.assign(dests.size(), std::vector<double>(J));
  for (std::size_t i = 0; i < F; ++i)
    for (std::size_t j = 0; j < J; ++j)
      sel.P[i][j] = net.eta_pickup * net.routes[j].contacts_with(net.flows[i].source) / static_cast<double>(T[j]);
  for (std::size_t d = 0; d < dests.size(); ++d)
    for (std::size_t j = 0; j < J; ++j)
      sel.D[d][j] = net.eta_dropoff * net.routes[j].contacts_with(dests[d]) / static_cast<double>(T[j]);
  for (const auto& f : net.flows) sel.flow_dest.push_back(net.destination_index(f.destination));
  for (const auto& r : net.routes) {
    sel.b.push_back(r.cost);
    sel.floors.push_back(r.floor);
  }
  sel.K = cfg.K;
  sel.kappa = kappa;
  sel.w.assign(J, 0.0);
  sel.Q.assign(dests.size(), 0.0);

  std::vector<std::vector<double>> q(F, std::vector<double>(J, 0.0));
  StaleSnapshot snap(F, J);
  std::vector<double> rate(F), carry(F, 0.0);
  for (std::size_t i = 0; i < F; ++i) rate[i] = net.flows[i].rate_per_min / spm;
  std::vector<CounterRng> arr;
  for (std::size_t i = 0; i < F; ++i) arr.emplace_back(cfg.seed, "arrivals/" + net.flows[i].source);

  const std::int64_t total = static_cast<std::int64_t>(std::llround(cfg.minutes * spm));
  const std::int64_t half = total / 2;
  MobSummary out;
  out.y.assign(F, std::vector<double>(J, 0.0));
  out.f.assign(J, 0.0);
  std::vector<std::vector<double>> cum_dep(F, std::vector<double>(J, 0.0));
  std::vector<std::vector<double>> reg_t(F), reg_q(F);
  std::int64_t t = 0, t0 = -1;

  for (std::int64_t k = 0; t < total; ++k) {
    sel.q = cfg.practical ? snap.values() : q;
    Selection s = select_route(sel);
    const int jr = forced.empty() ? s.route : forced[k % forced.size()];
    const std::int64_t Tk = T[jr];
    if (t0 < 0 && t >= half) t0 = t;
    const bool measuring = t0 >= 0;

    // Contact slots evenly spaced through the route.
    const auto& rt = net.routes[jr];
    std::vector<std::string> order;
    for (const auto& v : rt.visits)
      for (int c = 0; c < v.count; ++c) order.push_back(v.node);
    const std::int64_t n = static_cast<std::int64_t>(order.size());
    std::vector<std::int64_t> at(n);
    for (std::int64_t c = 0; c < n; ++c) at[c] = (c + 1) * Tk / (n + 1);
    std::size_t next_contact = 0;

    for (std::int64_t s_ = 0; s_ < Tk; ++s_, ++t) {
      for (std::size_t i = 0; i < F; ++i) {
        std::int64_t a;
        if (cfg.arrivals == "poisson") {
          a = std::poisson_distribution<std::int64_t>(rate[i])(arr[i]);
        } else {
          carry[i] += rate[i];
          a = static_cast<std::int64_t>(carry[i]);
          carry[i] -= static_cast<double>(a);
        }
        if (a == 0) continue;
        int js = stationary_enqueue(net.flows[i].pickup_cost, q[i], sel.P[i], cfg.K);
        q[i][js] += static_cast<double>(a);
        cum_dep[i][js] += static_cast<double>(a);
        out.admitted += a;
        if (measuring) out.y[i][js] += static_cast<double>(a);
      }
      while (next_contact < order.size() && at[next_contact] == s_) {
        const std::string& node = order[next_contact++];
        int d = net.destination_index(node);
        if (d >= 0) {
          double m = std::min<double>(net.eta_dropoff, sel.Q[d]);
          sel.Q[d] -= m;
          out.delivered += static_cast<std::int64_t>(m);
        }
        for (std::size_t i = 0; i < F; ++i) {
          if (net.flows[i].source != node) continue;
          if (s.delta[i][jr]) {
            double m = std::min<double>(net.eta_pickup, q[i][jr]);
            q[i][jr] -= m;
            sel.Q[sel.flow_dest[i]] += m;
          }
          snap.observe(i, q[i], k);
        }
      }
      double mq = 0.0;
      for (std::size_t i = 0; i < F; ++i) {
        double tot = 0.0;
        for (double v : q[i]) tot += v;
        mq = std::max(mq, tot);
        if (measuring && (t - t0) % cfg.slots_per_minute == 0) {
          reg_t[i].push_back(static_cast<double>(t) / spm);
          reg_q[i].push_back(tot);
        }
      }
      if (measuring) out.max_source_q_last = std::max(out.max_source_q_last, mq);
      else out.max_source_q_first = std::max(out.max_source_q_first, mq);
      for (double v : sel.Q) out.max_Q = std::max(out.max_Q, v);
    }
    for (std::size_t j = 0; j < J; ++j) {
      sel.w[j] = update_deficit(sel.w[j], static_cast<int>(j) == jr, static_cast<double>(Tk), net.routes[j].floor);
      out.max_w = std::max(out.max_w, sel.w[j]);
    }
    if (measuring) out.f[jr] += static_cast<double>(Tk);
    out.selections = k + 1;

    if (sink && cfg.metrics_every > 0 && (k + 1) % cfg.metrics_every == 0) {
      const std::string& rid = cfg.run_id;
      sink->record(rid, t, "route", "mobile", jr);
      for (std::size_t j = 0; j < J; ++j) {
        sink->record(rid, t, "w", net.routes[j].name, sel.w[j]);
        sink->record(rid, t, "score", net.routes[j].name, s.scores[j]);
      }
      for (std::size_t i = 0; i < F; ++i)
        for (std::size_t j = 0; j < J; ++j) {
          std::string subj = net.flows[i].source + "@" + net.routes[j].name;
          sink->record(rid, t, "q", subj, q[i][j]);
          sink->record(rid, t, "y", subj, cum_dep[i][j] * spm / static_cast<double>(t));
        }
      for (std::size_t d = 0; d < dests.size(); ++d) sink->record(rid, t, "Q", dests[d], sel.Q[d]);
    }
  }

  const double span = t0 >= 0 ? static_cast<double>(t - t0) : 0.0;
  if (span > 0) {
    double c = 0.0;
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        out.y[i][j] *= spm / span;
        c += net.flows[i].pickup_cost[j] * out.y[i][j];
      }
    for (std::size_t j = 0; j < J; ++j) {
      out.f[j] /= span;
      c += net.routes[j].cost * out.f[j];
    }
    out.cost = cfg.K * c;
  }
  for (std::size_t i = 0; i < F; ++i) out.source_q_slope.push_back(slope(reg_t[i], reg_q[i]));
  return out;
}

}  // namespace netlab::mob
