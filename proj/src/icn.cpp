#include "netlab/icn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

#include "netlab/invariant.hpp"
#include "netlab/rng.hpp"

namespace netlab {

IcnMode parse_icn_mode(const std::string& s) {
  if (s == "bp") return IcnMode::Traditional;
  if (s == "bpsr") return IcnMode::Bpsr;
  if (s == "two_scale") return IcnMode::TwoScale;
  throw ScenarioError("unknown icn mode '" + s + "' (bp, bpsr, two_scale)");
}

IcnConfig icn_config_from_json(const Json& j) {
  IcnConfig c;
  c.run_id = j.at("run_id").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.horizon = j.at("horizon").get<std::int64_t>();
  c.metrics_every = j.at("metrics_every").get<std::int64_t>();
  const Json& t = j.at("topology");
  c.topology.builder = t.at("builder").get<std::string>();
  c.topology.n_left = t.at("n_left").get<int>();
  c.topology.n_right = t.at("n_right").get<int>();
  c.topology.rows = t.at("rows").get<int>();
  c.topology.cols = t.at("cols").get<int>();
  c.topology.clusters = t.at("clusters").get<int>();
  c.topology.gateways = t.at("gateways").get<int>();
  c.topology.leaves = t.at("leaves").get<int>();
  c.topology.mobiles = t.at("mobiles").get<int>();
  c.topology.directed = t.at("directed").get<bool>();
  c.topology.capacity = t.at("capacity").get<int>();
  c.interference = j.at("interference").at("kind").get<std::string>();
  c.interference_sets = j.at("interference").at("sets").get<std::vector<std::vector<std::string>>>();
  const Json& a = j.at("algorithm");
  c.mode = parse_icn_mode(a.at("mode").get<std::string>());
  c.T = a.at("T").get<std::int64_t>();
  c.T_estimate = a.at("T_estimate").get<std::int64_t>();
  c.R = a.at("R").get<int>();
  c.eta = a.at("eta").get<int>();
  c.beta = a.at("beta").get<double>();
  c.kappa = a.at("kappa").get<int>();
  c.decision_interval = a.at("decision_interval").get<int>();
  c.rate_filter = a.at("rate_filter").get<double>();
  c.shadow_red_per_batch = a.at("shadow_red_per_batch").get<int>();
  c.loop_prevention = a.at("loop_prevention").get<bool>();
  c.regulated = a.at("regulated").get<bool>();
  c.regulated_delta = a.at("regulated_delta").get<double>();
  c.check_invariants = a.at("check_invariants").get<bool>();
  for (const auto& m : j.at("mobility")) {
    IcnChainSpec ch;
    ch.preset = m.at("preset").get<std::string>();
    ch.transition = m.at("transition").get<Matrix>();
    ch.initial = m.at("initial").get<int>();
    c.mobility.push_back(ch);
  }
  for (const auto& f : j.at("flows")) {
    IcnFlowSpec fs;
    fs.source = f.at("source").get<std::string>();
    fs.destination = f.at("destination").get<std::string>();
    fs.rate = f.at("rate").get<double>();
    fs.rate_control = f.at("rate_control").get<bool>();
    fs.K = f.at("K").get<double>();
    c.flows.push_back(fs);
  }
  return c;
}

namespace {

struct Transit {
  int to;
  int commodity;
  Packet p;
};

struct FlowRt {
  int src = 0;
  int dst = 0;
  bool inter = false;
  double rate = 0;
  bool rc = false;
  UtilityFlow uf;
  CounterRng rng;
  int sel_gs = -1;
  int sel_gd = -1;
  std::int64_t batch_pos = 0;
  // final-half accumulators
  std::int64_t admitted = 0, blue_admitted = 0, delivered = 0, blue_delivered = 0, picked = 0;
  double delay_sum = 0, pickup_sum = 0;
  // sampling window
  std::int64_t w_admitted = 0, w_delivered = 0;
  double w_delay = 0;
  std::int64_t w_delay_n = 0;
};

struct MobileRt {
  int node = 0;  // index into the queue tables
  Matrix P;
  int state = 0;
  CounterRng rng;
};

class IcnSim {
 public:
  IcnSim(const IcnConfig& cfg, MetricsSink* sink) : cfg_(cfg), sink_(sink) {
    if (cfg.T < 1) throw ScenarioError("algorithm.T must be >= 1");
    if (cfg.horizon < 0) throw ScenarioError("horizon must be >= 0");
    if (cfg.R < 0 || cfg.eta < 1 || cfg.kappa < 1 || cfg.decision_interval < 1)
      throw ScenarioError("R >= 0, eta >= 1, kappa >= 1 and decision_interval >= 1 required");
    if (cfg.beta <= 0) throw ScenarioError("beta must be positive");
    if (cfg.shadow_red_per_batch < 0 || cfg.shadow_red_per_batch >= cfg.kappa)
      throw ScenarioError("shadow_red_per_batch must be in [0, kappa)");
    try {
      topo_ = build_topology(cfg.topology);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("topology: ") + e.what());
    }
    N_ = topo_.node_count();
    M_ = static_cast<int>(topo_.mobiles().size());
    That_ = static_cast<double>(cfg.T_estimate > 0 ? cfg.T_estimate : cfg.T);
    shadow_ = cfg.shadow_red_per_batch > 0;
    q_.resize(N_ + M_);
    u_.resize(N_ + M_);

    model_.kind = parse_interference(cfg.interference);
    if (model_.kind == InterferenceKind::IndependentSets) {
      for (const auto& set : cfg.interference_sets) {
        std::vector<int> ids;
        for (const auto& name : set) {
          auto arrow = name.find("->");
          if (arrow == std::string::npos) throw ScenarioError("interference link '" + name + "' must be a->b");
          int a = resolve(name.substr(0, arrow)), b = resolve(name.substr(arrow + 2));
          int li = topo_.link_index(a, b);
          if (li < 0) throw ScenarioError("interference link '" + name + "' not in topology");
          ids.push_back(li);
        }
        model_.sets.push_back(ids);
      }
    }

    if (!cfg.mobility.empty() && cfg.mobility.size() != 1 && static_cast<int>(cfg.mobility.size()) != M_)
      throw ScenarioError("mobility needs one chain or one per mobile");
    for (int m = 0; m < M_; ++m) {
      MobileRt mr;
      mr.node = N_ + m;
      int n = static_cast<int>(topo_.mobiles()[m].contacts.size());
      IcnChainSpec spec = cfg.mobility.empty() ? IcnChainSpec{"shuttle", {}, 0}
                                               : cfg.mobility[cfg.mobility.size() == 1 ? 0 : m];
      try {
        mr.P = spec.preset.empty() ? spec.transition : chain_preset(spec.preset, n);
        if (static_cast<int>(mr.P.size()) != n) throw std::invalid_argument("chain size differs from contact count");
        validate_chain(mr.P);
      } catch (const std::invalid_argument& e) {
        throw ScenarioError("mobility " + topo_.mobiles()[m].name + ": " + e.what());
      }
      if (spec.initial < 0 || spec.initial >= n) throw ScenarioError("mobility initial state out of range");
      mr.state = spec.initial;
      mr.rng = CounterRng(cfg.seed, "mobility/" + topo_.mobiles()[m].name);
      mobiles_.push_back(mr);
    }
    contacts_.resize(M_);

    for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
      const auto& fs = cfg.flows[i];
      FlowRt f;
      f.src = resolve(fs.source);
      f.dst = resolve(fs.destination);
      if (f.src == f.dst) throw ScenarioError("flow source equals destination");
      f.inter = topo_.cluster_of(f.src) != topo_.cluster_of(f.dst);
      f.rate = fs.rate;
      f.rc = fs.rate_control;
      if (!f.rc && f.rate < 0) throw ScenarioError("flow rate must be non-negative");
      if (f.rc && fs.K <= 0) throw ScenarioError("flow K must be positive");
      if (f.rc && cfg.mode == IcnMode::Bpsr) throw ScenarioError("rate control is not defined for bpsr mode");
      f.uf = UtilityFlow{fs.K, static_cast<double>(cfg.kappa) / cfg.decision_interval, cfg.kappa, cfg.beta};
      f.rng = CounterRng(cfg.seed, "arrivals/" + std::to_string(i));
      flows_.push_back(f);
    }
    hop_.assign(N_, std::vector<int>(N_, -1));
    for (int c = 0; c < topo_.cluster_count(); ++c) bfs_cluster(c);
  }

  IcnSummary run();

 private:
  int resolve(const std::string& name) const {
    if (!topo_.has_node(name)) throw ScenarioError("unknown node '" + name + "'");
    return topo_.id(name);
  }

  void bfs_cluster(int c) {
    std::vector<std::vector<int>> adj(N_);
    for (int li : topo_.cluster_links(c)) {
      const Link& l = topo_.links()[li];
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    for (int s : topo_.cluster_nodes(c)) {
      std::deque<int> bq{s};
      hop_[s][s] = 0;
      while (!bq.empty()) {
        int v = bq.front();
        bq.pop_front();
        for (int w : adj[v])
          if (hop_[w][s] < 0) {
            hop_[w][s] = hop_[v][s] + 1;
            bq.push_back(w);
          }
      }
    }
  }

  bool split_at(int node) const { return shadow_ && (node >= N_ || topo_.is_gateway(node)); }

  PacketQueue& Q(PerDestQueues& t, int node, int c) {
    auto& m = t.of(node);
    auto it = m.find(c);
    if (it == m.end()) it = m.emplace(c, PacketQueue(split_at(node))).first;
    return it->second;
  }

  static double L(const PerDestQueues& t, int node, int c) { return static_cast<double>(t.len(node, c)); }

  // Length a receiver reports for commodity c in intra-cluster weights.
  double advertised(int n, int c) const {
    if (n == c) return 0.0;
    if (cfg_.mode == IcnMode::TwoScale && topo_.is_gateway(n) && topo_.cluster_of(c) != topo_.cluster_of(n))
      return advertise_gateway_queue(L(u_, n, c), That_);
    return L(q_, n, c);
  }

  void deliver(const Packet& p) {
    FlowRt& f = flows_[p.flow];
    ++delivered_total_;
    if (t_ >= half_) {
      ++f.delivered;
      if (!p.red) {
        ++f.blue_delivered;
        f.delay_sum += static_cast<double>(t_ - p.created);
      }
    }
    ++f.w_delivered;
    if (!p.red) {
      f.w_delay += static_cast<double>(t_ - p.created);
      ++f.w_delay_n;
    }
  }

  // BP+SR: packet joins the overlay at node n.
  void enter_type2(int n, Packet p) {
    if (n == p.dest) return deliver(p);
    int key;
    if (n == p.gd) key = p.dest;
    else if (topo_.is_gateway(n)) key = p.gd;
    else key = p.gs;
    if (key == n) throw InvariantViolation(t_, "type-II queue keyed by its own node");
    Q(u_, n, key).push(p);
    if (cfg_.regulated && topo_.is_gateway(n)) ++reg_in_[n];
  }

  // Type-I arrival over an intra-cluster link.
  void arrive(int n, int commodity, Packet p) {
    if (n == p.dest) return deliver(p);
    switch (cfg_.mode) {
      case IcnMode::Traditional: Q(q_, n, p.dest).push(p); break;
      case IcnMode::TwoScale:
        if (topo_.is_gateway(n) && topo_.cluster_of(p.dest) != topo_.cluster_of(n)) Q(u_, n, p.dest).push(p);
        else Q(q_, n, p.dest).push(p);
        break;
      case IcnMode::Bpsr:
        if (n == commodity) enter_type2(n, p);
        else Q(q_, n, commodity).push(p);
        break;
    }
  }

  void drop_off(int g, Packet p) {
    if (g == p.dest) return deliver(p);
    switch (cfg_.mode) {
      case IcnMode::Traditional: Q(q_, g, p.dest).push(p); break;
      case IcnMode::TwoScale: Q(u_, g, p.dest).push(p); break;
      case IcnMode::Bpsr: enter_type2(g, p); break;
    }
  }

  PerDestQueues& overlay() { return cfg_.mode == IcnMode::Traditional ? q_ : u_; }

  std::map<int, double> lengths(PerDestQueues& t, int node, int exclude_cluster) {
    std::map<int, double> m;
    for (const auto& [c, pq] : t.of(node))
      if (!pq.empty() && (exclude_cluster < 0 || topo_.cluster_of(c) != exclude_cluster))
        m[c] = static_cast<double>(pq.size());
    return m;
  }

  void super_slot_start();
  void exchange(MobileRt& mr);
  void bpsr_plan();
  void bpsr_transfers();
  void two_scale_release();
  void schedule_clusters();
  void admissions();
  void check_locality();
  void sample();
  void check_conservation();
  void regulate();

  const IcnConfig& cfg_;
  MetricsSink* sink_;
  TopologyGraph topo_;
  int N_ = 0, M_ = 0;
  double That_ = 1;
  bool shadow_ = false;
  InterferenceModel model_;
  PerDestQueues q_, u_;
  std::vector<MobileRt> mobiles_;
  std::vector<FlowRt> flows_;
  std::vector<std::vector<int>> hop_;  // hop_[n][target]
  std::vector<std::vector<std::int64_t>> contacts_;
  std::int64_t t_ = 0, tau_ = 0, half_ = 0;
  std::int64_t created_total_ = 0, delivered_total_ = 0;

  // BP+SR plan for the current super slot.
  std::map<std::pair<int, int>, double> theta_src_;                    // (s, g)
  std::map<std::pair<int, int>, GatewayBalance> balance_;              // (g1, g2)
  std::map<std::pair<int, int>, double> theta_dst_;                    // (g, d)

  std::map<int, std::int64_t> reg_in_, reg_moved_, reg_out_;
  std::map<int, double> reg_credit_;

  IcnSummary sum_;
};

void IcnSim::exchange(MobileRt& mr) {
  const MobileInfo& mi = topo_.mobiles()[mr.node - N_];
  int g = mi.contacts[mr.state];
  int m = mr.node;
  PerDestQueues& ov = overlay();
  auto mob = lengths(ov, m, -1);
  auto gw_full = lengths(ov, g, -1);
  auto gw_out = lengths(ov, g, topo_.cluster_of(g));
  Exchange up = mobile_gateway_exchange(mob, gw_full, static_cast<std::size_t>(cfg_.R));
  Exchange down = mobile_gateway_exchange(mob, gw_out, static_cast<std::size_t>(cfg_.R));

  std::vector<Packet> ups, downs;
  if (up.up_commodity >= 0) {
    auto skip = [&](const Packet& p) { return cfg_.loop_prevention && !loop_prevention_filter(p.last_gw, g); };
    Q(ov, m, up.up_commodity).take(up.up, ups, skip);
  }
  if (down.down_commodity >= 0) Q(ov, g, down.down_commodity).take(down.down, downs);
  for (Packet& p : downs) {
    if (p.picked < 0) {
      p.picked = t_;
      FlowRt& f = flows_[p.flow];
      if (t_ >= half_ && !p.red) {
        ++f.picked;
        f.pickup_sum += static_cast<double>(t_ - p.created);
      }
    }
    p.last_gw = g;
    if (cfg_.regulated) ++reg_out_[g];
    Q(ov, m, down.down_commodity).push(p);
  }
  for (const Packet& p : ups) drop_off(g, p);
  if (sink_) {
    std::string subj = topo_.mobiles()[m - N_].name + "@" + topo_.node(g).name;
    sink_->record(cfg_.run_id, t_, "contact_up", subj, static_cast<double>(ups.size()));
    sink_->record(cfg_.run_id, t_, "contact_down", subj, static_cast<double>(downs.size()));
  }
}

void IcnSim::super_slot_start() {
  for (auto& mr : mobiles_) {
    if (tau_ > 0) mr.state = mobility_step(mr.P, mr.state, mr.rng.uniform());
    contacts_[mr.node - N_].push_back(topo_.mobiles()[mr.node - N_].contacts[mr.state]);
  }
  for (auto& mr : mobiles_) exchange(mr);
  if (cfg_.mode == IcnMode::Bpsr) bpsr_plan();
}

void IcnSim::bpsr_plan() {
  for (auto& f : flows_) {
    if (!f.inter) continue;
    auto gs = topo_.gateways(topo_.cluster_of(f.src));
    auto gd = topo_.gateways(topo_.cluster_of(f.dst));
    std::vector<double> us(gs.size()), ud(gd.size());
    Matrix ugg(gs.size(), std::vector<double>(gd.size()));
    for (std::size_t i = 0; i < gs.size(); ++i) us[i] = f.src == gs[i] ? 0.0 : L(u_, f.src, gs[i]);
    for (std::size_t j = 0; j < gd.size(); ++j) ud[j] = f.dst == gd[j] ? 0.0 : L(u_, gd[j], f.dst);
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t j = 0; j < gd.size(); ++j) ugg[i][j] = L(u_, gs[i], gd[j]);
    auto [i, j] = select_gateways(us, ugg, ud);
    f.sel_gs = gs[i];
    f.sel_gd = gd[j];
  }
  theta_src_.clear();
  balance_.clear();
  theta_dst_.clear();
  for (int n = 0; n < N_; ++n) {
    double K = That_ / static_cast<double>(topo_.cluster_nodes(topo_.cluster_of(n)).size());
    if (!topo_.is_gateway(n)) {
      for (const auto& [g, pq] : u_.of(n))
        if (!pq.empty()) theta_src_[{n, g}] = static_cast<double>(pq.size()) / K;
      continue;
    }
    for (const auto& [d, pq] : u_.of(n))
      if (!pq.empty() && !topo_.is_gateway(d) && topo_.cluster_of(d) == topo_.cluster_of(n))
        theta_dst_[{n, d}] = static_cast<double>(pq.size()) / K;
    for (int g2 : topo_.gateways(topo_.cluster_of(n))) {
      if (g2 == n) continue;
      std::map<int, double> u1, u2;
      for (const auto& [l, pq] : u_.of(n))
        if (!pq.empty() && topo_.is_gateway(l)) u1[l] = static_cast<double>(pq.size());
      for (const auto& [l, pq] : u_.of(g2))
        if (!pq.empty() && topo_.is_gateway(l)) u2[l] = static_cast<double>(pq.size());
      GatewayBalance b = gateway_balance(u1, u2, K);
      if (b.commodity >= 0 && b.theta > 0) balance_[{n, g2}] = b;
    }
  }
}

void IcnSim::bpsr_transfers() {
  std::vector<Packet> moved;
  for (const auto& [key, theta] : theta_src_) {
    auto [s, g] = key;
    auto& src = Q(u_, s, g);
    double K = That_ / static_cast<double>(topo_.cluster_nodes(topo_.cluster_of(s)).size());
    int n = transfer_source(theta * K, L(q_, s, g), K, cfg_.eta, src.size());
    moved.clear();
    src.take(static_cast<std::size_t>(n), moved);
    for (auto& p : moved) Q(q_, s, g).push(p);
  }
  for (const auto& [key, b] : balance_) {
    auto [g1, g2] = key;
    auto& src = Q(u_, g1, b.commodity);
    int n = transfer_gateway_balance(b, L(q_, g1, g2), cfg_.eta, src.size());
    moved.clear();
    src.take(static_cast<std::size_t>(n), moved);
    if (cfg_.regulated) reg_out_[g1] += static_cast<std::int64_t>(moved.size());
    for (auto& p : moved) Q(q_, g1, g2).push(p);
  }
  for (const auto& [key, theta] : theta_dst_) {
    auto [g, d] = key;
    auto& src = Q(u_, g, d);
    double K = That_ / static_cast<double>(topo_.cluster_nodes(topo_.cluster_of(g)).size());
    int n = transfer_destination(theta * K, L(q_, g, d), K, cfg_.eta, src.size());
    moved.clear();
    src.take(static_cast<std::size_t>(n), moved);
    if (cfg_.regulated) reg_out_[g] += static_cast<std::int64_t>(moved.size());
    for (auto& p : moved) Q(q_, g, d).push(p);
  }
}

void IcnSim::two_scale_release() {
  std::vector<Packet> moved;
  for (int g : topo_.all_gateways()) {
    for (auto& [d, hq] : u_.of(g)) {
      if (hq.empty() || topo_.cluster_of(d) != topo_.cluster_of(g)) continue;
      int n = destination_gateway_release(static_cast<double>(hq.size()), L(q_, g, d), That_, cfg_.eta);
      moved.clear();
      hq.take(static_cast<std::size_t>(n), moved);
      for (auto& p : moved) Q(q_, g, d).push(p);
    }
  }
}

void IcnSim::schedule_clusters() {
  std::vector<Transit> transit;
  std::vector<Packet> moved;
  for (int c = 0; c < topo_.cluster_count(); ++c) {
    auto links = topo_.cluster_links(c);
    std::vector<double> w(links.size(), 0.0);
    std::vector<int> comm(links.size(), -1);
    for (std::size_t k = 0; k < links.size(); ++k) {
      const Link& l = topo_.links()[links[k]];
      for (const auto& [j, pq] : q_.of(l.from)) {
        if (pq.empty()) continue;
        double d = static_cast<double>(pq.size()) - advertised(l.to, j);
        if (d > w[k]) {
          w[k] = d;
          comm[k] = j;
        }
      }
    }
    auto chosen = maxweight_schedule(topo_, links, w, model_);
    if (cfg_.check_invariants && model_.kind != InterferenceKind::Unconstrained &&
        model_.kind != InterferenceKind::IndependentSets) {
      std::vector<int> ids;
      for (int k : chosen) ids.push_back(links[k]);
      if (!node_exclusive(topo_, ids)) throw InvariantViolation(t_, "schedule is not node-exclusive");
    }
    for (int k : chosen) {
      if (!(w[k] > 0)) throw InvariantViolation(t_, "activated link with non-positive weight");
      const Link& l = topo_.links()[links[k]];
      moved.clear();
      Q(q_, l.from, comm[k]).take(static_cast<std::size_t>(l.capacity), moved);
      for (auto& p : moved) transit.push_back({l.to, comm[k], p});
    }
  }
  for (auto& tr : transit) arrive(tr.to, tr.commodity, tr.p);
}

void IcnSim::admissions() {
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    FlowRt& f = flows_[i];
    int count = 0;
    if (f.rc) {
      if ((t_ + 1) % cfg_.decision_interval != 0) continue;
      double ql = L(q_, f.src, f.dst);
      if (cfg_.mode == IcnMode::TwoScale && topo_.is_gateway(f.src) && f.inter)
        ql = advertise_gateway_queue(L(u_, f.src, f.dst), That_);
      count = rate_control_step(f.uf, ql);
      f.uf.x = rate_estimate_update(f.uf.x, count, cfg_.decision_interval, cfg_.rate_filter);
    } else {
      double whole = std::floor(f.rate);
      count = static_cast<int>(whole) + (f.rng.bernoulli(f.rate - whole) ? 1 : 0);
    }
    for (int k = 0; k < count; ++k) {
      Packet p;
      p.created = t_;
      p.flow = static_cast<int>(i);
      p.dest = f.dst;
      p.gs = f.sel_gs;
      p.gd = f.sel_gd;
      if (f.rc && shadow_) p.red = (f.batch_pos % cfg_.kappa) >= cfg_.kappa - cfg_.shadow_red_per_batch;
      ++f.batch_pos;
      ++created_total_;
      ++f.w_admitted;
      if (t_ >= half_) {
        ++f.admitted;
        if (!p.red) ++f.blue_admitted;
      }
      if (cfg_.mode == IcnMode::Bpsr && f.inter) enter_type2(f.src, p);
      else if (cfg_.mode == IcnMode::TwoScale && f.inter && topo_.is_gateway(f.src)) Q(u_, f.src, f.dst).push(p);
      else Q(q_, f.src, f.dst).push(p);
    }
  }
}

void IcnSim::check_locality() {
  for (int n = 0; n < N_; ++n) {
    if (topo_.is_gateway(n)) {
      double tot = static_cast<double>(q_.node_total(n) + u_.node_total(n));
      sum_.max_gateway_backlog = std::max(sum_.max_gateway_backlog, tot);
      continue;
    }
    for (const auto& [c, pq] : q_.of(n)) {
      if (pq.empty()) continue;
      double len = static_cast<double>(pq.size());
      sum_.max_internal_q = std::max(sum_.max_internal_q, len);
      int h = c < N_ ? hop_[n][c] : -1;
      if (h >= 0 && len >= h + 1) ++sum_.locality_violations;
    }
    for (const auto& [c, pq] : u_.of(n)) sum_.max_source_u = std::max(sum_.max_source_u, static_cast<double>(pq.size()));
  }
  for (int m = N_; m < N_ + M_; ++m)
    sum_.max_mobile_backlog =
        std::max(sum_.max_mobile_backlog, static_cast<double>(q_.node_total(m) + u_.node_total(m)));
}

void IcnSim::check_conservation() {
  std::int64_t held = static_cast<std::int64_t>(q_.total() + u_.total());
  if (created_total_ != held + delivered_total_)
    throw InvariantViolation(t_, "packet conservation: created " + std::to_string(created_total_) + " != held " +
                                     std::to_string(held) + " + delivered " + std::to_string(delivered_total_));
  for (int n = 0; n < N_ + M_; ++n)
    if (q_.len(n, n) != 0 || u_.len(n, n) != 0) throw InvariantViolation(t_, "self-addressed queue is non-empty");
}

void IcnSim::sample() {
  const double span = static_cast<double>(cfg_.metrics_every);
  for (auto& f : flows_) {
    std::string subj = topo_.node(f.src).name + "->" + topo_.node(f.dst).name;
    sink_->record(cfg_.run_id, t_, "admitted_rate", subj, f.w_admitted / span);
    sink_->record(cfg_.run_id, t_, "delivered_rate", subj, f.w_delivered / span);
    if (f.rc) sink_->record(cfg_.run_id, t_, "x_estimate", subj, f.uf.x);
    if (f.w_delay_n > 0) sink_->record(cfg_.run_id, t_, "delay_mean", subj, f.w_delay / f.w_delay_n);
    f.w_admitted = f.w_delivered = f.w_delay_n = 0;
    f.w_delay = 0;
  }
  for (int n = 0; n < N_ + M_; ++n) {
    std::string name = n < N_ ? topo_.node(n).name : topo_.mobiles()[n - N_].name;
    sink_->record(cfg_.run_id, t_, "q_len", name, static_cast<double>(q_.node_total(n)));
    sink_->record(cfg_.run_id, t_, "u_len", name, static_cast<double>(u_.node_total(n)));
  }
  if (cfg_.regulated) {
    for (int g : topo_.all_gateways()) {
      double regulated = static_cast<double>(std::max<std::int64_t>(0, reg_moved_[g] - reg_out_[g]));
      sink_->record(cfg_.run_id, t_, "u_regulated", topo_.node(g).name, regulated);
      sink_->record(cfg_.run_id, t_, "u_real", topo_.node(g).name, static_cast<double>(reg_in_[g] - reg_moved_[g]));
    }
  }
}

// Shadow-tracks real -> regulated transfers at (1 + delta) times the summed
// inter-cluster rates; never touches the packets themselves.
void IcnSim::regulate() {
  double y = 0.0;
  for (const auto& f : flows_)
    if (f.inter) y += f.rc ? f.uf.x : f.rate;
  y *= 1.0 + cfg_.regulated_delta;
  for (int g : topo_.all_gateways()) {
    std::int64_t backlog = reg_in_[g] - reg_moved_[g];
    double& credit = reg_credit_[g];
    credit += y;
    std::int64_t k = std::min<std::int64_t>(backlog, static_cast<std::int64_t>(std::floor(credit)));
    reg_moved_[g] += k;
    credit -= static_cast<double>(k);
    if (backlog == k) credit = std::min(credit, 1.0);
  }
}

IcnSummary IcnSim::run() {
  half_ = cfg_.horizon / 2;
  for (t_ = 0; t_ < cfg_.horizon; ++t_) {
    tau_ = t_ / cfg_.T;
    if (t_ % cfg_.T == 0) super_slot_start();
    if (cfg_.mode == IcnMode::Bpsr) bpsr_transfers();
    else if (cfg_.mode == IcnMode::TwoScale) two_scale_release();
    schedule_clusters();
    admissions();
    if (cfg_.regulated) regulate();
    check_locality();
    bool boundary = cfg_.metrics_every > 0 && (t_ + 1) % cfg_.metrics_every == 0;
    if (cfg_.check_invariants && (boundary || t_ + 1 == cfg_.horizon)) check_conservation();
    if (sink_ && boundary) sample();
  }
  t_ = cfg_.horizon;
  const double span = std::max(1.0, static_cast<double>(cfg_.horizon - half_));
  for (auto& f : flows_) {
    IcnFlowStats s;
    s.admitted_rate = f.admitted / span;
    s.blue_admitted_rate = f.blue_admitted / span;
    s.delivered_rate = f.delivered / span;
    s.delivered = f.delivered;
    s.mean_delay = f.blue_delivered > 0 ? f.delay_sum / f.blue_delivered : 0.0;
    s.picked = f.picked;
    s.mean_pickup_delay = f.picked > 0 ? f.pickup_sum / f.picked : 0.0;
    s.x_estimate = f.uf.x;
    sum_.flows.push_back(s);
  }
  sum_.slots = cfg_.horizon;
  sum_.contacts = contacts_;
  return sum_;
}

}  // namespace

IcnSummary run_icn(const IcnConfig& cfg, MetricsSink* sink) {
  IcnSim sim(cfg, sink);
  return sim.run();
}

}  // namespace netlab
