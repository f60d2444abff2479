#include "netlab/bp.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace netlab {

void PacketQueue::push(Packet p) {
  if (split_ && p.red) red_.push_back(p);
  else blue_.push_back(p);
}

Packet PacketQueue::pop() {
  if (!blue_.empty()) {
    Packet p = blue_.front();
    blue_.pop_front();
    return p;
  }
  if (red_.empty()) throw std::logic_error("pop from empty packet queue");
  Packet p = red_.front();
  red_.pop_front();
  return p;
}

std::size_t PacketQueue::take(std::size_t n, std::vector<Packet>& out) {
  std::size_t moved = 0;
  while (moved < n && !empty()) {
    out.push_back(pop());
    ++moved;
  }
  return moved;
}

std::size_t PerDestQueues::len(int node, int commodity) const {
  const auto& m = q_.at(node);
  auto it = m.find(commodity);
  return it == m.end() ? 0 : it->second.size();
}

PacketQueue& PerDestQueues::at(int node, int commodity) { return q_.at(node)[commodity]; }

std::size_t PerDestQueues::total() const {
  std::size_t s = 0;
  for (std::size_t n = 0; n < q_.size(); ++n) s += node_total(static_cast<int>(n));
  return s;
}

std::size_t PerDestQueues::node_total(int node) const {
  std::size_t s = 0;
  for (const auto& [c, pq] : q_.at(node)) s += pq.size();
  return s;
}

BpWeight backpressure_weights(const std::map<int, double>& qm, const std::map<int, double>& qn) {
  BpWeight best;
  bool any = false;
  auto consider = [&](int c) {
    auto im = qm.find(c);
    auto in = qn.find(c);
    double d = (im == qm.end() ? 0.0 : im->second) - (in == qn.end() ? 0.0 : in->second);
    if (!any || d > best.weight || (d == best.weight && c < best.commodity)) {
      best = {c, d};
      any = true;
    }
  };
  for (const auto& [c, v] : qm) consider(c);
  for (const auto& [c, v] : qn) consider(c);
  return best;
}

InterferenceKind parse_interference(const std::string& s) {
  if (s == "greedy") return InterferenceKind::Greedy;
  if (s == "line_dp") return InterferenceKind::LineDp;
  if (s == "exhaustive") return InterferenceKind::Exhaustive;
  if (s == "independent_sets") return InterferenceKind::IndependentSets;
  if (s == "unconstrained") return InterferenceKind::Unconstrained;
  throw std::invalid_argument("unknown interference kind '" + s + "'");
}

std::string to_string(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::Greedy: return "greedy";
    case InterferenceKind::LineDp: return "line_dp";
    case InterferenceKind::Exhaustive: return "exhaustive";
    case InterferenceKind::IndependentSets: return "independent_sets";
    case InterferenceKind::Unconstrained: return "unconstrained";
  }
  return "?";
}

bool node_exclusive(const TopologyGraph& topo, const std::vector<int>& link_ids) {
  std::vector<int> seen;
  for (int id : link_ids) {
    const Link& l = topo.links().at(id);
    seen.push_back(l.from);
    seen.push_back(l.to);
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

namespace {

std::vector<int> greedy(const TopologyGraph& topo, const std::vector<int>& links, const std::vector<double>& w) {
  std::vector<int> order;
  for (int k = 0; k < static_cast<int>(links.size()); ++k)
    if (w[k] > 0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  std::vector<char> used(topo.node_count(), 0);
  std::vector<int> chosen;
  for (int k : order) {
    const Link& l = topo.links()[links[k]];
    if (used[l.from] || used[l.to]) continue;
    used[l.from] = used[l.to] = 1;
    chosen.push_back(k);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<int> exhaustive(const TopologyGraph& topo, const std::vector<int>& links, const std::vector<double>& w) {
  std::vector<int> cand;
  for (int k = 0; k < static_cast<int>(links.size()); ++k)
    if (w[k] > 0) cand.push_back(k);
  if (cand.size() > 16) throw std::invalid_argument("exhaustive scheduler limited to 16 active links");
  std::vector<char> used(topo.node_count(), 0);
  std::vector<int> cur, best;
  double best_sum = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double sum) {
    if (i == cand.size()) {
      if (sum > best_sum) {
        best_sum = sum;
        best = cur;
      }
      return;
    }
    const Link& l = topo.links()[links[cand[i]]];
    if (!used[l.from] && !used[l.to]) {
      used[l.from] = used[l.to] = 1;
      cur.push_back(cand[i]);
      rec(i + 1, sum + w[cand[i]]);
      cur.pop_back();
      used[l.from] = used[l.to] = 0;
    }
    rec(i + 1, sum);
  };
  rec(0, 0.0);
  return best;
}

// Exact node-exclusive matching when the undirected support is a forest;
// falls back to enumeration otherwise.
std::vector<int> forest_dp(const TopologyGraph& topo, const std::vector<int>& links, const std::vector<double>& w) {
  const int n = topo.node_count();
  // Best directed link per unordered pair.
  std::map<std::pair<int, int>, int> pair_best;
  for (int k = 0; k < static_cast<int>(links.size()); ++k) {
    if (w[k] <= 0) continue;
    const Link& l = topo.links()[links[k]];
    auto key = std::minmax(l.from, l.to);
    auto it = pair_best.find(key);
    if (it == pair_best.end() || w[k] > w[it->second]) pair_best[key] = k;
  }
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, position)
  for (const auto& [key, k] : pair_best) {
    adj[key.first].push_back({key.second, k});
    adj[key.second].push_back({key.first, k});
  }
  std::vector<int> parent(n, -2), parent_edge(n, -1), order;
  for (int root = 0; root < n; ++root) {
    if (parent[root] != -2 || adj[root].empty()) continue;
    parent[root] = -1;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (auto [u, k] : adj[v]) {
        if (u == parent[v] && k == parent_edge[v]) continue;
        if (parent[u] != -2) return exhaustive(topo, links, w);  // cycle
        parent[u] = v;
        parent_edge[u] = k;
        stack.push_back(u);
      }
    }
  }
  // free_[v]: best in subtree with v unmatched; all_[v]: best overall.
  std::vector<double> free_(n, 0.0), all_(n, 0.0);
  std::vector<int> match_child(n, -1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    double base = 0.0;
    for (auto [u, k] : adj[v])
      if (parent[u] == v && parent_edge[u] == k) base += all_[u];
    free_[v] = base;
    all_[v] = base;
    for (auto [u, k] : adj[v]) {
      if (!(parent[u] == v && parent_edge[u] == k)) continue;
      double alt = base - all_[u] + free_[u] + w[k];
      if (alt > all_[v]) {
        all_[v] = alt;
        match_child[v] = u;
      }
    }
  }
  std::vector<int> chosen;
  std::vector<char> parent_matched(n, 0);
  for (int v : order) {
    if (parent_matched[v]) continue;
    int u = match_child[v];
    if (u >= 0) {
      chosen.push_back(parent_edge[u]);
      parent_matched[u] = 1;
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

std::vector<int> maxweight_schedule(const TopologyGraph& topo, const std::vector<int>& links,
                                    const std::vector<double>& weights, const InterferenceModel& model) {
  if (weights.size() != links.size()) throw std::invalid_argument("weights/links size mismatch");
  std::vector<double> w(weights.size());
  for (std::size_t k = 0; k < links.size(); ++k) w[k] = weights[k] * topo.links().at(links[k]).capacity;
  switch (model.kind) {
    case InterferenceKind::Greedy: return greedy(topo, links, w);
    case InterferenceKind::LineDp: return forest_dp(topo, links, w);
    case InterferenceKind::Exhaustive: return exhaustive(topo, links, w);
    case InterferenceKind::Unconstrained: {
      std::vector<int> out;
      for (int k = 0; k < static_cast<int>(links.size()); ++k)
        if (w[k] > 0) out.push_back(k);
      return out;
    }
    case InterferenceKind::IndependentSets: {
      std::map<int, int> pos;
      for (int k = 0; k < static_cast<int>(links.size()); ++k) pos[links[k]] = k;
      double best_sum = 0.0;
      std::vector<int> best;
      for (const auto& set : model.sets) {
        double sum = 0.0;
        std::vector<int> act;
        for (int id : set) {
          auto it = pos.find(id);
          if (it != pos.end() && w[it->second] > 0) {
            sum += w[it->second];
            act.push_back(it->second);
          }
        }
        if (sum > best_sum) {
          best_sum = sum;
          best = act;
        }
      }
      std::sort(best.begin(), best.end());
      return best;
    }
  }
  return {};
}

int rate_control_step(const UtilityFlow& f, double q) {
  if (f.x <= 0) throw std::invalid_argument("rate estimate must be positive");
  return f.K / f.x - f.beta * q > 0 ? f.kappa : 0;
}

double rate_estimate_update(double x, double admitted, double interval, double a) {
  if (interval <= 0) throw std::invalid_argument("decision interval must be positive");
  return a * x + (1.0 - a) * (admitted / interval);
}

}  // namespace netlab
