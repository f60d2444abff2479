#include "netlab/topology.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace netlab {

int TopologyGraph::add_node(const std::string& name, int cluster, bool gateway) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate node " + name);
  if (cluster < 0) throw std::invalid_argument("negative cluster id");
  int id = node_count();
  nodes_.push_back({name, cluster, gateway});
  if (static_cast<int>(clusters_.size()) <= cluster) clusters_.resize(cluster + 1);
  clusters_[cluster].push_back(id);
  by_name_[name] = id;
  return id;
}

void TopologyGraph::add_link(int from, int to, int capacity) {
  if (from == to) throw std::invalid_argument("self link");
  if (capacity < 1) throw std::invalid_argument("link capacity must be >= 1");
  if (link_at_.count({from, to})) return;
  link_at_[{from, to}] = static_cast<int>(links_.size());
  links_.push_back({from, to, capacity});
}

void TopologyGraph::add_undirected(int a, int b, int capacity) {
  add_link(a, b, capacity);
  add_link(b, a, capacity);
}

int TopologyGraph::add_mobile(const std::string& name, std::vector<int> contacts) {
  mobiles_.push_back({name, std::move(contacts)});
  return static_cast<int>(mobiles_.size()) - 1;
}

std::vector<int> TopologyGraph::gateways(int c) const {
  std::vector<int> out;
  for (int n : clusters_.at(c))
    if (nodes_[n].gateway) out.push_back(n);
  return out;
}

std::vector<int> TopologyGraph::internals(int c) const {
  std::vector<int> out;
  for (int n : clusters_.at(c))
    if (!nodes_[n].gateway) out.push_back(n);
  return out;
}

std::vector<int> TopologyGraph::all_gateways() const {
  std::vector<int> out;
  for (int n = 0; n < node_count(); ++n)
    if (nodes_[n].gateway) out.push_back(n);
  return out;
}

std::vector<int> TopologyGraph::cluster_links(int c) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links_.size()); ++i)
    if (nodes_[links_[i].from].cluster == c) out.push_back(i);
  return out;
}

int TopologyGraph::id(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::invalid_argument("unknown node " + name);
  return it->second;
}

bool TopologyGraph::has_link(int from, int to) const { return link_at_.count({from, to}) != 0; }

int TopologyGraph::link_index(int from, int to) const {
  auto it = link_at_.find({from, to});
  return it == link_at_.end() ? -1 : it->second;
}

void TopologyGraph::validate() const {
  for (int c = 0; c < cluster_count(); ++c) {
    if (clusters_[c].empty()) throw std::invalid_argument("cluster " + std::to_string(c) + " is empty");
    if (gateways(c).empty()) throw std::invalid_argument("cluster " + std::to_string(c) + " has no gateway");
  }
  for (const auto& l : links_) {
    if (l.from < 0 || l.to < 0 || l.from >= node_count() || l.to >= node_count())
      throw std::invalid_argument("link endpoint out of range");
    if (nodes_[l.from].cluster != nodes_[l.to].cluster)
      throw std::invalid_argument("inter-cluster link " + nodes_[l.from].name + "->" + nodes_[l.to].name);
  }
  for (const auto& m : mobiles_) {
    for (int g : m.contacts) {
      if (g < 0 || g >= node_count() || !nodes_[g].gateway)
        throw std::invalid_argument("mobile " + m.name + " contacts a non-gateway");
    }
    std::set<int> uniq(m.contacts.begin(), m.contacts.end());
    if (uniq.size() != m.contacts.size()) throw std::invalid_argument("mobile " + m.name + " lists a gateway twice");
  }
}

namespace {

std::string nm(int cluster, int idx) { return std::to_string(cluster) + "." + std::to_string(100 + idx); }

}  // namespace

TopologyGraph line_topology(int n_left, int n_right, int mobiles, bool directed, int capacity) {
  if (n_left < 1 || n_right < 1) throw std::invalid_argument("line: cluster size < 1");
  if (mobiles < 0) throw std::invalid_argument("line: negative mobile count");
  TopologyGraph g;
  // Left cluster, ordered source -> gateway.
  std::vector<int> left;
  for (int i = 0; i + 1 < n_left; ++i) left.push_back(g.add_node(nm(1, i), 0, false));
  left.push_back(g.add_node(nm(1, std::max(n_left - 1, 4)), 0, true));
  // Right cluster, ordered gateway -> destination.
  std::vector<int> right;
  right.push_back(g.add_node(nm(2, std::max(n_right - 1, 3)), 1, true));
  for (int i = n_right - 2; i >= 0; --i) right.push_back(g.add_node(nm(2, i), 1, false));
  for (std::size_t i = 0; i + 1 < left.size(); ++i) {
    if (directed) g.add_link(left[i], left[i + 1], capacity);
    else g.add_undirected(left[i], left[i + 1], capacity);
  }
  for (std::size_t i = 0; i + 1 < right.size(); ++i) {
    if (directed) g.add_link(right[i], right[i + 1], capacity);
    else g.add_undirected(right[i], right[i + 1], capacity);
  }
  for (int m = 0; m < mobiles; ++m) g.add_mobile(nm(0, m), {left.back(), right.front()});
  g.validate();
  return g;
}

TopologyGraph grid_topology(int rows, int cols, int clusters, int gateways_per_cluster, int capacity) {
  if (rows < 1 || cols < 1 || clusters < 1) throw std::invalid_argument("grid: size < 1");
  const int n = rows * cols;
  if (gateways_per_cluster < 1 || gateways_per_cluster > n)
    throw std::invalid_argument("grid: gateway count exceeds cluster size");
  TopologyGraph g;
  std::vector<std::vector<int>> gw(clusters);
  for (int c = 0; c < clusters; ++c) {
    std::set<int> gpos;
    for (int k = 0; k < gateways_per_cluster; ++k) {
      int pos = gateways_per_cluster == 1 ? n - 1 : (k * (n - 1)) / (gateways_per_cluster - 1);
      while (gpos.count(pos)) pos = (pos + 1) % n;
      gpos.insert(pos);
    }
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = g.add_node(nm(c + 1, i), c, gpos.count(i) != 0);
    for (int r = 0; r < rows; ++r) {
      for (int q = 0; q < cols; ++q) {
        int i = r * cols + q;
        if (q + 1 < cols) g.add_undirected(ids[i], ids[i + 1], capacity);
        if (r + 1 < rows) g.add_undirected(ids[i], ids[i + cols], capacity);
      }
    }
    for (int pos : gpos) gw[c].push_back(ids[pos]);
  }
  for (int j = 0; j < gateways_per_cluster; ++j) {
    std::vector<int> contacts;
    for (int c = 0; c < clusters; ++c) contacts.push_back(gw[c][j]);
    if (clusters > 1) g.add_mobile(nm(0, j), contacts);
  }
  g.validate();
  return g;
}

TopologyGraph star_topology(int regions, int leaves, int capacity) {
  if (regions < 1 || leaves < 0) throw std::invalid_argument("star: size < 1");
  TopologyGraph g;
  std::vector<int> hubs;
  for (int r = 0; r < regions; ++r) {
    int hub = g.add_node(nm(r + 1, 0), r, true);
    hubs.push_back(hub);
    for (int i = 0; i < leaves; ++i) g.add_undirected(hub, g.add_node(nm(r + 1, i + 1), r, false), capacity);
  }
  if (regions > 1) g.add_mobile(nm(0, 0), hubs);
  g.validate();
  return g;
}

TopologyGraph build_topology(const TopologySpec& s) {
  if (s.builder == "line") return line_topology(s.n_left, s.n_right, s.mobiles, s.directed, s.capacity);
  if (s.builder == "grid") return grid_topology(s.rows, s.cols, s.clusters, s.gateways, s.capacity);
  if (s.builder == "star") return star_topology(s.clusters, s.leaves, s.capacity);
  throw std::invalid_argument("unknown topology builder '" + s.builder + "'");
}

}  // namespace netlab
