#pragma once

#include <map>
#include <string>
#include <vector>

namespace netlab {

struct NodeInfo {
  std::string name;
  int cluster = 0;
  bool gateway = false;
};

struct Link {
  int from = 0;
  int to = 0;
  int capacity = 1;  // pkts per slot
};

struct MobileInfo {
  std::string name;
  std::vector<int> contacts;  // gateway node ids, in chain-state order
};

// Clusters of nodes joined by intra-cluster links; mobiles are the only
// inter-cluster carriers and meet gateways only.
class TopologyGraph {
 public:
  int add_node(const std::string& name, int cluster, bool gateway);
  void add_link(int from, int to, int capacity = 1);
  void add_undirected(int a, int b, int capacity = 1);
  int add_mobile(const std::string& name, std::vector<int> contacts);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int cluster_count() const { return static_cast<int>(clusters_.size()); }
  const NodeInfo& node(int id) const { return nodes_.at(id); }
  const std::vector<NodeInfo>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<MobileInfo>& mobiles() const { return mobiles_; }
  const std::vector<int>& cluster_nodes(int c) const { return clusters_.at(c); }
  std::vector<int> gateways(int c) const;
  std::vector<int> internals(int c) const;
  std::vector<int> all_gateways() const;
  std::vector<int> cluster_links(int c) const;  // indices into links()
  int cluster_of(int id) const { return nodes_.at(id).cluster; }
  bool is_gateway(int id) const { return nodes_.at(id).gateway; }

  int id(const std::string& name) const;  // throws if unknown
  bool has_node(const std::string& name) const { return by_name_.count(name) != 0; }
  bool has_link(int from, int to) const;
  int link_index(int from, int to) const;  // -1 if absent

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

 private:
  std::vector<NodeInfo> nodes_;
  std::vector<std::vector<int>> clusters_;
  std::vector<Link> links_;
  std::vector<MobileInfo> mobiles_;
  std::map<std::string, int> by_name_;
  std::map<std::pair<int, int>, int> link_at_;
};

struct TopologySpec {
  std::string builder;  // "line", "grid", "star"
  int n_left = 2;       // line: source cluster size N_c
  int n_right = 3;      // line: destination cluster size
  int rows = 3;         // grid
  int cols = 4;
  int clusters = 3;     // grid / star
  int gateways = 2;     // grid: gateways (and mobiles) per cluster
  int leaves = 3;       // star: internal nodes per region
  int mobiles = 1;      // line
  bool directed = false;
  int capacity = 1;
};

// Line: cluster 1 is s=1.100 ... gateway, cluster 2 is gateway ... d=2.100.
// The gateway is named 1.(100+max(N-1,4)) / 2.(100+max(N-1,3)).
TopologyGraph line_topology(int n_left, int n_right, int mobiles, bool directed = false, int capacity = 1);
// rows x cols grid per cluster; gateways at spread positions; mobile j visits g(i,j).
TopologyGraph grid_topology(int rows, int cols, int clusters, int gateways_per_cluster, int capacity = 1);
// Each region is a hub (gateway) with leaf internals; one mobile tours all hubs.
TopologyGraph star_topology(int regions, int leaves, int capacity = 1);

TopologyGraph build_topology(const TopologySpec& spec);

}  // namespace netlab
