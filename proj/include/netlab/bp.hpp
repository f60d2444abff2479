#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "netlab/topology.hpp"

namespace netlab {

struct Packet {
  std::int64_t created = 0;
  std::int64_t picked = -1;  // first mobile pickup slot
  int flow = -1;
  int dest = -1;      // final destination node
  int gs = -1;        // chosen source gateway (header)
  int gd = -1;        // chosen destination gateway (header)
  int last_gw = -1;   // gateway the packet was last received from, for loop prevention
  bool red = false;   // shadow packet
};

// FIFO with an optional blue/red split; blue always leaves first.
class PacketQueue {
 public:
  explicit PacketQueue(bool split = false) : split_(split) {}

  void push(Packet p);
  Packet pop();  // precondition: !empty()
  std::size_t size() const { return blue_.size() + red_.size(); }
  bool empty() const { return size() == 0; }
  std::size_t blue_size() const { return blue_.size(); }
  std::size_t red_size() const { return red_.size(); }
  bool split() const { return split_; }
  void set_split(bool s) { split_ = s; }

  // Moves up to n packets into out, blue first, skipping any for which
  // skip(p) holds; skipped packets keep their order.
  template <class Skip>
  std::size_t take(std::size_t n, std::vector<Packet>& out, Skip skip);
  std::size_t take(std::size_t n, std::vector<Packet>& out);

 private:
  bool split_;
  std::deque<Packet> blue_;
  std::deque<Packet> red_;
};

template <class Skip>
std::size_t PacketQueue::take(std::size_t n, std::vector<Packet>& out, Skip skip) {
  std::size_t moved = 0;
  for (auto* dq : {&blue_, &red_}) {
    if (moved == n) break;
    std::deque<Packet> kept;
    while (!dq->empty() && moved < n) {
      Packet p = dq->front();
      dq->pop_front();
      if (skip(p)) {
        kept.push_back(p);
      } else {
        out.push_back(p);
        ++moved;
      }
    }
    while (!kept.empty()) {
      dq->push_front(kept.back());
      kept.pop_back();
    }
  }
  return moved;
}

// Per-node, per-commodity packet queues: q[a][b].
class PerDestQueues {
 public:
  explicit PerDestQueues(int nodes = 0) : q_(nodes) {}
  void resize(int nodes) { q_.resize(nodes); }

  std::size_t len(int node, int commodity) const;
  PacketQueue& at(int node, int commodity);  // creates on demand
  const std::map<int, PacketQueue>& of(int node) const { return q_.at(node); }
  std::map<int, PacketQueue>& of(int node) { return q_.at(node); }
  std::size_t total() const;
  std::size_t node_total(int node) const;

 private:
  std::vector<std::map<int, PacketQueue>> q_;
};

struct BpWeight {
  int commodity = -1;
  double weight = 0.0;
};

// j* = argmax_j (qm[j] - qn[j]) over the union of commodities, lowest id on
// ties; commodity -1 and weight 0 when both maps are empty.
BpWeight backpressure_weights(const std::map<int, double>& qm, const std::map<int, double>& qn);

enum class InterferenceKind { Greedy, LineDp, Exhaustive, IndependentSets, Unconstrained };

InterferenceKind parse_interference(const std::string& s);
std::string to_string(InterferenceKind k);

struct InterferenceModel {
  InterferenceKind kind = InterferenceKind::Greedy;
  std::vector<std::vector<int>> sets;  // link indices, for IndependentSets
};

// Chooses a feasible activation among `links` (indices into topo.links())
// maximizing the sum of positive weights. weights[k] belongs to links[k].
// Returns positions k (into links) of activated links, ascending.
std::vector<int> maxweight_schedule(const TopologyGraph& topo, const std::vector<int>& links,
                                    const std::vector<double>& weights, const InterferenceModel& model);

// True iff no two chosen links share an endpoint.
bool node_exclusive(const TopologyGraph& topo, const std::vector<int>& link_ids);

struct UtilityFlow {
  double K = 1.0;      // U(x) = K log x
  double x = 0.0;      // estimated rate, pkts/slot
  int kappa = 1;       // packets per admission
  double beta = 1.0;
};

// kappa iff K/x - beta*q > 0, else 0.
int rate_control_step(const UtilityFlow& f, double q);
// x' = a*x + (1-a)*admitted/interval with a = 0.999 by default.
double rate_estimate_update(double x, double admitted, double interval, double a = 0.999);

}  // namespace netlab
