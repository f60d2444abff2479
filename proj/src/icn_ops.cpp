#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "netlab/icn.hpp"

namespace netlab {

void validate_chain(const Matrix& P) {
  const std::size_t n = P.size();
  if (n == 0) throw std::invalid_argument("empty transition matrix");
  for (const auto& row : P) {
    if (row.size() != n) throw std::invalid_argument("transition matrix is not square");
    double s = 0.0;
    for (double v : row) {
      if (v < 0 || !std::isfinite(v)) throw std::invalid_argument("negative transition probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("transition row does not sum to 1");
  }
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{src};
    seen[src] = 1;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < n; ++u)
        if (P[v][u] > 0 && !seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
    }
    if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(n))
      throw std::invalid_argument("mobility chain is not irreducible");
  }
}

std::vector<double> stationary_distribution(const Matrix& P) {
  validate_chain(P);
  const std::size_t n = P.size();
  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Matrix A(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) A[n - 1][j] = 1.0;
  A[n - 1][n] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    if (std::abs(A[c][c]) < 1e-300) throw std::runtime_error("singular stationary system");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = A[r][c] / A[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = A[i][n] / A[i][i];
  return pi;
}

int mobility_step(const Matrix& P, int current, double uniform01) {
  const auto& row = P.at(current);
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (uniform01 < acc) return static_cast<int>(j);
  }
  // Round-off: last state with positive mass.
  for (std::size_t j = row.size(); j-- > 0;)
    if (row[j] > 0) return static_cast<int>(j);
  return current;
}

Matrix chain_preset(const std::string& name, int n) {
  if (n < 1) throw std::invalid_argument("chain needs at least one state");
  Matrix P(n, std::vector<double>(n, 0.0));
  if (n == 1) {
    P[0][0] = 1.0;
    return P;
  }
  if (name == "shuttle") {
    for (int i = 0; i < n; ++i) P[i][(i + 1) % n] = 1.0;
    return P;
  }
  if (name == "forward" || name == "backward") {
    int step = name == "forward" ? 1 : n - 1;
    for (int i = 0; i < n; ++i) {
      P[i][(i + step) % n] += 0.8;
      P[i][i] += 0.1;
      P[i][(i + n - step) % n] += 0.1;
    }
    return P;
  }
  throw std::invalid_argument("unknown mobility preset '" + name + "'");
}

double estimate_super_slot(const std::vector<std::int64_t>& contact_slots) {
  if (contact_slots.size() < 2) throw std::invalid_argument("need two contacts to estimate T");
  return static_cast<double>(contact_slots.back() - contact_slots.front()) /
         static_cast<double>(contact_slots.size() - 1);
}

std::pair<int, int> select_gateways(const std::vector<double>& u_s, const Matrix& u_gg, const std::vector<double>& u_d) {
  if (u_s.empty() || u_d.empty()) throw std::invalid_argument("no candidate gateways");
  std::pair<int, int> best{0, 0};
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u_s.size(); ++i) {
    for (std::size_t j = 0; j < u_d.size(); ++j) {
      double v = u_s[i] + u_gg.at(i).at(j) + u_d[j];
      if (v < best_v) {
        best_v = v;
        best = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return best;
}

int transfer_source(double u_tau, double q, double K, int eta, std::size_t available) {
  if (K <= 0) throw std::invalid_argument("K must be positive");
  if (u_tau / K > q) return static_cast<int>(std::min<std::size_t>(eta, available));
  return 0;
}

int transfer_destination(double u_tau, double q, double K, int eta, std::size_t available) {
  return transfer_source(u_tau, q, K, eta, available);
}

GatewayBalance gateway_balance(const std::map<int, double>& u1, const std::map<int, double>& u2, double K) {
  if (K <= 0) throw std::invalid_argument("K must be positive");
  BpWeight w = backpressure_weights(u1, u2);
  GatewayBalance b;
  b.commodity = w.commodity;
  b.theta = w.weight > 0 ? w.weight / K : 0.0;
  return b;
}

int transfer_gateway_balance(const GatewayBalance& b, double q, int eta, std::size_t available) {
  if (b.commodity < 0 || !(b.theta > q)) return 0;
  return static_cast<int>(std::min<std::size_t>(eta, available));
}

Exchange mobile_gateway_exchange(const std::map<int, double>& u_mobile, const std::map<int, double>& u_gateway,
                                 std::size_t R) {
  Exchange e;
  BpWeight up = backpressure_weights(u_mobile, u_gateway);
  if (up.weight > 0) {
    e.up_commodity = up.commodity;
    e.up = std::min<std::size_t>(R, static_cast<std::size_t>(u_mobile.at(up.commodity)));
  }
  BpWeight down = backpressure_weights(u_gateway, u_mobile);
  if (down.weight > 0) {
    e.down_commodity = down.commodity;
    e.down = std::min<std::size_t>(R, static_cast<std::size_t>(u_gateway.at(down.commodity)));
  }
  return e;
}

double advertise_gateway_queue(double hq, double T) {
  if (T <= 0) throw std::invalid_argument("T must be positive");
  return hq / T;
}

int destination_gateway_release(double hq, double q, double T, int eta) {
  if (T <= 0) throw std::invalid_argument("T must be positive");
  if (hq / T >= q) return static_cast<int>(std::min<double>(eta, hq));
  return 0;
}

std::pair<int, int> shadow_serve(int blue, int red, int budget) {
  if (budget < 0) throw std::invalid_argument("negative budget");
  int b = std::min(blue, budget);
  int r = std::min(red, budget - b);
  return {b, r};
}

bool loop_prevention_filter(int last_gateway, int candidate) { return last_gateway < 0 || last_gateway != candidate; }

DelayBounds bpsr_delay_bounds(int Nc, double T, double gamma, double eps) {
  if (Nc < 2) throw std::invalid_argument("N_c must be >= 2");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(gamma + eps > 0 && gamma + eps < 1)) throw std::invalid_argument("need 0 < gamma + eps < 1");
  DelayBounds d;
  d.bp_lower = (Nc - 1) * (2.0 * T * (1.0 - gamma - eps) - 1.0);
  d.bpsr_upper = static_cast<double>(Nc) * Nc + 3.0 * T;
  return d;
}

}  // namespace netlab
