#include "netlab/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace netlab {

void LinearProgram::add_row(std::vector<double> row, RowSense s, double rhs) {
  if (row.size() != c.size()) throw std::invalid_argument("LP row width differs from objective");
  A.push_back(std::move(row));
  sense.push_back(s);
  b.push_back(rhs);
}

namespace {

struct Tableau {
  int m, n;  // rows, columns excluding rhs
  std::vector<std::vector<double>> t;  // m constraint rows + objective row
  std::vector<int> basis;

  void pivot(int r, int col) {
    double p = t[r][col];
    for (double& v : t[r]) v /= p;
    for (int i = 0; i <= m; ++i) {
      if (i == r) continue;
      double f = t[i][col];
      if (f == 0.0) continue;
      for (int k = 0; k <= n; ++k) t[i][k] -= f * t[r][k];
    }
    basis[r] = col;
  }

  // Minimizes the objective row (stored as reduced costs). Returns false if unbounded.
  bool run(const std::vector<char>& allowed, double tol) {
    for (;;) {
      int col = -1;
      for (int k = 0; k < n; ++k)
        if (allowed[k] && t[m][k] < -tol) {
          col = k;
          break;
        }
      if (col < 0) return true;
      int row = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (t[i][col] <= tol) continue;
        double ratio = t[i][n] / t[i][col];
        if (row < 0 || ratio < best - tol || (std::abs(ratio - best) <= tol && basis[i] < basis[row])) {
          row = i;
          best = ratio;
        }
      }
      if (row < 0) return false;
      pivot(row, col);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tol) {
  const int nv = static_cast<int>(lp.c.size());
  const int m = static_cast<int>(lp.A.size());
  // Normalise to b >= 0.
  std::vector<std::vector<double>> A = lp.A;
  std::vector<double> b = lp.b;
  std::vector<RowSense> sense = lp.sense;
  int slacks = 0, arts = 0;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0) {
      for (double& v : A[i]) v = -v;
      b[i] = -b[i];
      if (sense[i] == RowSense::Le) sense[i] = RowSense::Ge;
      else if (sense[i] == RowSense::Ge) sense[i] = RowSense::Le;
    }
    if (sense[i] != RowSense::Eq) ++slacks;
    if (sense[i] != RowSense::Le) ++arts;
  }
  Tableau tb;
  tb.m = m;
  tb.n = nv + slacks + arts;
  tb.t.assign(m + 1, std::vector<double>(tb.n + 1, 0.0));
  tb.basis.assign(m, -1);
  int s = nv, a = nv + slacks;
  std::vector<char> is_art(tb.n, 0);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < nv; ++k) tb.t[i][k] = A[i][k];
    tb.t[i][tb.n] = b[i];
    if (sense[i] == RowSense::Le) {
      tb.t[i][s] = 1.0;
      tb.basis[i] = s++;
    } else {
      if (sense[i] == RowSense::Ge) tb.t[i][s++] = -1.0;
      tb.t[i][a] = 1.0;
      is_art[a] = 1;
      tb.basis[i] = a++;
    }
  }
  std::vector<char> all(tb.n, 1);
  LpSolution out;
  if (arts > 0) {
    // Phase one: minimise the sum of artificials.
    for (int i = 0; i < m; ++i)
      if (is_art[tb.basis[i]])
        for (int k = 0; k <= tb.n; ++k)
          if (!is_art[k] || k == tb.n) tb.t[m][k] -= tb.t[i][k];
    tb.run(all, tol);
    if (-tb.t[m][tb.n] > 1e-7 * (1.0 + std::abs(tb.t[m][tb.n]))) return out;
    // Drive remaining artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (!is_art[tb.basis[i]]) continue;
      for (int k = 0; k < nv + slacks; ++k)
        if (std::abs(tb.t[i][k]) > tol) {
          tb.pivot(i, k);
          break;
        }
    }
  }
  std::vector<char> allowed(tb.n, 1);
  for (int k = 0; k < tb.n; ++k)
    if (is_art[k]) allowed[k] = 0;
  std::fill(tb.t[m].begin(), tb.t[m].end(), 0.0);
  for (int k = 0; k < nv; ++k) tb.t[m][k] = lp.c[k];
  for (int i = 0; i < m; ++i) {
    int bv = tb.basis[i];
    double f = bv < nv ? lp.c[bv] : 0.0;
    if (f == 0.0) continue;
    for (int k = 0; k <= tb.n; ++k) tb.t[m][k] -= f * tb.t[i][k];
  }
  if (!tb.run(allowed, tol)) {
    out.status = LpStatus::Unbounded;
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x.assign(nv, 0.0);
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < nv) out.x[tb.basis[i]] = tb.t[i][tb.n];
  for (int k = 0; k < nv; ++k) out.objective += lp.c[k] * out.x[k];
  return out;
}

}  // namespace netlab
