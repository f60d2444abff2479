#pragma once

#include <vector>

namespace netlab {

enum class RowSense { Le, Eq, Ge };

// minimize c.x subject to rows, x >= 0.
struct LinearProgram {
  std::vector<double> c;
  std::vector<std::vector<double>> A;
  std::vector<RowSense> sense;
  std::vector<double> b;

  void add_row(std::vector<double> row, RowSense s, double rhs);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

// Dense two-phase tableau simplex with Bland's rule. Fine for a few hundred
// variables; not meant for anything larger.
LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-9);

}  // namespace netlab
