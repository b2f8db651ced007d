#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehrmab {

/// maximize c'x subject to A x = b, x >= 0. A is dense, row-major.
struct LpProblem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // rows * cols
  std::vector<double> b;
  std::vector<double> c;

  LpProblem() = default;
  LpProblem(std::size_t m, std::size_t n) : rows(m), cols(n), a(m * n, 0.0), b(m, 0.0), c(n, 0.0) {}

  double& at(std::size_t r, std::size_t col) { return a[r * cols + col]; }
  double at(std::size_t r, std::size_t col) const { return a[r * cols + col]; }
};

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-9;
  double infeas_tol = 1e-6;  // phase 1 artificial mass above which the LP is infeasible
  long max_iterations = 1'000'000;
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> duals;     // one per row; 0 on rows dropped as redundant
  std::vector<std::size_t> basis;  // basic columns of the final basis
  long iterations = 0;
  std::size_t redundant_rows = 0;
  double max_residual = 0.0;     // max_r |A_r x - b_r|
  double min_reduced_cost = 0.0; // min_j (y'A_j - c_j); >= 0 at an optimum
};

/// Dense two-phase primal simplex: Dantzig pricing, Harris ratio test, Bland's
/// rule after long degenerate runs, periodic refactorisation and a dual
/// simplex cleanup of small primal infeasibilities. Redundant equality rows
/// are dropped after phase 1. x and the duals come from a fresh solve of the
/// final basis rather than the updated tableau.
/// Throws LpError when the problem is infeasible, unbounded or too large.
LpSolution solve_simplex(const LpProblem& lp, const SimplexOptions& opts = {});

}  // namespace ehrmab
