#include "ehrmab/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ehrmab {

namespace {

// X = M^-1 R for a k x k matrix M and a k x w right-hand side, both row-major.
// Gauss-Jordan with complete pivoting: partial pivoting suffers exponential
// growth on the bidiagonal-plus-dense-rows structure of occupation LPs.
// Returns false when M is numerically singular.
bool solve_full_pivot(std::vector<double> m, std::size_t k, std::vector<double>& r, std::size_t w) {
  std::vector<std::size_t> col_of(k);
  std::vector<bool> used(k, false);
  for (std::size_t t = 0; t < k; ++t) {
    std::size_t pr = t, pc = k;
    double big = 0.0;
    for (std::size_t i = t; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (!used[j] && std::abs(m[i * k + j]) > big) {
          big = std::abs(m[i * k + j]);
          pr = i;
          pc = j;
        }
      }
    }
    if (big < 1e-14) return false;
    if (pr != t) {
      std::swap_ranges(&m[t * k], &m[t * k] + k, &m[pr * k]);
      std::swap_ranges(&r[t * w], &r[t * w] + w, &r[pr * w]);
    }
    used[pc] = true;
    col_of[t] = pc;
    const double inv = 1.0 / m[t * k + pc];
    for (std::size_t j = 0; j < k; ++j) m[t * k + j] *= inv;
    for (std::size_t j = 0; j < w; ++j) r[t * w + j] *= inv;
    for (std::size_t i = 0; i < k; ++i) {
      const double f = m[i * k + pc];
      if (i == t || f == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) m[i * k + j] -= f * m[t * k + j];
      for (std::size_t j = 0; j < w; ++j) r[i * w + j] -= f * r[t * w + j];
    }
  }
  // Row t now holds unknown col_of[t].
  std::vector<double> out(r.size());
  for (std::size_t t = 0; t < k; ++t) std::copy_n(&r[t * w], w, &out[col_of[t] * w]);
  r.swap(out);
  return true;
}

// Tableau B^-1 [A | b] over the structural columns only. Basic artificials
// (index n + r) stand for the unit column of row r and never re-enter.
class Tableau {
 public:
  static constexpr long kRefactorEvery = 100;
  static constexpr double kDjTol = 1e-9;

  Tableau(const LpProblem& lp, const SimplexOptions& opts)
      : m_(lp.rows), n_(lp.cols), width_(lp.cols + 1), opts_(opts), t_(m_ * width_, 0.0), z_(width_, 0.0),
        cost_(width_, 0.0), sign_(m_), b_(m_), cols_(n_), basis_(m_), active_(m_, true) {
    for (std::size_t r = 0; r < m_; ++r) {
      sign_[r] = lp.b[r] < 0.0 ? -1.0 : 1.0;
      b_[r] = sign_[r] * lp.b[r];
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = sign_[r] * lp.at(r, j);
        t_[r * width_ + j] = v;
        if (v != 0.0) cols_[j].push_back({r, v});
      }
      t_[r * width_ + n_] = b_[r];
      basis_[r] = n_ + r;
    }
  }

  void phase1() {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    artificial_cost_ = -1.0;
    price();
    for (int round = 0; round < 20; ++round) {
      iterate();
      refactor();
      if (restore_feasibility()) {
        refactor();
        continue;
      }
      if (priced_out()) break;
    }
    double infeas = 0.0, scale = 1.0;
    for (std::size_t r = 0; r < m_; ++r) {
      scale = std::max(scale, std::abs(rhs(r)));
      if (active_[r] && basis_[r] >= n_) infeas += rhs(r);
    }
    // Clamped round-off leaves O(m * feas_tol) in the artificials; a truly
    // infeasible system leaves far more. The final residual is reported anyway.
    if (infeas > opts_.infeas_tol * scale) {
      char msg[64];
      std::snprintf(msg, sizeof msg, "simplex: infeasible (phase 1 residual %.3g)", infeas);
      throw LpError(msg);
    }
    drive_out_artificials();
  }

  void phase2(const std::vector<double>& c) {
    std::copy(c.begin(), c.end(), cost_.begin());
    cost_[n_] = 0.0;
    artificial_cost_ = 0.0;
    price();
    // Stop only when a freshly refactorised tableau is primal feasible and
    // prices out optimal.
    for (int round = 0; round < 20; ++round) {
      iterate();
      refactor();
      if (restore_feasibility()) {
        refactor();
        continue;
      }
      if (priced_out()) break;
    }
    if (!fresh_ && !refactor()) throw LpError("simplex: singular final basis");
  }

  long iterations() const { return iterations_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  const std::vector<bool>& active() const { return active_; }
  const std::vector<std::size_t>& active_rows() const { return rows_; }
  std::size_t redundant() const { return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), false)); }

  // Final basis quantities from the last refactorisation: x_B (by position in
  // active_rows()) and the duals of the original, unsigned rows.
  std::vector<double> basic_values() const {
    const std::size_t k = rows_.size();
    std::vector<double> x(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) x[i] += binv_[i * k + j] * b_[rows_[j]];
    }
    return x;
  }

  std::vector<double> duals(const std::vector<double>& c) const {
    const std::size_t k = rows_.size();
    std::vector<double> y(m_, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t col = basis_[rows_[i]];
      const double cb = col < n_ ? c[col] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) y[rows_[j]] += cb * binv_[i * k + j];
    }
    for (std::size_t r = 0; r < m_; ++r) y[r] *= sign_[r];
    return y;
  }

 private:
  struct Entry {
    std::size_t row;
    double value;
  };

  double rhs(std::size_t r) const { return t_[r * width_ + n_]; }
  double basic_cost(std::size_t r) const { return basis_[r] < n_ ? cost_[basis_[r]] : artificial_cost_; }

  // Basic columns price out to exactly zero; round-off must not let them re-enter.
  void clear_basic_costs() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (active_[r] && basis_[r] < n_) z_[basis_[r]] = 0.0;
    }
  }

  bool priced_out() const {
    return std::none_of(z_.begin(), z_.begin() + static_cast<std::ptrdiff_t>(n_), [](double d) { return d > kDjTol; });
  }

  // Dantzig pricing with a Harris two-pass ratio test. After a run of
  // degenerate pivots the entering and leaving choices switch to Bland's rule
  // until the objective moves again.
  void iterate() {
    constexpr long kStallLimit = 50;
    const long refactor_every = std::max<long>(kRefactorEvery, static_cast<long>(m_ / 2));
    long stalled = 0;
    for (;;) {
      const bool bland = stalled >= kStallLimit;
      std::size_t enter = n_;
      double best_dj = kDjTol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (z_[j] > best_dj) {
          enter = j;
          if (bland) break;
          best_dj = z_[j];
        }
      }
      if (enter == n_) return;

      double col_max = 0.0;
      for (std::size_t r = 0; r < m_; ++r) {
        if (active_[r]) col_max = std::max(col_max, std::abs(t_[r * width_ + enter]));
      }
      const double tol = std::max(opts_.pivot_tol, 1e-7 * col_max);

      // Pass 1: largest step that keeps every basic variable above -feas_tol.
      double theta = INFINITY;
      for (std::size_t r = 0; r < m_; ++r) {
        const double a = t_[r * width_ + enter];
        if (!active_[r] || a <= tol) continue;
        theta = std::min(theta, (std::max(rhs(r), 0.0) + opts_.feas_tol) / a);
      }
      if (theta == INFINITY) throw LpError("simplex: unbounded objective");

      // Pass 2: among rows blocking within theta, the largest pivot. Under
      // Bland, the smallest basic index among pivots not much smaller than that.
      std::size_t leave = m_;
      double best_a = 0.0;
      for (std::size_t r = 0; r < m_; ++r) {
        const double a = t_[r * width_ + enter];
        if (!active_[r] || a <= tol || std::max(rhs(r), 0.0) / a > theta) continue;
        if (a > best_a) {
          best_a = a;
          leave = r;
        }
      }
      if (bland) {
        for (std::size_t r = 0; r < m_; ++r) {
          const double a = t_[r * width_ + enter];
          if (!active_[r] || a < 1e-3 * best_a || std::max(rhs(r), 0.0) / a > theta) continue;
          if (basis_[r] < basis_[leave]) leave = r;
        }
      }
      const double step = std::max(rhs(leave), 0.0) / t_[leave * width_ + enter];
      stalled = step * z_[enter] > 1e-13 ? 0 : stalled + 1;
      pivot(leave, enter);
      if (++iterations_ % refactor_every == 0) refactor();
      if (iterations_ > opts_.max_iterations) throw LpError("simplex: iteration limit reached");
    }
  }

  void pivot(std::size_t r, std::size_t e) {
    fresh_ = false;
    double* row = &t_[r * width_];
    const double inv = 1.0 / row[e];
    for (std::size_t j = 0; j < width_; ++j) row[j] *= inv;
    row[e] = 1.0;
    auto eliminate = [&](double* other) {
      const double f = other[e];
      if (f == 0.0) return;
      for (std::size_t j = 0; j < width_; ++j) other[j] -= f * row[j];
      other[e] = 0.0;
    };
    for (std::size_t i = 0; i < m_; ++i) {
      if (i != r && active_[i]) eliminate(&t_[i * width_]);
    }
    eliminate(z_.data());
    basis_[r] = e;
    clear_basic_costs();
    // Round-off can push degenerate rows slightly negative; they are zero.
    for (std::size_t i = 0; i < m_; ++i) {
      double& v = t_[i * width_ + n_];
      if (v < 0.0 && v > -opts_.feas_tol) v = 0.0;
    }
  }

  // z_j = cost_j - c_B' B^-1 A_j; the last entry holds -c_B' x_B.
  void price() {
    z_ = cost_;
    z_[n_] = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (!active_[r]) continue;
      const double cb = basic_cost(r);
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) z_[j] -= cb * t_[r * width_ + j];
    }
    clear_basic_costs();
  }

  // Inverts the basis on the active rows and rebuilds B^-1 [A | b] from the
  // original sparse columns. Returns false (keeping the updated tableau) when
  // the basis is numerically singular.
  bool refactor() {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> pos(m_, m_);
    for (std::size_t r = 0; r < m_; ++r) {
      if (!active_[r]) continue;
      pos[r] = rows.size();
      rows.push_back(r);
    }
    const std::size_t k = rows.size();
    std::vector<double> bm(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t col = basis_[rows[j]];
      if (col >= n_) {
        bm[pos[col - n_] * k + j] = 1.0;
        continue;
      }
      for (const auto& e : cols_[col]) {
        if (pos[e.row] < k) bm[pos[e.row] * k + j] = e.value;
      }
    }
    std::vector<double> inv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;
    // Row j of the solution belongs to basic column basis_[rows[j]] in tableau row rows[j].
    if (!solve_full_pivot(std::move(bm), k, inv, k)) return false;

    for (std::size_t i = 0; i < k; ++i) {
      double* row = &t_[rows[i] * width_];
      const double* bi = &inv[i * k];
      std::fill_n(row, width_, 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        double s = 0.0;
        for (const auto& e : cols_[j]) {
          if (pos[e.row] < k) s += bi[pos[e.row]] * e.value;
        }
        row[j] = s;
      }
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += bi[j] * b_[rows[j]];
      row[n_] = s;
    }
    binv_ = std::move(inv);
    rows_ = std::move(rows);
    fresh_ = true;
    price();
    return true;
  }

  // Dual simplex pivots on rows the Harris ratio test pushed below -feas_tol.
  // Returns true if any pivot was made.
  bool restore_feasibility() {
    const double neg_tol = opts_.feas_tol;
    bool moved = false;
    for (int guard = 0; guard < static_cast<int>(4 * m_ + 10); ++guard) {
      std::size_t r = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        if (active_[i] && rhs(i) < -neg_tol && (r == m_ || rhs(i) < rhs(r))) r = i;
      }
      if (r == m_) break;
      std::vector<char> basic(n_, 0);
      for (std::size_t i = 0; i < m_; ++i) {
        if (active_[i] && basis_[i] < n_) basic[basis_[i]] = 1;
      }
      double row_max = 0.0;
      for (std::size_t j = 0; j < n_; ++j) row_max = std::max(row_max, std::abs(t_[r * width_ + j]));
      const double tol = std::max(opts_.pivot_tol, 1e-7 * row_max);
      // Harris two-pass dual ratio test: bound the step with a small dual
      // tolerance, then take the largest pivot inside it.
      double theta = INFINITY;
      for (std::size_t j = 0; j < n_; ++j) {
        const double a = t_[r * width_ + j];
        if (!basic[j] && a < -tol) theta = std::min(theta, (std::max(-z_[j], 0.0) + kDjTol) / -a);
      }
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        const double a = t_[r * width_ + j];
        if (basic[j] || a >= -tol || std::max(-z_[j], 0.0) / -a > theta) continue;
        if (enter == n_ || a < t_[r * width_ + enter]) enter = j;
      }
      if (enter == n_) break;
      pivot(r, enter);
      ++iterations_;
      moved = true;
    }
    return moved;
  }

  void drive_out_artificials() {
    bool changed = false;
    for (std::size_t r = 0; r < m_; ++r) {
      if (!active_[r] || basis_[r] < n_) continue;
      std::size_t col = n_;
      double big = 1e-9;
      for (std::size_t j = 0; j < n_; ++j) {
        const double a = std::abs(t_[r * width_ + j]);
        if (a > big) {
          big = a;
          col = j;
        }
      }
      if (col == n_) {
        active_[r] = false;  // linear combination of the other rows
        fresh_ = false;
      } else {
        pivot(r, col);
      }
      changed = true;
    }
    if (changed) refactor();
  }

  std::size_t m_, n_, width_;
  SimplexOptions opts_;
  std::vector<double> t_;
  std::vector<double> z_;
  std::vector<double> cost_;
  double artificial_cost_ = 0.0;
  std::vector<double> sign_;
  std::vector<double> b_;
  std::vector<std::vector<Entry>> cols_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
  std::vector<double> binv_;
  std::vector<std::size_t> rows_;
  bool fresh_ = false;
  long iterations_ = 0;
};

}  // namespace

LpSolution solve_simplex(const LpProblem& lp, const SimplexOptions& opts) {
  if (lp.a.size() != lp.rows * lp.cols || lp.b.size() != lp.rows || lp.c.size() != lp.cols) {
    throw LpError("simplex: inconsistent problem dimensions");
  }
  for (double v : lp.a) {
    if (!std::isfinite(v)) throw LpError("simplex: non-finite constraint coefficient");
  }

  Tableau tab(lp, opts);
  tab.phase1();
  tab.phase2(lp.c);

  LpSolution sol;
  sol.iterations = tab.iterations();
  sol.redundant_rows = tab.redundant();
  sol.x.assign(lp.cols, 0.0);
  const auto& rows = tab.active_rows();
  const auto xb = tab.basic_values();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t col = tab.basis()[rows[i]];
    sol.basis.push_back(col);
    if (col < lp.cols) sol.x[col] = std::max(0.0, xb[i]);
  }
  sol.duals = tab.duals(lp.c);

  sol.value = std::inner_product(lp.c.begin(), lp.c.end(), sol.x.begin(), 0.0);
  for (std::size_t r = 0; r < lp.rows; ++r) {
    double s = -lp.b[r];
    for (std::size_t j = 0; j < lp.cols; ++j) s += lp.at(r, j) * sol.x[j];
    sol.max_residual = std::max(sol.max_residual, std::abs(s));
  }
  sol.min_reduced_cost = INFINITY;
  for (std::size_t j = 0; j < lp.cols; ++j) {
    double d = -lp.c[j];
    for (std::size_t r = 0; r < lp.rows; ++r) d += sol.duals[r] * lp.at(r, j);
    sol.min_reduced_cost = std::min(sol.min_reduced_cost, d);
  }
  if (lp.cols == 0) sol.min_reduced_cost = 0.0;
  return sol;
}

}  // namespace ehrmab
