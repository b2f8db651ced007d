#pragma once

#include <iosfwd>
#include <vector>

#include "ehrmab/eh_core.hpp"
#include "ehrmab/simplex.hpp"

namespace ehrmab {

/// Relaxed single-arm MDP over truncated beliefs (l, h), 0 <= l <= L_max.
/// State index 2l + h.
struct SingleArmMdp {
  struct Edge {
    int to;
    double prob;
  };

  int l_max = 0;
  double p_operative = 0.0;
  std::vector<double> reward;               // reward of a = 1 in each state; a = 0 earns 0
  std::vector<std::vector<Edge>> kernel[2]; // kernel[a][state]

  int n_states() const { return 2 * (l_max + 1); }
  static int index(int l, int h) { return 2 * l + h; }
};

/// a = 0: (l, h) -> (min(l+1, L), h). a = 1: idle with probability 1 - p,
/// otherwise (0, e) with e drawn from the EH marginal of the belief.
SingleArmMdp build_single_arm_mdp(const SystemConfig& cfg, int l_max);

/// Occupation-measure LP. Column 2s + a holds x(s, a); rows are one balance
/// equation per state, then sum_s x(s,1) = K/N, then sum x = 1.
struct OccupationLp {
  LpProblem lp;
  int n_states = 0;
  double budget = 0.0;  // K / N

  static std::size_t column(int state, int action) { return 2 * static_cast<std::size_t>(state) + action; }
};

OccupationLp build_occupation_lp(const SingleArmMdp& mdp, double budget);

struct OccupationSolution {
  double value = 0.0;  // per-arm average reward
  std::vector<double> x;
  double balance_residual = 0.0;
  double budget_residual = 0.0;
  double mass_residual = 0.0;
  double min_reduced_cost = 0.0;
  long iterations = 0;

  double max_residual() const;
  /// pi(s) = x(s,1) / (x(s,0) + x(s,1)); -1 where the state carries no mass.
  std::vector<double> activation_probabilities() const;
};

OccupationSolution solve_lp(const OccupationLp& lp);

/// max(10 ceil(N/K), 4B, 40).
int default_l_max(const SystemConfig& cfg);

struct UpperBound {
  double value = 0.0;   // bits per TS, whole network
  int l_max = 0;
  double stability_delta = 0.0;  // |UB(L) - UB(2L)| / UB, 0 when not computed or UB = 0
  OccupationSolution solution;
};

/// N times the per-arm LP value. `l_max` <= 0 selects default_l_max.
/// With `stability` the LP is re-solved at 2 L_max to fill stability_delta.
UpperBound upper_bound(const SystemConfig& cfg, int l_max = 0, bool stability = true);

/// Plain-text dump: a header line, the objective, one line per constraint
/// ("<coefficients> = <rhs>"), then the bounds line "x >= 0".
void write_lp_text(std::ostream& os, const OccupationLp& lp);

}  // namespace ehrmab
