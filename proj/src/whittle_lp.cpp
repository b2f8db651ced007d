#include "ehrmab/whittle_lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ehrmab {

SingleArmMdp build_single_arm_mdp(const SystemConfig& cfg, int l_max) {
  if (l_max < 1) throw ConfigError("L_max must be at least 1");
  cfg.validate();
  const BeliefTable table(cfg);
  const double p = cfg.p_operative;

  SingleArmMdp mdp;
  mdp.l_max = l_max;
  mdp.p_operative = p;
  const int n = mdp.n_states();
  mdp.reward.assign(static_cast<std::size_t>(n), 0.0);
  mdp.kernel[0].resize(static_cast<std::size_t>(n));
  mdp.kernel[1].resize(static_cast<std::size_t>(n));

  for (int l = 0; l <= l_max; ++l) {
    const int up = std::min(l + 1, l_max);
    for (int h = 0; h <= 1; ++h) {
      const auto s = static_cast<std::size_t>(SingleArmMdp::index(l, h));
      const int idle_to = SingleArmMdp::index(up, h);
      mdp.reward[s] = p * table.expected_battery(l, h);
      mdp.kernel[0][s] = {{idle_to, 1.0}};

      const double e1 = table.harvest_prob(l, h);
      auto& row = mdp.kernel[1][s];
      if (p < 1.0) row.push_back({idle_to, 1.0 - p});
      if (p * e1 > 0.0) row.push_back({SingleArmMdp::index(0, 1), p * e1});
      if (p * (1.0 - e1) > 0.0) row.push_back({SingleArmMdp::index(0, 0), p * (1.0 - e1)});
    }
  }
  return mdp;
}

OccupationLp build_occupation_lp(const SingleArmMdp& mdp, double budget) {
  if (!(budget >= 0.0 && budget <= 1.0)) throw ConfigError("activation budget must lie in [0, 1]");
  const int n = mdp.n_states();
  OccupationLp out;
  out.n_states = n;
  out.budget = budget;
  out.lp = LpProblem(static_cast<std::size_t>(n) + 2, 2 * static_cast<std::size_t>(n));
  auto& lp = out.lp;

  // Balance: sum_a x(s,a) - sum_{s',a} x(s',a) P(s | s', a) = 0.
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a <= 1; ++a) {
      const auto col = OccupationLp::column(s, a);
      lp.at(static_cast<std::size_t>(s), col) += 1.0;
      for (const auto& e : mdp.kernel[a][static_cast<std::size_t>(s)]) {
        lp.at(static_cast<std::size_t>(e.to), col) -= e.prob;
      }
    }
  }
  const auto budget_row = static_cast<std::size_t>(n);
  const auto mass_row = budget_row + 1;
  for (int s = 0; s < n; ++s) {
    lp.at(budget_row, OccupationLp::column(s, 1)) = 1.0;
    lp.at(mass_row, OccupationLp::column(s, 0)) = 1.0;
    lp.at(mass_row, OccupationLp::column(s, 1)) = 1.0;
    lp.c[OccupationLp::column(s, 1)] = mdp.reward[static_cast<std::size_t>(s)];
  }
  lp.b[budget_row] = budget;
  lp.b[mass_row] = 1.0;
  return out;
}

double OccupationSolution::max_residual() const {
  return std::max({balance_residual, budget_residual, mass_residual});
}

std::vector<double> OccupationSolution::activation_probabilities() const {
  std::vector<double> pi(x.size() / 2, -1.0);
  for (std::size_t s = 0; s < pi.size(); ++s) {
    const double mass = x[2 * s] + x[2 * s + 1];
    if (mass > 1e-12) pi[s] = x[2 * s + 1] / mass;
  }
  return pi;
}

OccupationSolution solve_lp(const OccupationLp& olp) {
  const auto sol = solve_simplex(olp.lp);
  OccupationSolution out;
  out.value = sol.value;
  out.x = sol.x;
  out.min_reduced_cost = sol.min_reduced_cost;
  out.iterations = sol.iterations;

  const auto& lp = olp.lp;
  auto residual = [&](std::size_t r) {
    double s = -lp.b[r];
    for (std::size_t j = 0; j < lp.cols; ++j) s += lp.at(r, j) * sol.x[j];
    return std::abs(s);
  };
  const auto n = static_cast<std::size_t>(olp.n_states);
  for (std::size_t r = 0; r < n; ++r) out.balance_residual = std::max(out.balance_residual, residual(r));
  out.budget_residual = residual(n);
  out.mass_residual = residual(n + 1);
  return out;
}

int default_l_max(const SystemConfig& cfg) {
  const int k = std::max(cfg.n_channels, 1);
  const int ratio = (cfg.n_nodes + k - 1) / k;
  return std::max({10 * ratio, 4 * effective_capacity(cfg), 40});
}

namespace {

OccupationSolution solve_at(const SystemConfig& cfg, int l_max) {
  const double budget = static_cast<double>(cfg.n_channels) / cfg.n_nodes;
  return solve_lp(build_occupation_lp(build_single_arm_mdp(cfg, l_max), budget));
}

}  // namespace

UpperBound upper_bound(const SystemConfig& cfg, int l_max, bool stability) {
  cfg.validate();
  UpperBound ub;
  ub.l_max = l_max > 0 ? l_max : default_l_max(cfg);
  ub.solution = solve_at(cfg, ub.l_max);
  ub.value = cfg.n_nodes * ub.solution.value;
  if (stability && ub.value > 0.0) {
    const double wide = cfg.n_nodes * solve_at(cfg, 2 * ub.l_max).value;
    ub.stability_delta = std::abs(wide - ub.value) / ub.value;
  }
  return ub;
}

void write_lp_text(std::ostream& os, const OccupationLp& olp) {
  const auto& lp = olp.lp;
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  os << "# ehrmab occupation LP: maximize c'x s.t. A x = b, x >= 0\n";
  os << "# columns: x(s,a) at 2*s+a, s = 2*l+h\n";
  os << "rows " << lp.rows << " cols " << lp.cols << '\n';
  os << "objective";
  for (double v : lp.c) os << ' ' << num(v);
  os << '\n';
  for (std::size_t r = 0; r < lp.rows; ++r) {
    os << "row";
    for (std::size_t j = 0; j < lp.cols; ++j) os << ' ' << num(lp.at(r, j));
    os << " = " << num(lp.b[r]) << '\n';
  }
  os << "bounds x >= 0\n";
}

}  // namespace ehrmab
