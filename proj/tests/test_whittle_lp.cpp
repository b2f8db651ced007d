#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "ehrmab/sim.hpp"
#include "ehrmab/whittle_lp.hpp"

using namespace ehrmab;

namespace {

SystemConfig base(Variant v) {
  SystemConfig cfg;
  cfg.variant = v;
  cfg.n_nodes = 6;
  cfg.n_channels = 2;
  cfg.battery_cap = v == Variant::Batteryless ? 1 : 3;
  cfg.p_operative = 0.6;
  cfg.chain = {0.2, 0.8, 0.3};
  cfg.horizon = 200;
  return cfg;
}

}  // namespace

TEST_CASE("kernel rows are distributions and rewards are nonnegative") {
  for (auto v : {Variant::General, Variant::NoSimultaneousHarvest, Variant::Batteryless}) {
    const auto mdp = build_single_arm_mdp(base(v), 15);
    REQUIRE(mdp.n_states() == 32);
    for (int s = 0; s < mdp.n_states(); ++s) {
      CHECK(mdp.reward[static_cast<std::size_t>(s)] >= 0.0);
      CHECK(mdp.kernel[0][static_cast<std::size_t>(s)].size() == 1);
      for (int a = 0; a <= 1; ++a) {
        double total = 0.0;
        for (const auto& e : mdp.kernel[a][static_cast<std::size_t>(s)]) {
          CHECK(e.to >= 0);
          CHECK(e.to < mdp.n_states());
          total += e.prob;
        }
        CHECK(std::abs(total - 1.0) <= 1e-10);
      }
    }
  }
}

TEST_CASE("passive transitions age the belief and saturate at L_max") {
  const auto mdp = build_single_arm_mdp(base(Variant::General), 5);
  CHECK(mdp.kernel[0][SingleArmMdp::index(2, 1)][0].to == SingleArmMdp::index(3, 1));
  CHECK(mdp.kernel[0][SingleArmMdp::index(5, 0)][0].to == SingleArmMdp::index(5, 0));
}

TEST_CASE("always-operative activation resets to a fresh belief") {
  auto cfg = base(Variant::General);
  cfg.p_operative = 1.0;
  const auto mdp = build_single_arm_mdp(cfg, 8);
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (const auto& e : mdp.kernel[1][static_cast<std::size_t>(s)]) CHECK(e.to <= 1);
  }
}

TEST_CASE("reward equals p times the expected battery of the belief") {
  SystemConfig cfg;
  cfg.battery_cap = 5;
  cfg.chain = {0.1, 0.9, 0.5};
  cfg.p_operative = 0.5;
  const auto mdp = build_single_arm_mdp(cfg, 10);
  const auto dist = belief_to_dist({5, 1}, cfg.chain, 5);
  double eb = 0.0;
  for (int e = 0; e <= 1; ++e) {
    for (int b = 0; b <= 5; ++b) eb += b * dist.at(e, b);
  }
  CHECK(std::abs(mdp.reward[SingleArmMdp::index(5, 1)] - 0.5 * eb) <= 1e-12);
}

TEST_CASE("LP dimensions and feasibility") {
  const auto cfg = base(Variant::General);
  const auto olp = build_occupation_lp(build_single_arm_mdp(cfg, 20), 2.0 / 6.0);
  CHECK(olp.lp.rows == 44);
  CHECK(olp.lp.cols == 84);
  const auto sol = solve_lp(olp);
  CHECK(sol.max_residual() <= 1e-8);
  CHECK(sol.min_reduced_cost >= -1e-9);
  double active = 0.0, mass = 0.0;
  for (int s = 0; s < olp.n_states; ++s) {
    active += sol.x[OccupationLp::column(s, 1)];
    mass += sol.x[OccupationLp::column(s, 0)] + sol.x[OccupationLp::column(s, 1)];
  }
  CHECK(std::abs(active - 2.0 / 6.0) <= 1e-8);
  CHECK(std::abs(mass - 1.0) <= 1e-8);
  for (double pi : sol.activation_probabilities()) {
    CHECK(pi >= -1.0);
    CHECK(pi <= 1.0 + 1e-12);
    if (pi != -1.0) CHECK(pi >= -1e-12);
  }
  CHECK_THROWS_AS(build_occupation_lp(build_single_arm_mdp(cfg, 4), 1.5), ConfigError);
  CHECK_THROWS_AS(build_single_arm_mdp(cfg, 0), ConfigError);
}

TEST_CASE("batteryless network with every node always active") {
  auto cfg = base(Variant::Batteryless);
  cfg.n_channels = cfg.n_nodes;
  cfg.p_operative = 1.0;
  const auto ub = upper_bound(cfg, 30);
  // Every TS each node sends iff it harvested in the previous TS.
  CHECK(std::abs(ub.value - cfg.n_nodes * cfg.chain.stationary_harvest()) <= 1e-9);
}

TEST_CASE("no channels means no throughput") {
  auto cfg = base(Variant::General);
  cfg.n_channels = 0;
  const auto ub = upper_bound(cfg);
  CHECK(ub.value == doctest::Approx(0.0));
  CHECK(ub.stability_delta == 0.0);
}

TEST_CASE("bound is monotone in L_max and stable at the default") {
  for (auto v : {Variant::General, Variant::NoSimultaneousHarvest, Variant::Batteryless}) {
    const auto cfg = base(v);
    double prev = 0.0;
    for (int l : {4, 8, 16, 32, 64}) {
      const double ub = upper_bound(cfg, l, false).value;
      CHECK(ub >= prev - 1e-9);
      prev = ub;
    }
    CHECK(upper_bound(cfg).stability_delta <= 1e-5);
  }
}

TEST_CASE("default L_max") {
  SystemConfig cfg;  // N = 30, K = 5, B = 5
  CHECK(default_l_max(cfg) == 60);
  cfg.n_nodes = 2;
  cfg.n_channels = 1;
  cfg.battery_cap = 20;
  CHECK(default_l_max(cfg) == 80);
  cfg.battery_cap = 1;
  CHECK(default_l_max(cfg) == 40);
}

TEST_CASE("bound dominates simulated policies") {
  for (auto v : {Variant::General, Variant::NoSimultaneousHarvest, Variant::Batteryless}) {
    const auto cfg = base(v);
    const double ub = upper_bound(cfg).value;
    for (auto k : {PolicyKind::Myopic, PolicyKind::RoundRobin, PolicyKind::Random}) {
      const auto s = run_experiment(cfg, k, 40, 5);
      CHECK(s.mean <= ub + 3 * s.ci95);
    }
  }
}

TEST_CASE("LP text export") {
  const auto cfg = base(Variant::General);
  const auto olp = build_occupation_lp(build_single_arm_mdp(cfg, 2), 1.0 / 3.0);
  std::ostringstream os;
  write_lp_text(os, olp);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0, lines = 0;
  std::string objective, bounds;
  while (std::getline(in, line)) {
    ++lines;
    if (line.rfind("row ", 0) == 0) {
      ++rows;
      CHECK(line.find(" = ") != std::string::npos);
    }
    if (line.rfind("objective", 0) == 0) objective = line;
    if (line.rfind("bounds", 0) == 0) bounds = line;
  }
  CHECK(rows == 8);
  CHECK(bounds == "bounds x >= 0");
  std::istringstream obj(objective);
  std::string word;
  int coeffs = -1;
  while (obj >> word) ++coeffs;
  CHECK(coeffs == 12);
  CHECK(os.str().find("rows 8 cols 12\n") != std::string::npos);
}

TEST_CASE("degenerate occupation LP terminates") {
  // Round-off on basic columns once made Bland's rule cycle on this instance.
  SystemConfig cfg;
  cfg.variant = Variant::NoSimultaneousHarvest;
  cfg.n_nodes = 16;
  cfg.n_channels = 2;
  cfg.battery_cap = 4;
  cfg.p_operative = 0.18959682775745818;
  cfg.chain = {0.23539233418980726, 0.54523201722176251, 0.65710813100286058};
  SimplexOptions opts;
  opts.max_iterations = 20000;
  const auto olp = build_occupation_lp(build_single_arm_mdp(cfg, 80), 2.0 / 16.0);
  const auto sol = solve_simplex(olp.lp, opts);
  CHECK(sol.max_residual <= 1e-8);
  CHECK(sol.min_reduced_cost >= -1e-9);
  CHECK(sol.value == doctest::Approx(0.0947100823).epsilon(1e-8));
}
