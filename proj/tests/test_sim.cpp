#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ehrmab/pseudo_value.hpp"
#include "ehrmab/sim.hpp"

using namespace ehrmab;

namespace {

SystemConfig small(Variant v) {
  SystemConfig c;
  c.variant = v;
  c.n_nodes = 8;
  c.n_channels = 3;
  c.battery_cap = v == Variant::Batteryless ? 1 : 4;
  c.p_operative = 0.6;
  c.horizon = 300;
  c.chain = {0.2, 0.8, 0.4};
  return c;
}

const Variant kVariants[] = {Variant::General, Variant::NoSimultaneousHarvest, Variant::Batteryless};
const PolicyKind kPolicies[] = {PolicyKind::Myopic, PolicyKind::RoundRobin, PolicyKind::Random};

}  // namespace

TEST_CASE("no operative node sends nothing") {
  for (auto v : kVariants) {
    auto cfg = small(v);
    cfg.p_operative = 0.0;
    const auto r = run_episode(cfg, PolicyKind::Myopic, 3);
    CHECK(r.total_discounted_bits == 0.0);
  }
}

TEST_CASE("always-harvesting batteryless network sends N bits per TS") {
  SystemConfig cfg = small(Variant::Batteryless);
  cfg.p_operative = 1.0;
  cfg.chain = {1.0, 1.0, 0.5};
  cfg.n_channels = cfg.n_nodes;
  const auto r = run_episode(cfg, PolicyKind::RoundRobin, 11);
  for (std::size_t t = 1; t < r.per_ts_bits.size(); ++t) CHECK(r.per_ts_bits[t] == cfg.n_nodes);
}

TEST_CASE("episodes are reproducible and discounting is consistent") {
  for (auto v : kVariants) {
    auto cfg = small(v);
    cfg.beta = 0.97;
    for (auto k : kPolicies) {
      const auto a = run_episode(cfg, k, 42);
      const auto b = run_episode(cfg, k, 42);
      CHECK(a.per_ts_bits == b.per_ts_bits);
      CHECK(a.total_discounted_bits == b.total_discounted_bits);
      CHECK(a.overflow_events == b.overflow_events);
      double d = 0.0, w = 1.0;
      for (int bits : a.per_ts_bits) {
        CHECK(bits >= 0);
        d += w * bits;
        w *= cfg.beta;
      }
      CHECK(std::abs(d - a.total_discounted_bits) <= 1e-9);
    }
  }
}

TEST_CASE("per-TS bookkeeping invariants") {
  for (auto v : kVariants) {
    const auto cfg = small(v);
    const int cap = effective_capacity(cfg);
    for (auto k : kPolicies) {
      EpisodeOptions opts;
      long failures = 0;
      opts.observer = [&](const TsRecord& rec) {
        const auto& o = *rec.outcome;
        int scheduled = 0;
        for (int i = 0; i < cfg.n_nodes; ++i) {
          const auto u = static_cast<std::size_t>(i);
          scheduled += o.scheduled[u];
          if (o.active[u] != (o.scheduled[u] && o.operative[u])) ++failures;
          if (o.bits_sent[u] > 0 && !o.active[u]) ++failures;
          if (o.observed_eh[u].has_value() != o.active[u]) ++failures;
          const auto& before = (*rec.before)[u];
          const auto& after = (*rec.after)[u];
          const int drain = o.bits_sent[u];
          const int harvest = (*rec.harvested)[u];
          const int clip = (*rec.overflow)[u];
          // Energy conservation: b' - b = harvest - drain - overflow.
          if (after.battery - before.battery != harvest - drain - clip) ++failures;
          for (int term : {harvest, drain, clip, after.battery}) {
            if (term < 0 || term > cap) ++failures;
          }
        }
        if (scheduled != cfg.n_channels) ++failures;
      };
      run_episode(cfg, k, 9, opts);
      CHECK(failures == 0);
    }
  }
}

TEST_CASE("common random numbers across policies") {
  // The environment stream does not depend on the policy, so with p = 1 and
  // K = N every policy sees the same trajectory.
  auto cfg = small(Variant::General);
  cfg.p_operative = 1.0;
  cfg.n_channels = cfg.n_nodes;
  const auto a = run_episode(cfg, PolicyKind::Myopic, 5);
  const auto b = run_episode(cfg, PolicyKind::Random, 5);
  CHECK(a.per_ts_bits == b.per_ts_bits);
}

TEST_CASE("policy variant must match the config") {
  const auto cfg = small(Variant::General);
  Policy p(PolicyKind::Myopic, Variant::Batteryless, cfg.n_nodes, cfg.n_channels, 1);
  CHECK_THROWS_AS(run_episode(cfg, p, 1), ModelMismatch);
  Policy q(PolicyKind::Myopic, Variant::General, cfg.n_nodes + 1, cfg.n_channels, 1);
  CHECK_THROWS_AS(run_episode(cfg, q, 1), ModelMismatch);
}

TEST_CASE("run_experiment") {
  const auto cfg = small(Variant::General);
  const auto one = run_experiment(cfg, PolicyKind::Myopic, 1, 77);
  CHECK(one.mean == run_episode(cfg, PolicyKind::Myopic, split_seed(77, 0)).mean_per_ts());
  CHECK(one.ci95 == 0.0);

  const auto a = run_experiment(cfg, PolicyKind::RoundRobin, 16, 5, 1);
  const auto b = run_experiment(cfg, PolicyKind::RoundRobin, 16, 5, 4);
  CHECK(a.rep_means == b.rep_means);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  CHECK(a.ci95 == doctest::Approx(1.959963984540054 * a.stddev / 4.0));
  CHECK_THROWS_AS(run_experiment(cfg, PolicyKind::Random, 0, 5), ConfigError);
}

TEST_CASE("myopic beats random on the reference network") {
  SystemConfig cfg;
  cfg.chain = {0.1, 0.9, 0.5};
  cfg.horizon = 300;
  const auto mp = run_experiment(cfg, PolicyKind::Myopic, 20, 3, 4);
  const auto rnd = run_experiment(cfg, PolicyKind::Random, 20, 3, 4);
  CHECK(mp.mean - mp.ci95 > rnd.mean + rnd.ci95);
}

TEST_CASE("case1 myopic schedules like round robin on idle times") {
  auto cfg = small(Variant::NoSimultaneousHarvest);
  cfg.chain = {0.2, 0.8, 0.2};
  EpisodeOptions opts;
  std::vector<bool> seen(static_cast<std::size_t>(cfg.n_nodes), false);
  long checked = 0, failures = 0;
  opts.observer = [&](const TsRecord& rec) {
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      // Once every node has transmitted, MP takes the K longest-idle nodes.
      std::vector<int> idx(seen.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return idle_count((*rec.beliefs)[static_cast<std::size_t>(a)]) >
               idle_count((*rec.beliefs)[static_cast<std::size_t>(b)]);
      });
      idx.resize(static_cast<std::size_t>(cfg.n_channels));
      std::sort(idx.begin(), idx.end());
      std::vector<int> chosen;
      for (int i = 0; i < cfg.n_nodes; ++i) {
        if (rec.outcome->scheduled[static_cast<std::size_t>(i)]) chosen.push_back(i);
      }
      failures += chosen != idx;
      ++checked;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (rec.outcome->active[i]) seen[i] = true;
    }
  };
  run_episode(cfg, PolicyKind::Myopic, 21, opts);
  CHECK(checked > 200);
  CHECK(failures == 0);
}

TEST_CASE("case2 myopic keeps a node until it is seen not harvesting") {
  auto cfg = small(Variant::Batteryless);
  cfg.chain = {0.15, 0.85, 0.5};
  EpisodeOptions opts;
  std::vector<bool> keep;
  long failures = 0, kept = 0;
  opts.observer = [&](const TsRecord& rec) {
    const auto& o = *rec.outcome;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i]) {
        ++kept;
        failures += !o.scheduled[i];
      }
    }
    keep.assign(o.scheduled.size(), false);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      keep[i] = o.scheduled[i] && !(o.active[i] && *o.observed_eh[i] == 0);
    }
  };
  run_episode(cfg, PolicyKind::Myopic, 8, opts);
  CHECK(kept > 100);
  CHECK(failures == 0);
}

TEST_CASE("simulated myopic reward matches the pseudo value") {
  // Small networks whose initial beliefs coincide with the true state law.
  const long reps = 200'000;
  SUBCASE("batteryless") {
    SystemConfig cfg;
    cfg.variant = Variant::Batteryless;
    cfg.battery_cap = 1;
    cfg.n_nodes = 3;
    cfg.n_channels = 1;
    cfg.p_operative = 0.7;
    cfg.horizon = 4;
    cfg.chain = {0.2, 0.75, 0.5};
    const double s0 = cfg.chain.stationary_harvest();
    const std::vector<double> s(3, s0);
    const double w = w_case2(s, HorizonSpec{1, cfg.horizon, 1.0}, cfg);
    const auto sim = run_experiment(cfg, PolicyKind::Myopic, static_cast<int>(reps), 17, 8);
    const double se = sim.stddev / std::sqrt(static_cast<double>(reps));
    CHECK(std::abs(sim.mean - w / cfg.horizon) <= 3 * se);
  }
  SUBCASE("no simultaneous harvest") {
    SystemConfig cfg;
    cfg.variant = Variant::NoSimultaneousHarvest;
    cfg.n_nodes = 3;
    cfg.n_channels = 1;
    cfg.battery_cap = 2;
    cfg.p_operative = 0.6;
    cfg.horizon = 5;
    cfg.chain = {0.3, 0.8, 0.0};
    cfg.chain.e0 = cfg.chain.p10() / (cfg.chain.p01 + cfg.chain.p10());  // reset law = stationary law
    const std::vector<int> idle(3, 0);
    const double w = w_case1(idle, HorizonSpec{1, cfg.horizon, 1.0}, cfg);
    const auto sim = run_experiment(cfg, PolicyKind::Myopic, static_cast<int>(reps), 23, 8);
    const double se = sim.stddev / std::sqrt(static_cast<double>(reps));
    CHECK(std::abs(sim.mean - w / cfg.horizon) <= 3 * se);
  }
}
