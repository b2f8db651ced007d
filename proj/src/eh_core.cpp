#include "ehrmab/eh_core.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace ehrmab {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::General: return "general";
    case Variant::NoSimultaneousHarvest: return "no_simultaneous_harvest";
    case Variant::Batteryless: return "batteryless";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "general") return Variant::General;
  if (name == "no_simultaneous_harvest" || name == "case1") return Variant::NoSimultaneousHarvest;
  if (name == "batteryless" || name == "case2") return Variant::Batteryless;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

double EhChainParams::stationary_harvest() const {
  const double denom = p01 + p10();
  // p01 = 0, p11 = 1: both states absorbing, no unique stationary law.
  if (denom <= 0.0) return 0.5;
  return p01 / denom;
}

bool EhChainParams::reset_admissible() const {
  const double denom = p01 + p10();
  if (denom <= 0.0) return true;
  return e0 <= p10() / denom + kProbTol;
}

void EhChainParams::validate() const {
  auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  if (!in_unit(p01)) throw ConfigError("chain.p01 must lie in [0, 1]");
  if (!in_unit(p11)) throw ConfigError("chain.p11 must lie in [0, 1]");
  if (!in_unit(e0)) throw ConfigError("chain.e0 must lie in [0, 1]");
}

void SystemConfig::validate() const {
  chain.validate();
  if (n_nodes < 1) throw ConfigError("n_nodes must be positive");
  if (n_channels < 0) throw ConfigError("n_channels must be non-negative");
  if (n_channels > n_nodes) throw ConfigError("n_channels must not exceed n_nodes");
  if (battery_cap < 0) throw ConfigError("battery_cap must be non-negative");
  if (!(p_operative >= 0.0 && p_operative <= 1.0)) throw ConfigError("p_operative must lie in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (horizon < 1) throw ConfigError("horizon must be positive");
  if (variant == Variant::Batteryless && battery_cap != 1) {
    throw ModelMismatch("batteryless variant requires battery_cap = 1");
  }
  if (variant != Variant::Batteryless && battery_cap < 1) {
    throw ModelMismatch("battery variants require battery_cap >= 1");
  }
}

int effective_capacity(const SystemConfig& cfg) {
  return cfg.variant == Variant::Batteryless ? 1 : cfg.battery_cap;
}

// ---------------------------------------------------------------------------
// JointEBDist

JointEBDist::JointEBDist(int battery_cap)
    : cap_(battery_cap), prob_(2 * static_cast<std::size_t>(battery_cap + 1), 0.0) {}

JointEBDist JointEBDist::point(int eh_state, int battery, int battery_cap) {
  JointEBDist d(battery_cap);
  d.at(eh_state, battery) = 1.0;
  return d;
}

double JointEBDist::mass() const {
  double m = 0.0;
  for (double x : prob_) m += x;
  return m;
}

double JointEBDist::mean_battery() const {
  double m = 0.0;
  for (int e = 0; e < 2; ++e)
    for (int b = 0; b <= cap_; ++b) m += b * at(e, b);
  return m;
}

double JointEBDist::harvest_prob() const {
  double m = 0.0;
  for (int b = 0; b <= cap_; ++b) m += at(1, b);
  return m;
}

double JointEBDist::not_full_prob() const {
  double m = 0.0;
  for (int e = 0; e < 2; ++e)
    for (int b = 0; b < cap_; ++b) m += at(e, b);
  return m;
}

double markov_step_prob(int e, const EhChainParams& chain) {
  return e == 1 ? chain.p11 : chain.p01;
}

JointEBDist evolve_eb_dist(const JointEBDist& d, const EhChainParams& chain, int battery_cap) {
  JointEBDist out(battery_cap);
  for (int e = 0; e < 2; ++e) {
    const double up = markov_step_prob(e, chain);
    for (int b = 0; b <= battery_cap; ++b) {
      const double m = d.at(e, b);
      if (m == 0.0) continue;
      out.at(1, std::min(b + 1, battery_cap)) += m * up;
      out.at(0, b) += m * (1.0 - up);
    }
  }
  return out;
}

JointEBDist evolve_eb_dist_batteryless(const JointEBDist& d, const EhChainParams& chain) {
  JointEBDist out(d.capacity());
  const double h = d.harvest_prob();
  const double up = h * chain.p11 + (1.0 - h) * chain.p01;
  out.at(1, 1) = up;
  out.at(0, 0) = 1.0 - up;
  return out;
}

JointEBDist belief_to_dist(const GeneralBelief& belief, const EhChainParams& chain,
                           int battery_cap) {
  // Right after an active TS the battery holds exactly what was harvested in it.
  const double up = markov_step_prob(belief.last_eh, chain);
  JointEBDist d(battery_cap);
  d.at(1, std::min(1, battery_cap)) += up;
  d.at(0, 0) += 1.0 - up;
  for (int l = 0; l < belief.idle; ++l) d = evolve_eb_dist(d, chain, battery_cap);
  return d;
}

JointEBDist case1_reset_dist(const EhChainParams& chain, int battery_cap) {
  JointEBDist d(battery_cap);
  d.at(0, 0) = chain.e0;
  d.at(1, 0) = chain.e1();
  return d;
}

double case1_belief_z(int idle, const EhChainParams& chain, int battery_cap) {
  JointEBDist d = case1_reset_dist(chain, battery_cap);
  double z = 0.0;
  for (int n = 0; n < idle; ++n) {
    const double p_nf = d.not_full_prob();
    if (p_nf > 0.0) {
      // Harvest probability conditioned on the battery having room.
      double p0_nf = 0.0;
      for (int b = 0; b < battery_cap; ++b) p0_nf += d.at(0, b);
      p0_nf /= p_nf;
      const double p1_nf = 1.0 - p0_nf;
      z += p_nf / battery_cap * (chain.p01 * p0_nf + chain.p11 * p1_nf);
    }
    d = evolve_eb_dist(d, chain, battery_cap);
  }
  return z;
}

double case1_belief_z_by_distribution(int idle, const EhChainParams& chain, int battery_cap) {
  JointEBDist d = case1_reset_dist(chain, battery_cap);
  for (int n = 0; n < idle; ++n) d = evolve_eb_dist(d, chain, battery_cap);
  return d.mean_battery() / battery_cap;
}

double case1_p0(int n, const EhChainParams& chain) {
  double p0 = chain.e0;
  for (int k = 0; k < n; ++k) p0 = chain.p10() + p0 * (chain.p11 - chain.p01);
  return p0;
}

double tau_case2(double s, const EhChainParams& chain) {
  return (chain.p11 - chain.p01) * s + chain.p01;
}

double q_prob(int active, int scheduled, double p) {
  if (active < 0 || active > scheduled) {
    throw std::invalid_argument("q_prob: active count must lie in [0, scheduled]");
  }
  return std::pow(1.0 - p, scheduled - active) * std::pow(p, active);
}

Variant variant_of(const BeliefState& b) {
  switch (b.index()) {
    case 0: return Variant::General;
    case 1: return Variant::NoSimultaneousHarvest;
    default: return Variant::Batteryless;
  }
}

int idle_count(const BeliefState& b) {
  return std::visit([](const auto& x) { return x.idle; }, b);
}

// ---------------------------------------------------------------------------
// BeliefTable

BeliefTable::BeliefTable(Variant variant, const EhChainParams& chain, int battery_cap)
    : variant_(variant),
      chain_(chain),
      cap_(variant == Variant::Batteryless ? 1 : battery_cap) {
  if (cap_ < 1) throw ModelMismatch("belief table needs a positive battery capacity");
  z_.push_back(0.0);
}

BeliefTable::BeliefTable(const SystemConfig& cfg)
    : BeliefTable(cfg.variant, cfg.chain, effective_capacity(cfg)) {}

JointEBDist BeliefTable::base(int last_eh) const {
  switch (variant_) {
    case Variant::NoSimultaneousHarvest:
      return case1_reset_dist(chain_, cap_);
    case Variant::General:
    case Variant::Batteryless:
      break;
  }
  return belief_to_dist(GeneralBelief{0, last_eh}, chain_, cap_);
}

JointEBDist BeliefTable::step(const JointEBDist& d) const {
  if (variant_ == Variant::Batteryless) return evolve_eb_dist_batteryless(d, chain_);
  return evolve_eb_dist(d, chain_, cap_);
}

const BeliefTable::Row& BeliefTable::row(int idle, int last_eh) const {
  if (idle < 0) throw std::invalid_argument("idle count must be non-negative");
  const auto h = static_cast<std::size_t>(last_eh != 0);
  const auto want = static_cast<std::size_t>(idle);
  {
    std::shared_lock lock(mu_);
    if (want < rows_[h].size()) return rows_[h][want];
  }
  std::unique_lock lock(mu_);
  auto& rows = rows_[h];
  if (rows.empty()) {
    JointEBDist d = base(static_cast<int>(h));
    const double mb = d.mean_battery();
    const double hp = d.harvest_prob();
    rows.push_back(Row{std::move(d), mb, hp});
  }
  while (rows.size() <= want) {
    JointEBDist d = step(rows.back().dist);
    const double mb = d.mean_battery();
    const double hp = d.harvest_prob();
    rows.push_back(Row{std::move(d), mb, hp});
  }
  return rows[want];
}

JointEBDist BeliefTable::dist(int idle, int last_eh) const { return row(idle, last_eh).dist; }

double BeliefTable::expected_battery(int idle, int last_eh) const {
  return row(idle, last_eh).mean_battery;
}

double BeliefTable::harvest_prob(int idle, int last_eh) const {
  return row(idle, last_eh).harvest;
}

double BeliefTable::case1_z(int idle) const {
  if (variant_ != Variant::NoSimultaneousHarvest) {
    throw ModelMismatch("case1_z requires the no_simultaneous_harvest variant");
  }
  if (idle < 0) throw std::invalid_argument("idle count must be non-negative");
  const auto want = static_cast<std::size_t>(idle);
  {
    std::shared_lock lock(mu_);
    if (want < z_.size()) return z_[want];
  }
  // Rows first: row() takes the lock itself.
  if (idle > 0) (void)row(idle - 1, 0);
  std::unique_lock lock(mu_);
  while (z_.size() <= want) {
    const JointEBDist& d = rows_[0][z_.size() - 1].dist;
    double inc = 0.0;
    for (int e = 0; e < 2; ++e)
      for (int b = 0; b < cap_; ++b) inc += d.at(e, b) * markov_step_prob(e, chain_);
    z_.push_back(z_.back() + inc / cap_);
  }
  return z_[want];
}

BeliefState initial_belief(const SystemConfig& cfg, int initial_h) {
  switch (cfg.variant) {
    case Variant::General: return GeneralBelief{0, initial_h};
    case Variant::NoSimultaneousHarvest: return Case1Belief{0, 0.0};
    case Variant::Batteryless: return Case2Belief{cfg.chain.stationary_harvest(), 0};
  }
  return GeneralBelief{};
}

double expected_reward(std::span<const BeliefState> beliefs, double p, const BeliefTable& table) {
  if (beliefs.empty()) return 0.0;
  const Variant v = variant_of(beliefs.front());
  double sum = 0.0;
  for (const auto& b : beliefs) {
    if (variant_of(b) != v) throw ModelMismatch("expected_reward: mixed belief variants");
    if (const auto* g = std::get_if<GeneralBelief>(&b)) {
      sum += table.expected_battery(g->idle, g->last_eh);
    } else if (const auto* c1 = std::get_if<Case1Belief>(&b)) {
      sum += table.capacity() * c1->z;
    } else {
      sum += std::get<Case2Belief>(b).s;
    }
  }
  return p * sum;
}

}  // namespace ehrmab
