#pragma once

#include <cstddef>
#include <deque>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ehrmab {

/// Absolute tolerance used for probability comparisons throughout the model.
inline constexpr double kProbTol = 1e-12;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when two pieces of a model disagree (e.g. a policy built for one
/// variant is run against a configuration of another).
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant {
  General,                // battery of capacity B, harvest and transmit in the same TS
  NoSimultaneousHarvest,  // battery emptied on transmission, EH state reset by (e0, e1)
  Batteryless,            // energy available in a TS is the previous TS's harvest
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// Two-state energy-harvesting Markov chain. State 1 harvests one unit.
struct EhChainParams {
  double p01 = 0.1;
  double p11 = 0.9;
  /// Probability that the EH process restarts in the non-harvesting state
  /// right after a transmission (NoSimultaneousHarvest only).
  double e0 = 0.5;

  double p00() const { return 1.0 - p01; }
  double p10() const { return 1.0 - p11; }
  double e1() const { return 1.0 - e0; }

  /// Stationary probability of the harvesting state.
  double stationary_harvest() const;

  bool positively_correlated() const { return p11 >= p01; }
  /// e0 <= p10 / (p01 + p10): the reset leaves the chain no more likely to
  /// harvest than it is in steady state.
  bool reset_admissible() const;

  /// Throws ConfigError when a probability lies outside [0, 1].
  void validate() const;
};

struct SystemConfig {
  int n_nodes = 30;
  int n_channels = 5;
  int battery_cap = 5;
  double p_operative = 0.5;
  double beta = 1.0;
  int horizon = 1000;
  Variant variant = Variant::General;
  EhChainParams chain{};

  /// Range checks (ConfigError) and variant consistency (ModelMismatch).
  void validate() const;
};

/// The value of SystemConfig::battery_cap a variant actually uses.
int effective_capacity(const SystemConfig& cfg);

struct TrueNodeState {
  int eh_state = 0;
  int battery = 0;
};

/// Probability table over (EH state, battery level).
class JointEBDist {
 public:
  explicit JointEBDist(int battery_cap);

  static JointEBDist point(int eh_state, int battery, int battery_cap);

  int capacity() const { return cap_; }
  double& at(int e, int b) { return prob_[index(e, b)]; }
  double at(int e, int b) const { return prob_[index(e, b)]; }

  double mass() const;
  double mean_battery() const;
  /// Marginal probability of the harvesting state.
  double harvest_prob() const;
  /// P(battery < capacity).
  double not_full_prob() const;

  std::span<const double> raw() const { return prob_; }

 private:
  std::size_t index(int e, int b) const {
    return static_cast<std::size_t>(e) * static_cast<std::size_t>(cap_ + 1) +
           static_cast<std::size_t>(b);
  }

  int cap_;
  std::vector<double> prob_;
};

/// P(next EH state = 1 | current = e).
double markov_step_prob(int e, const EhChainParams& chain);

/// One idle TS: e' drawn from the chain, b' = min(b + e', B).
JointEBDist evolve_eb_dist(const JointEBDist& d, const EhChainParams& chain, int battery_cap);

/// One idle TS of a batteryless node: whatever was stored is lost, b' = e'.
JointEBDist evolve_eb_dist_batteryless(const JointEBDist& d, const EhChainParams& chain);

struct GeneralBelief {
  int idle = 0;     // l: TSs since the node was last active
  int last_eh = 0;  // h: EH state observed when it was last active
};

struct Case1Belief {
  int idle = 0;
  double z = 0.0;  // normalised expected battery, cached for idle
};

struct Case2Belief {
  double s = 0.0;  // probability of being in the harvesting state
  int idle = 0;    // kept for tie-breaking only
};

using BeliefState = std::variant<GeneralBelief, Case1Belief, Case2Belief>;
using BeliefVector = std::vector<BeliefState>;

Variant variant_of(const BeliefState& b);
int idle_count(const BeliefState& b);

/// Distribution of (E^s, battery) for a General-variant node with belief (l, h).
JointEBDist belief_to_dist(const GeneralBelief& b, const EhChainParams& chain, int battery_cap);

/// Distribution right after a transmission in the NoSimultaneousHarvest
/// variant: e ~ (e0, e1), empty battery.
JointEBDist case1_reset_dist(const EhChainParams& chain, int battery_cap);

/// Normalised expected battery after `idle` idle TSs following a transmission,
/// accumulated increment by increment: z_{n+1} = z_n + p_nf(n)/B * P(harvest | not full).
double case1_belief_z(int idle, const EhChainParams& chain, int battery_cap);

/// Same quantity read off the pushed-forward distribution as E[b] / B.
double case1_belief_z_by_distribution(int idle, const EhChainParams& chain, int battery_cap);

/// Closed-form non-harvesting probability after n idle TSs, p0(0) = e0,
/// p0(n) = p10 + p0(n-1) (p11 - p01).
double case1_p0(int n, const EhChainParams& chain);

/// Batteryless belief map s -> (p11 - p01) s + p01.
double tau_case2(double s, const EhChainParams& chain);

/// q(a, K) = (1-p)^(K-a) p^a. Throws std::invalid_argument unless 0 <= a <= K.
double q_prob(int active, int scheduled, double p);

/// Memoised per-(l, h) distributions for one (variant, chain, capacity).
/// Lazily grows; concurrent readers, serialised writers.
class BeliefTable {
 public:
  BeliefTable(Variant variant, const EhChainParams& chain, int battery_cap);
  explicit BeliefTable(const SystemConfig& cfg);

  Variant variant() const { return variant_; }
  const EhChainParams& chain() const { return chain_; }
  int capacity() const { return cap_; }

  JointEBDist dist(int idle, int last_eh) const;
  double expected_battery(int idle, int last_eh) const;
  /// P(e = 1 | l, h), used by the relaxed single-arm kernel.
  double harvest_prob(int idle, int last_eh) const;
  /// Normalised expected battery, NoSimultaneousHarvest only.
  double case1_z(int idle) const;

 private:
  struct Row {
    JointEBDist dist;
    double mean_battery;
    double harvest;
  };
  const Row& row(int idle, int last_eh) const;
  JointEBDist base(int last_eh) const;
  JointEBDist step(const JointEBDist& d) const;

  Variant variant_;
  EhChainParams chain_;
  int cap_;
  mutable std::shared_mutex mu_;
  mutable std::deque<Row> rows_[2];
  mutable std::vector<double> z_;
};

/// Belief value for a fresh node. General uses (0, initial_h); NoSimultaneousHarvest
/// starts empty; Batteryless starts at the stationary harvest probability.
BeliefState initial_belief(const SystemConfig& cfg, int initial_h = 0);

/// Expected throughput of scheduling the given beliefs. General: p * sum E[b];
/// NoSimultaneousHarvest: p * B * sum z; Batteryless: p * sum s.
/// Throws ModelMismatch on mixed variants.
double expected_reward(std::span<const BeliefState> beliefs, double p, const BeliefTable& table);

}  // namespace ehrmab
