#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ehrmab/eh_core.hpp"
#include "ehrmab/rng.hpp"

namespace ehrmab {

/// What happened to each node in one TS.
struct TsOutcome {
  std::vector<bool> scheduled;
  std::vector<bool> operative;
  std::vector<bool> active;  // scheduled && operative
  std::vector<int> bits_sent;
  std::vector<std::optional<int>> observed_eh;  // present iff active

  explicit TsOutcome(int n_nodes = 0);
  int size() const { return static_cast<int>(scheduled.size()); }
};

enum class PolicyKind { Myopic, RoundRobin, Random };

std::string_view to_string(PolicyKind k);
PolicyKind parse_policy(std::string_view name);

/// Per-node score the myopic policy ranks by: E[b] (General), z, or s.
double myopic_score(const BeliefState& b, const BeliefTable& table);

/// K nodes with the largest myopic score; ties go to the longest-idle node,
/// then the lowest index. Result sorted ascending.
std::vector<int> myopic_select(const BeliefVector& beliefs, int k, const BeliefTable& table);

/// The next K nodes in `order` starting at `cursor` (wrapping). Sorted ascending.
std::vector<int> round_robin_select(std::span<const int> order, int cursor, int k);

/// Uniform K-subset of [0, n) by partial Fisher-Yates. Sorted ascending.
std::vector<int> random_select(Rng& rng, int n, int k);

/// AP-side belief update. Active nodes reset (General: (0, observed);
/// NoSimultaneousHarvest: z = 0; Batteryless: p11 or p01 by observation),
/// idle nodes advance one TS. Throws std::invalid_argument if an active node
/// has no observation.
BeliefVector update_beliefs(const BeliefVector& beliefs, const TsOutcome& outcome,
                            const BeliefTable& table);

/// One scheduling policy instance. Owned by a single episode.
class Policy {
 public:
  Policy(PolicyKind kind, Variant variant, int n_nodes, int n_channels, std::uint64_t seed);

  /// Round robin over an explicit cyclic order.
  static Policy round_robin_with_order(Variant variant, std::vector<int> order, int n_channels);

  PolicyKind kind() const { return kind_; }
  Variant variant() const { return variant_; }
  int n_nodes() const { return n_nodes_; }
  int n_channels() const { return n_channels_; }
  const std::vector<int>& order() const { return order_; }

  /// Exactly K distinct indices in [0, N), sorted ascending.
  std::vector<int> decide(const BeliefVector& beliefs, const BeliefTable& table);

 private:
  PolicyKind kind_;
  Variant variant_;
  int n_nodes_;
  int n_channels_;
  Rng rng_;
  std::vector<int> order_;
  int cursor_ = 0;
};

}  // namespace ehrmab
