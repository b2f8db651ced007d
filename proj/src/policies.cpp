#include "ehrmab/policies.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ehrmab {

TsOutcome::TsOutcome(int n_nodes)
    : scheduled(static_cast<std::size_t>(n_nodes), false),
      operative(static_cast<std::size_t>(n_nodes), false),
      active(static_cast<std::size_t>(n_nodes), false),
      bits_sent(static_cast<std::size_t>(n_nodes), 0),
      observed_eh(static_cast<std::size_t>(n_nodes)) {}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Myopic: return "myopic";
    case PolicyKind::RoundRobin: return "round_robin";
    case PolicyKind::Random: return "random";
  }
  return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "myopic" || name == "mp") return PolicyKind::Myopic;
  if (name == "round_robin" || name == "rr") return PolicyKind::RoundRobin;
  if (name == "random") return PolicyKind::Random;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

double myopic_score(const BeliefState& b, const BeliefTable& table) {
  if (const auto* g = std::get_if<GeneralBelief>(&b)) {
    return table.expected_battery(g->idle, g->last_eh);
  }
  if (const auto* c1 = std::get_if<Case1Belief>(&b)) return c1->z;
  return std::get<Case2Belief>(b).s;
}

std::vector<int> myopic_select(const BeliefVector& beliefs, int k, const BeliefTable& table) {
  const int n = static_cast<int>(beliefs.size());
  if (k < 0 || k > n) throw std::invalid_argument("myopic_select: K out of range");
  struct Key {
    double score;
    int idle;
    int index;
  };
  std::vector<Key> keys;
  keys.reserve(beliefs.size());
  for (int i = 0; i < n; ++i) {
    const auto& b = beliefs[static_cast<std::size_t>(i)];
    keys.push_back({myopic_score(b, table), idle_count(b), i});
  }
  auto better = [](const Key& a, const Key& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.idle != b.idle) return a.idle > b.idle;
    return a.index < b.index;
  };
  std::partial_sort(keys.begin(), keys.begin() + k, keys.end(), better);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(keys[static_cast<std::size_t>(i)].index);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> round_robin_select(std::span<const int> order, int cursor, int k) {
  const int n = static_cast<int>(order.size());
  if (k < 0 || k > n) throw std::invalid_argument("round_robin_select: K out of range");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(order[static_cast<std::size_t>((cursor + i) % n)]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> random_select(Rng& rng, int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("random_select: K out of range");
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

BeliefVector update_beliefs(const BeliefVector& beliefs, const TsOutcome& outcome,
                            const BeliefTable& table) {
  if (outcome.size() != static_cast<int>(beliefs.size())) {
    throw std::invalid_argument("update_beliefs: outcome size does not match belief vector");
  }
  const auto& chain = table.chain();
  BeliefVector next;
  next.reserve(beliefs.size());
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    const auto& b = beliefs[i];
    if (outcome.active[i]) {
      if (!outcome.observed_eh[i]) {
        throw std::invalid_argument("update_beliefs: active node " + std::to_string(i) +
                                    " has no EH observation");
      }
      const int eh = *outcome.observed_eh[i];
      switch (variant_of(b)) {
        case Variant::General: next.emplace_back(GeneralBelief{0, eh}); break;
        case Variant::NoSimultaneousHarvest: next.emplace_back(Case1Belief{0, 0.0}); break;
        case Variant::Batteryless:
          next.emplace_back(Case2Belief{eh == 1 ? chain.p11 : chain.p01, 0});
          break;
      }
      continue;
    }
    if (const auto* g = std::get_if<GeneralBelief>(&b)) {
      next.emplace_back(GeneralBelief{g->idle + 1, g->last_eh});
    } else if (const auto* c1 = std::get_if<Case1Belief>(&b)) {
      next.emplace_back(Case1Belief{c1->idle + 1, table.case1_z(c1->idle + 1)});
    } else {
      const auto& c2 = std::get<Case2Belief>(b);
      next.emplace_back(Case2Belief{tau_case2(c2.s, chain), c2.idle + 1});
    }
  }
  return next;
}

Policy::Policy(PolicyKind kind, Variant variant, int n_nodes, int n_channels, std::uint64_t seed)
    : kind_(kind), variant_(variant), n_nodes_(n_nodes), n_channels_(n_channels), rng_(seed) {
  if (n_channels < 0 || n_channels > n_nodes) throw ConfigError("policy: K must lie in [0, N]");
  if (kind_ == PolicyKind::RoundRobin) {
    order_.resize(static_cast<std::size_t>(n_nodes));
    std::iota(order_.begin(), order_.end(), 0);
    for (int i = n_nodes - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng_.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(j)]);
    }
  }
}

Policy Policy::round_robin_with_order(Variant variant, std::vector<int> order, int n_channels) {
  Policy p(PolicyKind::Random, variant, static_cast<int>(order.size()), n_channels, 0);
  p.kind_ = PolicyKind::RoundRobin;
  p.order_ = std::move(order);
  return p;
}

std::vector<int> Policy::decide(const BeliefVector& beliefs, const BeliefTable& table) {
  if (static_cast<int>(beliefs.size()) != n_nodes_) {
    throw ModelMismatch("policy was built for a different number of nodes");
  }
  switch (kind_) {
    case PolicyKind::Myopic:
      return myopic_select(beliefs, n_channels_, table);
    case PolicyKind::RoundRobin: {
      auto out = round_robin_select(order_, cursor_, n_channels_);
      if (n_nodes_ > 0) cursor_ = (cursor_ + n_channels_) % n_nodes_;
      return out;
    }
    case PolicyKind::Random:
      return random_select(rng_, n_nodes_, n_channels_);
  }
  return {};
}

}  // namespace ehrmab
