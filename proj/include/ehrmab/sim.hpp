#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ehrmab/eh_core.hpp"
#include "ehrmab/policies.hpp"

namespace ehrmab {

struct EpisodeResult {
  double total_discounted_bits = 0.0;
  std::vector<int> per_ts_bits;
  long overflow_events = 0;  // energy units lost to a full (or absent) battery

  /// Undiscounted bits per TS.
  double mean_per_ts() const;
};

/// Everything the simulator knows about one TS, handed to an observer.
struct TsRecord {
  int ts = 0;  // 1-based
  const BeliefVector* beliefs = nullptr;  // AP beliefs the decision was made on
  const std::vector<TrueNodeState>* before = nullptr;
  const std::vector<TrueNodeState>* after = nullptr;
  const TsOutcome* outcome = nullptr;
  const std::vector<int>* harvested = nullptr;  // energy harvested during the TS
  const std::vector<int>* overflow = nullptr;   // energy discarded during the TS
};

using EpisodeObserver = std::function<void(const TsRecord&)>;

struct EpisodeOptions {
  /// h of the (0, h) pseudo-belief the AP starts General-variant nodes at.
  int initial_h = 0;
  EpisodeObserver observer;
};

/// Simulates `config.horizon` TSs. Environment randomness comes from
/// split_seed(seed, 0) and is consumed identically whatever the policy does.
/// Throws ModelMismatch if the policy was built for another variant or size.
EpisodeResult run_episode(const SystemConfig& config, Policy& policy, std::uint64_t seed,
                          const EpisodeOptions& options = {});

/// Builds the policy from split_seed(seed, 1) and runs one episode.
EpisodeResult run_episode(const SystemConfig& config, PolicyKind kind, std::uint64_t seed,
                          const EpisodeOptions& options = {});

struct ExperimentSummary {
  int repetitions = 0;
  double mean = 0.0;    // mean per-TS throughput over repetitions
  double stddev = 0.0;  // sample standard deviation of the per-repetition means
  double ci95 = 0.0;    // normal-approximation half-width, 1.96 * stddev / sqrt(R)
  double overflow_rate = 0.0;  // discarded energy units per TS
  std::vector<double> rep_means;
};

/// Repetition r runs with seed split_seed(base_seed, r). Results do not
/// depend on `jobs`.
ExperimentSummary run_experiment(const SystemConfig& config, PolicyKind kind, int repetitions,
                                 std::uint64_t base_seed, int jobs = 1, int initial_h = 0);

}  // namespace ehrmab
