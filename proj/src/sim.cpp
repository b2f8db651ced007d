#include "ehrmab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ehrmab/parallel.hpp"
#include "ehrmab/rng.hpp"

namespace ehrmab {

double EpisodeResult::mean_per_ts() const {
  if (per_ts_bits.empty()) return 0.0;
  const double total = std::accumulate(per_ts_bits.begin(), per_ts_bits.end(), 0.0);
  return total / static_cast<double>(per_ts_bits.size());
}

EpisodeResult run_episode(const SystemConfig& config, Policy& policy, std::uint64_t seed,
                          const EpisodeOptions& options) {
  config.validate();
  if (policy.variant() != config.variant) {
    throw ModelMismatch("policy built for variant '" + std::string(to_string(policy.variant())) +
                        "' run on '" + std::string(to_string(config.variant)) + "'");
  }
  if (policy.n_nodes() != config.n_nodes || policy.n_channels() != config.n_channels) {
    throw ModelMismatch("policy built for a different (N, K)");
  }

  const int n = config.n_nodes;
  const int cap = effective_capacity(config);
  const double p = config.p_operative;
  const auto& chain = config.chain;
  const BeliefTable table(config);
  Rng env(split_seed(seed, 0));

  std::vector<TrueNodeState> state(static_cast<std::size_t>(n));
  const double pi1 = chain.stationary_harvest();
  for (auto& s : state) {
    s.eh_state = env.bernoulli(pi1) ? 1 : 0;
    s.battery = config.variant == Variant::Batteryless ? s.eh_state : 0;
  }
  BeliefVector beliefs(static_cast<std::size_t>(n), initial_belief(config, options.initial_h));

  EpisodeResult result;
  result.per_ts_bits.reserve(static_cast<std::size_t>(config.horizon));
  std::vector<TrueNodeState> next(state.size());
  std::vector<int> harvested(state.size());
  std::vector<int> overflow(state.size());
  double discount = 1.0;

  for (int ts = 1; ts <= config.horizon; ++ts) {
    TsOutcome outcome(n);
    for (int i : policy.decide(beliefs, table)) outcome.scheduled[static_cast<std::size_t>(i)] = true;

    int bits = 0;
    for (std::size_t i = 0; i < state.size(); ++i) {
      const double u_op = env.uniform();
      const double u_eh = env.uniform();
      const auto [e, b] = state[i];
      outcome.operative[i] = u_op < p;
      const bool active = outcome.scheduled[i] && outcome.operative[i];
      outcome.active[i] = active;

      auto& nx = next[i];
      int drain = 0;
      if (active) {
        drain = b;
        outcome.bits_sent[i] = b;
        outcome.observed_eh[i] = e;
      }
      if (active && config.variant == Variant::NoSimultaneousHarvest) {
        // Nothing is harvested while transmitting; the EH process restarts.
        nx.eh_state = u_eh < chain.e1() ? 1 : 0;
        harvested[i] = 0;
        nx.battery = 0;
        overflow[i] = 0;
      } else {
        nx.eh_state = u_eh < markov_step_prob(e, chain) ? 1 : 0;
        harvested[i] = nx.eh_state;
        if (config.variant == Variant::Batteryless) {
          nx.battery = nx.eh_state;
          overflow[i] = b - drain;
        } else if (active) {
          nx.battery = nx.eh_state;
          overflow[i] = 0;
        } else {
          nx.battery = std::min(b + nx.eh_state, cap);
          overflow[i] = b + nx.eh_state - nx.battery;
        }
      }
      bits += outcome.bits_sent[i];
      result.overflow_events += overflow[i];
    }

    result.per_ts_bits.push_back(bits);
    result.total_discounted_bits += discount * bits;
    discount *= config.beta;

    if (options.observer) {
      TsRecord rec;
      rec.ts = ts;
      rec.beliefs = &beliefs;
      rec.before = &state;
      rec.after = &next;
      rec.outcome = &outcome;
      rec.harvested = &harvested;
      rec.overflow = &overflow;
      options.observer(rec);
    }

    beliefs = update_beliefs(beliefs, outcome, table);
    state.swap(next);
  }
  return result;
}

EpisodeResult run_episode(const SystemConfig& config, PolicyKind kind, std::uint64_t seed,
                          const EpisodeOptions& options) {
  Policy policy(kind, config.variant, config.n_nodes, config.n_channels, split_seed(seed, 1));
  return run_episode(config, policy, seed, options);
}

ExperimentSummary run_experiment(const SystemConfig& config, PolicyKind kind, int repetitions,
                                 std::uint64_t base_seed, int jobs, int initial_h) {
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  config.validate();
  std::vector<double> means(static_cast<std::size_t>(repetitions));
  std::vector<double> overflow(static_cast<std::size_t>(repetitions));
  parallel_for(means.size(), jobs, [&](std::size_t r) {
    EpisodeOptions opts;
    opts.initial_h = initial_h;
    const auto res = run_episode(config, kind, split_seed(base_seed, r), opts);
    means[r] = res.mean_per_ts();
    overflow[r] = static_cast<double>(res.overflow_events) / config.horizon;
  });

  // Summed in repetition order so the result is independent of scheduling.
  ExperimentSummary s;
  s.repetitions = repetitions;
  const double r = repetitions;
  for (std::size_t i = 0; i < means.size(); ++i) {
    s.mean += means[i];
    s.overflow_rate += overflow[i];
  }
  s.mean /= r;
  s.overflow_rate /= r;
  if (repetitions > 1) {
    double ss = 0.0;
    for (double m : means) ss += (m - s.mean) * (m - s.mean);
    s.stddev = std::sqrt(ss / (r - 1.0));
    s.ci95 = 1.959963984540054 * s.stddev / std::sqrt(r);
  }
  s.rep_means = std::move(means);
  return s;
}

}  // namespace ehrmab
