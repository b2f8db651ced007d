#include "ehrmab/pseudo_value.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "ehrmab/rng.hpp"

namespace ehrmab {

namespace {

// All K-subsets of [0, n) in lexicographic order.
std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  if (k > n) return out;
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Halton sequence over the first primes; dimension d uses prime d.
class Halton {
 public:
  explicit Halton(std::uint64_t skip) : index_(skip + 1) {}

  std::vector<double> next(std::size_t dims) {
    static constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19,
                                                 23, 29, 31, 37, 41, 43, 47, 53};
    std::vector<double> out(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      const int base = kPrimes[d % kPrimes.size()];
      double f = 1.0, r = 0.0;
      for (std::uint64_t i = index_; i > 0; i /= static_cast<std::uint64_t>(base)) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
      }
      out[d] = r;
    }
    ++index_;
    return out;
  }

 private:
  std::uint64_t index_;
};

// Admissible chain from three unit draws: p11 >= p01, e0 <= p10 / (p01 + p10).
EhChainParams admissible_chain(double a, double b, double c) {
  EhChainParams ch;
  ch.p11 = a;
  ch.p01 = b * a;
  const double denom = ch.p01 + ch.p10();
  ch.e0 = denom > 0.0 ? c * ch.p10() / denom : c;
  return ch;
}

int pick(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

void HorizonSpec::validate() const {
  if (horizon < 1 || n < 1 || n > horizon) throw std::invalid_argument("HorizonSpec: need 1 <= n <= T");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("HorizonSpec: beta must lie in (0, 1]");
}

void LemmaReport::record(double violation) {
  if (instances == 0 || violation > max_violation) max_violation = violation;
  ++instances;
  pass = max_violation <= kViolationTol;
}

double u_fn(int n, int horizon, double beta, double p) {
  const double r = beta * (1.0 - p);
  double term = 1.0, sum = 0.0;
  for (int i = 0; i <= horizon - n; ++i) {
    sum += term;
    term *= r;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Case 1

Case1Evaluator::Case1Evaluator(const SystemConfig& cfg)
    : cfg_(cfg), table_(cfg), w_memo_(static_cast<std::size_t>(cfg.horizon) + 2),
      v_memo_(static_cast<std::size_t>(cfg.horizon) + 2) {
  if (cfg.variant != Variant::NoSimultaneousHarvest) {
    throw ModelMismatch("Case1Evaluator needs the no_simultaneous_harvest variant");
  }
  cfg.validate();
}

void Case1Evaluator::guard(int n, bool optimal) const {
  const int depth = cfg_.horizon - n;
  double per_level = std::pow(2.0, cfg_.n_channels);
  if (optimal) per_level *= binomial(cfg_.n_nodes, cfg_.n_channels);
  if (std::pow(per_level, depth) > kMaxRecursionLeaves) {
    throw SizeGuardError("pseudo-value recursion exceeds the size guard");
  }
}

double Case1Evaluator::reward(std::span<const int> scheduled) const {
  double s = 0.0;
  for (int l : scheduled) s += z(l);
  return cfg_.p_operative * cfg_.battery_cap * s;
}

std::vector<int> Case1Evaluator::ordered(std::span<const int> idle) const {
  std::vector<int> v(idle.begin(), idle.end());
  std::stable_sort(v.begin(), v.end(), [this](int a, int b) {
    const double za = z(a), zb = z(b);
    if (za != zb) return za > zb;
    return a > b;
  });
  return v;
}

double Case1Evaluator::w(std::span<const int> idle, int n) {
  const int nn = cfg_.n_nodes, k = cfg_.n_channels;
  if (static_cast<int>(idle.size()) != nn) throw std::invalid_argument("w: wrong vector length");
  if (n < 1 || n > cfg_.horizon) throw std::invalid_argument("w: n outside [1, T]");
  guard(n, false);

  // W depends on the scheduled block and the idle block only as multisets.
  std::vector<int> key(idle.begin(), idle.end());
  std::sort(key.begin(), key.begin() + k);
  std::sort(key.begin() + k, key.end());
  auto& memo = w_memo_[static_cast<std::size_t>(n)];
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  double value = reward(idle.first(static_cast<std::size_t>(k)));
  if (n < cfg_.horizon) {
    double future = 0.0;
    std::vector<int> rest;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      const int a = std::popcount(mask);
      rest.clear();
      for (int i = 0; i < nn; ++i) {
        const bool active = i < k && ((mask >> i) & 1u);
        if (!active) rest.push_back(idle[static_cast<std::size_t>(i)] + 1);
      }
      std::vector<int> next = ordered(rest);
      next.insert(next.end(), static_cast<std::size_t>(a), 0);
      future += q_prob(a, k, cfg_.p_operative) * w(next, n + 1);
    }
    value += cfg_.beta * future;
  }
  memo.emplace(std::move(key), value);
  return value;
}

double Case1Evaluator::optimal(std::span<const int> idle, int n) {
  const int nn = cfg_.n_nodes, k = cfg_.n_channels;
  if (static_cast<int>(idle.size()) != nn) throw std::invalid_argument("optimal: wrong vector length");
  if (n < 1 || n > cfg_.horizon) throw std::invalid_argument("optimal: n outside [1, T]");
  guard(n, true);

  std::vector<int> key(idle.begin(), idle.end());
  std::sort(key.begin(), key.end());
  auto& memo = v_memo_[static_cast<std::size_t>(n)];
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  double best = -INFINITY;
  std::vector<int> chosen(static_cast<std::size_t>(k));
  for (const auto& subset : combinations(nn, k)) {
    for (int i = 0; i < k; ++i) chosen[static_cast<std::size_t>(i)] = key[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])];
    double value = reward(chosen);
    if (n < cfg_.horizon) {
      double future = 0.0;
      for (unsigned mask = 0; mask < (1u << k); ++mask) {
        std::vector<int> next(key);
        for (int& l : next) ++l;
        for (int i = 0; i < k; ++i) {
          if ((mask >> i) & 1u) next[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])] = 0;
        }
        future += q_prob(std::popcount(mask), k, cfg_.p_operative) * optimal(next, n + 1);
      }
      value += cfg_.beta * future;
    }
    best = std::max(best, value);
  }
  memo.emplace(std::move(key), best);
  return best;
}

// ---------------------------------------------------------------------------
// Case 2

Case2Evaluator::Case2Evaluator(const SystemConfig& cfg)
    : cfg_(cfg), w_memo_(static_cast<std::size_t>(cfg.horizon) + 2),
      v_memo_(static_cast<std::size_t>(cfg.horizon) + 2) {
  if (cfg.variant != Variant::Batteryless) {
    throw ModelMismatch("Case2Evaluator needs the batteryless variant");
  }
  cfg.validate();
}

void Case2Evaluator::guard(int n, bool optimal) const {
  const int depth = cfg_.horizon - n;
  double per_level = std::pow(4.0, cfg_.n_channels);
  if (optimal) per_level *= binomial(cfg_.n_nodes, cfg_.n_channels);
  if (std::pow(per_level, depth) > kMaxRecursionLeaves) {
    throw SizeGuardError("pseudo-value recursion exceeds the size guard");
  }
}

double Case2Evaluator::w(std::span<const double> s, int n) {
  const int nn = cfg_.n_nodes, k = cfg_.n_channels;
  if (static_cast<int>(s.size()) != nn) throw std::invalid_argument("w: wrong vector length");
  if (n < 1 || n > cfg_.horizon) throw std::invalid_argument("w: n outside [1, T]");
  guard(n, false);

  // Only the scheduled block is order-free here.
  std::vector<double> key(s.begin(), s.end());
  std::sort(key.begin(), key.begin() + k);
  auto& memo = w_memo_[static_cast<std::size_t>(n)];
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const auto& ch = cfg_.chain;
  const double p = cfg_.p_operative;
  double value = 0.0;
  for (int i = 0; i < k; ++i) value += s[static_cast<std::size_t>(i)];
  value *= p;

  if (n < cfg_.horizon) {
    double future = 0.0;
    std::vector<int> act;
    std::vector<double> idle_next;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      act.clear();
      idle_next.clear();
      for (int i = 0; i < nn; ++i) {
        if (i < k && ((mask >> i) & 1u)) {
          act.push_back(i);
        } else {
          idle_next.push_back(tau_case2(s[static_cast<std::size_t>(i)], ch));
        }
      }
      const int a = static_cast<int>(act.size());
      const double qa = q_prob(a, k, p);
      for (unsigned obs = 0; obs < (1u << a); ++obs) {
        double prob = qa;
        for (int t = 0; t < a; ++t) {
          const double si = s[static_cast<std::size_t>(act[static_cast<std::size_t>(t)])];
          prob *= ((obs >> t) & 1u) ? si : 1.0 - si;
        }
        if (prob == 0.0) continue;
        const int ones = std::popcount(obs);
        std::vector<double> next;
        next.reserve(static_cast<std::size_t>(nn));
        next.insert(next.end(), static_cast<std::size_t>(ones), ch.p11);
        next.insert(next.end(), idle_next.begin(), idle_next.end());
        next.insert(next.end(), static_cast<std::size_t>(a - ones), ch.p01);
        future += prob * w(next, n + 1);
      }
    }
    value += cfg_.beta * future;
  }
  memo.emplace(std::move(key), value);
  return value;
}

double Case2Evaluator::optimal(std::span<const double> s, int n) {
  const int nn = cfg_.n_nodes, k = cfg_.n_channels;
  if (static_cast<int>(s.size()) != nn) throw std::invalid_argument("optimal: wrong vector length");
  if (n < 1 || n > cfg_.horizon) throw std::invalid_argument("optimal: n outside [1, T]");
  guard(n, true);

  std::vector<double> key(s.begin(), s.end());
  std::sort(key.begin(), key.end());
  auto& memo = v_memo_[static_cast<std::size_t>(n)];
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const auto& ch = cfg_.chain;
  const double p = cfg_.p_operative;
  double best = -INFINITY;
  for (const auto& subset : combinations(nn, k)) {
    double value = 0.0;
    for (int i : subset) value += key[static_cast<std::size_t>(i)];
    value *= p;
    if (n < cfg_.horizon) {
      double future = 0.0;
      for (unsigned mask = 0; mask < (1u << k); ++mask) {
        const int a = std::popcount(mask);
        const double qa = q_prob(a, k, p);
        for (unsigned obs = 0; obs < (1u << k); ++obs) {
          if ((obs & ~mask) != 0u) continue;  // observations only for active nodes
          double prob = qa;
          std::vector<double> next(key.size());
          for (std::size_t i = 0; i < key.size(); ++i) next[i] = tau_case2(key[i], ch);
          for (int t = 0; t < k; ++t) {
            if (!((mask >> t) & 1u)) continue;
            const auto node = static_cast<std::size_t>(subset[static_cast<std::size_t>(t)]);
            const bool harvesting = (obs >> t) & 1u;
            prob *= harvesting ? key[node] : 1.0 - key[node];
            next[node] = harvesting ? ch.p11 : ch.p01;
          }
          if (prob == 0.0) continue;
          future += prob * optimal(next, n + 1);
        }
      }
      value += cfg_.beta * future;
    }
    best = std::max(best, value);
  }
  memo.emplace(std::move(key), best);
  return best;
}

// ---------------------------------------------------------------------------
// Free functions

namespace {

SystemConfig with_horizon(SystemConfig cfg, const HorizonSpec& spec) {
  spec.validate();
  cfg.horizon = spec.horizon;
  cfg.beta = spec.beta;
  return cfg;
}

}  // namespace

double w_case1(std::span<const int> idle, const HorizonSpec& spec, const SystemConfig& cfg) {
  Case1Evaluator ev(with_horizon(cfg, spec));
  return ev.w(idle, spec.n);
}

double w_case2(std::span<const double> s, const HorizonSpec& spec, const SystemConfig& cfg) {
  Case2Evaluator ev(with_horizon(cfg, spec));
  return ev.w(s, spec.n);
}

double optimal_value(const BeliefVector& beliefs, const HorizonSpec& spec, const SystemConfig& cfg) {
  const SystemConfig c = with_horizon(cfg, spec);
  for (const auto& b : beliefs) {
    if (variant_of(b) != cfg.variant) throw ModelMismatch("optimal_value: belief variant differs from config");
  }
  if (cfg.variant == Variant::NoSimultaneousHarvest) {
    std::vector<int> idle;
    for (const auto& b : beliefs) idle.push_back(std::get<Case1Belief>(b).idle);
    return Case1Evaluator(c).optimal(idle, spec.n);
  }
  if (cfg.variant == Variant::Batteryless) {
    std::vector<double> s;
    for (const auto& b : beliefs) s.push_back(std::get<Case2Belief>(b).s);
    return Case2Evaluator(c).optimal(s, spec.n);
  }
  throw ModelMismatch("optimal_value supports the no_simultaneous_harvest and batteryless variants");
}

// ---------------------------------------------------------------------------
// Lemma checks

namespace {

struct Case1Sample {
  SystemConfig cfg;
  int n;
};

Case1Sample draw_case1(const LemmaCheckOptions& opts, Halton& halton, Rng& rng) {
  const auto u = halton.next(4);
  Case1Sample s;
  s.cfg.variant = Variant::NoSimultaneousHarvest;
  s.cfg.n_nodes = opts.n_nodes;
  s.cfg.n_channels = opts.n_channels;
  s.cfg.horizon = opts.horizon;
  s.cfg.chain = admissible_chain(u[0], u[1], u[2]);
  s.cfg.p_operative = u[3];
  s.cfg.battery_cap = pick(rng, 1, opts.max_battery);
  s.cfg.beta = opts.betas[rng.below(opts.betas.size())];
  s.n = pick(rng, 1, opts.horizon);
  return s;
}

SystemConfig draw_case2(const LemmaCheckOptions& opts, Halton& halton, Rng& rng, int& n) {
  const auto u = halton.next(3);
  SystemConfig cfg;
  cfg.variant = Variant::Batteryless;
  cfg.battery_cap = 1;
  cfg.n_nodes = opts.n_nodes;
  cfg.n_channels = opts.n_channels;
  cfg.horizon = opts.horizon;
  cfg.chain = admissible_chain(u[0], u[1], 0.0);
  cfg.p_operative = u[2];
  cfg.beta = opts.betas[rng.below(opts.betas.size())];
  n = pick(rng, 1, opts.horizon);
  return cfg;
}

std::pair<int, int> pick_swap(Rng& rng, int n_nodes) {
  int j = pick(rng, 0, n_nodes - 1);
  int i = pick(rng, 0, n_nodes - 2);
  if (i >= j) ++i;
  if (j > i) std::swap(i, j);
  return {j, i};  // j < i
}

}  // namespace

LemmaReport check_lemma2(const LemmaCheckOptions& opts) {
  LemmaReport rep{"lemma2"};
  Halton halton(opts.seed % 4096);
  Rng rng(split_seed(opts.seed, 2));
  for (long t = 0; t < opts.samples; ++t) {
    auto [cfg, n] = draw_case1(opts, halton, rng);
    Case1Evaluator ev(cfg);
    std::vector<int> idle(static_cast<std::size_t>(cfg.n_nodes));
    for (int& l : idle) l = pick(rng, 0, opts.max_idle);
    const auto s = ev.ordered(idle);
    const auto j = static_cast<std::size_t>(pick(rng, 0, cfg.n_nodes - 1));
    std::vector<int> tilde = s;
    tilde[j] = pick(rng, 0, s[j]);
    const double zj = ev.z(s[j]), zt = ev.z(tilde[j]);
    const double lhs = ev.w(s, n) - ev.w(ev.ordered(tilde), n);
    const double rhs = cfg.p_operative * cfg.battery_cap * (zj - zt) *
                       u_fn(n, cfg.horizon, cfg.beta, cfg.p_operative);
    rep.record(lhs - rhs);
  }
  rep.finish();
  return rep;
}

LemmaReport check_lemma3(const LemmaCheckOptions& opts) {
  LemmaReport rep{"lemma3"};
  Halton halton(opts.seed % 4096 + 7);
  Rng rng(split_seed(opts.seed, 3));
  for (long t = 0; t < opts.samples; ++t) {
    auto [cfg, n] = draw_case1(opts, halton, rng);
    Case1Evaluator ev(cfg);
    std::vector<int> s(static_cast<std::size_t>(cfg.n_nodes));
    for (int& l : s) l = pick(rng, 0, opts.max_idle);
    const auto [j, i] = pick_swap(rng, cfg.n_nodes);
    auto& sj = s[static_cast<std::size_t>(j)];
    auto& si = s[static_cast<std::size_t>(i)];
    if (ev.z(sj) < ev.z(si)) std::swap(sj, si);
    std::vector<int> swapped = s;
    std::swap(swapped[static_cast<std::size_t>(j)], swapped[static_cast<std::size_t>(i)]);
    rep.record(ev.w(swapped, n) - ev.w(s, n));
  }
  rep.finish();
  return rep;
}

LemmaReport check_lemma3_condition() {
  LemmaReport rep{"lemma3_condition"};
  for (int pi = 0; pi <= 100; ++pi) {
    const double p = pi / 100.0;
    for (int horizon = 1; horizon <= 200; ++horizon) {
      for (double beta : {1.0, 0.99, 0.9, 0.5, 0.1}) {
        // Delta_l = Delta_u: the condition reads 1 >= beta p sum_{i=0}^{T} (beta(1-p))^i.
        const double rhs = beta * p * u_fn(0, horizon, beta, p);
        rep.record(rhs - 1.0);
      }
    }
  }
  rep.finish();
  return rep;
}

LemmaReport check_lemma4(const LemmaCheckOptions& opts) {
  LemmaReport rep{"lemma4"};
  Halton halton(opts.seed % 4096 + 13);
  Rng rng(split_seed(opts.seed, 4));
  for (long t = 0; t < opts.samples; ++t) {
    int n = 1;
    const SystemConfig cfg = draw_case2(opts, halton, rng, n);
    Case2Evaluator ev(cfg);
    std::vector<double> s(static_cast<std::size_t>(cfg.n_nodes));
    for (double& x : s) x = rng.uniform();

    // 1 + W(s_N, s_1, ..., s_{N-1}) >= W(s)
    std::vector<double> rotated(s.size());
    std::rotate_copy(s.begin(), s.end() - 1, s.end(), rotated.begin());
    rep.record(ev.w(s, n) - 1.0 - ev.w(rotated, n));

    const auto [j, i] = pick_swap(rng, cfg.n_nodes);
    auto& sj = s[static_cast<std::size_t>(j)];
    auto& si = s[static_cast<std::size_t>(i)];
    if (sj < si) std::swap(sj, si);
    std::vector<double> swapped = s;
    std::swap(swapped[static_cast<std::size_t>(j)], swapped[static_cast<std::size_t>(i)]);
    rep.record(ev.w(swapped, n) - ev.w(s, n));
  }
  // record() counts both inequalities; report instances, not comparisons.
  rep.instances = opts.samples;
  rep.finish();
  return rep;
}

LemmaReport check_linearity(const LemmaCheckOptions& opts) {
  LemmaReport rep{"linearity"};
  Halton halton(opts.seed % 4096 + 29);
  Rng rng(split_seed(opts.seed, 5));
  for (long t = 0; t < opts.samples; ++t) {
    int n = 1;
    const SystemConfig cfg = draw_case2(opts, halton, rng, n);
    Case2Evaluator ev(cfg);
    std::vector<double> s(static_cast<std::size_t>(cfg.n_nodes));
    for (double& x : s) x = rng.uniform();
    const auto [j, i] = pick_swap(rng, cfg.n_nodes);
    const auto uj = static_cast<std::size_t>(j), ui = static_cast<std::size_t>(i);
    std::vector<double> swapped = s;
    std::swap(swapped[uj], swapped[ui]);
    std::vector<double> hi = s, lo = s;
    hi[uj] = 1.0;
    hi[ui] = 0.0;
    lo[uj] = 0.0;
    lo[ui] = 1.0;
    const double lhs = ev.w(s, n) - ev.w(swapped, n);
    const double rhs = (s[uj] - s[ui]) * (ev.w(hi, n) - ev.w(lo, n));
    rep.record(std::abs(lhs - rhs));
  }
  rep.finish();
  return rep;
}

namespace {

std::vector<EhChainParams> theorem_chains(int count, std::uint64_t skip, bool with_reset) {
  std::vector<EhChainParams> out{
      {0.2, 0.9, 0.3},
      {0.1, 0.8, 0.5},
      {0.4, 0.6, 0.2},
      {0.05, 0.95, 0.0},
  };
  Halton halton(skip);
  while (static_cast<int>(out.size()) < count) {
    const auto u = halton.next(3);
    out.push_back(admissible_chain(u[0], u[1], with_reset ? u[2] : 0.0));
  }
  out.resize(static_cast<std::size_t>(count));
  return out;
}

// Non-decreasing vectors over `values` of length n.
template <class T>
void multisets(const std::vector<T>& values, int n, std::size_t from, std::vector<T>& cur,
               std::vector<std::vector<T>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = from; i < values.size(); ++i) {
    cur.push_back(values[i]);
    multisets(values, n, i, cur, out);
    cur.pop_back();
  }
}

}  // namespace

LemmaReport check_theorem2() {
  LemmaReport rep{"theorem2"};
  const auto chains = theorem_chains(4, 101, true);
  const double ps[] = {0.3, 0.5, 0.8};
  const double betas[] = {1.0, 0.9};
  const std::vector<int> idle_values{0, 1, 2, 3, 5, 8};
  long grid = 0;
  for (int n_nodes : {2, 3}) {
    for (int cap : {1, 2, 3}) {
      for (int horizon : {2, 3, 4}) {
        for (const auto& ch : chains) {
          SystemConfig cfg;
          cfg.variant = Variant::NoSimultaneousHarvest;
          cfg.n_nodes = n_nodes;
          cfg.n_channels = 1;
          cfg.battery_cap = cap;
          cfg.horizon = horizon;
          cfg.chain = ch;
          cfg.p_operative = ps[grid % 3];
          cfg.beta = betas[grid % 2];
          ++grid;
          Case1Evaluator ev(cfg);
          std::vector<std::vector<int>> vectors;
          std::vector<int> cur;
          multisets(idle_values, n_nodes, 0, cur, vectors);
          double worst = 0.0;
          for (const auto& v : vectors) {
            worst = std::max(worst, std::abs(ev.optimal(v, 1) - ev.w(ev.ordered(v), 1)));
          }
          rep.record(worst);
        }
      }
    }
  }
  rep.finish();
  return rep;
}

LemmaReport check_theorem3() {
  LemmaReport rep{"theorem3"};
  const auto chains = theorem_chains(9, 211, false);
  const double ps[] = {0.3, 0.5, 0.8, 1.0};
  const double betas[] = {1.0, 0.9};
  long grid = 0;
  for (int n_nodes : {2, 3}) {
    for (int horizon : {2, 3, 4}) {
      for (const auto& ch : chains) {
        SystemConfig cfg;
        cfg.variant = Variant::Batteryless;
        cfg.battery_cap = 1;
        cfg.n_nodes = n_nodes;
        cfg.n_channels = 1;
        cfg.horizon = horizon;
        cfg.chain = ch;
        cfg.p_operative = ps[grid % 4];
        cfg.beta = betas[grid % 2];
        ++grid;
        Case2Evaluator ev(cfg);
        const std::vector<double> values{0.0, ch.p01, ch.stationary_harvest(), ch.p11, 0.35, 1.0};
        std::vector<std::vector<double>> vectors;
        std::vector<double> cur;
        multisets(values, n_nodes, 0, cur, vectors);
        double worst = 0.0;
        for (auto v : vectors) {
          std::vector<double> ordered = v;
          std::sort(ordered.begin(), ordered.end(), std::greater<>());
          worst = std::max(worst, std::abs(ev.optimal(v, 1) - ev.w(ordered, 1)));
        }
        rep.record(worst);
      }
    }
  }
  rep.finish();
  return rep;
}

double property1_violation(const EhChainParams& chain, int battery_cap, int l_max) {
  const BeliefTable table(Variant::NoSimultaneousHarvest, chain, battery_cap);
  std::vector<double> z(static_cast<std::size_t>(l_max) + 2);
  for (int l = 0; l <= l_max + 1; ++l) z[static_cast<std::size_t>(l)] = table.case1_z(l);
  double worst = -INFINITY;
  for (int l = 0; l <= l_max; ++l) {
    for (int m = 0; m <= l; ++m) {
      const auto ul = static_cast<std::size_t>(l), um = static_cast<std::size_t>(m);
      worst = std::max(worst, z[um] - z[ul]);
      worst = std::max(worst, std::abs(z[ul + 1] - z[um + 1]) - std::abs(z[ul] - z[um]));
    }
  }
  return worst;
}

LemmaReport check_property1(long samples, int l_max, std::uint64_t seed) {
  LemmaReport rep{"property1"};
  Halton halton(seed % 4096);
  for (long t = 0; t < samples; ++t) {
    const auto u = halton.next(4);
    const auto ch = admissible_chain(u[0], u[1], u[2]);
    const int cap = 1 + static_cast<int>(u[3] * 10.0);
    rep.record(property1_violation(ch, cap, l_max));
  }
  rep.finish();
  return rep;
}

LemmaReport check_property1_routes(long samples, int l_max, std::uint64_t seed) {
  LemmaReport rep{"property1_routes"};
  Halton halton(seed % 4096);
  for (long t = 0; t < samples; ++t) {
    const auto u = halton.next(4);
    const auto ch = admissible_chain(u[0], u[1], u[2]);
    const int cap = 1 + static_cast<int>(u[3] * 10.0);
    const BeliefTable table(Variant::NoSimultaneousHarvest, ch, cap);
    JointEBDist d = case1_reset_dist(ch, cap);
    double worst = 0.0;
    for (int l = 0; l <= l_max; ++l) {
      worst = std::max(worst, std::abs(table.case1_z(l) - d.mean_battery() / cap));
      d = evolve_eb_dist(d, ch, cap);
    }
    rep.record(worst);
  }
  rep.finish();
  return rep;
}

}  // namespace ehrmab
