#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehrmab/eh_core.hpp"

namespace ehrmab {

/// Absolute tolerance for every numerical optimality / lemma check.
inline constexpr double kViolationTol = 1e-9;

class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HorizonSpec {
  int n = 1;        // current TS, 1-based
  int horizon = 1;  // T
  double beta = 1.0;

  void validate() const;
};

struct LemmaReport {
  std::string lemma;
  long instances = 0;
  double max_violation = 0.0;  // signed; <= 0 means the inequality held with slack
  bool pass = true;

  void record(double violation);
  void finish() { pass = max_violation <= kViolationTol; }
};

/// u(n) = sum_{i=0}^{T-n} (beta (1-p))^i.
double u_fn(int n, int horizon, double beta, double p);

/// Largest number of recursion leaves an evaluator will accept.
inline constexpr double kMaxRecursionLeaves = 1e8;

/// Exact pseudo value and optimal value for the NoSimultaneousHarvest variant.
/// Belief vectors are idle counts; a node idle for l TSs has belief z_l.
class Case1Evaluator {
 public:
  /// Uses N, K, B, p, beta, T and the chain of `cfg`. Throws ModelMismatch if
  /// the variant is wrong.
  explicit Case1Evaluator(const SystemConfig& cfg);

  double z(int idle) const { return table_.case1_z(idle); }

  /// W_n of the vector in the given order: the first K entries are scheduled
  /// in TS n, MP is followed afterwards.
  double w(std::span<const int> idle, int n);

  /// Backward induction over every K-subset at every TS.
  double optimal(std::span<const int> idle, int n);

  /// The vector reordered by decreasing belief (ties: longer idle first).
  std::vector<int> ordered(std::span<const int> idle) const;

  const SystemConfig& config() const { return cfg_; }

 private:
  double reward(std::span<const int> scheduled) const;
  void guard(int n, bool optimal) const;

  SystemConfig cfg_;
  BeliefTable table_;
  std::vector<std::map<std::vector<int>, double>> w_memo_;
  std::vector<std::map<std::vector<int>, double>> v_memo_;
};

/// Exact pseudo value and optimal value for the Batteryless variant.
/// Idle nodes keep their relative positions (the vector is not re-sorted),
/// so W is affine in every coordinate.
class Case2Evaluator {
 public:
  explicit Case2Evaluator(const SystemConfig& cfg);

  double w(std::span<const double> s, int n);
  double optimal(std::span<const double> s, int n);

  const SystemConfig& config() const { return cfg_; }

 private:
  void guard(int n, bool optimal) const;

  SystemConfig cfg_;
  std::vector<std::map<std::vector<double>, double>> w_memo_;
  std::vector<std::map<std::vector<double>, double>> v_memo_;
};

/// Free-function forms; `spec` overrides the horizon and discount of `cfg`.
double w_case1(std::span<const int> idle, const HorizonSpec& spec, const SystemConfig& cfg);
double w_case2(std::span<const double> s, const HorizonSpec& spec, const SystemConfig& cfg);
/// Dispatches on the belief variant (Case1Belief idle counts or Case2Belief s).
double optimal_value(const BeliefVector& beliefs, const HorizonSpec& spec, const SystemConfig& cfg);

struct LemmaCheckOptions {
  int n_nodes = 3;
  int n_channels = 1;
  int horizon = 4;
  int max_battery = 3;
  int max_idle = 8;
  std::vector<double> betas{1.0, 0.9};
  long samples = 1000;
  std::uint64_t seed = 0x5eed;
};

/// W_n(s) - W_n(s~) <= pB (z_j - z~_j) u(n) for ordered vectors differing in one entry.
LemmaReport check_lemma2(const LemmaCheckOptions& opts);
/// W_n(s) - W_n(s_Pi) >= 0 for i,j-swaps with s_j >= s_i, j <= i (NoSimultaneousHarvest).
LemmaReport check_lemma3(const LemmaCheckOptions& opts);
/// Delta_l >= Delta_u beta p sum_{i=0}^{T} (beta (1-p))^i with Delta_l = Delta_u on a
/// dense (p, T, beta) grid.
LemmaReport check_lemma3_condition();
/// 1 + W_n(s_rot) >= W_n(s) and W_n(s) >= W_n(s_Pi) (Batteryless).
LemmaReport check_lemma4(const LemmaCheckOptions& opts);
/// W_n(s_Pi) - W_n(s_Pi^) = (s_j - s_i)(W_n(.., 1, .., 0, ..) - W_n(.., 0, .., 1, ..)).
LemmaReport check_linearity(const LemmaCheckOptions& opts);

/// |optimal - W(ordered)| over the NoSimultaneousHarvest instance grid
/// N in {2,3}, K = 1, B in {1,2,3}, T in {2,3,4}.
LemmaReport check_theorem2();
/// Same for the Batteryless grid N in {2,3}, K = 1, T in {2,3,4}.
LemmaReport check_theorem3();

/// Largest violation of monotonicity / contraction of z_l for l, m <= l_max.
double property1_violation(const EhChainParams& chain, int battery_cap, int l_max);
/// property1_violation over `samples` admissible chains; violations above
/// kProbTol count.
LemmaReport check_property1(long samples, int l_max = 200, std::uint64_t seed = 0x9e37);
/// Agreement of the increment recursion with E[b]/B, tolerance kProbTol.
LemmaReport check_property1_routes(long samples, int l_max = 200, std::uint64_t seed = 0x9e37);

}  // namespace ehrmab
