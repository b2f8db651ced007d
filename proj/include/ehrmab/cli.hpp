#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehrmab/eh_core.hpp"
#include "ehrmab/policies.hpp"
#include "ehrmab/pseudo_value.hpp"

namespace ehrmab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitModel = 3;
inline constexpr int kExitInternal = 4;

inline constexpr int kSchemaVersion = 1;

enum class SweepAxis { NNodes, BatteryCap, P11 };

std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view name);

struct Sweep {
  SweepAxis axis = SweepAxis::NNodes;
  std::vector<double> values;
};

struct ExperimentConfig {
  SystemConfig system;
  bool chain_given = false;
  std::vector<PolicyKind> policies{PolicyKind::Random, PolicyKind::RoundRobin, PolicyKind::Myopic};
  int repetitions = 100;
  std::uint64_t base_seed = 1;
  int initial_h = 0;
  std::optional<Sweep> sweep;
  int l_max = 0;  // 0 selects default_l_max
  std::string output_path;

  /// The system at one sweep value. Throws ConfigError for non-integral N or
  /// B and ModelMismatch when sweeping B of a batteryless system.
  SystemConfig at(double sweep_value) const;
  /// Sweep values, or a single NaN when there is no sweep.
  std::vector<double> points() const;
};

/// Parses the JSON config. Unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> l_max;
  int jobs = 1;
};

/// Jobs from --jobs, else EHRMAB_JOBS, else the hardware concurrency.
int resolve_jobs(std::optional<int> flag);

/// policy,sweep_value,mean,std,ci95,overflow_rate
std::string cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opts);

/// sweep_value,upper_bound,l_max,stability_delta. Points whose bound moves by
/// more than 1e-6 relative under L_max doubling are appended to `warnings`.
std::string cmd_upper_bound(const ExperimentConfig& cfg, const RunOptions& opts,
                            std::vector<std::string>* warnings = nullptr);

/// sweep_value,series,mean,ci95 with one series per policy plus "upper_bound".
std::string cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opts,
                      std::vector<std::string>* warnings = nullptr);

enum class VerifyScope { Case1, Case2, Lemmas, Property1, All };
VerifyScope parse_verify_scope(std::string_view name);

/// Runs the built-in check grids. With `cfg` carrying an explicit chain, the
/// property1 scope also checks that chain (as given, admissible or not).
std::vector<LemmaReport> cmd_verify(VerifyScope scope, const ExperimentConfig* cfg, int jobs);

/// lemma,samples,max_violation,pass
std::string reports_csv(const std::vector<LemmaReport>& reports);
std::string reports_table(const std::vector<LemmaReport>& reports);

/// %.9g
std::string format_double(double v);

}  // namespace ehrmab
