// ehrmab: simulate, bound and verify energy-harvesting scheduling policies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ehrmab/cli.hpp"
#include "ehrmab/simplex.hpp"

namespace {

using namespace ehrmab;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> lmax;
  std::optional<int> jobs;
  std::string scope = "all";
};

void emit(const std::string& csv, const std::string& path) {
  if (path.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << csv;
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int run(const std::string& command, const Flags& f) {
  RunOptions opts;
  opts.seed = f.seed;
  opts.l_max = f.lmax;
  opts.jobs = resolve_jobs(f.jobs);
  if (f.lmax && *f.lmax < 1) throw ConfigError("--lmax must be at least 1");

  if (command == "verify") {
    const auto scope = parse_verify_scope(f.scope);
    std::optional<ExperimentConfig> cfg;
    if (!f.config.empty()) cfg = load_config(f.config);
    const auto reports = cmd_verify(scope, cfg ? &*cfg : nullptr, opts.jobs);
    std::cerr << reports_table(reports);
    emit(reports_csv(reports), f.out.empty() && cfg ? cfg->output_path : f.out);
    for (const auto& r : reports) {
      if (!r.pass) return kExitVerifyFailed;
    }
    return kExitOk;
  }

  if (f.config.empty()) throw ConfigError("--config is required for '" + command + "'");
  const ExperimentConfig cfg = load_config(f.config);
  const std::string out = f.out.empty() ? cfg.output_path : f.out;
  std::vector<std::string> warnings;
  if (command == "simulate") {
    emit(cmd_simulate(cfg, opts), out);
  } else if (command == "upper-bound") {
    emit(cmd_upper_bound(cfg, opts, &warnings), out);
  } else {
    emit(cmd_sweep(cfg, opts, &warnings), out);
  }
  warn(warnings);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduling of energy-harvesting nodes as a restless bandit"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", f.config, "JSON experiment config");
    if (needs_config) c->required();
    sub->add_option("--out", f.out, "CSV output path (default: config output.path, else stdout)");
    sub->add_option("--seed", f.seed, "override experiment.base_seed");
    sub->add_option("--lmax", f.lmax, "override the LP truncation level");
    sub->add_option("--jobs", f.jobs, "worker threads (default: EHRMAB_JOBS, else all cores)");
  };
  common(app.add_subcommand("simulate", "simulate the configured policies"), true);
  common(app.add_subcommand("upper-bound", "solve the relaxed LP upper bound"), true);
  common(app.add_subcommand("sweep", "policies and upper bound along the sweep axis"), true);
  auto* verify = app.add_subcommand("verify", "run the numerical optimality checks");
  common(verify, false);
  verify->add_option("--scope", f.scope, "case1 | case2 | lemmas | property1 | all")
      ->check(CLI::IsMember({"case1", "case2", "lemmas", "property1", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ModelMismatch& e) {
    std::cerr << "model mismatch: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
