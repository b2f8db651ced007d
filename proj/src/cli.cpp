#include "ehrmab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ehrmab/parallel.hpp"
#include "ehrmab/sim.hpp"
#include "ehrmab/whittle_lp.hpp"

namespace ehrmab {

using nlohmann::json;

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::NNodes: return "n_nodes";
    case SweepAxis::BatteryCap: return "battery_cap";
    case SweepAxis::P11: return "p11";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "n_nodes" || name == "N") return SweepAxis::NNodes;
  if (name == "battery_cap" || name == "B") return SweepAxis::BatteryCap;
  if (name == "p11") return SweepAxis::P11;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

// Reads the keys of one JSON section, rejecting anything not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + name_ + "." + k + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

int integral(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > std::numeric_limits<int>::max()) {
    throw ConfigError(std::string(what) + " sweep values must be positive integers");
  }
  return static_cast<int>(v);
}

}  // namespace

SystemConfig ExperimentConfig::at(double sweep_value) const {
  SystemConfig s = system;
  if (!sweep || std::isnan(sweep_value)) return s;
  switch (sweep->axis) {
    case SweepAxis::NNodes:
      s.n_nodes = integral(sweep_value, "n_nodes");
      break;
    case SweepAxis::BatteryCap:
      if (s.variant == Variant::Batteryless) {
        throw ModelMismatch("the batteryless variant has no battery capacity to sweep");
      }
      s.battery_cap = integral(sweep_value, "battery_cap");
      break;
    case SweepAxis::P11:
      s.chain.p11 = sweep_value;
      break;
  }
  return s;
}

std::vector<double> ExperimentConfig::points() const {
  if (!sweep) return {std::numeric_limits<double>::quiet_NaN()};
  return sweep->values;
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section top(root, "config");
  int version = 0;
  top.read("schema_version", version);
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
  }

  ExperimentConfig cfg;
  if (const json* j = top.child("system")) {
    Section s(*j, "system");
    std::string variant = std::string(to_string(cfg.system.variant));
    s.read("variant", variant);
    cfg.system.variant = parse_variant(variant);
    if (cfg.system.variant == Variant::Batteryless) cfg.system.battery_cap = 1;
    s.read("n_nodes", cfg.system.n_nodes);
    s.read("n_channels", cfg.system.n_channels);
    s.read("battery_cap", cfg.system.battery_cap);
    s.read("p_operative", cfg.system.p_operative);
    s.read("beta", cfg.system.beta);
    s.read("horizon", cfg.system.horizon);
    s.finish();
  }
  if (const json* j = top.child("chain")) {
    Section s(*j, "chain");
    cfg.chain_given = true;
    if (s.has("p01") && s.has("p00")) throw ConfigError("give chain.p01 or chain.p00, not both");
    s.read("p01", cfg.system.chain.p01);
    if (s.has("p00")) {
      double p00 = 0.0;
      s.read("p00", p00);
      cfg.system.chain.p01 = 1.0 - p00;
    }
    s.read("p11", cfg.system.chain.p11);
    s.read("e0", cfg.system.chain.e0);
    s.finish();
  }
  if (const json* j = top.child("experiment")) {
    Section s(*j, "experiment");
    std::vector<std::string> names;
    s.read("policies", names);
    if (s.has("policies")) {
      if (names.empty()) throw ConfigError("experiment.policies must not be empty");
      cfg.policies.clear();
      for (const auto& n : names) cfg.policies.push_back(parse_policy(n));
    }
    s.read("repetitions", cfg.repetitions);
    s.read("base_seed", cfg.base_seed);
    s.read("initial_h", cfg.initial_h);
    s.finish();
    if (cfg.repetitions < 1) throw ConfigError("experiment.repetitions must be at least 1");
    if (cfg.initial_h != 0 && cfg.initial_h != 1) throw ConfigError("experiment.initial_h must be 0 or 1");
  }
  if (const json* j = top.child("sweep")) {
    Section s(*j, "sweep");
    std::string axis;
    s.read("axis", axis);
    Sweep sw;
    sw.axis = parse_sweep_axis(axis);
    s.read("values", sw.values);
    s.finish();
    if (sw.values.empty()) throw ConfigError("sweep.values must not be empty");
    for (double v : sw.values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sweep values must be positive");
    }
    cfg.sweep = std::move(sw);
  }
  if (const json* j = top.child("upper_bound")) {
    Section s(*j, "upper_bound");
    s.read("l_max", cfg.l_max);
    s.finish();
    if (cfg.l_max < 0) throw ConfigError("upper_bound.l_max must be non-negative");
  }
  if (const json* j = top.child("output")) {
    Section s(*j, "output");
    s.read("path", cfg.output_path);
    s.finish();
  }
  top.finish();

  for (double v : cfg.points()) cfg.at(v).validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--jobs must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("EHRMAB_JOBS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("EHRMAB_JOBS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::string point_label(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<UpperBound> bounds_for(const ExperimentConfig& cfg, const RunOptions& opts,
                                   std::vector<std::string>* warnings) {
  const auto pts = cfg.points();
  const int l_max = opts.l_max.value_or(cfg.l_max);
  std::vector<UpperBound> out(pts.size());
  parallel_for(pts.size(), opts.jobs, [&](std::size_t i) { out[i] = upper_bound(cfg.at(pts[i]), l_max, true); });
  if (warnings) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (out[i].stability_delta > 1e-6) {
        warnings->push_back("upper bound at sweep value " + point_label(pts[i]) + " moves by " +
                            format_double(out[i].stability_delta) +
                            " (relative) when L_max is doubled; consider a larger --lmax");
      }
    }
  }
  return out;
}

std::vector<std::vector<ExperimentSummary>> simulate_all(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto pts = cfg.points();
  const std::uint64_t seed = opts.seed.value_or(cfg.base_seed);
  std::vector<std::vector<ExperimentSummary>> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const SystemConfig sys = cfg.at(pts[i]);
    for (PolicyKind k : cfg.policies) {
      out[i].push_back(run_experiment(sys, k, cfg.repetitions, seed, opts.jobs, cfg.initial_h));
    }
  }
  return out;
}

}  // namespace

std::string cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto pts = cfg.points();
  const auto results = simulate_all(cfg, opts);
  std::string csv = "policy,sweep_value,mean,std,ci95,overflow_rate\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < cfg.policies.size(); ++k) {
      const auto& s = results[i][k];
      csv += std::string(to_string(cfg.policies[k])) + ',' + point_label(pts[i]) + ',' + format_double(s.mean) +
             ',' + format_double(s.stddev) + ',' + format_double(s.ci95) + ',' +
             format_double(s.overflow_rate) + '\n';
    }
  }
  return csv;
}

std::string cmd_upper_bound(const ExperimentConfig& cfg, const RunOptions& opts,
                            std::vector<std::string>* warnings) {
  const auto pts = cfg.points();
  const auto ubs = bounds_for(cfg, opts, warnings);
  std::string csv = "sweep_value,upper_bound,l_max,stability_delta\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    csv += point_label(pts[i]) + ',' + format_double(ubs[i].value) + ',' + std::to_string(ubs[i].l_max) + ',' +
           format_double(ubs[i].stability_delta) + '\n';
  }
  return csv;
}

std::string cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opts, std::vector<std::string>* warnings) {
  if (!cfg.sweep) throw ConfigError("the sweep command needs a 'sweep' section");
  const auto pts = cfg.points();
  const auto results = simulate_all(cfg, opts);
  const auto ubs = bounds_for(cfg, opts, warnings);
  std::string csv = "sweep_value,series,mean,ci95\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < cfg.policies.size(); ++k) {
      csv += point_label(pts[i]) + ',' + std::string(to_string(cfg.policies[k])) + ',' +
             format_double(results[i][k].mean) + ',' + format_double(results[i][k].ci95) + '\n';
    }
    csv += point_label(pts[i]) + ",upper_bound," + format_double(ubs[i].value) + ",0\n";
  }
  return csv;
}

VerifyScope parse_verify_scope(std::string_view name) {
  if (name == "case1") return VerifyScope::Case1;
  if (name == "case2") return VerifyScope::Case2;
  if (name == "lemmas") return VerifyScope::Lemmas;
  if (name == "property1") return VerifyScope::Property1;
  if (name == "all") return VerifyScope::All;
  throw ConfigError("unknown verify scope '" + std::string(name) + "'");
}

std::vector<LemmaReport> cmd_verify(VerifyScope scope, const ExperimentConfig* cfg, int jobs) {
  const bool all = scope == VerifyScope::All;
  std::vector<std::function<LemmaReport()>> checks;
  if (all || scope == VerifyScope::Case1) checks.emplace_back([] { return check_theorem2(); });
  if (all || scope == VerifyScope::Case2) checks.emplace_back([] { return check_theorem3(); });
  if (all || scope == VerifyScope::Lemmas) {
    const LemmaCheckOptions opts;
    checks.emplace_back([opts] { return check_lemma2(opts); });
    checks.emplace_back([opts] { return check_lemma3(opts); });
    checks.emplace_back([] { return check_lemma3_condition(); });
    checks.emplace_back([opts] { return check_lemma4(opts); });
    checks.emplace_back([opts] { return check_linearity(opts); });
  }
  if (all || scope == VerifyScope::Property1) {
    checks.emplace_back([] { return check_property1(200); });
    checks.emplace_back([] { return check_property1_routes(200); });
    if (cfg && cfg->chain_given) {
      const EhChainParams chain = cfg->system.chain;
      const int cap = std::max(1, cfg->system.battery_cap);
      checks.emplace_back([chain, cap] {
        LemmaReport r{"property1_config"};
        r.record(property1_violation(chain, cap, 200));
        r.finish();
        return r;
      });
    }
  }
  std::vector<LemmaReport> out(checks.size());
  parallel_for(checks.size(), jobs, [&](std::size_t i) { out[i] = checks[i](); });
  return out;
}

std::string reports_csv(const std::vector<LemmaReport>& reports) {
  std::string csv = "lemma,samples,max_violation,pass\n";
  for (const auto& r : reports) {
    csv += r.lemma + ',' + std::to_string(r.instances) + ',' + format_double(r.max_violation) + ',' +
           (r.pass ? "true" : "false") + '\n';
  }
  return csv;
}

std::string reports_table(const std::vector<LemmaReport>& reports) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-18s %10s %15s  %s\n", "check", "samples", "max_violation", "result");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %10ld %15.6g  %s\n", r.lemma.c_str(), r.instances, r.max_violation,
                  r.pass ? "pass" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace ehrmab
