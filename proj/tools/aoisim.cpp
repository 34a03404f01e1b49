// aoisim: bounds, randomized solution, single episodes and sweeps from a
// YAML experiment file.
//
// Exit status: 0 ok, 1 invalid configuration or arguments, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/bounds.hpp"
#include "aoi/experiment_config.hpp"
#include "aoi/randomized.hpp"
#include "aoi/sim.hpp"

#ifndef AOISIM_VERSION
#define AOISIM_VERSION "0.1.0"
#endif

namespace {

using aoi::format_number;

struct Overrides {
  std::optional<aoi::Slot> horizon;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> policies;
  std::optional<int> jobs;
  std::optional<std::string> trace;
};

void apply(const Overrides& o, aoi::ExperimentConfig& cfg) {
  auto& ex = cfg.experiment;
  if (o.horizon) {
    if (*o.horizon < 1) throw aoi::ConfigError("--horizon must be >= 1");
    ex.horizon = *o.horizon;
  }
  if (o.runs) {
    if (*o.runs < 1) throw aoi::ConfigError("--runs must be >= 1");
    ex.runs = *o.runs;
  }
  if (o.seed) ex.seed = *o.seed;
  if (o.out) cfg.output.directory = *o.out;
  if (o.jobs) ex.jobs = *o.jobs;
  if (!o.policies.empty()) {
    ex.policies.clear();
    for (const auto& s : o.policies) {
      const auto k = aoi::parse_policy_kind(s);
      if (!k) throw aoi::ConfigError("--policies: unknown policy '" + s + "'");
      ex.policies.push_back(*k);
    }
  }
}

void check_policies(const aoi::ExperimentConfig& cfg) {
  const auto& ex = cfg.experiment;
  for (double v : ex.sweep.values.empty() ? std::vector<double>{0.0} : ex.sweep.values) {
    const auto c = aoi::apply_sweep(ex.base, ex.sweep, v);
    for (auto k : ex.policies) aoi::check_policy_supported(k, c);
  }
}

int cmd_lower_bound(const aoi::ExperimentConfig& cfg) {
  const auto& net = cfg.experiment.base;
  const auto m = aoi::source_moments(net);
  const auto lb = aoi::lower_bound(net, m);
  std::cout << "lower_bound," << format_number(lb.bound) << "\n";
  std::cout << "rho," << format_number(aoi::optimality_ratio(net, m)) << "\n";
  std::cout << "source,q\n";
  for (std::size_t i = 0; i < lb.rate.size(); ++i) std::cout << i + 1 << "," << format_number(lb.rate[i]) << "\n";
  return 0;
}

int cmd_randomized(const aoi::ExperimentConfig& cfg) {
  const auto sol = aoi::optimal_probabilities(cfg.experiment.base);
  std::cout << "closed_form," << format_number(sol.ewsaoi) << "\n";
  std::cout << "source,mu\n";
  for (std::size_t i = 0; i < sol.marginals.size(); ++i)
    std::cout << i + 1 << "," << format_number(sol.marginals[i]) << "\n";
  return 0;
}

int cmd_simulate(const aoi::ExperimentConfig& cfg, const Overrides& o) {
  const auto& ex = cfg.experiment;
  if (o.trace && ex.policies.size() != 1) throw aoi::ConfigError("--trace needs exactly one policy");
  std::cout << "policy,ewsaoi,horizon,seed\n";
  for (auto k : ex.policies) {
    aoi::EpisodeOptions opt;
    opt.record_trace = o.trace.has_value();
    if (opt.record_trace && !aoi::uses_estimator(k)) throw aoi::ConfigError("--trace needs mw-e or mw-enf");
    const auto r = aoi::run_episode(ex.base, k, ex.horizon, ex.seed, opt);
    std::cout << aoi::to_string(k) << "," << format_number(r.ewsaoi) << "," << ex.horizon << "," << ex.seed << "\n";
    if (o.trace) {
      std::ofstream f(*o.trace, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + *o.trace);
      f << aoi::trace_csv(r);
    }
  }
  return 0;
}

std::string manifest(const aoi::ExperimentConfig& cfg, const std::string& csv_name) {
  const auto& ex = cfg.experiment;
  std::ostringstream m;
  m << "tool: aoisim\n";
  m << "version: " << AOISIM_VERSION << "\n";
  m << "results: " << csv_name << "\n";
  m << "seed: " << ex.seed << "\n";
  m << "runs: " << ex.runs << "\n";
  m << "horizon: " << ex.horizon << "\n";
  m << "policies: [";
  for (std::size_t i = 0; i < ex.policies.size(); ++i) m << (i ? ", " : "") << aoi::to_string(ex.policies[i]);
  m << "]\n";
  m << "sweep_axis: " << aoi::to_string(ex.sweep.axis) << "\n";
  m << "config: |\n";
  std::istringstream in(cfg.text);
  for (std::string line; std::getline(in, line);) m << "  " << line << "\n";
  return m.str();
}

int cmd_sweep(const aoi::ExperimentConfig& cfg) {
  const auto res = aoi::run_experiment(cfg.experiment);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  const std::string csv_name = cfg.output.prefix + ".csv";
  {
    std::ofstream f(dir / csv_name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / csv_name).string());
    f << aoi::to_csv(res);
  }
  {
    std::ofstream f(dir / (cfg.output.prefix + "_manifest.yaml"), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write manifest");
    f << manifest(cfg, csv_name);
  }
  std::printf("%-10s %-11s %12s %10s %10s %12s %12s\n", "sweep", "policy", "ewsaoi", "stddev", "L_B", "rho*L_B",
              "closed_form");
  for (const auto& r : res.rows)
    std::printf("%-10s %-11s %12.4f %10.4f %10.4f %12.4f %12.4f\n", format_number(r.sweep_value).c_str(),
                std::string(aoi::to_string(r.policy)).c_str(), r.mean, r.stddev, r.lower_bound, r.rho_times_lb,
                r.closed_form);
  std::printf("wrote %s\n", (dir / csv_name).string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information scheduling simulator"};
  app.set_version_flag("--version", AOISIM_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment YAML file")->required()->check(CLI::ExistingFile);
  };
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--horizon", o.horizon, "slots per episode");
    sub->add_option("--seed", o.seed, "base seed (run r uses seed + r)");
    sub->add_option("--policies", o.policies, "randomized, mw-e, mw-enf, mw-f, mw-s")->delimiter(',');
  };

  auto* lb = app.add_subcommand("lower-bound", "print L_B, rho and the per-source rates");
  add_common(lb);
  auto* rnd = app.add_subcommand("randomized", "print optimal randomized marginals and closed-form value");
  add_common(rnd);
  auto* sim = app.add_subcommand("simulate", "run one episode per policy");
  add_common(sim);
  add_run_flags(sim);
  sim->add_option("--trace", o.trace, "write a per-slot estimator trace CSV");
  auto* sw = app.add_subcommand("sweep", "run the configured sweep and write CSV");
  add_common(sw);
  add_run_flags(sw);
  sw->add_option("--runs", o.runs, "runs per sweep point");
  sw->add_option("--out", o.out, "output directory");
  sw->add_option("--jobs", o.jobs, "worker threads (default: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    auto cfg = aoi::parse_config(config_path);
    apply(o, cfg);
    check_policies(cfg);
    if (lb->parsed()) return cmd_lower_bound(cfg);
    if (rnd->parsed()) return cmd_randomized(cfg);
    if (sim->parsed()) return cmd_simulate(cfg, o);
    if (sw->parsed()) return cmd_sweep(cfg);
  } catch (const aoi::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
