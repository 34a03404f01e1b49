#ifndef AOI_EXPERIMENT_CONFIG_HPP_
#define AOI_EXPERIMENT_CONFIG_HPP_

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/genproc.hpp"
#include "aoi/policies.hpp"
#include "aoi/sim.hpp"

namespace aoi {

struct OutputSpec {
  std::string directory = ".";
  std::string prefix = "results";
};

struct ExperimentConfig {
  ExperimentSpec experiment;
  OutputSpec output;
  std::string text;  // the file as read, echoed into manifests
};

namespace detail {

class YamlReader {
 public:
  [[noreturn]] static void fail(const YAML::Node& n, const std::string& path, const std::string& msg) {
    std::string where = path;
    if (n.IsDefined() && n.Mark().line >= 0) where += " (line " + std::to_string(n.Mark().line + 1) + ")";
    throw ConfigError(where + ": " + msg);
  }

  static YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& path) {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, path + "." + key, "missing required field");
    return n;
  }

  template <class T>
  static T scalar(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(n, path, "expected a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, path, "cannot read '" + n.Scalar() + "' as a number");
    }
  }

  template <class T>
  static T scalar_or(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
    const YAML::Node n = parent[key];
    return n ? scalar<T>(n, path + "." + key) : fallback;
  }

  // Scalar broadcast or a list of exactly n values.
  template <class T>
  static std::vector<T> per_source(const YAML::Node& n, const std::string& path, std::size_t count) {
    if (n.IsSequence()) {
      if (n.size() != count)
        fail(n, path, "expected " + std::to_string(count) + " values, got " + std::to_string(n.size()));
      std::vector<T> out;
      for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<T>(n[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
    return std::vector<T>(count, scalar<T>(n, path));
  }
};

inline GenSpec parse_generation(const YAML::Node& n, const std::string& path) {
  using R = YamlReader;
  if (!n.IsMap()) R::fail(n, path, "expected a mapping with a 'type' field");
  const auto type = R::scalar<std::string>(R::require(n, "type", path), path + ".type");
  GenSpec g;
  if (type == "periodic") {
    g = Periodic{R::scalar<Slot>(R::require(n, "period", path), path + ".period")};
  } else if (type == "uniform") {
    g = Uniform{R::scalar<Slot>(R::require(n, "lo", path), path + ".lo"),
                R::scalar<Slot>(R::require(n, "hi", path), path + ".hi")};
  } else if (type == "geometric" || type == "bernoulli") {
    g = Geometric{R::scalar<double>(R::require(n, "rate", path), path + ".rate"),
                  R::scalar_or<double>(n, "tail_mass", path, Geometric{}.tail_mass)};
  } else if (type == "explicit") {
    const YAML::Node p = R::require(n, "pmf", path);
    if (!p.IsSequence()) R::fail(p, path + ".pmf", "expected a list of probabilities for x = 1, 2, ...");
    Explicit e;
    for (std::size_t i = 0; i < p.size(); ++i) e.pmf.push_back(R::scalar<double>(p[i], path + ".pmf"));
    g = e;
  } else {
    R::fail(n, path + ".type", "unknown generation type '" + type + "'");
  }
  try {
    validate(g);
    (void)pmf(g);
  } catch (const ConfigError& e) {
    R::fail(n, path, e.what());
  }
  return g;
}

inline std::vector<double> parse_sweep_values(const YAML::Node& sweep, const std::string& path) {
  using R = YamlReader;
  if (const YAML::Node v = sweep["values"]) {
    if (!v.IsSequence() || v.size() == 0) R::fail(v, path + ".values", "expected a non-empty list");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(R::scalar<double>(v[i], path + ".values"));
    return out;
  }
  if (const YAML::Node r = sweep["range"]) {
    const std::string rp = path + ".range";
    const double from = R::scalar<double>(R::require(r, "from", rp), rp + ".from");
    const double to = R::scalar<double>(R::require(r, "to", rp), rp + ".to");
    const double step = R::scalar<double>(R::require(r, "step", rp), rp + ".step");
    if (!(step > 0.0) || to < from) R::fail(r, rp, "need step > 0 and to >= from");
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    // snap to a 1e-12 grid so 0.2 + 16 * 0.05 is exactly 1
    for (long k = 0; k <= count; ++k) out.push_back(std::round((from + step * static_cast<double>(k)) * 1e12) / 1e12);
    return out;
  }
  R::fail(sweep, path, "needs 'values' or 'range'");
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& name = "config") {
  using R = detail::YamlReader;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(name + " (line " + std::to_string(e.mark.line + 1) + "): " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(name + ": top level must be a mapping");

  ExperimentConfig cfg;
  cfg.text = text;
  auto& ex = cfg.experiment;

  const YAML::Node net = R::require(root, "network", name);
  const auto n_sources = R::scalar<int>(R::require(net, "sources", "network"), "network.sources");
  if (n_sources < 1) R::fail(net["sources"], "network.sources", "must be >= 1");
  const auto N = static_cast<std::size_t>(n_sources);
  ex.base.max_scheduled = R::scalar<int>(R::require(net, "max_scheduled", "network"), "network.max_scheduled");
  ex.base.sources.resize(N);

  auto weights = R::per_source<double>(R::require(net, "weights", "network"), "network.weights", N);

  std::vector<double> ps;
  const YAML::Node psn = R::require(net, "p_source", "network");
  if (psn.IsScalar() && psn.Scalar() == "i/N") {
    for (std::size_t i = 0; i < N; ++i) ps.push_back(static_cast<double>(i + 1) / static_cast<double>(N));
  } else {
    ps = R::per_source<double>(psn, "network.p_source", N);
  }
  auto pd = R::per_source<double>(R::require(net, "p_dest", "network"), "network.p_dest", N);
  std::vector<Slot> delay(N, 0);
  if (net["delay"]) delay = R::per_source<Slot>(net["delay"], "network.delay", N);

  bool follow = false;
  std::vector<FeedbackDelay> fb(N, FeedbackDelay{0});
  if (const YAML::Node f = net["feedback_delay"]) {
    if (f.IsScalar() && f.Scalar() == "theta") {
      follow = true;
      for (std::size_t i = 0; i < N; ++i) fb[i] = delay[i];
    } else if (f.IsScalar() && f.Scalar() == "infinite") {
      for (auto& v : fb) v = kNoFeedback;
    } else {
      const auto vals = R::per_source<std::string>(f, "network.feedback_delay", N);
      for (std::size_t i = 0; i < N; ++i) {
        if (vals[i] == "infinite") {
          fb[i] = kNoFeedback;
        } else {
          try {
            std::size_t used = 0;
            const long long v = std::stoll(vals[i], &used);
            if (used != vals[i].size() || v < 0) throw std::invalid_argument(vals[i]);
            fb[i] = static_cast<Slot>(v);
          } catch (const std::exception&) {
            R::fail(f, "network.feedback_delay", "expected a non-negative integer, 'theta' or 'infinite'");
          }
        }
      }
    }
  }

  const YAML::Node gen = R::require(root, "generation", name);
  std::vector<GenSpec> gens;
  if (const YAML::Node per = gen["per_source"]) {
    if (!per.IsSequence() || per.size() != N)
      R::fail(per, "generation.per_source", "expected one entry per source");
    for (std::size_t i = 0; i < N; ++i)
      gens.push_back(detail::parse_generation(per[i], "generation.per_source[" + std::to_string(i) + "]"));
  } else {
    gens.assign(N, detail::parse_generation(gen, "generation"));
  }

  for (std::size_t i = 0; i < N; ++i) {
    auto& s = ex.base.sources[i];
    s.weight = weights[i];
    s.p_source = ps[i];
    s.p_dest = pd[i];
    s.delay = delay[i];
    s.feedback_delay = fb[i];
    s.generation = gens[i];
  }
  try {
    ex.base.validate();
  } catch (const ConfigError& e) {
    R::fail(net, "network", e.what());
  }

  ex.sweep.feedback_follows_delay = follow;
  if (const YAML::Node sw = root["sweep"]) {
    const auto axis = R::scalar<std::string>(R::require(sw, "axis", "sweep"), "sweep.axis");
    const auto a = parse_sweep_axis(axis);
    if (!a) R::fail(sw["axis"], "sweep.axis", "unknown axis '" + axis + "'");
    ex.sweep.axis = *a;
    if (*a != SweepAxis::kNone) ex.sweep.values = detail::parse_sweep_values(sw, "sweep");
  }

  const YAML::Node run = root["run"];
  if (run) {
    ex.horizon = R::scalar_or<Slot>(run, "horizon", "run", ex.horizon);
    ex.runs = R::scalar_or<int>(run, "runs", "run", ex.runs);
    ex.seed = R::scalar_or<std::uint64_t>(run, "seed", "run", ex.seed);
    if (ex.horizon < 1) R::fail(run["horizon"], "run.horizon", "must be >= 1");
    if (ex.runs < 1) R::fail(run["runs"], "run.runs", "must be >= 1");
    if (const YAML::Node p = run["policies"]) {
      if (!p.IsSequence()) R::fail(p, "run.policies", "expected a list");
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto s = R::scalar<std::string>(p[i], "run.policies");
        const auto k = parse_policy_kind(s);
        if (!k) R::fail(p[i], "run.policies", "unknown policy '" + s + "'");
        ex.policies.push_back(*k);
      }
    }
  }
  if (ex.policies.empty()) {
    for (PolicyKind k : kAllPolicies) {
      try {
        check_policy_supported(k, ex.base);
        ex.policies.push_back(k);
      } catch (const ConfigError&) {
      }
    }
  }

  try {
    for (double v : ex.sweep.values.empty() ? std::vector<double>{0.0} : ex.sweep.values) {
      const NetworkConfig c = apply_sweep(ex.base, ex.sweep, v);
      for (PolicyKind k : ex.policies) check_policy_supported(k, c);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("run.policies / sweep: ") + e.what());
  }

  if (const YAML::Node out = root["output"]) {
    cfg.output.directory = R::scalar_or<std::string>(out, "directory", "output", cfg.output.directory);
    cfg.output.prefix = R::scalar_or<std::string>(out, "prefix", "output", cfg.output.prefix);
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace aoi

#endif  // AOI_EXPERIMENT_CONFIG_HPP_
