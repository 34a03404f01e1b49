#ifndef AOI_CONFIG_HPP_
#define AOI_CONFIG_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "aoi/genproc.hpp"
#include "aoi/types.hpp"

namespace aoi {

struct SourceParams {
  double weight = 1.0;
  double p_source = 1.0;
  double p_dest = 1.0;
  Slot delay = 0;                    // forward delay, BS to destination
  FeedbackDelay feedback_delay = 0;  // destination to BS, nullopt = never
  GenSpec generation = Periodic{1};
};

struct NetworkConfig {
  int max_scheduled = 1;
  std::vector<SourceParams> sources;

  int n_sources() const { return static_cast<int>(sources.size()); }

  void validate() const {
    if (sources.empty()) throw ConfigError("network needs at least one source");
    if (max_scheduled < 1) throw ConfigError("K must be >= 1");
    if (max_scheduled > n_sources()) throw ConfigError("K must not exceed N");
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto& s = sources[i];
      const std::string at = "source " + std::to_string(i + 1) + ": ";
      if (!(s.weight > 0.0) || !std::isfinite(s.weight)) throw ConfigError(at + "weight must be > 0");
      if (!(s.p_source > 0.0 && s.p_source <= 1.0)) throw ConfigError(at + "p_source must be in (0,1]");
      if (!(s.p_dest > 0.0 && s.p_dest <= 1.0)) throw ConfigError(at + "p_dest must be in (0,1]");
      if (s.delay < 0) throw ConfigError(at + "delay must be >= 0");
      if (s.feedback_delay && *s.feedback_delay < 0) throw ConfigError(at + "feedback delay must be >= 0");
      try {
        aoi::validate(s.generation);
      } catch (const ConfigError& e) {
        throw ConfigError(at + e.what());
      }
    }
  }

  double total_weight() const {
    double w = 0.0;
    for (const auto& s : sources) w += s.weight;
    return w;
  }
};

inline std::vector<GenMoments> source_moments(const NetworkConfig& cfg) {
  std::vector<GenMoments> m;
  m.reserve(cfg.sources.size());
  for (const auto& s : cfg.sources) m.push_back(moments(s.generation));
  return m;
}

}  // namespace aoi

#endif  // AOI_CONFIG_HPP_
