#ifndef AOI_TESTS_TRACE_UTIL_HPP_
#define AOI_TESTS_TRACE_UTIL_HPP_

#include <vector>

#include "aoi/config.hpp"
#include "aoi/core.hpp"
#include "aoi/rng.hpp"

namespace aoi::testing {

// A short episode driven by random decisions, recorded in full.
struct Recorded {
  NetworkConfig cfg;
  Slot horizon = 0;
  ObservationLog obs;
  std::vector<NetworkState> states;  // states[t-1] is the state at the start of slot t
};

inline Recorded record_random_trace(const NetworkConfig& cfg, Slot T, Engine& rng) {
  Recorded r;
  r.cfg = cfg;
  r.horizon = T;
  NetworkState st = initial_state(cfg);
  r.obs = initial_observations(cfg);
  std::vector<RenewalClock> clocks;
  for (const auto& s : cfg.sources) clocks.emplace_back(pmf(s.generation));
  const auto n = cfg.sources.size();
  SlotRandomness rnd{std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n)};
  for (Slot t = 1; t <= T; ++t) {
    r.states.push_back(st);
    Decision u;
    for (int i = 0; i < cfg.n_sources() && static_cast<int>(u.size()) < cfg.max_scheduled; ++i)
      if (bernoulli(rng, 0.6)) u.push_back(i);
    for (std::size_t i = 0; i < n; ++i) {
      rnd.generation[i] = clocks[i].step(rng);
      rnd.source_channel[i] = bernoulli(rng, cfg.sources[i].p_source);
      rnd.dest_channel[i] = bernoulli(rng, cfg.sources[i].p_dest);
    }
    advance_slot(st, r.obs, u, rnd, cfg);
  }
  r.states.push_back(st);
  return r;
}

}  // namespace aoi::testing

#endif  // AOI_TESTS_TRACE_UTIL_HPP_
