#ifndef AOI_TESTS_ORACLE_COMPARE_HPP_
#define AOI_TESTS_ORACLE_COMPARE_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aoi/estimator.hpp"
#include "aoi/oracle.hpp"
#include "trace_util.hpp"

namespace aoi::testing {

// Largest absolute disagreement with the enumeration oracle, by quantity.
struct OracleGap {
  double table = 0.0;
  double source = 0.0;
  double packet = 0.0;
  double delivery = 0.0;
  double dest = 0.0;
  double batch = 0.0;  // batch form vs recursion of the same estimator
  long checks = 0;

  double worst() const { return std::max({table, source, packet, delivery, dest}); }
  void merge(const OracleGap& o) {
    table = std::max(table, o.table);
    source = std::max(source, o.source);
    packet = std::max(packet, o.packet);
    delivery = std::max(delivery, o.delivery);
    dest = std::max(dest, o.dest);
    batch = std::max(batch, o.batch);
    checks += o.checks;
  }
};

inline void bump(double& slot, double a, double b) { slot = std::max(slot, std::abs(a - b)); }

/// Compare every estimator of source i at every slot 1..T of a recorded trace.
inline OracleGap compare_to_oracle(const Recorded& rec, std::size_t i) {
  const SourceParams& p = rec.cfg.sources[i];
  const SourceObservation& obs = rec.obs.sources[i];
  const Pmf f = pmf(p.generation);
  OracleGap gap;

  std::vector<SourceEstimator> streams;
  for (bool closed : {true, false}) {
    EstimatorSettings s;
    s.p_dest = p.p_dest;
    s.delay = p.delay;
    s.feedback = p.feedback_delay;
    s.keep_history = true;
    s.closed_form = closed;
    streams.emplace_back(p.generation, s);
  }
  GenerationPosterior post(p.generation, p.delay, p.feedback_delay);

  for (Slot t = 1; t <= rec.horizon; ++t) {
    const OracleResult o = brute_force_posterior(f, obs, t, p.p_dest, p.delay, p.feedback_delay);
    const int D = static_cast<int>(o.packet_generation.size()) - 1;

    post.extend(obs, t);
    for (Slot phi = 1; phi <= t; ++phi)
      for (Slot g = 1; g <= phi; ++g)
        bump(gap.table, post.probability(g, phi),
             o.table[static_cast<std::size_t>(phi)][static_cast<std::size_t>(g)]);
    bump(gap.source, post.source_timestamp(t), o.source_timestamp);
    for (int d = 1; d <= D; ++d)
      bump(gap.packet, post.packet_generation(obs, d), o.packet_generation[static_cast<std::size_t>(d)]);

    for (auto& e : streams) {
      e.observe(obs, t);
      bump(gap.source, e.source_timestamp(), o.source_timestamp);
      for (int d = 1; d <= D; ++d)
        if (const auto v = e.packet_generation(d)) bump(gap.packet, *v, o.packet_generation[static_cast<std::size_t>(d)]);
      const auto dist = e.delivery_distribution(D);
      for (int d = 0; d <= D; ++d)
        bump(gap.delivery, dist[static_cast<std::size_t>(d)], o.delivery[static_cast<std::size_t>(d)]);
      bump(gap.dest, e.dest_timestamp(), o.dest_timestamp);
      bump(gap.batch, e.dest_timestamp_batch(), e.dest_timestamp());
    }
    ++gap.checks;
  }
  return gap;
}

// A family of tiny random networks for oracle checks.
inline NetworkConfig tiny_network(const GenSpec& g, Engine& rng) {
  NetworkConfig cfg;
  const int n = 1 + static_cast<int>(rng() % 2);
  cfg.max_scheduled = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  for (int i = 0; i < n; ++i) {
    SourceParams s;
    s.weight = 1.0;
    s.p_source = 0.5 + 0.5 * uniform01(rng);
    s.p_dest = 0.3 + 0.7 * uniform01(rng);
    if (rng() % 5 == 0) s.p_dest = 1.0;
    s.delay = static_cast<Slot>(rng() % 3);
    const auto w = rng() % 4;
    s.feedback_delay = w == 3 ? kNoFeedback : FeedbackDelay{static_cast<Slot>(w)};
    s.generation = g;
    cfg.sources.push_back(s);
  }
  return cfg;
}

inline OracleGap oracle_family(const GenSpec& g, int traces, std::uint64_t seed) {
  Engine rng = make_stream(seed, Stream::kTest);
  OracleGap total;
  for (int k = 0; k < traces; ++k) {
    const NetworkConfig cfg = tiny_network(g, rng);
    const Slot T = 6 + static_cast<Slot>(rng() % 7);  // 6..12
    const Recorded rec = record_random_trace(cfg, T, rng);
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) total.merge(compare_to_oracle(rec, i));
  }
  return total;
}

}  // namespace aoi::testing

#endif  // AOI_TESTS_ORACLE_COMPARE_HPP_
