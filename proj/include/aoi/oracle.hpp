#ifndef AOI_ORACLE_HPP_
#define AOI_ORACLE_HPP_

// Exhaustive references for the estimator. Everything here enumerates
// generation paths and forwarding outcomes directly; nothing is shared with
// the recursive code in estimator.hpp beyond the observation types.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "aoi/core.hpp"
#include "aoi/genproc.hpp"
#include "aoi/types.hpp"

namespace aoi {

struct OracleResult {
  Slot horizon = 0;
  std::vector<std::vector<double>> table;  // table[phi][gen], 1 <= gen <= phi <= horizon
  std::vector<double> generation;          // generation[phi] = P(packet generated in phi)
  double source_timestamp = 0.0;           // E[tau_S(horizon)]
  std::vector<double> packet_generation;   // [d], d = 1..D
  std::vector<double> delivery;            // [d] = P(latest delivered = d), [0] = none
  double dest_timestamp = 0.0;             // E[tau_D(horizon + delay)]
};

inline constexpr Slot kOracleMaxHorizon = 14;

/// Posterior of the generation process and of the destination state at slot
/// t, given receptions before t and (when feedback is set) acks that arrived
/// before t. Throws if nothing is consistent with the record.
inline OracleResult brute_force_posterior(const Pmf& f, const SourceObservation& obs, Slot t, double p_dest,
                                          Slot delay = 0, FeedbackDelay feedback = kNoFeedback) {
  if (t < 1 || t > kOracleMaxHorizon) throw std::invalid_argument("oracle horizon must be in [1, 14]");

  std::vector<Reception> recs;
  for (const auto& r : obs.receptions())
    if (r.slot <= t - 1) recs.push_back(r);
  const int D = recs.empty() ? 0 : recs.back().packet;

  // Which receptions have a known forwarding outcome.
  const Slot resolved_through = feedback ? t - delay - *feedback - 1 : std::numeric_limits<Slot>::min();
  std::vector<std::size_t> open;  // indices into recs
  std::vector<int> known(recs.size(), -1);
  std::vector<Slot> acked_value(recs.size(), -1);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    if (recs[k].slot <= resolved_through) {
      const Ack* a = obs.ack_for_delivery(recs[k].slot + delay);
      known[k] = a && a->arrival_slot <= t - 1 ? 1 : 0;
      if (known[k]) acked_value[k] = a->timestamp;
    } else {
      open.push_back(k);
    }
  }
  if (open.size() > 20) throw std::invalid_argument("oracle: too many unresolved receptions");

  // Latest delivered reception under each outcome vector, marginalised.
  std::ptrdiff_t last_known = -1;
  for (std::size_t k = 0; k < recs.size(); ++k)
    if (known[k] == 1) last_known = static_cast<std::ptrdiff_t>(k);
  std::vector<double> latest(recs.size() + 1, 0.0);  // [k+1] = reception k, [0] = none
  for (std::uint64_t o = 0; o < (std::uint64_t{1} << open.size()); ++o) {
    double p = 1.0;
    std::ptrdiff_t best = last_known;
    for (std::size_t j = 0; j < open.size(); ++j) {
      const bool ok = (o >> j) & 1U;
      p *= ok ? p_dest : 1.0 - p_dest;
      if (ok) best = std::max(best, static_cast<std::ptrdiff_t>(open[j]));
    }
    latest[static_cast<std::size_t>(best + 1)] += p;
  }

  OracleResult out;
  out.horizon = t;
  const auto T = static_cast<std::size_t>(t);
  out.table.assign(T + 1, std::vector<double>(T + 1, 0.0));
  out.generation.assign(T + 1, 0.0);
  out.packet_generation.assign(static_cast<std::size_t>(D + 1), 0.0);
  out.delivery.assign(static_cast<std::size_t>(D + 1), 0.0);

  std::vector<Slot> gens{1};
  std::vector<Slot> L(T + 1, 0);
  double Z = 0.0;
  double dest = 0.0;

  auto visit_path = [&](double w) {
    // latest generation at or before each slot
    std::size_t g = 0;
    for (Slot phi = 1; phi <= t; ++phi) {
      while (g + 1 < gens.size() && gens[g + 1] <= phi) ++g;
      L[static_cast<std::size_t>(phi)] = gens[g];
    }
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const Slot s = recs[k].slot;
      if (k > 0) {
        const bool same = L[static_cast<std::size_t>(s)] == L[static_cast<std::size_t>(recs[k - 1].slot)];
        if (same != recs[k].repeat) return;
      }
      if (known[k] == 1 && L[static_cast<std::size_t>(s)] != acked_value[k]) return;
    }
    Z += w;
    for (Slot phi = 1; phi <= t; ++phi) {
      const auto up = static_cast<std::size_t>(phi);
      out.table[up][static_cast<std::size_t>(L[up])] += w;
    }
    for (Slot gslot : gens) out.generation[static_cast<std::size_t>(gslot)] += w;
    for (std::size_t k = 0; k < recs.size(); ++k)
      if (!recs[k].repeat)
        out.packet_generation[static_cast<std::size_t>(recs[k].packet)] +=
            w * static_cast<double>(L[static_cast<std::size_t>(recs[k].slot)]);
    for (std::size_t k = 0; k < recs.size(); ++k)
      dest += w * latest[k + 1] * static_cast<double>(L[static_cast<std::size_t>(recs[k].slot)]);
  };

  std::function<void(double)> grow = [&](double w) {
    const Slot last = gens.back();
    visit_path(w * f.survival(t - last));
    for (Slot x = 1; last + x <= t && x <= f.max_support(); ++x) {
      const double fx = f(x);
      if (fx == 0.0) continue;
      gens.push_back(last + x);
      grow(w * fx);
      gens.pop_back();
    }
  };
  grow(1.0);

  if (!(Z > 0.0)) throw ObservationError("oracle: no generation path is consistent with the observations");
  for (auto& row : out.table)
    for (double& v : row) v /= Z;
  for (double& v : out.generation) v /= Z;
  for (double& v : out.packet_generation) v /= Z;
  out.dest_timestamp = dest / Z;
  out.source_timestamp = 0.0;
  for (Slot g = 1; g <= t; ++g) out.source_timestamp += static_cast<double>(g) * out.table[T][static_cast<std::size_t>(g)];
  out.delivery[0] = latest[0];
  for (std::size_t k = 0; k < recs.size(); ++k) out.delivery[static_cast<std::size_t>(recs[k].packet)] += latest[k + 1];
  return out;
}

/// Distribution of the latest packet delivered when packet d was forwarded
/// counts[d-1] times, each copy arriving independently with p_dest.
/// Result [0] = nothing delivered, [d] = packet d.
inline std::vector<double> brute_force_delivery_distribution(std::span<const int> counts, double p_dest) {
  std::vector<int> owner;
  for (std::size_t d = 0; d < counts.size(); ++d)
    for (int c = 0; c < counts[d]; ++c) owner.push_back(static_cast<int>(d + 1));
  if (owner.size() > 20) throw std::invalid_argument("oracle: at most 20 forwarded copies");
  std::vector<double> out(counts.size() + 1, 0.0);
  for (std::uint64_t o = 0; o < (std::uint64_t{1} << owner.size()); ++o) {
    double p = 1.0;
    int best = 0;
    for (std::size_t j = 0; j < owner.size(); ++j) {
      const bool ok = (o >> j) & 1U;
      p *= ok ? p_dest : 1.0 - p_dest;
      if (ok) best = std::max(best, owner[j]);
    }
    out[static_cast<std::size_t>(best)] += p;
  }
  return out;
}

}  // namespace aoi

#endif  // AOI_ORACLE_HPP_
