// Copyright 2026 The aoisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software distributed
// under the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR
// CONDITIONS OF ANY KIND, either express or implied.

#ifndef AOI_CORE_HPP_
#define AOI_CORE_HPP_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/genproc.hpp"
#include "aoi/rng.hpp"
#include "aoi/types.hpp"

namespace aoi {

// Sources scheduled in one slot, 0-based, ascending.
using Decision = std::vector<int>;

struct Packet {
  int source = 0;
  std::uint64_t seq = 0;  // opaque to the base station except for equality
  Slot gen_slot = 1;      // hidden from the base station
};

struct InFlight {
  Packet packet;
  Slot delivery_slot = 0;
  bool delivered = false;
};

struct Ack {
  Slot timestamp = 0;      // generation slot of the delivered packet
  Slot delivery_slot = 0;  // slot the destination received it
  Slot arrival_slot = 0;   // slot the ack reaches the BS; usable one slot later
};

struct Reception {
  Slot slot = 0;
  int packet = 0;  // 1-based index among distinct packets received
  bool repeat = false;
};

/// Everything the base station has learned about one source.
class SourceObservation {
 public:
  const Reception& record(Slot slot, std::uint64_t seq) {
    if (!receptions_.empty() && slot <= receptions_.back().slot)
      throw ObservationError("receptions must be recorded in slot order");
    const bool repeat = any_ && seq == last_seq_;
    if (!repeat) first_index_.push_back(receptions_.size());
    any_ = true;
    last_seq_ = seq;
    receptions_.push_back({slot, packet_count(), repeat});
    return receptions_.back();
  }

  void record_ack(const Ack& a) {
    if (!acks_.empty() && a.delivery_slot <= acks_.back().delivery_slot)
      throw ObservationError("acks must arrive in delivery order");
    acks_.push_back(a);
  }

  int packet_count() const { return static_cast<int>(first_index_.size()); }
  std::span<const Reception> receptions() const { return receptions_; }
  std::span<const Ack> acks() const { return acks_; }

  std::size_t first_reception_index(int d) const {
    check_packet(d);
    return first_index_[static_cast<std::size_t>(d - 1)];
  }

  std::size_t end_reception_index(int d) const {
    check_packet(d);
    return d == packet_count() ? receptions_.size() : first_index_[static_cast<std::size_t>(d)];
  }

  // first and last reception slot of packet d; last_slot(0) == 0
  Slot first_slot(int d) const { return receptions_[first_reception_index(d)].slot; }
  Slot last_slot(int d) const {
    if (d == 0) return 0;
    return receptions_[end_reception_index(d) - 1].slot;
  }
  int reception_count(int d) const {
    return static_cast<int>(end_reception_index(d) - first_reception_index(d));
  }
  std::vector<Slot> slots(int d) const {
    std::vector<Slot> out;
    for (std::size_t k = first_reception_index(d); k < end_reception_index(d); ++k)
      out.push_back(receptions_[k].slot);
    return out;
  }

  const Reception* reception_at(Slot s) const {
    auto it = std::lower_bound(receptions_.begin(), receptions_.end(), s,
                               [](const Reception& r, Slot v) { return r.slot < v; });
    return it != receptions_.end() && it->slot == s ? &*it : nullptr;
  }

  const Ack* ack_for_delivery(Slot delivery_slot) const {
    auto it = std::lower_bound(acks_.begin(), acks_.end(), delivery_slot,
                               [](const Ack& a, Slot v) { return a.delivery_slot < v; });
    return it != acks_.end() && it->delivery_slot == delivery_slot ? &*it : nullptr;
  }

  // h(t - omega) as reconstructed from acks usable at slot t. Before any
  // information can have arrived the initial h(1) = 1 is returned.
  Slot delayed_aoi(Slot t, Slot omega) const {
    const Slot phi = t - omega;
    if (phi < 1) return 1;
    Slot tau = 0;
    for (auto it = acks_.rbegin(); it != acks_.rend(); ++it) {
      if (it->arrival_slot <= t - 1) {
        tau = it->timestamp;
        break;
      }
    }
    return phi - tau;
  }

 private:
  void check_packet(int d) const {
    if (d < 1 || d > packet_count()) throw std::out_of_range("packet index " + std::to_string(d));
  }

  std::vector<Reception> receptions_;
  std::vector<std::size_t> first_index_;
  std::vector<Ack> acks_;
  std::uint64_t last_seq_ = 0;
  bool any_ = false;
};

struct ObservationLog {
  std::vector<SourceObservation> sources;
};

struct SourceTruth {
  Packet queued;
  Slot dest_timestamp = 0;
  std::deque<InFlight> forward;
  std::deque<Ack> feedback;
};

struct NetworkState {
  Slot slot = 1;
  std::vector<SourceTruth> sources;

  int n_sources() const { return static_cast<int>(sources.size()); }
  Slot source_timestamp(int i) const { return sources[static_cast<std::size_t>(i)].queued.gen_slot; }
  Slot dest_timestamp(int i) const { return sources[static_cast<std::size_t>(i)].dest_timestamp; }
  Slot system_time(int i) const { return slot - source_timestamp(i); }
  Slot aoi(int i) const { return slot - dest_timestamp(i); }
};

// Per-slot exogenous draws. generation[i] = 1 means source i has a fresh
// packet queued from the next slot on.
struct SlotRandomness {
  std::vector<std::uint8_t> generation;
  std::vector<std::uint8_t> source_channel;
  std::vector<std::uint8_t> dest_channel;
};

struct SlotEvents {
  struct Received {
    int source;
    Reception reception;
  };
  struct Delivered {
    int source;
    Slot gen_slot;
  };
  struct AckArrived {
    int source;
    Ack ack;
  };
  std::vector<Received> receptions;
  std::vector<Delivered> deliveries;
  std::vector<AckArrived> acks;
};

inline NetworkState initial_state(const NetworkConfig& cfg) {
  NetworkState s;
  s.slot = 1;
  s.sources.resize(cfg.sources.size());
  for (int i = 0; i < cfg.n_sources(); ++i) s.sources[static_cast<std::size_t>(i)].queued = {i, 1, 1};
  return s;
}

inline ObservationLog initial_observations(const NetworkConfig& cfg) {
  ObservationLog o;
  o.sources.resize(cfg.sources.size());
  return o;
}

inline void check_decision(const Decision& u, const NetworkConfig& cfg) {
  if (static_cast<int>(u.size()) > cfg.max_scheduled) throw ConfigError("decision schedules more than K sources");
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] < 0 || u[k] >= cfg.n_sources()) throw ConfigError("decision references unknown source");
    if (k > 0 && u[k] <= u[k - 1]) throw ConfigError("decision must be strictly ascending");
  }
}

/// Run slot state.slot to completion and move to the next slot.
inline SlotEvents advance_slot(NetworkState& state, ObservationLog& obs, const Decision& decision,
                               const SlotRandomness& rnd, const NetworkConfig& cfg) {
  check_decision(decision, cfg);
  const Slot t = state.slot;
  SlotEvents ev;

  for (int i : decision) {
    const auto ui = static_cast<std::size_t>(i);
    if (!rnd.source_channel[ui]) continue;
    auto& src = state.sources[ui];
    const Reception& r = obs.sources[ui].record(t, src.queued.seq);
    ev.receptions.push_back({i, r});
    src.forward.push_back({src.queued, t + cfg.sources[ui].delay, rnd.dest_channel[ui] != 0});
  }

  for (int i = 0; i < state.n_sources(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    auto& src = state.sources[ui];
    const auto& p = cfg.sources[ui];
    while (!src.forward.empty() && src.forward.front().delivery_slot == t) {
      const InFlight f = src.forward.front();
      src.forward.pop_front();
      if (!f.delivered) continue;
      src.dest_timestamp = f.packet.gen_slot;
      ev.deliveries.push_back({i, f.packet.gen_slot});
      if (p.feedback_delay) src.feedback.push_back({f.packet.gen_slot, t, t + *p.feedback_delay});
    }
    while (!src.feedback.empty() && src.feedback.front().arrival_slot == t) {
      obs.sources[ui].record_ack(src.feedback.front());
      ev.acks.push_back({i, src.feedback.front()});
      src.feedback.pop_front();
    }
    if (rnd.generation[ui]) src.queued = {i, src.queued.seq + 1, t + 1};
  }

  state.slot = t + 1;
  return ev;
}

/// Renewal generation clock: yields a(t) slot by slot.
class RenewalClock {
 public:
  explicit RenewalClock(Pmf f) : pmf_(std::move(f)) {}

  // a(t) for the current slot t, starting at t = 1 (slot 1 always holds a
  // fresh packet, drawn here as the first renewal).
  bool step(Engine& rng) {
    if (next_ == 0) next_ = 1 + sample_intergeneration(pmf_, rng);
    const bool gen = next_ == t_ + 1;
    if (gen) next_ += sample_intergeneration(pmf_, rng);
    ++t_;
    return gen;
  }

 private:
  Pmf pmf_;
  Slot t_ = 1;
  Slot next_ = 0;
};

class WeightedAoiAccumulator {
 public:
  explicit WeightedAoiAccumulator(const NetworkConfig& cfg) {
    for (const auto& s : cfg.sources) weights_.push_back(s.weight);
  }

  void add(const NetworkState& state) {
    double v = 0.0;
    for (int i = 0; i < state.n_sources(); ++i)
      v += weights_[static_cast<std::size_t>(i)] * static_cast<double>(state.aoi(i));
    sum_ += v / static_cast<double>(weights_.size());
    ++slots_;
  }

  double sum() const { return sum_; }
  Slot slots() const { return slots_; }
  double value() const { return slots_ ? sum_ / static_cast<double>(slots_) : 0.0; }

 private:
  std::vector<double> weights_;
  double sum_ = 0.0;
  Slot slots_ = 0;
};

}  // namespace aoi

#endif  // AOI_CORE_HPP_
