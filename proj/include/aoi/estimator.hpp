// Copyright 2026 The aoisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software distributed
// under the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR
// CONDITIONS OF ANY KIND, either express or implied.

#ifndef AOI_ESTIMATOR_HPP_
#define AOI_ESTIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "aoi/core.hpp"
#include "aoi/genproc.hpp"
#include "aoi/types.hpp"

namespace aoi {

// ---------------------------------------------------------------------------
// Delivery beliefs

struct BeliefSet {
  std::vector<double> packet;  // packet[k]: belief for the k-th count given
  double residual = 1.0;       // nothing delivered
};

/// b[d] = (1-(1-p)^{n_d}) prod_{d'>d} (1-p)^{n_d'}, residual = prod_d (1-p)^{n_d}.
inline BeliefSet delivery_beliefs(std::span<const int> counts, double p_dest) {
  BeliefSet b;
  b.packet.assign(counts.size(), 0.0);
  double tail = 1.0;
  for (std::size_t k = counts.size(); k-- > 0;) {
    const double miss = std::pow(1.0 - p_dest, counts[k]);
    b.packet[k] = (1.0 - miss) * tail;
    tail *= miss;
  }
  b.residual = tail;
  return b;
}

inline BeliefSet delivery_beliefs(const SourceObservation& obs, double p_dest) {
  std::vector<int> n;
  for (int d = 1; d <= obs.packet_count(); ++d) n.push_back(obs.reception_count(d));
  return delivery_beliefs(n, p_dest);
}

/// One step of the destination-timestamp recursion.
inline double update_dest_timestamp(double previous, bool received, double packet_estimate, double p_dest) {
  return received ? (1.0 - p_dest) * previous + p_dest * packet_estimate : previous;
}

// ---------------------------------------------------------------------------
// Age chain. State a = slots since the queued packet was generated; from
// age a the next slot starts a new packet with probability H(a+1).

class AgeKernel {
 public:
  explicit AgeKernel(const Pmf& f) {
    hazard_.resize(static_cast<std::size_t>(f.max_support()));
    for (std::size_t a = 0; a < hazard_.size(); ++a) hazard_[a] = f.hazard(static_cast<Slot>(a + 1));
  }

  std::size_t size() const { return hazard_.size(); }
  double hazard(std::size_t a) const { return hazard_[a]; }

  // v holds ages [0, len); advances one slot in place.
  void step(double* v, std::size_t len) const {
    double g = 0.0;
    for (std::size_t a = 0; a < len; ++a) g += v[a] * hazard_[a];
    const std::size_t top = std::min(len, hazard_.size() - 1);
    for (std::size_t a = top; a-- > 0;) v[a + 1] = v[a] * (1.0 - hazard_[a]);
    v[0] = g;
  }

  std::size_t next_len(std::size_t len) const { return std::min(len + 1, hazard_.size()); }

 private:
  std::vector<double> hazard_;
};

namespace detail {

// Generic renewal source. alpha_ is the filtered age distribution at the
// current slot; each tracked packet d carries m_d(a) = E[tau[d] - anchor ;
// age a] (unnormalised moment vector, offset so a settled destination is
// exactly the anchor), and rec_ is the belief-weighted sum of those, so every estimate stays an exact conditional mean when later
// receptions reshape the age distribution.
class VectorModel {
 public:
  explicit VectorModel(const Pmf& f) : kernel_(f) {}

  void reset(Slot gen_slot, double dest_value) {
    const std::size_t n = kernel_.size();
    alpha_.assign(n, 0.0);
    rec_.assign(n, 0.0);
    alpha_[0] = 1.0;
    len_ = 1;
    slot_ = gen_slot;
    anchor_value_ = dest_value;
    for (auto& t : tracked_) pool_.push_back(std::move(t.m));
    tracked_.clear();
  }

  Slot slot() const { return slot_; }

  void advance() {
    kernel_.step(alpha_.data(), len_);
    kernel_.step(rec_.data(), len_);
    for (auto& t : tracked_) kernel_.step(t.m.data(), len_);
    len_ = kernel_.next_len(len_);
    ++slot_;
  }

  void receive_new(int d, Slot prev) {
    keep(0, slot_ - prev);
    std::vector<double> m = take_vector();
    for (std::size_t a = 0; a < len_; ++a) m[a] = (static_cast<double>(slot_ - static_cast<Slot>(a)) - anchor_value_) * alpha_[a];
    tracked_.push_back({d, std::move(m)});
  }
  void receive_repeat(Slot prev) { keep(slot_ - prev, std::numeric_limits<Slot>::max()); }
  void receive_exact(Slot gen) { keep(slot_ - gen, slot_ - gen + 1); }

  void drop(int d) {
    auto it = find(d);
    if (it == tracked_.end()) return;
    pool_.push_back(std::move(it->m));
    tracked_.erase(it);
  }

  // d < 0 selects the anchor packet
  void belief_step(int d, double p) {
    if (d < 0) {
      for (std::size_t a = 0; a < len_; ++a) rec_[a] *= 1.0 - p;
      return;
    }
    const auto& m = get(d);
    for (std::size_t a = 0; a < len_; ++a) rec_[a] = (1.0 - p) * rec_[a] + p * m[a];
  }

  void set_recursive(std::span<const std::pair<int, double>> w, double /*residual*/) {
    std::fill(rec_.begin(), rec_.end(), 0.0);
    for (const auto& [d, b] : w) {
      if (b == 0.0) continue;
      const auto& m = get(d);
      for (std::size_t a = 0; a < len_; ++a) rec_[a] += b * m[a];
    }
  }

  double source_estimate() const {
    double mean_age = 0.0;
    for (std::size_t a = 1; a < len_; ++a) mean_age += static_cast<double>(a) * alpha_[a];
    return static_cast<double>(slot_) - mean_age;
  }
  double packet_estimate(int d) const { return anchor_value_ + sum(get(d)); }
  double recursive_estimate() const { return anchor_value_ + sum(rec_); }
  bool tracks(int d) const { return find(d) != tracked_.end(); }

 private:
  struct Tracked {
    int d;
    std::vector<double> m;
  };

  std::vector<Tracked>::iterator find(int d) {
    return std::find_if(tracked_.begin(), tracked_.end(), [d](const Tracked& t) { return t.d == d; });
  }
  std::vector<Tracked>::const_iterator find(int d) const {
    return std::find_if(tracked_.begin(), tracked_.end(), [d](const Tracked& t) { return t.d == d; });
  }
  const std::vector<double>& get(int d) const {
    auto it = find(d);
    if (it == tracked_.end()) throw std::logic_error("packet not tracked");
    return it->m;
  }
  std::vector<double> take_vector() {
    std::vector<double> v;
    if (!pool_.empty()) {
      v = std::move(pool_.back());
      pool_.pop_back();
    }
    v.assign(kernel_.size(), 0.0);
    return v;
  }
  double sum(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t a = 0; a < len_; ++a) s += v[a];
    return s;
  }

  // restrict the current age to [lo, hi) and renormalise everything
  void keep(Slot lo, Slot hi) {
    auto zero = [&](std::vector<double>& v) {
      for (std::size_t a = 0; a < len_; ++a) {
        const auto sa = static_cast<Slot>(a);
        if (sa < lo || sa >= hi) v[a] = 0.0;
      }
    };
    zero(alpha_);
    zero(rec_);
    for (auto& t : tracked_) zero(t.m);
    const double c = sum(alpha_);
    if (!(c > 0.0)) throw ObservationError("no generation path is consistent with the observations");
    const double inv = 1.0 / c;
    auto scale = [&](std::vector<double>& v) {
      for (std::size_t a = 0; a < len_; ++a) v[a] *= inv;
    };
    scale(alpha_);
    scale(rec_);
    for (auto& t : tracked_) scale(t.m);
  }

  AgeKernel kernel_;
  std::vector<double> alpha_;
  std::vector<double> rec_;
  std::vector<Tracked> tracked_;
  std::vector<std::vector<double>> pool_;
  std::size_t len_ = 1;
  Slot slot_ = 1;
  double anchor_value_ = 0.0;
};

// Packet estimates that do not change after the packet's first reception,
// which holds for memoryless and deterministic generation.
class ScalarModelBase {
 public:
  Slot slot() const { return slot_; }
  void advance() { ++slot_; }
  void drop(int d) {
    auto it = find(d);
    if (it != est_.end()) est_.erase(it);
  }
  void belief_step(int d, double p) { rec_ = (1.0 - p) * rec_ + p * (d < 0 ? anchor_value_ : packet_estimate(d)); }
  void set_recursive(std::span<const std::pair<int, double>> w, double residual) {
    rec_ = residual * anchor_value_;
    for (const auto& [d, b] : w)
      if (b != 0.0) rec_ += b * packet_estimate(d);
  }
  double packet_estimate(int d) const {
    auto it = find(d);
    if (it == est_.end()) throw std::logic_error("packet not tracked");
    return it->second;
  }
  double recursive_estimate() const { return rec_; }
  bool tracks(int d) const { return find(d) != est_.end(); }

 protected:
  void reset_base(Slot gen_slot, double dest_value) {
    slot_ = gen_slot;
    anchor_value_ = dest_value;
    rec_ = dest_value;
    est_.clear();
  }
  std::vector<std::pair<int, double>>::const_iterator find(int d) const {
    return std::find_if(est_.begin(), est_.end(), [d](const auto& e) { return e.first == d; });
  }
  std::vector<std::pair<int, double>>::iterator find(int d) {
    return std::find_if(est_.begin(), est_.end(), [d](const auto& e) { return e.first == d; });
  }

  Slot slot_ = 1;
  double anchor_value_ = 0.0;
  double rec_ = 0.0;
  std::vector<std::pair<int, double>> est_;
};

// Bernoulli generation: a packet appears in each slot independently with
// probability lambda. The latest generation at or before t is either in
// the unobserved tail (tail_start_, t] or is the last known packet.
class BernoulliModel : public ScalarModelBase {
 public:
  explicit BernoulliModel(double rate) : lambda_(rate), q_(1.0 - rate), log_q_(std::log1p(-rate)) {}

  void reset(Slot gen_slot, double dest_value) {
    reset_base(gen_slot, dest_value);
    known_gen_ = gen_slot;
    tail_start_ = gen_slot;
    base_ = static_cast<double>(gen_slot);
  }

  void receive_new(int d, Slot prev) {
    double e;
    if (prev < known_gen_) {
      e = source_estimate();
    } else {
      const Slot len = slot_ - prev;
      const double none = qpow(len);
      e = static_cast<double>(slot_) - offset_sum(len, none) / (1.0 - none);
    }
    est_.emplace_back(d, e);
    tail_start_ = slot_;
    base_ = e;
  }

  void receive_repeat(Slot prev) {
    const Slot len = slot_ - std::max(prev, known_gen_);
    if (len > 0 && qpow(len) == 0.0) throw ObservationError("repeat reception impossible under generation every slot");
    tail_start_ = slot_;
  }

  void receive_exact(Slot gen) {
    known_gen_ = gen;
    tail_start_ = slot_;
    base_ = static_cast<double>(gen);
  }

  double source_estimate() const {
    const Slot len = slot_ - tail_start_;
    if (len == 0) return base_;
    const double none = qpow(len);
    return static_cast<double>(slot_) * (1.0 - none) - offset_sum(len, none) + none * base_;
  }

 private:
  double qpow(Slot len) const {
    if (q_ == 0.0) return len == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(len) * log_q_);
  }
  // sum_{k<len} k lambda q^k, given none = q^len
  double offset_sum(Slot len, double none) const {
    if (q_ == 0.0) return 0.0;
    return (q_ / lambda_) * (1.0 - none) - static_cast<double>(len) * none;
  }

  double lambda_;
  double q_;
  double log_q_;
  Slot known_gen_ = 1;
  Slot tail_start_ = 1;
  double base_ = 1.0;
};

// Periodic generation at 1, 1+G, 1+2G, ...
class PeriodicModel : public ScalarModelBase {
 public:
  explicit PeriodicModel(Slot period) : period_(period) {}

  void reset(Slot gen_slot, double dest_value) { reset_base(gen_slot, dest_value); }

  double source_estimate() const { return static_cast<double>(latest(slot_)); }

  void receive_new(int d, Slot prev) {
    const Slot g = latest(slot_);
    if (g <= prev) throw ObservationError("new packet without a generation since the previous reception");
    est_.emplace_back(d, static_cast<double>(g));
  }
  void receive_repeat(Slot prev) {
    if (latest(slot_) > prev) throw ObservationError("repeat reception across a periodic generation");
  }
  void receive_exact(Slot gen) {
    if (latest(slot_) != gen) throw ObservationError("acknowledged timestamp inconsistent with the period");
  }

 private:
  Slot latest(Slot t) const { return 1 + period_ * ((t - 1) / period_); }
  Slot period_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Streaming per-source estimator

struct EstimatorSettings {
  double p_dest = 1.0;
  Slot delay = 0;
  FeedbackDelay feedback = kNoFeedback;  // acks are used only when set
  bool keep_history = false;             // keep every packet's estimate
  bool closed_form = true;               // fast paths for periodic/geometric
};

struct EstimateView {
  double aoi_ahead = 1.0;    // h_hat(t + theta)
  double system_time = 0.0;  // z_hat(t)
};

class SourceEstimator {
  // defined first so the deduced return types are known below
  template <class F>
  decltype(auto) visit(F&& f) {
    return std::visit(std::forward<F>(f), model_);
  }
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), model_);
  }

 public:
  SourceEstimator(const GenSpec& spec, EstimatorSettings s) : s_(s), model_(make_model(spec, s.closed_form)) {
    if (!(s_.p_dest > 0.0 && s_.p_dest <= 1.0)) throw ConfigError("estimator: p_dest must be in (0,1]");
    visit([](auto& m) { m.reset(1, 0.0); });
  }

  /// Bring the estimate to slot t using receptions up to t-1 and acks that
  /// arrived by t-1. Calls must not go backwards in time.
  void observe(const SourceObservation& obs, Slot t) {
    if (t < slot_) throw std::logic_error("estimator cannot move backwards in time");
    while (slot_ < t) step(obs);
  }

  Slot slot() const { return slot_; }
  double source_timestamp() const {
    return visit([](const auto& m) { return m.source_estimate(); });
  }
  double dest_timestamp() const {
    return visit([](const auto& m) { return m.recursive_estimate(); });
  }

  /// Destination timestamp from per-packet estimates and beliefs.
  double dest_timestamp_batch() const {
    if (!s_.keep_history && !s_.feedback) throw std::logic_error("batch form needs keep_history without feedback");
    const BeliefSet b = beliefs();
    // residual * anchor + sum_d b[d] est[d], written relative to the anchor
    const double anchor = anchor_value();
    double v = 0.0;
    for (std::size_t k = 0; k < counts_.size(); ++k)
      if (b.packet[k] != 0.0) v += b.packet[k] * (packet_estimate_or_throw(counts_[k].first) - anchor);
    return anchor + v;
  }

  /// Generation slot estimate of packet d, when still available.
  std::optional<double> packet_generation(int d) const {
    if (d == anchor_.packet && d > 0) return static_cast<double>(anchor_.gen_slot);
    const bool tracked = visit([d](const auto& m) { return m.tracks(d); });
    if (!tracked) return std::nullopt;
    return visit([d](const auto& m) { return m.packet_estimate(d); });
  }

  /// Beliefs over tracked packets (ascending packet index) after the anchor.
  BeliefSet beliefs() const {
    std::vector<int> n;
    n.reserve(counts_.size());
    for (const auto& c : counts_) n.push_back(c.second);
    return delivery_beliefs(n, s_.p_dest);
  }
  std::vector<int> tracked_packets() const {
    std::vector<int> d;
    for (const auto& c : counts_) d.push_back(c.first);
    return d;
  }

  /// P(latest delivered packet = d) for d = 0..D (0 = none).
  std::vector<double> delivery_distribution(int D) const {
    if (!s_.keep_history && !s_.feedback) throw std::logic_error("distribution needs keep_history without feedback");
    std::vector<double> out(static_cast<std::size_t>(D + 1), 0.0);
    const BeliefSet b = beliefs();
    out[static_cast<std::size_t>(anchor_.packet)] += b.residual;
    for (std::size_t k = 0; k < counts_.size(); ++k) out[static_cast<std::size_t>(counts_[k].first)] += b.packet[k];
    return out;
  }

  EstimateView view() const {
    return {static_cast<double>(slot_ + s_.delay) - dest_timestamp(), static_cast<double>(slot_) - source_timestamp()};
  }

  int anchor_packet() const { return anchor_.packet; }
  Slot anchor_timestamp() const { return anchor_.packet > 0 ? anchor_.gen_slot : 0; }
  const EstimatorSettings& settings() const { return s_; }

 private:
  using Model = std::variant<detail::VectorModel, detail::BernoulliModel, detail::PeriodicModel>;

  struct Anchor {
    Slot gen_slot = 1;  // slot with a known generation
    int packet = 0;     // last packet known delivered (0: none)
  };

  static Model make_model(const GenSpec& spec, bool closed_form) {
    if (closed_form) {
      if (const auto* g = std::get_if<Geometric>(&spec)) {
        validate(spec);
        return detail::BernoulliModel(g->rate);
      }
      if (const auto* p = std::get_if<Periodic>(&spec)) {
        validate(spec);
        return detail::PeriodicModel(p->period);
      }
    }
    return detail::VectorModel(pmf(spec));
  }


  double anchor_value() const { return anchor_.packet > 0 ? static_cast<double>(anchor_.gen_slot) : 0.0; }

  double packet_estimate_or_throw(int d) const {
    return visit([d](const auto& m) { return m.packet_estimate(d); });
  }

  Slot resolve_horizon(Slot t) const {
    return s_.feedback ? t - s_.delay - *s_.feedback - 1 : std::numeric_limits<Slot>::min();
  }

  void step(const SourceObservation& obs) {
    if (const Reception* r = obs.reception_at(slot_)) on_reception(*r, true);
    visit([](auto& m) { m.advance(); });
    ++slot_;
    if (s_.feedback) incorporate_feedback(obs);
  }

  void on_reception(const Reception& r, bool unresolved) {
    if (r.packet == current_) {
      visit([&](auto& m) { m.receive_repeat(last_reception_); });
    } else {
      if (r.packet != current_ + 1) throw ObservationError("packet indices must increase by one");
      visit([&](auto& m) { m.receive_new(r.packet, last_reception_); });
      counts_.emplace_back(r.packet, 0);
      current_ = r.packet;
    }
    if (unresolved && r.packet != anchor_.packet) {
      ++counts_.back().second;
      visit([&](auto& m) { m.belief_step(r.packet, s_.p_dest); });
    }
    last_reception_ = r.slot;
    prune();
  }

  void incorporate_feedback(const SourceObservation& obs) {
    const Slot R = resolve_horizon(slot_);
    if (R < 1) return;
    const Reception* r = obs.reception_at(R);
    if (!r || r->packet <= anchor_.packet) return;
    if (const Ack* a = obs.ack_for_delivery(R + s_.delay)) {
      anchor_ = {a->timestamp, r->packet};
      rebuild(obs);
      return;
    }
    auto it = std::find_if(counts_.begin(), counts_.end(), [&](const auto& c) { return c.first == r->packet; });
    if (it == counts_.end() || it->second == 0) throw std::logic_error("resolving an untracked reception");
    --it->second;
    refresh_recursive();
    prune();
  }

  // Condition on the acknowledged generation and replay later receptions.
  void rebuild(const SourceObservation& obs) {
    if (anchor_.gen_slot > obs.first_slot(anchor_.packet) ||
        anchor_.gen_slot <= obs.last_slot(anchor_.packet - 1))
      throw ObservationError("acknowledged timestamp outside the packet's feasible interval");
    visit([&](auto& m) { m.reset(anchor_.gen_slot, static_cast<double>(anchor_.gen_slot)); });
    counts_.clear();
    current_ = anchor_.packet;
    const Slot R = resolve_horizon(slot_);
    const auto recs = obs.receptions();
    const std::size_t first = obs.first_reception_index(anchor_.packet);
    auto advance_to = [&](Slot s) {
      visit([&](auto& m) {
        while (m.slot() < s) m.advance();
      });
    };
    for (std::size_t k = first; k < recs.size() && recs[k].slot < slot_; ++k) {
      advance_to(recs[k].slot);
      if (k == first) {
        visit([&](auto& m) { m.receive_exact(anchor_.gen_slot); });
        last_reception_ = recs[k].slot;
      } else {
        on_reception(recs[k], recs[k].slot > R);
      }
    }
    advance_to(slot_);
    refresh_recursive();
  }

  void refresh_recursive() {
    const BeliefSet b = beliefs();
    std::vector<std::pair<int, double>> w;
    w.reserve(counts_.size());
    for (std::size_t k = 0; k < counts_.size(); ++k) w.emplace_back(counts_[k].first, b.packet[k]);
    visit([&](auto& m) { m.set_recursive(w, b.residual); });
  }

  void prune() {
    if (s_.keep_history) return;
    for (std::size_t k = 0; k < counts_.size();) {
      const int d = counts_[k].first;
      const bool drop = d != current_ && (!s_.feedback || counts_[k].second == 0);
      if (drop) {
        visit([d](auto& m) { m.drop(d); });
        counts_.erase(counts_.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        ++k;
      }
    }
  }

  EstimatorSettings s_;
  Model model_;
  Slot slot_ = 1;
  Anchor anchor_;
  int current_ = 0;
  Slot last_reception_ = 0;
  std::vector<std::pair<int, int>> counts_;  // (packet, unresolved receptions)
};

inline EstimateView mmse_views(const SourceEstimator& est) { return est.view(); }

// ---------------------------------------------------------------------------
// Full posterior table g(phi', phi | O(t)) for phi <= t, by forward-backward
// smoothing over the age chain. Intended for diagnostics and small horizons.

class GenerationPosterior {
 public:
  explicit GenerationPosterior(const GenSpec& spec, Slot delay = 0, FeedbackDelay feedback = kNoFeedback)
      : kernel_(pmf(spec)), delay_(delay), feedback_(feedback) {}

  void extend(const SourceObservation& obs, Slot t) {
    if (t < 1) throw std::invalid_argument("posterior horizon must be >= 1");
    if (t < t_) throw std::logic_error("posterior cannot move backwards in time");
    const std::size_t n = kernel_.size();
    const auto T = static_cast<std::size_t>(t);

    std::vector<Slot> lo(T + 1, 0), hi(T + 1, std::numeric_limits<Slot>::max());
    Slot prev = 0;
    int current = 0;
    for (const auto& r : obs.receptions()) {
      if (r.slot > t - 1) break;
      if (r.slot <= prev) throw ObservationError("reception slots out of order");
      const auto s = static_cast<std::size_t>(r.slot);
      if (r.packet == current) {
        lo[s] = std::max(lo[s], r.slot - prev);
      } else {
        if (r.packet != current + 1) throw ObservationError("packet indices must increase by one");
        hi[s] = std::min(hi[s], r.slot - prev);
        current = r.packet;
      }
      prev = r.slot;
    }
    if (feedback_) {
      for (const auto& a : obs.acks()) {
        if (a.arrival_slot > t - 1) break;
        const Reception* r = obs.reception_at(a.delivery_slot - delay_);
        if (!r) throw ObservationError("ack without a matching reception");
        const Slot first = obs.first_slot(r->packet);
        const auto s = static_cast<std::size_t>(first);
        const Slot age = first - a.timestamp;
        lo[s] = std::max(lo[s], age);
        hi[s] = std::min(hi[s], age + 1);
      }
    }

    auto masked = [&](std::size_t s, std::size_t a) {
      const auto sa = static_cast<Slot>(a);
      return sa < lo[s] || sa >= hi[s];
    };

    std::vector<std::vector<double>> fwd(T + 1, std::vector<double>(n, 0.0));
    std::vector<std::size_t> len(T + 1, 1);
    fwd[1][0] = 1.0;
    for (std::size_t s = 1; s <= T; ++s) {
      if (s > 1) {
        fwd[s] = fwd[s - 1];
        kernel_.step(fwd[s].data(), len[s - 1]);
        len[s] = kernel_.next_len(len[s - 1]);
      }
      double c = 0.0;
      for (std::size_t a = 0; a < len[s]; ++a) {
        if (masked(s, a)) fwd[s][a] = 0.0;
        c += fwd[s][a];
      }
      if (!(c > 0.0)) throw ObservationError("no generation path is consistent with the observations");
      for (std::size_t a = 0; a < len[s]; ++a) fwd[s][a] /= c;
    }

    post_.assign(T + 1, {});
    std::vector<double> beta(n, 1.0), mb(n);
    for (std::size_t s = T; s >= 1; --s) {
      if (s < T) {
        for (std::size_t a = 0; a < len[s + 1]; ++a) mb[a] = masked(s + 1, a) ? 0.0 : beta[a];
        double mx = 0.0;
        for (std::size_t a = 0; a < len[s]; ++a) {
          const double h = kernel_.hazard(a);
          const double stay = a + 1 < n ? (1.0 - h) * mb[a + 1] : 0.0;
          beta[a] = h * mb[0] + stay;
          mx = std::max(mx, beta[a]);
        }
        if (mx > 0.0)
          for (std::size_t a = 0; a < len[s]; ++a) beta[a] /= mx;
      }
      auto& row = post_[s];
      row.assign(len[s], 0.0);
      double c = 0.0;
      for (std::size_t a = 0; a < len[s]; ++a) {
        row[a] = fwd[s][a] * beta[a];
        c += row[a];
      }
      if (!(c > 0.0)) throw ObservationError("no generation path is consistent with the observations");
      for (double& v : row) v /= c;
    }
    t_ = t;
  }

  Slot horizon() const { return t_; }

  /// P(latest generation at or before phi is at gen)
  double probability(Slot gen, Slot phi) const {
    const auto& row = row_at(phi);
    const Slot a = phi - gen;
    if (a < 0 || a >= static_cast<Slot>(row.size())) return 0.0;
    return row[static_cast<std::size_t>(a)];
  }

  /// P(a packet is generated in slot phi)
  double generation_probability(Slot phi) const { return row_at(phi)[0]; }

  double source_timestamp(Slot phi) const {
    const auto& row = row_at(phi);
    double v = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) v += static_cast<double>(phi - static_cast<Slot>(a)) * row[a];
    return v;
  }

  double packet_generation(const SourceObservation& obs, int d) const {
    const Slot first = obs.first_slot(d);
    if (first > t_ - 1) throw std::out_of_range("packet not yet received");
    return source_timestamp(first);
  }

  std::span<const double> row(Slot phi) const { return row_at(phi); }

 private:
  const std::vector<double>& row_at(Slot phi) const {
    if (phi < 1 || phi > t_) throw std::out_of_range("slot outside the posterior window");
    return post_[static_cast<std::size_t>(phi)];
  }

  AgeKernel kernel_;
  Slot delay_;
  FeedbackDelay feedback_;
  Slot t_ = 0;
  std::vector<std::vector<double>> post_;
};

inline void extend_posterior(GenerationPosterior& post, const SourceObservation& obs, Slot t) { post.extend(obs, t); }

inline double estimate_source_timestamp(const GenerationPosterior& post, Slot t) { return post.source_timestamp(t); }

inline double estimate_packet_generation(const GenerationPosterior& post, const SourceObservation& obs, int d) {
  return post.packet_generation(obs, d);
}

/// True when a generation at phi is compatible with the reception record:
/// phi lies in [last(d)+1, first(d+1)] for some d, or after the last reception.
inline bool in_feasible_set(const SourceObservation& obs, Slot phi, Slot t) {
  if (phi < 1 || phi > t) return false;
  Slot last = 0;  // last reception of the packet before the current one
  Slot prev = 0;  // previous reception slot
  for (const auto& r : obs.receptions()) {
    if (r.slot > t - 1) break;
    if (!r.repeat) {
      if (phi > last && phi <= r.slot) return true;
    }
    prev = r.slot;
    last = prev;
  }
  return phi > prev;
}

}  // namespace aoi

#endif  // AOI_ESTIMATOR_HPP_
