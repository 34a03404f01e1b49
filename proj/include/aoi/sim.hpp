// Copyright 2026 The aoisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software distributed
// under the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR
// CONDITIONS OF ANY KIND, either express or implied.

#ifndef AOI_SIM_HPP_
#define AOI_SIM_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "aoi/bounds.hpp"
#include "aoi/config.hpp"
#include "aoi/core.hpp"
#include "aoi/estimator.hpp"
#include "aoi/policies.hpp"
#include "aoi/randomized.hpp"
#include "aoi/rng.hpp"

namespace aoi {

struct TraceRow {
  Slot t = 0;
  int source = 0;
  double tau_s_hat = 0.0;
  double tau_d_hat = 0.0;  // estimate of tau_D(t + delay)
  double h_hat = 0.0;      // estimate of h(t + delay)
  double z_hat = 0.0;
  Slot tau_s = 0;
  Slot tau_d = 0;  // true tau_D(t + delay), filled in once known
};

struct EpisodeOptions {
  bool record_trace = false;
  bool record_decisions = false;
  bool closed_form_estimators = true;
  int error_batches = 50;  // batch means for the standard error of estimate errors
};

// Mean and batch-means standard error of a per-slot series.
struct SeriesStat {
  double mean = 0.0;
  double stderr_ = 0.0;
  Slot count = 0;
};

struct EpisodeResult {
  double ewsaoi = 0.0;
  std::vector<double> mean_aoi;
  std::vector<SeriesStat> aoi_error;          // h_hat(t+delay) - h(t+delay)
  std::vector<SeriesStat> system_time_error;  // z_hat(t) - z(t)
  std::uint64_t seed = 0;
  Slot horizon = 0;
  std::vector<TraceRow> trace;
  std::vector<Decision> decisions;
};

namespace detail {

class BatchSeries {
 public:
  BatchSeries(Slot expected, int batches)
      : batch_len_(std::max<Slot>(1, expected / std::max(1, batches))), max_batches_(batches) {}

  void add(double v) {
    sum_ += v;
    ++n_;
    cur_ += v;
    if (++cur_n_ == batch_len_ && static_cast<int>(means_.size()) < max_batches_) {
      means_.push_back(cur_ / static_cast<double>(batch_len_));
      cur_ = 0.0;
      cur_n_ = 0;
    }
  }

  SeriesStat stat() const {
    SeriesStat s;
    s.count = n_;
    if (n_ == 0) return s;
    s.mean = sum_ / static_cast<double>(n_);
    const std::size_t b = means_.size();
    if (b >= 2) {
      double m = 0.0;
      for (double v : means_) m += v;
      m /= static_cast<double>(b);
      double ss = 0.0;
      for (double v : means_) ss += (v - m) * (v - m);
      s.stderr_ = std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
    }
    return s;
  }

 private:
  Slot batch_len_;
  int max_batches_;
  double sum_ = 0.0;
  Slot n_ = 0;
  double cur_ = 0.0;
  Slot cur_n_ = 0;
  std::vector<double> means_;
};

}  // namespace detail

inline EpisodeResult run_episode(const NetworkConfig& cfg, PolicyKind kind, Slot T, std::uint64_t seed,
                                 const EpisodeOptions& opt = {}) {
  cfg.validate();
  if (T < 1) throw ConfigError("horizon must be >= 1");
  const int n = cfg.n_sources();
  const auto un = static_cast<std::size_t>(n);

  Policy policy(kind, cfg, seed);
  NetworkState state = initial_state(cfg);
  ObservationLog obs = initial_observations(cfg);
  WeightedAoiAccumulator acc(cfg);

  std::vector<RenewalClock> clocks;
  std::vector<Engine> gen_rng, src_rng, dst_rng;
  for (int i = 0; i < n; ++i) {
    clocks.emplace_back(pmf(cfg.sources[static_cast<std::size_t>(i)].generation));
    gen_rng.push_back(make_stream(seed, Stream::kGeneration, static_cast<std::uint64_t>(i)));
    src_rng.push_back(make_stream(seed, Stream::kSourceChannel, static_cast<std::uint64_t>(i)));
    dst_rng.push_back(make_stream(seed, Stream::kDestChannel, static_cast<std::uint64_t>(i)));
  }

  const bool estimating = uses_estimator(kind);
  std::vector<SourceEstimator> est;
  if (estimating) {
    for (const auto& s : cfg.sources) {
      EstimatorSettings es;
      es.p_dest = s.p_dest;
      es.delay = s.delay;
      es.feedback = kind == PolicyKind::kMaxWeightEstimate ? s.feedback_delay : kNoFeedback;
      es.closed_form = opt.closed_form_estimators;
      est.emplace_back(s.generation, es);
    }
  }
  std::vector<EstimateView> views(estimating ? un : 0);

  EpisodeResult res;
  res.seed = seed;
  res.horizon = T;
  std::vector<double> aoi_sum(un, 0.0);
  std::vector<detail::BatchSeries> herr, zerr;
  std::vector<std::vector<double>> pending(un);
  std::vector<std::vector<std::size_t>> pending_row(un);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    herr.emplace_back(T, opt.error_batches);
    zerr.emplace_back(T, opt.error_batches);
    pending[ui].assign(static_cast<std::size_t>(cfg.sources[ui].delay + 1), 0.0);
    pending_row[ui].assign(pending[ui].size(), 0);
  }

  SlotRandomness rnd;
  rnd.generation.assign(un, 0);
  rnd.source_channel.assign(un, 0);
  rnd.dest_channel.assign(un, 0);

  for (Slot t = 1; t <= T; ++t) {
    acc.add(state);
    for (int i = 0; i < n; ++i) aoi_sum[static_cast<std::size_t>(i)] += static_cast<double>(state.aoi(i));

    if (estimating) {
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const Slot d = cfg.sources[ui].delay;
        // forecasts are stored under their target slot modulo d+1
        const auto now = static_cast<std::size_t>(t % (d + 1));
        const auto target = static_cast<std::size_t>((t + d) % (d + 1));
        if (t - d >= 1) {
          herr[ui].add(pending[ui][now] - static_cast<double>(state.aoi(i)));
          if (opt.record_trace) res.trace[pending_row[ui][now]].tau_d = state.dest_timestamp(i);
        }
        est[ui].observe(obs.sources[ui], t);
        views[ui] = est[ui].view();
        pending[ui][target] = views[ui].aoi_ahead;
        zerr[ui].add(views[ui].system_time - static_cast<double>(state.system_time(i)));
        if (opt.record_trace) {
          pending_row[ui][target] = res.trace.size();
          res.trace.push_back({t, i, est[ui].source_timestamp(), est[ui].dest_timestamp(), views[ui].aoi_ahead,
                               views[ui].system_time, state.source_timestamp(i), -1});
        }
      }
    }

    DecisionInputs in;
    in.slot = t;
    if (kind == PolicyKind::kMaxWeightFull) in.truth = &state;
    if (kind == PolicyKind::kMaxWeightStale) in.observations = &obs;
    if (estimating) in.estimates = views;
    Decision u = policy.decide(in);

    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      rnd.generation[ui] = clocks[ui].step(gen_rng[ui]);
      rnd.source_channel[ui] = bernoulli(src_rng[ui], cfg.sources[ui].p_source);
      rnd.dest_channel[ui] = bernoulli(dst_rng[ui], cfg.sources[ui].p_dest);
    }
    advance_slot(state, obs, u, rnd, cfg);
    if (opt.record_decisions) res.decisions.push_back(std::move(u));
  }

  res.ewsaoi = acc.value();
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    res.mean_aoi.push_back(aoi_sum[ui] / static_cast<double>(T));
    if (estimating) {
      res.aoi_error.push_back(herr[ui].stat());
      res.system_time_error.push_back(zerr[ui].stat());
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { kNone, kGenerationScale, kSourceReliability, kDestReliability, kDelay };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kGenerationScale: return "generation_scale";
    case SweepAxis::kSourceReliability: return "p_source";
    case SweepAxis::kDestReliability: return "p_dest";
    case SweepAxis::kDelay: return "delay";
  }
  return "?";
}

inline std::optional<SweepAxis> parse_sweep_axis(std::string_view s) {
  for (SweepAxis a : {SweepAxis::kNone, SweepAxis::kGenerationScale, SweepAxis::kSourceReliability,
                      SweepAxis::kDestReliability, SweepAxis::kDelay})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> values;
  bool feedback_follows_delay = false;  // omega_i = theta_i at every point
};

inline NetworkConfig apply_sweep(const NetworkConfig& base, const SweepSpec& sweep, double value) {
  NetworkConfig c = base;
  for (auto& s : c.sources) {
    switch (sweep.axis) {
      case SweepAxis::kNone: break;
      case SweepAxis::kGenerationScale: s.generation = scale_generation(s.generation, value); break;
      case SweepAxis::kSourceReliability: s.p_source = value; break;
      case SweepAxis::kDestReliability: s.p_dest = value; break;
      case SweepAxis::kDelay: {
        const double r = std::round(value);
        if (r < 0 || std::abs(r - value) > 1e-9) throw ConfigError("delay sweep values must be non-negative integers");
        s.delay = static_cast<Slot>(r);
        break;
      }
    }
    if (sweep.feedback_follows_delay) s.feedback_delay = s.delay;
  }
  c.validate();
  return c;
}

struct ExperimentSpec {
  NetworkConfig base;
  SweepSpec sweep;
  std::vector<PolicyKind> policies;
  int runs = 10;
  Slot horizon = 200000;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  EpisodeOptions episode;
};

struct ExperimentRow {
  double sweep_value = 0.0;
  PolicyKind policy = PolicyKind::kRandomized;
  double mean = 0.0;
  double stddev = 0.0;
  int runs = 0;
  double lower_bound = 0.0;
  double rho_times_lb = 0.0;
  double closed_form = 0.0;
  std::vector<double> per_run;  // EWSAoI by run index
  std::vector<EpisodeResult> episodes;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // sweep point major, then policy in listed order
};

struct AnalyticPoint {
  double lower_bound = 0.0;
  double rho = 0.0;
  double closed_form = 0.0;
};

inline AnalyticPoint analytic_companions(const NetworkConfig& cfg) {
  const auto m = source_moments(cfg);
  AnalyticPoint a;
  a.lower_bound = lower_bound(cfg, m).bound;
  a.rho = optimality_ratio(cfg, m);
  a.closed_form = optimal_probabilities(cfg).ewsaoi;
  return a;
}

/// Runs tasks [0, count) on `jobs` threads; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, int jobs, F&& fn) {
  unsigned w = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1U, std::thread::hardware_concurrency());
  w = static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (w <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, bool keep_episodes = false) {
  if (spec.runs < 1) throw ConfigError("runs must be >= 1");
  if (spec.policies.empty()) throw ConfigError("at least one policy is required");
  std::vector<double> points = spec.sweep.values;
  if (spec.sweep.axis == SweepAxis::kNone || points.empty()) points = {0.0};

  std::vector<NetworkConfig> cfgs;
  std::vector<AnalyticPoint> an;
  for (double v : points) {
    cfgs.push_back(apply_sweep(spec.base, spec.sweep, v));
    for (PolicyKind k : spec.policies) check_policy_supported(k, cfgs.back());
    an.push_back(analytic_companions(cfgs.back()));
  }

  const std::size_t np = spec.policies.size();
  const auto runs = static_cast<std::size_t>(spec.runs);
  std::vector<EpisodeResult> out(points.size() * np * runs);
  parallel_for(out.size(), spec.jobs, [&](std::size_t k) {
    const std::size_t run = k % runs;
    const std::size_t pol = (k / runs) % np;
    const std::size_t pt = k / runs / np;
    out[k] = run_episode(cfgs[pt], spec.policies[pol], spec.horizon, spec.seed + run, spec.episode);
  });

  ExperimentResult res;
  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    for (std::size_t pol = 0; pol < np; ++pol) {
      ExperimentRow row;
      row.sweep_value = points[pt];
      row.policy = spec.policies[pol];
      row.runs = spec.runs;
      row.lower_bound = an[pt].lower_bound;
      row.rho_times_lb = an[pt].rho * an[pt].lower_bound;
      row.closed_form = an[pt].closed_form;
      double s = 0.0;
      for (std::size_t r = 0; r < runs; ++r) {
        auto& ep = out[(pt * np + pol) * runs + r];
        row.per_run.push_back(ep.ewsaoi);
        s += ep.ewsaoi;
        if (keep_episodes) row.episodes.push_back(std::move(ep));
      }
      row.mean = s / static_cast<double>(runs);
      double ss = 0.0;
      for (double v : row.per_run) ss += (v - row.mean) * (v - row.mean);
      row.stddev = runs > 1 ? std::sqrt(ss / static_cast<double>(runs - 1)) : 0.0;
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string to_csv(const ExperimentResult& r) {
  std::string s = "sweep_value,policy,mean_ewsaoi,stddev,runs,lower_bound,rho_times_lb,closed_form\n";
  for (const auto& row : r.rows) {
    s += format_number(row.sweep_value) + "," + std::string(to_string(row.policy)) + "," + format_number(row.mean) +
         "," + format_number(row.stddev) + "," + std::to_string(row.runs) + "," + format_number(row.lower_bound) +
         "," + format_number(row.rho_times_lb) + "," + format_number(row.closed_form) + "\n";
  }
  return s;
}

inline std::string trace_csv(const EpisodeResult& e) {
  std::string s = "t,source,tau_s_hat,tau_d_hat,h_hat,z_hat,tau_s,tau_d\n";
  for (const auto& r : e.trace) {
    s += std::to_string(r.t) + "," + std::to_string(r.source + 1) + "," + format_number(r.tau_s_hat) + "," +
         format_number(r.tau_d_hat) + "," + format_number(r.h_hat) + "," + format_number(r.z_hat) + "," +
         std::to_string(r.tau_s) + "," + (r.tau_d < 0 ? std::string() : std::to_string(r.tau_d)) + "\n";
  }
  return s;
}

}  // namespace aoi

#endif  // AOI_SIM_HPP_
