#ifndef AOI_POLICIES_HPP_
#define AOI_POLICIES_HPP_

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/core.hpp"
#include "aoi/estimator.hpp"
#include "aoi/randomized.hpp"
#include "aoi/rng.hpp"

namespace aoi {

enum class PolicyKind {
  kRandomized,
  kMaxWeightEstimate,            // MW-E: estimator with acks
  kMaxWeightEstimateNoFeedback,  // MW-EnF: estimator ignoring acks
  kMaxWeightFull,                // MW-F: true AoI and system time
  kMaxWeightStale,               // MW-S: delayed AoI, mean system time
};

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::kRandomized, PolicyKind::kMaxWeightEstimate,
                                              PolicyKind::kMaxWeightEstimateNoFeedback, PolicyKind::kMaxWeightFull,
                                              PolicyKind::kMaxWeightStale};

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kRandomized: return "randomized";
    case PolicyKind::kMaxWeightEstimate: return "mw-e";
    case PolicyKind::kMaxWeightEstimateNoFeedback: return "mw-enf";
    case PolicyKind::kMaxWeightFull: return "mw-f";
    case PolicyKind::kMaxWeightStale: return "mw-s";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  for (PolicyKind k : kAllPolicies)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline bool uses_estimator(PolicyKind k) {
  return k == PolicyKind::kMaxWeightEstimate || k == PolicyKind::kMaxWeightEstimateNoFeedback;
}

/// Throws if the kind needs information the network cannot provide.
inline void check_policy_supported(PolicyKind k, const NetworkConfig& cfg) {
  if (k != PolicyKind::kMaxWeightEstimate && k != PolicyKind::kMaxWeightStale) return;
  for (const auto& s : cfg.sources)
    if (!s.feedback_delay)
      throw ConfigError(std::string(to_string(k)) + " requires a finite feedback delay for every source");
}

inline std::vector<double> beta_from_optimal_randomized(const NetworkConfig& cfg, std::span<const double> mu) {
  std::vector<double> beta(cfg.sources.size());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const auto& s = cfg.sources[i];
    beta[i] = s.weight / (s.p_source * s.p_dest * mu[i]);
  }
  return beta;
}

inline std::vector<double> beta_from_optimal_randomized(const NetworkConfig& cfg) {
  return beta_from_optimal_randomized(cfg, optimal_probabilities(cfg).marginals);
}

inline double mw_weight(double beta, double p_source, double p_dest, double aoi_ahead, double system_time,
                        Slot delay) {
  return beta * p_source * p_dest * (aoi_ahead - system_time - static_cast<double>(delay));
}

/// The K largest weights; ties go to the lower index. Returned ascending.
inline Decision select_top_k(std::span<const double> w, int k) {
  std::vector<int> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto kk = static_cast<std::size_t>(std::min<int>(k, static_cast<int>(w.size())));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                    [&](int a, int b) { return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)] ||
                                               (w[static_cast<std::size_t>(a)] == w[static_cast<std::size_t>(b)] && a < b); });
  idx.resize(kk);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// What a policy may look at in one slot. Fields a kind is not entitled to
// must be left empty.
struct DecisionInputs {
  Slot slot = 1;
  const NetworkState* truth = nullptr;                // MW-F only
  const ObservationLog* observations = nullptr;       // MW-S only
  std::span<const EstimateView> estimates;            // MW-E, MW-EnF only
};

class Policy {
 public:
  Policy(PolicyKind kind, const NetworkConfig& cfg, std::uint64_t seed)
      : kind_(kind), cfg_(cfg), rng_(make_stream(seed, Stream::kPolicy)) {
    cfg_.validate();
    check_policy_supported(kind, cfg_);
    const auto sol = optimal_probabilities(cfg_);
    beta_ = beta_from_optimal_randomized(cfg_, sol.marginals);
    if (kind_ == PolicyKind::kRandomized) sampler_.emplace(sol.marginals);
    if (kind_ == PolicyKind::kMaxWeightStale)
      for (const auto& m : source_moments(cfg_)) mean_system_time_.push_back(1.0 / m.rate - 1.0);
    weights_.resize(cfg_.sources.size());
  }

  PolicyKind kind() const { return kind_; }
  std::span<const double> beta() const { return beta_; }
  std::span<const double> last_weights() const { return weights_; }

  Decision decide(const DecisionInputs& in) {
    guard(in);
    const std::size_t n = cfg_.sources.size();
    switch (kind_) {
      case PolicyKind::kRandomized:
        return (*sampler_)(rng_);
      case PolicyKind::kMaxWeightEstimate:
      case PolicyKind::kMaxWeightEstimateNoFeedback:
        for (std::size_t i = 0; i < n; ++i)
          weights_[i] = weight(i, in.estimates[i].aoi_ahead, in.estimates[i].system_time);
        break;
      case PolicyKind::kMaxWeightFull:
        for (std::size_t i = 0; i < n; ++i) {
          const int ii = static_cast<int>(i);
          weights_[i] = weight(i, static_cast<double>(in.truth->aoi(ii)), static_cast<double>(in.truth->system_time(ii)));
        }
        break;
      case PolicyKind::kMaxWeightStale:
        for (std::size_t i = 0; i < n; ++i) {
          const Slot h = in.observations->sources[i].delayed_aoi(in.slot, *cfg_.sources[i].feedback_delay);
          weights_[i] = weight(i, static_cast<double>(h), mean_system_time_[i]);
        }
        break;
    }
    return select_top_k(weights_, cfg_.max_scheduled);
  }

 private:
  double weight(std::size_t i, double h, double z) const {
    const auto& s = cfg_.sources[i];
    return mw_weight(beta_[i], s.p_source, s.p_dest, h, z, s.delay);
  }

  void guard(const DecisionInputs& in) const {
    const bool wants_truth = kind_ == PolicyKind::kMaxWeightFull;
    const bool wants_obs = kind_ == PolicyKind::kMaxWeightStale;
    const bool wants_est = uses_estimator(kind_);
    const std::string name(to_string(kind_));
    auto check = [&](bool given, bool wanted, const char* what) {
      if (given && !wanted) throw ConfigError(name + " may not read " + what);
      if (!given && wanted) throw ConfigError(name + " needs " + what);
    };
    check(in.truth != nullptr, wants_truth, "ground truth");
    check(in.observations != nullptr, wants_obs, "the observation log");
    check(!in.estimates.empty(), wants_est, "estimates");
    if (wants_est && in.estimates.size() != cfg_.sources.size()) throw ConfigError(name + ": one estimate per source");
  }

  PolicyKind kind_;
  NetworkConfig cfg_;
  Engine rng_;
  std::vector<double> beta_;
  std::optional<ExactKSampler> sampler_;
  std::vector<double> mean_system_time_;
  std::vector<double> weights_;
};

}  // namespace aoi

#endif  // AOI_POLICIES_HPP_
