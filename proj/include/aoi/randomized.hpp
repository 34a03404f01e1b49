#ifndef AOI_RANDOMIZED_HPP_
#define AOI_RANDOMIZED_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/core.hpp"
#include "aoi/genproc.hpp"
#include "aoi/rng.hpp"

namespace aoi {

struct RandomizedSolution {
  std::vector<double> marginals;  // mu_i
  double multiplier = 0.0;
  double ewsaoi = 0.0;  // closed form at the marginals
};

/// Stationary weighted AoI of a randomized policy scheduling source i with
/// probability mu_i in every slot.
inline double closed_form_ewsaoi(const NetworkConfig& cfg, std::span<const GenMoments> m,
                                 std::span<const double> mu) {
  if (m.size() != cfg.sources.size() || mu.size() != cfg.sources.size())
    throw ConfigError("closed_form_ewsaoi: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto& s = cfg.sources[i];
    if (!(mu[i] > 0.0 && mu[i] <= 1.0 + 1e-12)) throw ConfigError("closed_form_ewsaoi: mu must be in (0,1]");
    acc += s.weight * (m[i].second_moment * m[i].rate / 2.0 + 1.0 / (s.p_dest * s.p_source * mu[i]) +
                       static_cast<double>(s.delay) - 1.0);
  }
  return acc / static_cast<double>(mu.size());
}

/// Minimizer of the closed form subject to sum mu = K, 0 < mu <= 1. The
/// generation process does not enter.
inline RandomizedSolution optimal_probabilities(const NetworkConfig& cfg, double tol = 1e-12) {
  cfg.validate();
  const std::size_t n = cfg.sources.size();
  const double K = cfg.max_scheduled;
  std::vector<double> th(n);
  double root_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = cfg.sources[i];
    th[i] = s.weight / (s.p_dest * s.p_source);
    root_sum += std::sqrt(th[i]);
  }

  RandomizedSolution sol;
  sol.marginals.assign(n, 1.0);
  auto fill = [&](double t, std::vector<double>& mu) {
    double S = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = std::min(1.0, std::sqrt(th[i] / t));
      S += mu[i];
    }
    return S;
  };

  if (cfg.max_scheduled == static_cast<int>(n)) {
    sol.multiplier = *std::min_element(th.begin(), th.end());
  } else {
    double lo = *std::min_element(th.begin(), th.end());  // sum = N > K
    double hi = std::max(*std::max_element(th.begin(), th.end()), root_sum * root_sum / (K * K));
    std::vector<double> mu(n);
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      const double S = fill(mid, mu);
      if (std::abs(S - K) <= tol) {
        hi = mid;
        break;
      }
      if (S > K) lo = mid; else hi = mid;
    }
    fill(hi, sol.marginals);
    sol.multiplier = hi;
  }

  const auto m = source_moments(cfg);
  sol.ewsaoi = closed_form_ewsaoi(cfg, m, sol.marginals);
  return sol;
}

/// Systematic sampling on the circle of cumulative marginals: one uniform
/// offset u, points u, u+1, ..., u+K-1. Each point lands in a distinct
/// interval because every mu_i <= 1.
class ExactKSampler {
 public:
  explicit ExactKSampler(std::vector<double> mu) : mu_(std::move(mu)) {
    double total = 0.0;
    for (double v : mu_) {
      if (!(v >= 0.0 && v <= 1.0 + 1e-9)) throw ConfigError("sample_exact_k: marginals must be in [0,1]");
      total += v;
    }
    k_ = static_cast<int>(std::lround(total));
    if (k_ < 1 || std::abs(total - k_) > 1e-6) throw ConfigError("sample_exact_k: marginals must sum to an integer K");
    if (k_ > static_cast<int>(mu_.size())) throw ConfigError("sample_exact_k: K exceeds N");
    cum_.resize(mu_.size());
    double c = 0.0;
    for (std::size_t i = 0; i < mu_.size(); ++i) {
      c += mu_[i];
      cum_[i] = c;
    }
    cum_.back() = k_;
  }

  int k() const { return k_; }

  Decision operator()(Engine& rng) const { return draw(uniform01(rng)); }

  Decision draw(double u) const {
    Decision out;
    out.reserve(static_cast<std::size_t>(k_));
    std::size_t i = 0;
    const std::size_t n = cum_.size();
    for (int j = 0; j < k_; ++j) {
      const double point = u + j;
      while (i < n && cum_[i] <= point) ++i;
      if (i >= n) i = n - 1;
      if (!out.empty() && static_cast<int>(i) <= out.back()) i = static_cast<std::size_t>(out.back()) + 1;
      out.push_back(static_cast<int>(i));
    }
    // rounding at the top of the circle can push the tail past N-1
    if (out.back() >= static_cast<int>(n)) {
      int next = static_cast<int>(n) - 1;
      for (std::size_t k = out.size(); k-- > 0;) {
        out[k] = std::min(out[k], next);
        next = out[k] - 1;
      }
    }
    return out;
  }

 private:
  std::vector<double> mu_;
  std::vector<double> cum_;
  int k_ = 0;
};

inline Decision sample_exact_k(std::span<const double> mu, Engine& rng) {
  return ExactKSampler(std::vector<double>(mu.begin(), mu.end()))(rng);
}

}  // namespace aoi

#endif  // AOI_RANDOMIZED_HPP_
