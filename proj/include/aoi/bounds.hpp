#ifndef AOI_BOUNDS_HPP_
#define AOI_BOUNDS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "aoi/config.hpp"
#include "aoi/genproc.hpp"

namespace aoi {

struct LowerBoundSolution {
  std::vector<double> rate;  // q_i, deliveries per slot
  double multiplier = 0.0;   // gamma at termination
  double bound = 0.0;        // L_B
  bool capacity_slack = false;
};

/// Water-filling lower bound on the weighted average AoI of any policy.
/// The capacity multiplier is located by bisection until |S - K| <= tol.
inline LowerBoundSolution lower_bound(const NetworkConfig& cfg, std::span<const GenMoments> m,
                                      double tol = 1e-10) {
  cfg.validate();
  const std::size_t n = cfg.sources.size();
  if (m.size() != n) throw ConfigError("lower_bound: one moment set per source required");
  const double N = static_cast<double>(n);
  const double K = cfg.max_scheduled;

  std::vector<double> pp(n), v(n), gi(n);
  double root_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = cfg.sources[i];
    pp[i] = s.p_source * s.p_dest;
    v[i] = std::min(m[i].rate, pp[i]);
    gi[i] = s.weight * pp[i] / (2.0 * N * v[i] * v[i]);
    root_sum += std::sqrt(s.weight / pp[i]);
  }
  const double g_tilde = root_sum * root_sum / (2.0 * N * K * K);

  auto rates = [&](double gamma, std::vector<double>& q) {
    double S = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = v[i] * std::min(1.0, std::sqrt(gi[i] / gamma));
      S += q[i] / pp[i];
    }
    return S;
  };

  LowerBoundSolution sol;
  sol.rate.assign(n, 0.0);
  double hi = std::max(g_tilde, *std::max_element(gi.begin(), gi.end()));
  double S = rates(hi, sol.rate);
  sol.multiplier = hi;
  if (S < K - tol) {
    double lo = *std::min_element(gi.begin(), gi.end());
    std::vector<double> q(n);
    if (rates(lo, q) <= K + tol) {
      // every source runs at its cap v_i
      sol.rate = q;
      sol.multiplier = lo;
      sol.capacity_slack = true;
    } else {
      // S(gamma) is non-increasing: S(lo) > K >= S(hi)
      for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        S = rates(mid, q);
        if (std::abs(S - K) <= tol) {
          hi = mid;
          break;
        }
        if (S > K) lo = mid; else hi = mid;
      }
      const double gamma = hi;
      rates(gamma, sol.rate);
      sol.multiplier = gamma;
    }
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = cfg.sources[i];
    acc += s.weight * (1.0 / sol.rate[i] + 2.0 * static_cast<double>(s.delay) + 1.0);
  }
  sol.bound = acc / (2.0 * N);
  return sol;
}

inline LowerBoundSolution lower_bound(const NetworkConfig& cfg, double tol = 1e-10) {
  const auto m = source_moments(cfg);
  return lower_bound(cfg, m, tol);
}

/// rho = sum_i alpha_i E[X_i^2] lambda_i^2 / sum_i alpha_i + 2
inline double optimality_ratio(const NetworkConfig& cfg, std::span<const GenMoments> m) {
  if (m.size() != cfg.sources.size()) throw ConfigError("optimality_ratio: one moment set per source required");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = cfg.sources[i].weight;
    num += a * m[i].second_moment * m[i].rate * m[i].rate;
    den += a;
  }
  return num / den + 2.0;
}

inline double optimality_ratio(const NetworkConfig& cfg) {
  const auto m = source_moments(cfg);
  return optimality_ratio(cfg, m);
}

}  // namespace aoi

#endif  // AOI_BOUNDS_HPP_
