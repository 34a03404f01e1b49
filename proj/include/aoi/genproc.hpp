// Copyright 2026 The aoisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software distributed
// under the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR
// CONDITIONS OF ANY KIND, either express or implied.

#ifndef AOI_GENPROC_HPP_
#define AOI_GENPROC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aoi/rng.hpp"
#include "aoi/types.hpp"

namespace aoi {

/// Deterministic gap: a packet every `period` slots.
struct Periodic {
  Slot period = 1;
};

/// Discrete uniform gap on {lo, ..., hi}.
struct Uniform {
  Slot lo = 1;
  Slot hi = 1;
};

/// Geometric gap (Bernoulli generation with probability `rate` per slot),
/// truncated once the remaining tail mass drops to `tail_mass`.
struct Geometric {
  double rate = 1.0;
  double tail_mass = 1e-15;
};

/// Arbitrary gap distribution, pmf[x-1] = P(X = x). Renormalized on use.
struct Explicit {
  std::vector<double> pmf;
};

using GenSpec = std::variant<Periodic, Uniform, Geometric, Explicit>;

struct GenMoments {
  double mean = 1.0;
  double second_moment = 1.0;
  double rate = 1.0;
};

class Pmf {
 public:
  Pmf() : Pmf(std::vector<double>{1.0}) {}

  // f[k] = P(X = k+1). Entries must be finite and non-negative with a
  // positive total; trailing zeros are dropped.
  explicit Pmf(std::vector<double> f) : f_(std::move(f)) {
    while (!f_.empty() && f_.back() == 0.0) f_.pop_back();
    if (f_.empty()) throw ConfigError("pmf: empty support");
    double total = 0.0;
    for (double v : f_) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigError("pmf: entries must be finite and >= 0");
      total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw ConfigError("pmf: not normalizable");
    for (double& v : f_) v /= total;
    // survival_[k] = P(X > k), computed from the top to avoid 1 - cdf cancellation.
    survival_.assign(f_.size() + 1, 0.0);
    for (std::size_t k = f_.size(); k-- > 0;) survival_[k] = survival_[k + 1] + f_[k];
    // survival_[0] is the total, exactly 1 up to rounding; rescale tails by it.
    const double s0 = survival_[0];
    for (double& v : survival_) v /= s0;
    for (double& v : f_) v /= s0;
    cdf_.resize(f_.size());
    std::partial_sum(f_.begin(), f_.end(), cdf_.begin());
  }

  Slot max_support() const { return static_cast<Slot>(f_.size()); }

  double operator()(Slot x) const {
    if (x < 1 || x > max_support()) return 0.0;
    return f_[static_cast<std::size_t>(x - 1)];
  }

  std::span<const double> values() const { return f_; }

  // P(X > x)
  double survival(Slot x) const {
    if (x <= 0) return 1.0;
    if (x >= max_support()) return 0.0;
    return survival_[static_cast<std::size_t>(x)];
  }

  // P(X = k | X >= k): probability that a packet is generated when the
  // current one has reached age k-1.
  double hazard(Slot k) const {
    if (k < 1 || k > max_support()) return 1.0;
    const double at_risk = survival_[static_cast<std::size_t>(k - 1)];
    if (at_risk <= 0.0) return 1.0;
    return std::min(1.0, f_[static_cast<std::size_t>(k - 1)] / at_risk);
  }

  // Inverse-CDF draw from u in [0,1).
  Slot quantile(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
    if (k >= f_.size()) k = f_.size() - 1;
    while (f_[k] == 0.0 && k + 1 < f_.size()) ++k;
    return static_cast<Slot>(k + 1);
  }

 private:
  std::vector<double> f_;
  std::vector<double> survival_;
  std::vector<double> cdf_;
};

inline void validate(const GenSpec& spec) {
  struct V {
    void operator()(const Periodic& p) const {
      if (p.period < 1) throw ConfigError("periodic generation needs period >= 1");
    }
    void operator()(const Uniform& u) const {
      if (u.lo < 1 || u.hi < u.lo) throw ConfigError("uniform generation needs 1 <= lo <= hi");
    }
    void operator()(const Geometric& g) const {
      if (!(g.rate > 0.0 && g.rate <= 1.0)) throw ConfigError("geometric rate must be in (0,1]");
      if (!(g.tail_mass > 0.0 && g.tail_mass < 1e-3))
        throw ConfigError("geometric tail mass must be in (0, 1e-3)");
    }
    void operator()(const Explicit& e) const {
      if (e.pmf.empty()) throw ConfigError("explicit generation pmf is empty");
    }
  };
  std::visit(V{}, spec);
}

inline Pmf pmf(const GenSpec& spec) {
  validate(spec);
  struct V {
    Pmf operator()(const Periodic& p) const {
      std::vector<double> f(static_cast<std::size_t>(p.period), 0.0);
      f.back() = 1.0;
      return Pmf(std::move(f));
    }
    Pmf operator()(const Uniform& u) const {
      std::vector<double> f(static_cast<std::size_t>(u.hi), 0.0);
      for (Slot x = u.lo; x <= u.hi; ++x) f[static_cast<std::size_t>(x - 1)] = 1.0;
      return Pmf(std::move(f));
    }
    Pmf operator()(const Geometric& g) const {
      if (g.rate >= 1.0) return Pmf({1.0});
      const double q = 1.0 - g.rate;
      // smallest xbar with q^xbar <= tail_mass
      const auto xbar = static_cast<std::size_t>(std::ceil(std::log(g.tail_mass) / std::log(q)));
      std::vector<double> f(std::max<std::size_t>(xbar, 1));
      double w = g.rate;
      for (double& v : f) {
        v = w;
        w *= q;
      }
      return Pmf(std::move(f));
    }
    Pmf operator()(const Explicit& e) const { return Pmf(e.pmf); }
  };
  return std::visit(V{}, spec);
}

inline GenMoments moments(const Pmf& f) {
  double m1 = 0.0;
  double m2 = 0.0;
  const auto v = f.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = static_cast<double>(k + 1);
    m1 += x * v[k];
    m2 += x * x * v[k];
  }
  return {m1, m2, 1.0 / m1};
}

inline GenMoments moments(const GenSpec& spec) { return moments(pmf(spec)); }

inline Slot sample_intergeneration(const Pmf& f, Engine& rng) { return f.quantile(uniform01(rng)); }

/// Stretch a gap distribution by `s` (periods and uniform bounds scale,
/// the geometric rate divides). Used by generation-scale sweeps.
inline GenSpec scale_generation(const GenSpec& spec, double s) {
  if (!(s > 0.0)) throw ConfigError("generation scale must be positive");
  auto to_slot = [](double v) {
    const double r = std::round(v);
    if (std::abs(r - v) > 1e-9) throw ConfigError("scaled generation parameter is not an integer");
    return static_cast<Slot>(r);
  };
  struct V {
    double s;
    decltype(to_slot) slot;
    GenSpec operator()(const Periodic& p) const { return Periodic{slot(p.period * s)}; }
    GenSpec operator()(const Uniform& u) const { return Uniform{slot(u.lo * s), slot(u.hi * s)}; }
    GenSpec operator()(const Geometric& g) const { return Geometric{g.rate / s, g.tail_mass}; }
    GenSpec operator()(const Explicit&) const {
      throw ConfigError("explicit pmf cannot be rescaled");
    }
  };
  GenSpec out = std::visit(V{s, to_slot}, spec);
  validate(out);
  return out;
}

inline std::string describe(const GenSpec& spec) {
  struct V {
    std::string operator()(const Periodic& p) const { return "periodic(" + std::to_string(p.period) + ")"; }
    std::string operator()(const Uniform& u) const {
      return "uniform(" + std::to_string(u.lo) + "," + std::to_string(u.hi) + ")";
    }
    std::string operator()(const Geometric& g) const { return "geometric(" + std::to_string(g.rate) + ")"; }
    std::string operator()(const Explicit& e) const {
      return "explicit(" + std::to_string(e.pmf.size()) + " bins)";
    }
  };
  return std::visit(V{}, spec);
}

}  // namespace aoi

#endif  // AOI_GENPROC_HPP_
