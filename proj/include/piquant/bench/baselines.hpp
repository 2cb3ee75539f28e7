// Copyright 2026 The Piquant Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "piquant/em.hpp"
#include "piquant/random.hpp"

namespace piquant::bench {

struct DomainTooLarge : std::invalid_argument {
  DomainTooLarge() : std::invalid_argument("LDP baseline needs d <= 2^16") {}
};

struct Release {
  std::string what;
  double epsilon;
};

struct BaselineResult {
  std::vector<int64_t> estimates;  // aligned with the input quantiles
  std::vector<Release> budget;
};

// Sequential composition: one interval EM per quantile at epsilon / m.
inline BaselineResult baseline_naive_em(const std::vector<int64_t>& x, const std::vector<double>& q,
                                        double epsilon, int64_t d, Rng& rng) {
  std::vector<int64_t> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  BaselineResult r;
  const double each = epsilon / static_cast<double>(q.size());
  for (size_t i = 0; i < q.size(); ++i) {
    r.estimates.push_back(ideal_em(sorted, q[i], each, d, rng));
    r.budget.push_back({"quantile " + std::to_string(i), each});
  }
  return r;
}

struct LdpOptions {
  int fanout = 2;
};

inline constexpr int64_t kLdpMaxDomain = int64_t(1) << 16;

// Hierarchical histogram under local DP. Every user reports at every level
// with epsilon / levels, using symmetric unary encoding (each node bit kept
// with probability p = e^{eps/2} / (1 + e^{eps/2}), flipped otherwise).
// Node bits are independent, so the aggregate per-node counts are drawn
// directly as two binomials, which has the same distribution as simulating
// every user.
class LdpHierarchy {
 public:
  LdpHierarchy(const std::vector<int64_t>& x, double epsilon, int64_t d, Rng& rng,
               LdpOptions opt = {})
      : d_(d), fanout_(opt.fanout), n_(static_cast<int64_t>(x.size())) {
    if (d > kLdpMaxDomain) throw DomainTooLarge();
    if (fanout_ < 2) throw std::invalid_argument("fan-out must be at least 2");
    int64_t width = 1;
    while (width < d + 1) {
      width *= fanout_;
      ++levels_;
    }
    levels_ = std::max(levels_, 1);
    const double eps_level = epsilon / levels_;
    double p = 1.0, qf = 0.0;
    if (std::isfinite(eps_level) && eps_level < 700) {
      const double e = std::exp(eps_level / 2);
      p = e / (1 + e);
      qf = 1 / (1 + e);
    }
    std::mt19937_64& eng = rng.engine();
    est_.resize(levels_ + 1);
    int64_t node_width = width;
    for (int level = 0; level <= levels_; ++level, node_width /= fanout_) {
      const int64_t nodes = (d + node_width) / node_width;  // covering [0, d]
      std::vector<int64_t> truth(nodes, 0);
      for (int64_t v : x) ++truth[v / node_width];
      auto& e = est_[level];
      e.resize(nodes);
      for (int64_t k = 0; k < nodes; ++k) {
        if (level == 0) {
          e[k] = static_cast<double>(truth[k]);  // the root count n is public
          continue;
        }
        std::binomial_distribution<int64_t> keep(truth[k], p), flip(n_ - truth[k], qf);
        const double reported = static_cast<double>(keep(eng) + flip(eng));
        e[k] = p > qf ? (reported - static_cast<double>(n_) * qf) / (p - qf) : 0.0;
      }
      widths_.push_back(node_width);
    }
  }

  // Estimated number of values <= z.
  double cdf(int64_t z) const {
    if (z < 0) return 0;
    if (z >= d_) return static_cast<double>(n_);
    // Count of [0, z]: greedy decomposition into maximal aligned nodes.
    double total = 0;
    int64_t lo = 0;
    const int64_t hi = z + 1;
    for (int level = 0; level <= levels_ && lo < hi; ++level) {
      const int64_t w = widths_[level];
      while (lo + w <= hi) {
        total += est_[level][lo / w];
        lo += w;
      }
    }
    return total;
  }

  // Smallest z whose estimated CDF reaches q n.
  int64_t quantile(double q) const {
    const double want = q * static_cast<double>(n_);
    int64_t lo = 0, hi = d_;
    while (lo < hi) {
      const int64_t mid = lo + (hi - lo) / 2;
      if (cdf(mid) >= want) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }

  int levels() const { return levels_; }

 private:
  int64_t d_;
  int fanout_;
  int64_t n_;
  int levels_ = 0;
  std::vector<int64_t> widths_;
  std::vector<std::vector<double>> est_;
};

inline BaselineResult baseline_ldp_hierarchical(const std::vector<int64_t>& x,
                                                const std::vector<double>& q, double epsilon,
                                                int64_t d, Rng& rng, LdpOptions opt = {}) {
  const LdpHierarchy h(x, epsilon, d, rng, opt);
  BaselineResult r;
  for (double qi : q) r.estimates.push_back(h.quantile(qi));
  r.budget.push_back({"per-user reports", epsilon});
  return r;
}

}  // namespace piquant::bench
