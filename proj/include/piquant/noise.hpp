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
#include <functional>
#include <stdexcept>
#include <vector>

#include "piquant/random.hpp"

namespace piquant {

// Number of levels of the dyadic tree over m leaves; also the number of
// nodes any single position touches.
inline int tree_depth(int64_t m) {
  int t = 0;
  while ((int64_t(1) << t) <= m) ++t;  // ceil(log2(m + 1))
  return t;
}

// The log(m) factor in the accuracy formulas, floored at 1 so that m = 1
// does not zero out the bounds.
inline double log_m(int64_t m) { return std::max(1.0, std::log2(static_cast<double>(m))); }

inline int64_t round_half_even(double x) { return static_cast<int64_t>(std::nearbyint(x)); }

// Inverse-transform Laplace(0, b) from a uniform in (0, 1).
inline double laplace_from_uniform(double b, double u) {
  const double c = u - 0.5;
  if (c == 0.0) return 0.0;
  return -b * (c < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(c));
}

struct NoiseOptions {
  bool zero_noise = false;  // test mode: every Laplace draw is 0
};

// One uniform is consumed per draw even in zero-noise mode so that stream
// positions do not depend on the mode.
inline int64_t laplace_int(double b, Rng& rng, NoiseOptions opt = {}) {
  if (!(b > 0)) throw std::invalid_argument("laplace scale must be positive");
  const double u = rng.uniform01();
  if (opt.zero_noise) return 0;
  return round_half_even(laplace_from_uniform(b, u));
}

struct CCParams {
  double epsilon;
  int64_t m;
  int depth() const { return tree_depth(m); }
};

struct TreeNode {
  int level;      // node covers [index * 2^level, (index + 1) * 2^level)
  int64_t index;
  int64_t noise;
};

struct CCSample {
  // eta[j] is the noise on the prefix [0, j + 1).
  std::vector<int64_t> eta;
  std::vector<TreeNode> node_noises;
};

// Minimal dyadic decomposition of [0, i) as (level, index) pairs.
inline std::vector<std::pair<int, int64_t>> dyadic_prefix(int64_t i) {
  std::vector<std::pair<int, int64_t>> out;
  int64_t start = 0;
  for (int level = 62; level >= 0; --level) {
    const int64_t len = int64_t(1) << level;
    if (i & len) {
      out.emplace_back(level, start >> level);
      start += len;
    }
  }
  return out;
}

// Binary-tree continual-counting noise with a caller-chosen node sampler.
// Only nodes that appear in some prefix decomposition are materialized.
inline CCSample sample_cc_with(int64_t m, const std::function<int64_t(int, int64_t)>& node) {
  if (m < 1) throw std::invalid_argument("CC length must be >= 1");
  CCSample s;
  const int depth = tree_depth(m);
  std::vector<std::vector<int64_t>> value(depth);
  for (int level = 0; level < depth; ++level) {
    const int64_t count = m >> level;
    value[level].resize(count);
    for (int64_t a = 0; a < count; ++a) {
      value[level][a] = node(level, a);
      s.node_noises.push_back({level, a, value[level][a]});
    }
  }
  s.eta.resize(m);
  for (int64_t i = 1; i <= m; ++i) {
    int64_t sum = 0;
    for (auto [level, a] : dyadic_prefix(i)) sum += value[level][a];
    s.eta[i - 1] = sum;
  }
  return s;
}

inline CCSample sample_cc(const CCParams& p, Rng& rng, NoiseOptions opt = {}) {
  if (!(p.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  const double scale = 2.0 * p.depth() / p.epsilon;
  return sample_cc_with(p.m, [&](int, int64_t) { return laplace_int(scale, rng, opt); });
}

// Tail radius of CC at failure probability beta.
inline double cc_tail_bound(double epsilon, int64_t m, double beta) {
  return 6.0 / epsilon * log_m(m) * std::log(2.0 * m / beta);
}

// w/2 + CC_{epsilon}(m), clamped coordinate-wise into [0, w]. Callers pass
// the already-halved budget.
inline std::vector<int64_t> sample_cc_shifted(const CCParams& p, int64_t w, Rng& rng,
                                              NoiseOptions opt = {}) {
  if (w < 2 || w % 2) throw std::invalid_argument("w must be even and >= 2");
  const CCSample s = sample_cc(p, rng, opt);
  std::vector<int64_t> out(p.m);
  for (int64_t i = 0; i < p.m; ++i) out[i] = std::clamp(w / 2 + s.eta[i], int64_t(0), w);
  return out;
}

struct CDSample {
  std::vector<int64_t> nu;
  std::vector<int64_t> eta;  // the truncated prefix noise
  int64_t tau = 0;           // truncation radius
  int64_t shift = 0;         // 2 * tau
};

// Consecutive differences of truncated CC noise with an explicit radius tau:
// nu[i] = 2 tau + eta[i] - eta[i-1], so every coordinate lies in [0, 4 tau].
inline CDSample sample_cd_tau(double epsilon, int64_t tau, int64_t m, Rng& rng,
                              NoiseOptions opt = {}) {
  CDSample out;
  out.tau = tau;
  out.shift = 2 * tau;
  const CCSample cc = sample_cc({epsilon, m}, rng, opt);
  out.eta.resize(m);
  out.nu.resize(m);
  int64_t prev = 0;
  for (int64_t i = 0; i < m; ++i) {
    out.eta[i] = std::clamp(cc.eta[i], -tau, tau);
    out.nu[i] = out.shift + out.eta[i] - prev;
    prev = out.eta[i];
  }
  return out;
}

inline int64_t cd_tau(double epsilon, double delta, int64_t m) {
  return static_cast<int64_t>(std::floor(6.0 * log_m(m) * std::log(2.0 * m / delta) / epsilon));
}

inline CDSample sample_cd(double epsilon, double delta, int64_t m, Rng& rng,
                          NoiseOptions opt = {}) {
  if (m < 1 || !(epsilon > 0) || !(delta > 0)) throw std::invalid_argument("bad CD parameters");
  return sample_cd_tau(epsilon, cd_tau(epsilon, delta, m), m, rng, opt);
}

}  // namespace piquant
