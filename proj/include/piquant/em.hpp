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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "piquant/dataset.hpp"
#include "piquant/field.hpp"
#include "piquant/random.hpp"

namespace piquant {

struct DegenerateDomain : std::invalid_argument {
  DegenerateDomain() : std::invalid_argument("domain [0, 0] has a single point") {}
};

inline constexpr int kFixedBits = 40;
inline constexpr uint64_t kFixedOne = uint64_t(1) << kFixedBits;

// exp(-(eps/2) * dist) as a 40-bit fixed-point constant; anything below
// 2^-40 becomes 0.
inline uint64_t exp_weight_fixed(double epsilon, int64_t dist) {
  const double w = std::exp(-0.5 * epsilon * static_cast<double>(dist)) * double(kFixedOne);
  return w < 1.0 ? 0 : static_cast<uint64_t>(std::llround(w));
}

struct Interval {
  int64_t lower;
  int64_t length;  // number of integer points
};

// The gaps around sorted points xs inside [0, d]: [0, x0), [x0, x1), ...,
// [x_{L-1}, d]. Together they partition the d + 1 integer points.
inline std::vector<Interval> em_intervals(const std::vector<int64_t>& xs, int64_t d) {
  std::vector<Interval> iv;
  iv.reserve(xs.size() + 1);
  int64_t prev = 0;
  for (int64_t x : xs) {
    iv.push_back({prev, x - prev});
    prev = x;
  }
  iv.push_back({prev, d - prev + 1});
  return iv;
}

inline int64_t rank_distance(size_t k, int64_t target) {
  const int64_t kk = static_cast<int64_t>(k);
  return kk > target ? kk - target : target - kk;
}

struct EmDraw {
  size_t interval = 0;
  int64_t value = 0;
};

// Exponential mechanism over the gaps of a sorted slice. Interval k holds the
// points of rank k, so its utility is -|k - target|. Selection uses 40-bit
// fixed point: u = floor(N * t / 2^40) against the cumulative weights, then a
// uniform offset floor(len * r / 2^40).
inline EmDraw em_sample_rank(const std::vector<int64_t>& xs, int64_t target, double epsilon,
                             int64_t d, Rng& rng) {
  if (d <= 0) throw DegenerateDomain();
  const auto iv = em_intervals(xs, d);
  std::vector<u128> cum(iv.size());
  u128 total = 0;
  for (size_t k = 0; k < iv.size(); ++k) {
    total += u128(exp_weight_fixed(epsilon, rank_distance(k, target))) * u128(iv[k].length);
    cum[k] = total;
  }
  const uint64_t t = rng.bits(kFixedBits);
  const uint64_t r = rng.bits(kFixedBits);
  const u128 u = (total * t) >> kFixedBits;
  size_t j = 0;
  while (!(u < cum[j])) ++j;
  EmDraw out;
  out.interval = j;
  out.value = iv[j].lower + static_cast<int64_t>((u128(iv[j].length) * r) >> kFixedBits);
  return out;
}

// F_EM on a sorted dataset: target rank floor(qn).
inline int64_t ideal_em(const std::vector<int64_t>& sorted, double q, double epsilon, int64_t d,
                        Rng& rng) {
  return em_sample_rank(sorted, target_rank(q, sorted.size()), epsilon, d, rng).value;
}

// Real-valued probability of each point in [0, d] under interval-form EM.
inline std::vector<double> em_point_distribution(const std::vector<int64_t>& xs, int64_t target,
                                                 double epsilon, int64_t d) {
  if (d <= 0) throw DegenerateDomain();
  const auto iv = em_intervals(xs, d);
  long double z = 0;
  for (size_t k = 0; k < iv.size(); ++k)
    z += std::exp(-0.5L * epsilon * rank_distance(k, target)) * iv[k].length;
  std::vector<double> p(d + 1, 0.0);
  for (size_t k = 0; k < iv.size(); ++k) {
    const long double pk = std::exp(-0.5L * epsilon * rank_distance(k, target)) / z;
    for (int64_t x = iv[k].lower; x < iv[k].lower + iv[k].length; ++x) p[x] = double(pk);
  }
  return p;
}

// Exact output distribution of the fixed-point sampler, by counting the
// 40-bit draws that land on each point. Small d only.
inline std::vector<double> em_point_distribution_fixed(const std::vector<int64_t>& xs,
                                                       int64_t target, double epsilon, int64_t d) {
  if (d <= 0) throw DegenerateDomain();
  const auto iv = em_intervals(xs, d);
  std::vector<u128> cum(iv.size());
  u128 total = 0;
  for (size_t k = 0; k < iv.size(); ++k) {
    total += u128(exp_weight_fixed(epsilon, rank_distance(k, target))) * u128(iv[k].length);
    cum[k] = total;
  }
  auto ceil_div = [](u128 a, u128 b) { return (a + b - 1) / b; };
  std::vector<double> p(d + 1, 0.0);
  u128 lo_t = 0;
  for (size_t k = 0; k < iv.size(); ++k) {
    const u128 hi_t = ceil_div(cum[k] << kFixedBits, total);
    const long double pk = static_cast<long double>(hi_t - lo_t) / kFixedOne;
    lo_t = hi_t;
    const u128 len = iv[k].length;
    for (int64_t o = 0; o < iv[k].length; ++o) {
      const u128 a = ceil_div(u128(o) << kFixedBits, len);
      const u128 b = ceil_div(u128(o + 1) << kFixedBits, len);
      p[iv[k].lower + o] = double(pk * static_cast<long double>(b - a) / kFixedOne);
    }
  }
  return p;
}

// Whole-domain EM with utility -|floor(qn) - rank(y)|. Oracle scale only.
inline std::vector<double> brute_force_em_distribution(const std::vector<int64_t>& sorted,
                                                       double q, double epsilon, int64_t d) {
  if (d <= 0) throw DegenerateDomain();
  if (d > 100000) throw std::invalid_argument("brute-force EM is limited to d <= 1e5");
  const int64_t r = target_rank(q, sorted.size());
  std::vector<long double> w(d + 1);
  long double z = 0;
  for (int64_t y = 0; y <= d; ++y) {
    const int64_t err = std::llabs(r - rank_of(sorted, y));
    w[y] = std::exp(-0.5L * epsilon * err);
    z += w[y];
  }
  std::vector<double> p(d + 1);
  for (int64_t y = 0; y <= d; ++y) p[y] = double(w[y] / z);
  return p;
}

inline int64_t brute_force_em(const std::vector<int64_t>& sorted, double q, double epsilon,
                              int64_t d, Rng& rng) {
  const auto p = brute_force_em_distribution(sorted, q, epsilon, d);
  double u = rng.uniform01(), acc = 0;
  for (int64_t y = 0; y <= d; ++y) {
    acc += p[y];
    if (u < acc) return y;
  }
  return d;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (size_t i = 0; i < a.size() && i < b.size(); ++i) s += std::abs((long double)a[i] - b[i]);
  return double(s / 2);
}

}  // namespace piquant
