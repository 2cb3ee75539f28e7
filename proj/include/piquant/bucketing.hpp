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
#include <stdexcept>
#include <vector>

#include "piquant/noise.hpp"
#include "piquant/random.hpp"
#include "piquant/slicing.hpp"

namespace piquant {

struct UnsortedBoundaries : std::invalid_argument {
  UnsortedBoundaries() : std::invalid_argument("bucket boundaries must be sorted") {}
};

// Bucket index of x given sorted interior boundaries: the number of
// boundaries <= x. Buckets are [v_{i-1}, v_i) with v_0 = 0 and the last one
// closed at d.
inline size_t bucket_of(const std::vector<int64_t>& boundaries, int64_t x) {
  return std::upper_bound(boundaries.begin(), boundaries.end(), x) - boundaries.begin();
}

inline std::vector<std::vector<int64_t>> bucketize(const std::vector<int64_t>& x,
                                                   const std::vector<int64_t>& boundaries) {
  if (!std::is_sorted(boundaries.begin(), boundaries.end())) throw UnsortedBoundaries();
  std::vector<std::vector<int64_t>> b(boundaries.size() + 1);
  for (int64_t v : x) b[bucket_of(boundaries, v)].push_back(v);
  return b;
}

// tau = ceil((6 / eps) log(m) ln(2m / delta)) for m bounding pairs.
inline int64_t bucketing_tau(double epsilon, double delta, int64_t m) {
  return static_cast<int64_t>(std::ceil(6.0 / epsilon * log_m(m) * std::log(2.0 * m / delta)));
}

struct BucketHistogram {
  std::vector<int64_t> cnt;
  int64_t tau = 0;
  std::vector<int64_t> boundaries;  // the 2m interior boundaries
};

struct BucketingResult {
  BucketHistogram hist;
  std::vector<int64_t> sizes;      // |B_i|
  std::vector<int64_t> gamma;      // honest CD noise
  std::vector<int64_t> gamma_adv;  // adversary CD noise
  int64_t leaked_gamma_sum = 0;    // sent to the adversary
};

// Halting rule on the adversary's noise; depends on nothing else.
inline bool bucketing_noise_ok(const std::vector<int64_t>& g, int64_t tau) {
  int64_t prefix = 0;
  for (size_t i = 0; i < g.size(); ++i) {
    prefix += g[i];
    const int64_t expect = 2 * tau * static_cast<int64_t>(i + 1);
    if (std::llabs(expect - prefix) > tau || g[i] < 0 || g[i] > 4 * tau) return false;
  }
  return true;
}

// F_Bucketing over 2m + 1 buckets.
inline BucketingResult private_bucketing(const std::vector<int64_t>& x,
                                         const std::vector<int64_t>& boundaries, double epsilon,
                                         double delta, AdversaryHook& adv, Streams& streams,
                                         NoiseOptions noise = {}) {
  if (boundaries.size() % 2 != 0 || boundaries.empty())
    throw std::invalid_argument("bucketing needs 2m boundaries");
  const int64_t m = static_cast<int64_t>(boundaries.size() / 2);
  const int64_t len = 2 * m + 1;
  BucketingResult res;
  res.hist.boundaries = boundaries;
  res.hist.tau = bucketing_tau(epsilon, delta, m);
  const auto buckets = bucketize(x, boundaries);

  res.gamma = sample_cd_tau(epsilon, res.hist.tau, len, streams.party0, noise).nu;
  for (int64_t g : res.gamma) res.leaked_gamma_sum += g;
  res.gamma_adv = adversary_vector(adv, "bucketing", len, [&] {
    return sample_cd_tau(epsilon, res.hist.tau, len, streams.party1, noise).nu;
  });
  if (!bucketing_noise_ok(res.gamma_adv, res.hist.tau)) throw Halt("bucketing");

  for (int64_t i = 0; i < len; ++i) {
    res.sizes.push_back(static_cast<int64_t>(buckets[i].size()));
    res.hist.cnt.push_back(res.sizes.back() + res.gamma[i] + res.gamma_adv[i]);
  }
  return res;
}

// Prefix accuracy band for the de-biased counts.
inline double bucketing_prefix_band(double epsilon, int64_t m, double beta) {
  return 12.0 / epsilon * log_m(m) * std::log(2.0 * m / beta);
}

}  // namespace piquant
