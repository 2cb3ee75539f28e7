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
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace piquant {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seeded generator whose output depends only on (seed, label), never on the
// standard library's distribution implementations.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed, std::string_view label = {})
      : eng_(splitmix64(seed ^ fnv1a(label))) {}

  uint64_t next() { return eng_(); }

  // Uniform in the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform l-bit integer, 1 <= l <= 64.
  uint64_t bits(int l) { return l >= 64 ? next() : next() >> (64 - l); }

  // Uniform in [0, n), n > 0.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    const double u = uniform01(), v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }

  Rng split(std::string_view label) { return Rng(next(), label); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Named randomness streams shared by the ideal functionalities and the
// two-server simulation. Keeping the draws on separate streams is what lets
// both worlds produce the same outputs from the same seed.
struct Streams {
  Rng sample;  // subsampling (trusted-environment Rand)
  Rng em;      // exponential-mechanism draws (trusted-environment Rand)
  Rng party0;  // honest server S0 noise
  Rng party1;  // S1 noise (the adversary in the ideal world)
  Rng sort;    // pivots and shuffles; never affects outputs

  static Streams from_seed(uint64_t seed) {
    return Streams{Rng(seed, "sample"), Rng(seed, "em"), Rng(seed, "party0"),
                   Rng(seed, "party1"), Rng(seed, "sort")};
  }
};

}  // namespace piquant
