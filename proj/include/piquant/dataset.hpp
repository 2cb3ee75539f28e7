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
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace piquant {

struct DomainTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Integer values in [0, d].
struct Dataset {
  std::vector<int64_t> values;
  int64_t d = 0;

  size_t n() const { return values.size(); }

  std::vector<int64_t> sorted() const {
    std::vector<int64_t> s = values;
    std::sort(s.begin(), s.end());
    return s;
  }

  bool unique() const {
    auto s = sorted();
    return std::adjacent_find(s.begin(), s.end()) == s.end();
  }
};

// Number of elements <= z in a sorted vector.
inline int64_t rank_of(const std::vector<int64_t>& sorted, int64_t z) {
  return std::upper_bound(sorted.begin(), sorted.end(), z) - sorted.begin();
}

inline int64_t target_rank(double q, size_t n) {
  return static_cast<int64_t>(std::floor(q * static_cast<double>(n)));
}

// |floor(qn) - rank_X(z)|.
inline int64_t quantile_error(const std::vector<int64_t>& sorted, double q, int64_t z) {
  return std::llabs(target_rank(q, sorted.size()) - rank_of(sorted, z));
}

// Makes values distinct by expanding the domain: x -> x * n + (index among
// equal values). The new domain is [0, (d + 1) * n - 1]; order is preserved.
inline Dataset uniquify_expand(const Dataset& x) {
  const int64_t n = static_cast<int64_t>(x.n());
  std::vector<size_t> order(x.n());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x.values[a] < x.values[b]; });
  Dataset out;
  out.d = (x.d + 1) * n - 1;
  out.values.resize(x.n());
  int64_t run = 0;
  for (size_t j = 0; j < order.size(); ++j) {
    if (j > 0 && x.values[order[j]] == x.values[order[j - 1]]) ++run;
    else run = 0;
    out.values[order[j]] = x.values[order[j]] * n + run;
  }
  return out;
}

// Makes values distinct without leaving [0, d] by nudging collisions to the
// nearest free value. Requires n <= d + 1. Returns values in sorted order.
inline std::vector<int64_t> uniquify_in_domain(std::vector<int64_t> v, int64_t d) {
  if (static_cast<int64_t>(v.size()) > d + 1) throw DomainTooSmall("need n <= d + 1");
  std::sort(v.begin(), v.end());
  for (size_t i = 1; i < v.size(); ++i) v[i] = std::max(v[i], v[i - 1] + 1);
  if (!v.empty() && v.back() > d) {
    v.back() = d;
    for (size_t i = v.size() - 1; i-- > 0;) v[i] = std::min(v[i], v[i + 1] - 1);
  }
  return v;
}

}  // namespace piquant
