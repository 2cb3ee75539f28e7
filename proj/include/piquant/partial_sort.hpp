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
#include <utility>
#include <vector>

#include "piquant/random.hpp"

namespace piquant {

// Half-open range of 0-based ranks [lo, hi).
struct RankRange {
  int64_t lo;
  int64_t hi;
};

// Sorts and merges overlapping or touching ranges, clipping to [0, n).
inline std::vector<RankRange> normalize_ranges(std::vector<RankRange> r, int64_t n) {
  for (auto& x : r) {
    x.lo = std::clamp(x.lo, int64_t(0), n);
    x.hi = std::clamp(x.hi, int64_t(0), n);
  }
  r.erase(std::remove_if(r.begin(), r.end(), [](const RankRange& x) { return x.hi <= x.lo; }),
          r.end());
  std::sort(r.begin(), r.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
  std::vector<RankRange> out;
  for (const auto& x : r) {
    if (!out.empty() && x.lo <= out.back().hi) out.back().hi = std::max(out.back().hi, x.hi);
    else out.push_back(x);
  }
  return out;
}

// Quicksort that abandons any subinstance containing no required rank. On
// return every required rank holds its sorted element, and every abandoned
// block holds exactly the elements of its ranks. `less` must be a strict
// total order on the elements. Returns the number of comparisons; the number
// of partition steps goes to `partitions` when given.
template <class T, class Less>
uint64_t partial_quicksort(std::vector<T>& a, const std::vector<RankRange>& required, Rng& rng,
                           Less&& less, uint64_t* partitions = nullptr) {
  const int64_t n = static_cast<int64_t>(a.size());
  std::vector<int64_t> pre(n + 1, 0);
  {
    std::vector<int64_t> mark(n + 1, 0);
    for (const auto& r : normalize_ranges(required, n)) {
      mark[r.lo] += 1;
      mark[r.hi] -= 1;
    }
    int64_t run = 0;
    for (int64_t i = 0; i < n; ++i) {
      run += mark[i];
      pre[i + 1] = pre[i] + (run > 0 ? 1 : 0);
    }
  }
  uint64_t comparisons = 0;
  std::vector<std::pair<int64_t, int64_t>> stack{{0, n}};
  while (!stack.empty()) {
    auto [l, r] = stack.back();
    stack.pop_back();
    if (r - l <= 1 || pre[r] == pre[l]) continue;
    const int64_t p = l + static_cast<int64_t>(rng.below(static_cast<uint64_t>(r - l)));
    if (partitions) ++*partitions;
    std::swap(a[p], a[r - 1]);
    int64_t i = l;
    for (int64_t j = l; j < r - 1; ++j) {
      ++comparisons;
      if (less(a[j], a[r - 1])) std::swap(a[i++], a[j]);
    }
    std::swap(a[i], a[r - 1]);
    stack.emplace_back(i + 1, r);
    stack.emplace_back(l, i);
  }
  return comparisons;
}

template <class T>
uint64_t partial_quicksort(std::vector<T>& a, const std::vector<RankRange>& required, Rng& rng) {
  return partial_quicksort(a, required, rng, std::less<T>());
}

// Plain randomized quicksort with the same pivot rule.
template <class T, class Less>
uint64_t quicksort_count(std::vector<T>& a, Rng& rng, Less&& less) {
  return partial_quicksort(a, {{0, static_cast<int64_t>(a.size())}}, rng,
                           std::forward<Less>(less));
}

// alpha (5 + ln(n k / alpha)) + 4 beta ln n, alpha = ranks without order
// requirements, beta = n - alpha, k = number of maximal intervals of those
// unordered ranks.
inline double partial_sort_bound(int64_t n, int64_t k, int64_t alpha) {
  const double beta = static_cast<double>(n - alpha);
  const double first =
      alpha > 0 ? alpha * (5.0 + std::log(static_cast<double>(n) * k / alpha)) : 0.0;
  return first + 4.0 * beta * std::log(static_cast<double>(n));
}

// Same bound, read off the required ranges: the unordered ranks are their
// complement in [0, n).
inline double partial_sort_bound(int64_t n, const std::vector<RankRange>& required) {
  int64_t alpha = 0, k = 0, at = 0;
  for (const auto& r : normalize_ranges(required, n)) {
    if (r.lo > at) alpha += r.lo - at, ++k;
    at = r.hi;
  }
  if (n > at) alpha += n - at, ++k;
  return partial_sort_bound(n, k, alpha);
}

}  // namespace piquant
