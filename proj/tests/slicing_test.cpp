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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "piquant/partial_sort.hpp"
#include "piquant/slicing.hpp"

namespace piquant {
namespace {

constexpr int64_t kD = 1000000000;

std::vector<int64_t> distinct_uniform(int64_t n, int64_t d, uint64_t seed) {
  Rng rng(seed);
  std::vector<int64_t> v;
  for (int64_t i = 0; i < n; ++i) v.push_back(static_cast<int64_t>(rng.below(d + 1)));
  v = uniquify_in_domain(v, d);
  rng.shuffle(v);
  return v;
}

TEST(PartialSortTest, EmptyComplementIsFullSort) {
  Rng rng(1);
  std::vector<int64_t> a = distinct_uniform(500, kD, 2), b = a;
  partial_quicksort(a, {{0, 500}}, rng);
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(PartialSortTest, SingleFullIntervalMatchesPlainQuicksort) {
  const auto base = distinct_uniform(700, kD, 3);
  std::vector<int64_t> a = base, b = base;
  Rng r1(4), r2(4);
  const uint64_t c1 = partial_quicksort(a, {{0, 700}}, r1);
  const uint64_t c2 = quicksort_count(b, r2, std::less<int64_t>());
  EXPECT_EQ(c1, c2);
  EXPECT_EQ(a, b);
}

TEST(PartialSortTest, RequiredRanksMatchFullSortOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t n = 1 + static_cast<int64_t>(rng.below(1000));
    auto a = distinct_uniform(n, kD, 100 + trial);
    auto oracle = a;
    std::sort(oracle.begin(), oracle.end());
    std::vector<RankRange> req;
    const int k = static_cast<int>(rng.below(5));
    for (int i = 0; i < k; ++i) {
      const int64_t lo = static_cast<int64_t>(rng.below(n));
      req.push_back({lo, lo + 1 + static_cast<int64_t>(rng.below(std::max<int64_t>(1, n / 8)))});
    }
    partial_quicksort(a, req, rng);
    std::vector<char> required(n, 0);
    for (const auto& r : normalize_ranges(req, n))
      for (int64_t i = r.lo; i < r.hi; ++i) required[i] = 1;
    for (int64_t i = 0; i < n; ++i)
      if (required[i]) {
        EXPECT_EQ(a[i], oracle[i]);
      }
    // Every maximal unordered block holds exactly its ranks' elements.
    int64_t i = 0;
    while (i < n) {
      int64_t j = i;
      while (j < n && required[j] == required[i]) ++j;
      std::vector<int64_t> got(a.begin() + i, a.begin() + j), want(oracle.begin() + i, oracle.begin() + j);
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, want);
      i = j;
    }
  }
}

TEST(PartialSortTest, MeanComparisonsWithinBound) {
  const int64_t n = 10000;
  std::vector<RankRange> req;
  for (int i = 0; i < 5; ++i) req.push_back({1000 + i * 2000, 1100 + i * 2000});
  double total = 0;
  for (int seed = 0; seed < 200; ++seed) {
    auto a = distinct_uniform(n, kD, 1000 + seed);
    Rng rng(seed);
    total += static_cast<double>(partial_quicksort(a, req, rng));
  }
  EXPECT_LE(total / 200, partial_sort_bound(n, req));
}

TEST(PartialSortTest, BoundCountsUnorderedIntervals) {
  // Unordered ranks [0, 10), [20, 90), [95, 100): alpha = 85, k = 3.
  EXPECT_DOUBLE_EQ(partial_sort_bound(100, {{10, 20}, {90, 95}}), partial_sort_bound(100, 3, 85));
  EXPECT_DOUBLE_EQ(partial_sort_bound(100, {{0, 100}}), 4.0 * 100 * std::log(100.0));
}

// Many short required runs spread thinly: the mean count sits above the
// stated bound (about 451k against 422k at this layout, also with an
// independent rank-level simulation). Recorded, not asserted away.
TEST(PartialSortTest, SparseShortRunsExceedTheStatedBound) {
  const int64_t n = 50000;
  std::vector<RankRange> req;
  for (int i = 0; i < 20; ++i) req.push_back({i * 2500, i * 2500 + 30});
  double total = 0;
  for (int seed = 0; seed < 50; ++seed) {
    auto a = distinct_uniform(n, kD, 4000 + seed);
    Rng rng(seed);
    total += static_cast<double>(partial_quicksort(a, req, rng));
  }
  EXPECT_GT(total / 50, partial_sort_bound(n, req));
}

TEST(SlicingParamsTest, IntegerAndEven) {
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 4, kD);
  EXPECT_EQ(p.h, static_cast<int64_t>(std::ceil(12.0 * std::log(4.0 * (kD + 1) / 0.05))));
  EXPECT_EQ(p.w % 2, 0);
  EXPECT_GE(p.w, 24.0 * 2.0 * std::log(8.0 / 1e-6));
}

TEST(SliceWindowTest, CentredWithSentinelsAtTheEdges) {
  const auto mid = slice_window(10000, 5000, 100, 50);
  EXPECT_EQ(mid.base, 4900);
  EXPECT_EQ(mid.target, 100);
  EXPECT_EQ(mid.ext_lo, 4850);
  EXPECT_EQ(mid.ext_hi, 5150);
  const auto low = slice_window(10000, 10, 100, 50);
  EXPECT_EQ(low.ext_lo, 0);
  EXPECT_EQ(low.base, -90);
  EXPECT_EQ(low.target, 100);
  const auto high = slice_window(10000, 9990, 100, 50);
  EXPECT_EQ(high.ext_hi, 10000);
  const std::vector<int64_t> s = {5, 6, 7};
  EXPECT_EQ(padded_range(s, -2, 7, 99), (std::vector<int64_t>{0, 0, 5, 6, 7, 99, 99}));
}

TEST(SlicingEmTest, ExtremeQuantilesStayAccurate) {
  const auto x = distinct_uniform(3000, kD, 18);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 2, kD);
  for (int run = 0; run < 20; ++run) {
    auto adv = AdversaryHook::passive();
    auto streams = Streams::from_seed(300 + run);
    SlicingOptions opt;
    opt.check_gap = false;
    const auto r = slicing_em(x, {0.01, 0.99}, p, kD, adv, streams, opt);
    EXPECT_LE(quantile_error(sorted, 0.01, r.estimates[0]), p.error_bound());
    EXPECT_LE(quantile_error(sorted, 0.99, r.estimates[1]), p.error_bound());
  }
}

TEST(SlicingEmTest, ZeroNoiseSlicesAreCentred) {
  const auto x = distinct_uniform(10000, kD, 6);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> q = {0.125, 0.375, 0.625, 0.875};
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 4, kD);
  auto adv = AdversaryHook::passive();
  auto streams = Streams::from_seed(7);
  const auto r = slicing_em(x, q, p, kD, adv, streams, {true, {true}});
  for (size_t i = 0; i < q.size(); ++i) {
    EXPECT_EQ(r.shift[i], 0);
    const int64_t rank = target_rank(q[i], x.size());
    const std::vector<int64_t> want(sorted.begin() + rank - p.h, sorted.begin() + rank + p.h);
    EXPECT_EQ(r.slices[i], want);
    EXPECT_LE(quantile_error(sorted, q[i], r.estimates[i]), p.h);
  }
}

TEST(SlicingEmTest, ActiveAdversaryOutOfRangeHalts) {
  const auto x = distinct_uniform(10000, kD, 8);
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 4, kD);
  const std::vector<double> q = {0.125, 0.375, 0.625, 0.875};
  for (int64_t bad : {p.w + 1, int64_t(-1)}) {
    auto adv = AdversaryHook::active([&](std::string_view, size_t len) {
      std::vector<int64_t> v(len, p.w / 2);
      v[0] = bad;
      return std::optional(v);
    });
    auto streams = Streams::from_seed(9);
    EXPECT_THROW(slicing_em(x, q, p, kD, adv, streams), Halt);
  }
  auto abort = AdversaryHook::active([](std::string_view, size_t) { return std::nullopt; });
  auto streams = Streams::from_seed(9);
  EXPECT_THROW(slicing_em(x, q, p, kD, abort, streams), Halt);
}

TEST(SlicingEmTest, GapViolationIsDistinctFromHalt) {
  const auto x = distinct_uniform(10000, kD, 10);
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 4, kD);
  auto adv = AdversaryHook::passive();
  auto streams = Streams::from_seed(11);
  EXPECT_THROW(slicing_em(x, {0.2, 0.4, 0.6, 0.8}, p, kD, adv, streams), GapViolation);
}

TEST(SlicingEmTest, ShiftSemanticsWithFixedAdversaryNoise) {
  const auto x = distinct_uniform(20000, kD, 12);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> q = {0.25, 0.75};
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 2, kD);
  Rng pick(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int64_t> supplied = {static_cast<int64_t>(pick.below(p.w + 1)),
                                     static_cast<int64_t>(pick.below(p.w + 1))};
    auto adv = AdversaryHook::active([&](std::string_view, size_t) { return std::optional(supplied); });
    auto streams = Streams::from_seed(100 + trial);
    const auto r = slicing_em(x, q, p, kD, adv, streams);
    for (size_t i = 0; i < q.size(); ++i) {
      const int64_t delta = r.eta[i] - supplied[i];
      const int64_t c = target_rank(q[i], x.size()) - p.h;
      const std::vector<int64_t> want(sorted.begin() + c + delta, sorted.begin() + c + delta + 2 * p.h);
      EXPECT_EQ(r.slices[i], want);
    }
  }
}

TEST(SlicingEmTest, HaltDependsOnlyOnAdversaryNoise) {
  const auto x1 = distinct_uniform(10000, kD, 14);
  const auto x2 = distinct_uniform(10000, kD, 15);
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 2, kD);
  Rng pick(16);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int64_t> v = {static_cast<int64_t>(pick.below(p.w + 20)) - 10,
                              static_cast<int64_t>(pick.below(p.w + 20)) - 10};
    auto run = [&](const std::vector<int64_t>& x) {
      auto adv = AdversaryHook::active([&](std::string_view, size_t) { return std::optional(v); });
      auto streams = Streams::from_seed(trial);
      try {
        slicing_em(x, {0.25, 0.75}, p, kD, adv, streams);
        return false;
      } catch (const Halt&) {
        return true;
      }
    };
    EXPECT_EQ(run(x1), run(x2));
  }
}

TEST(SlicingEmTest, UtilitySmoke) {
  const auto x = distinct_uniform(10000, kD, 17);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> q = {0.125, 0.375, 0.625, 0.875};
  const auto p = SlicingParams::make(1.0, 1e-6, 0.05, 4, kD);
  int good = 0;
  for (int run = 0; run < 20; ++run) {
    auto adv = AdversaryHook::passive();
    auto streams = Streams::from_seed(200 + run);
    const auto r = slicing_em(x, q, p, kD, adv, streams);
    bool ok = true;
    for (size_t i = 0; i < q.size(); ++i)
      ok &= quantile_error(sorted, q[i], r.estimates[i]) <= p.error_bound();
    good += ok;
  }
  EXPECT_GE(good, 18);
}

}  // namespace
}  // namespace piquant
