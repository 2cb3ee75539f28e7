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

#include "piquant/bucketing.hpp"

namespace piquant {
namespace {

std::vector<int64_t> uniform_data(int64_t n, int64_t d, uint64_t seed) {
  Rng rng(seed);
  std::vector<int64_t> v;
  for (int64_t i = 0; i < n; ++i) v.push_back(static_cast<int64_t>(rng.below(d + 1)));
  return v;
}

std::vector<int64_t> even_boundaries(int64_t m, int64_t d) {
  std::vector<int64_t> b;
  for (int64_t i = 1; i <= 2 * m; ++i) b.push_back(i * d / (2 * m + 1));
  return b;
}

TEST(BucketizeTest, Examples) {
  const auto b = bucketize({1, 2, 5, 9}, {4, 8});
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0], (std::vector<int64_t>{1, 2}));
  EXPECT_EQ(b[1], (std::vector<int64_t>{5}));
  EXPECT_EQ(b[2], (std::vector<int64_t>{9}));
  const auto edge = bucketize({4, 8}, {4, 8});
  EXPECT_TRUE(edge[0].empty());
  EXPECT_EQ(edge[1], (std::vector<int64_t>{4}));
  EXPECT_EQ(edge[2], (std::vector<int64_t>{8}));
  for (const auto& bucket : bucketize({}, {4, 8})) EXPECT_TRUE(bucket.empty());
  EXPECT_THROW(bucketize({1}, {8, 4}), UnsortedBoundaries);
}

TEST(BucketingTest, ZeroNoiseCounts) {
  const auto x = uniform_data(1000, 1000000, 1);
  const auto b = even_boundaries(3, 1000000);
  auto adv = AdversaryHook::passive();
  auto streams = Streams::from_seed(2);
  const auto r = private_bucketing(x, b, 1.0, 1e-6, adv, streams, {true});
  const auto buckets = bucketize(x, b);
  ASSERT_EQ(r.hist.cnt.size(), 7u);
  for (size_t i = 0; i < buckets.size(); ++i) {
    EXPECT_EQ(r.gamma[i], 2 * r.hist.tau);
    EXPECT_EQ(r.gamma_adv[i], 2 * r.hist.tau);
    EXPECT_EQ(r.hist.cnt[i], static_cast<int64_t>(buckets[i].size()) + 4 * r.hist.tau);
  }
  EXPECT_EQ(r.leaked_gamma_sum, 7 * 2 * r.hist.tau);
}

TEST(BucketingTest, TauFormula) {
  EXPECT_EQ(bucketing_tau(1.0, 1e-6, 8), static_cast<int64_t>(std::ceil(6.0 * 3.0 * std::log(16.0 / 1e-6))));
  EXPECT_EQ(bucketing_tau(2.0, 1e-6, 1), static_cast<int64_t>(std::ceil(3.0 * std::log(2.0 / 1e-6))));
}

TEST(BucketingTest, AllZeroAdversaryNoiseHalts) {
  const auto x = uniform_data(500, 1000000, 3);
  for (int64_t m : {1, 2, 8}) {
    auto adv = AdversaryHook::active(
        [](std::string_view, size_t len) { return std::optional(std::vector<int64_t>(len, 0)); });
    auto streams = Streams::from_seed(4);
    EXPECT_THROW(private_bucketing(x, even_boundaries(m, 1000000), 1.0, 1e-6, adv, streams), Halt);
  }
}

TEST(BucketingTest, NoiseCheckArithmetic) {
  const int64_t tau = 10;
  EXPECT_TRUE(bucketing_noise_ok({20, 20, 20}, tau));
  EXPECT_TRUE(bucketing_noise_ok({30, 10, 20}, tau));
  EXPECT_FALSE(bucketing_noise_ok({31, 10, 20}, tau));  // prefix 31 vs 20
  EXPECT_FALSE(bucketing_noise_ok({20, 41, 0}, tau));   // above 4 tau
  EXPECT_FALSE(bucketing_noise_ok({20, -1, 20}, tau));
}

TEST(BucketingTest, HonestRunsBandAndRange) {
  const int64_t m = 8;
  const double eps = 1.0, beta = 0.05;
  const auto x = uniform_data(10000, 1000000, 5);
  const auto b = even_boundaries(m, 1000000);
  const double band = bucketing_prefix_band(eps, m, beta);
  int halts = 0, runs = 0;
  for (int s = 0; s < 1000; ++s) {
    auto adv = AdversaryHook::passive();
    auto streams = Streams::from_seed(100 + s);
    try {
      const auto r = private_bucketing(x, b, eps, 1e-6, adv, streams);
      ++runs;
      int64_t pc = 0, pb = 0;
      for (size_t j = 0; j < r.sizes.size(); ++j) {
        pc += r.hist.cnt[j];
        pb += r.sizes[j];
        EXPECT_LE(std::llabs(pc - 4 * r.hist.tau * static_cast<int64_t>(j + 1) - pb), band);
        EXPECT_GE(r.hist.cnt[j] - r.sizes[j], 0);
        EXPECT_LE(r.hist.cnt[j] - r.sizes[j], 8 * r.hist.tau);
      }
    } catch (const Halt&) {
      ++halts;
    }
  }
  EXPECT_LE(halts / 1000.0, 2 * beta);
  EXPECT_GT(runs, 0);
}

TEST(BucketingTest, HaltIndependentOfData) {
  const auto x1 = uniform_data(2000, 1000000, 6);
  const auto x2 = uniform_data(3000, 1000000, 7);
  const auto b = even_boundaries(2, 1000000);
  const int64_t tau = bucketing_tau(1.0, 1e-6, 2);
  Rng pick(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int64_t> g(5);
    for (auto& v : g) v = 2 * tau + static_cast<int64_t>(pick.below(2 * tau + 1)) - tau;
    auto run = [&](const std::vector<int64_t>& x) {
      auto adv = AdversaryHook::active([&](std::string_view, size_t) { return std::optional(g); });
      auto streams = Streams::from_seed(trial);
      try {
        private_bucketing(x, b, 1.0, 1e-6, adv, streams);
        return false;
      } catch (const Halt&) {
        return true;
      }
    };
    EXPECT_EQ(run(x1), run(x2));
    EXPECT_EQ(run(x1), !bucketing_noise_ok(g, tau));
  }
}

TEST(BucketingTest, LeakIsHonestNoiseSum) {
  const auto x = uniform_data(1000, 1000000, 9);
  auto adv = AdversaryHook::passive();
  auto streams = Streams::from_seed(10);
  const auto r = private_bucketing(x, even_boundaries(4, 1000000), 1.0, 1e-6, adv, streams);
  int64_t s = 0;
  for (int64_t g : r.gamma) s += g;
  EXPECT_EQ(r.leaked_gamma_sum, s);
}

}  // namespace
}  // namespace piquant
