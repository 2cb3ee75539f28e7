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
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "piquant/bucketing.hpp"
#include "piquant/dataset.hpp"
#include "piquant/noise.hpp"
#include "piquant/random.hpp"
#include "piquant/slicing.hpp"

namespace piquant {

struct EmptyBucket : std::runtime_error {
  EmptyBucket() : std::runtime_error("renormalization bucket is empty") {}
};

struct PipelineParams {
  double epsilon1 = 0.2;
  double epsilon2 = 0.4;
  double epsilon3 = 0.4;
  double delta = 1e-6;
  double beta = 0.05;
  int64_t k = 0;        // subsample size; 0 picks the default
  double debias = 8.0;  // de-bias constant c in q n + c tau i
  NoiseOptions noise;

  double total() const { return epsilon1 + epsilon2 + epsilon3; }
};

// Privacy of epsilon1 after sampling k of n without replacement.
inline double amplified_epsilon(double eps1, int64_t n, int64_t k) {
  const double frac = 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(k));
  return std::log1p(frac * std::expm1(eps1));
}

inline int64_t default_k(int64_t n, int64_t m, int64_t d, double eps1, double beta) {
  const double nm = static_cast<double>(n) * m;
  const double a = std::log(static_cast<double>(d + 1) * m / beta) +
                   log_m(m) * std::log(static_cast<double>(m) / beta);
  const double f = std::max(std::cbrt(std::log(1.0 / beta)),
                            std::sqrt(a / (eps1 * std::cbrt(nm))));
  const double k = std::pow(nm, 2.0 / 3.0) * f;
  return std::clamp<int64_t>(static_cast<int64_t>(std::ceil(k)), 1, n);
}

// Splits a total budget: epsilon1 is the smallest value at which the
// subsample term stops dominating k, charged at its amplified value; the
// rest is halved between epsilon2 and epsilon3.
inline PipelineParams default_split(double total, int64_t n, int64_t m, int64_t d,
                                    double delta = 1e-6, double beta = 0.05) {
  const double nm = static_cast<double>(n) * m;
  const double a = std::log(static_cast<double>(d + 1) * m / beta) +
                   log_m(m) * std::log(static_cast<double>(m) / beta);
  const int64_t k = default_k(n, m, d, 1e9, beta);
  double eps1 = a / (std::cbrt(nm) * std::pow(std::log(1.0 / beta), 2.0 / 3.0));
  if (amplified_epsilon(eps1, n, k) > total / 3) {
    double lo = 0, hi = eps1;
    for (int it = 0; it < 200; ++it) {
      const double mid = (lo + hi) / 2;
      (amplified_epsilon(mid, n, k) > total / 3 ? hi : lo) = mid;
    }
    eps1 = lo;
  }
  PipelineParams p;
  p.epsilon1 = eps1;
  p.epsilon2 = p.epsilon3 = (total - amplified_epsilon(eps1, n, k)) / 2;
  p.delta = delta;
  p.beta = beta;
  return p;
}

struct DerivedParams {
  int64_t k = 0;
  double alpha1 = 0, alpha2 = 0, alpha = 0;
  double merge_threshold = 0;
};

inline DerivedParams derive(const PipelineParams& p, int64_t n, int64_t m, int64_t d) {
  DerivedParams r;
  r.k = p.k > 0 ? std::min(p.k, n) : default_k(n, m, d, p.epsilon1, p.beta);
  const double kd = static_cast<double>(r.k);
  r.alpha1 = 12.0 * std::log(static_cast<double>(d + 1) * m / p.beta) / (kd * p.epsilon1) +
             24.0 * log_m(m) * std::log(2.0 * m / p.beta) / (kd * p.epsilon1);
  r.alpha2 = std::sqrt(std::log(2.0 / p.beta) / (2.0 * kd));
  r.alpha = r.alpha1 + r.alpha2;
  r.merge_threshold = 4 * r.alpha1 + 2 * r.alpha2;
  return r;
}

struct QuantileGroup {
  std::vector<size_t> members;  // indices into the sorted quantile vector
  double lo = 0;                // min - alpha
  double hi = 1;                // max + alpha
};

struct QuantilePartition {
  std::vector<QuantileGroup> groups;
};

// Single-linkage merge: neighbours closer than 4 alpha1 + 2 alpha2 share a
// group. Bounds are reported unclamped; callers treat <= 0 and >= 1 as the
// domain ends.
inline QuantilePartition merge_quantiles(const std::vector<double>& q, double alpha1,
                                         double alpha2) {
  const double thr = 4 * alpha1 + 2 * alpha2;
  const double alpha = alpha1 + alpha2;
  QuantilePartition part;
  for (size_t i = 0; i < q.size(); ++i) {
    if (i > 0 && q[i] < q[i - 1]) throw std::invalid_argument("quantiles must be sorted");
    if (i == 0 || q[i] - q[i - 1] >= thr) part.groups.emplace_back();
    part.groups.back().members.push_back(i);
  }
  for (auto& g : part.groups) {
    g.lo = q[g.members.front()] - alpha;
    g.hi = q[g.members.back()] + alpha;
  }
  return part;
}

// q_hat = clamp((q n + c tau i - sum_{j <= 2i-1} cnt_j) / cnt_{2i}, 0, 1) for
// 1-based group index i.
inline double renormalize(double q, size_t group, const std::vector<int64_t>& cnt, int64_t n,
                          int64_t tau, double debias = 8.0) {
  const size_t inner = 2 * group - 1;  // 0-based index of bucket 2i
  if (cnt.at(inner) <= 0) throw EmptyBucket();
  double below = 0;
  for (size_t j = 0; j < inner; ++j) below += static_cast<double>(cnt[j]);
  const double num = q * n + debias * tau * static_cast<double>(group) - below;
  return std::min(1.0, std::max(0.0, num) / static_cast<double>(cnt[inner]));
}

// Sorted, strictly increasing boundaries in [1, d]. Every bucket then has a
// distinct left end, so dummies of different buckets never tie.
inline std::vector<int64_t> strict_boundaries(std::vector<int64_t> v, int64_t d) {
  std::sort(v.begin(), v.end());
  int64_t prev = 0;
  for (auto& x : v) prev = x = std::max(x, prev + 1);
  int64_t next = d + 1;
  for (size_t i = v.size(); i-- > 0;) next = v[i] = std::min(v[i], next - 1);
  return v;
}

// Without replacement. The input is first permuted from the same stream so
// that the simulated protocol (shuffle, then reveal indices) picks the very
// same elements.
inline std::vector<int64_t> subsample(const std::vector<int64_t>& x, int64_t k, Rng& rng) {
  const int64_t n = static_cast<int64_t>(x.size());
  if (k < 1 || k > n) throw std::invalid_argument("subsample size out of range");
  std::vector<int64_t> perm = x;
  rng.shuffle(perm);
  std::vector<char> taken(n, 0);
  std::vector<int64_t> out;
  out.reserve(k);
  while (static_cast<int64_t>(out.size()) < k) {
    const int64_t s = static_cast<int64_t>((u128(rng.bits(kFixedBits)) * u128(n)) >> kFixedBits);
    if (taken[s]) continue;
    taken[s] = 1;
    out.push_back(perm[s]);
  }
  return out;
}

inline int64_t sample_index(uint64_t r40, int64_t n) {
  return static_cast<int64_t>((u128(r40) * u128(n)) >> kFixedBits);
}

// Interior bounding quantiles (those strictly inside (0, 1)), in order.
inline std::vector<double> interior_bounds(const QuantilePartition& part) {
  std::vector<double> out;
  for (const auto& g : part.groups) {
    if (g.lo > 0 && g.lo < 1) out.push_back(g.lo);
    if (g.hi > 0 && g.hi < 1) out.push_back(g.hi);
  }
  return out;
}

// Places phase-1 estimates into the 2M boundary slots.
inline std::vector<int64_t> assemble_boundaries(const QuantilePartition& part,
                                                const std::vector<int64_t>& estimates,
                                                int64_t d) {
  std::vector<int64_t> v;
  size_t e = 0;
  for (const auto& g : part.groups) {
    for (double b : {g.lo, g.hi}) {
      if (b <= 0) v.push_back(0);
      else if (b >= 1) v.push_back(d);
      else v.push_back(estimates.at(e++));
    }
  }
  return strict_boundaries(v, d);
}

struct BudgetEntry {
  std::string release;
  int phase;
  double epsilon;
};

struct PipelineTranscript {
  int64_t n = 0, m = 0, d = 0;
  PipelineParams params;
  DerivedParams derived;
  double epsilon1_effective = 0;
  QuantilePartition partition;
  std::vector<double> bounding_quantiles;
  std::vector<int64_t> bounding_estimates;
  std::vector<int64_t> boundaries;
  int64_t tau = 0;
  std::vector<int64_t> cnt;
  int64_t leaked_gamma_sum = 0;
  std::vector<int64_t> gamma_adv;
  std::vector<std::vector<double>> renormalized;
  std::vector<BudgetEntry> budget;
  bool halted = false;
  std::string halt_stage;
  std::vector<int64_t> estimates;
  uint64_t comparisons = 0;
  // Filled only when ground truth is supplied.
  std::vector<int64_t> bounding_rank_errors;
  std::vector<int64_t> final_rank_errors;
};

struct PipelineResult {
  bool halted = false;
  std::vector<int64_t> estimates;  // aligned with the caller's quantiles
  PipelineTranscript transcript;
};

// Dummy records are placed at the left end of their bucket.
inline std::vector<std::vector<int64_t>> buckets_with_dummies(
    const std::vector<int64_t>& x, const std::vector<int64_t>& boundaries,
    const std::vector<int64_t>& cnt) {
  auto buckets = bucketize(x, boundaries);
  for (size_t i = 0; i < buckets.size(); ++i) {
    const int64_t lower = i == 0 ? 0 : boundaries[i - 1];
    const int64_t dummies = cnt[i] - static_cast<int64_t>(buckets[i].size());
    if (dummies < 0) throw std::logic_error("noisy count below bucket size");
    buckets[i].insert(buckets[i].end(), dummies, lower);
  }
  return buckets;
}

// F_Piquant: subsample, bounding estimates, noisy bucketing with dummies,
// per-bucket slicing.
inline PipelineResult run_pipeline(const std::vector<int64_t>& x, const std::vector<double>& q_in,
                                   int64_t d, const PipelineParams& params, AdversaryHook& adv,
                                   Streams& streams) {
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t m = static_cast<int64_t>(q_in.size());
  if (m == 0 || n == 0) throw std::invalid_argument("empty input");
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return q_in[a] < q_in[b]; });
  std::vector<double> q(m);
  for (int64_t i = 0; i < m; ++i) q[i] = q_in[order[i]];

  PipelineResult res;
  PipelineTranscript& t = res.transcript;
  t.n = n;
  t.m = m;
  t.d = d;
  t.params = params;
  t.derived = derive(params, n, m, d);
  t.epsilon1_effective = amplified_epsilon(params.epsilon1, n, t.derived.k);
  t.partition = merge_quantiles(q, t.derived.alpha1, t.derived.alpha2);
  t.bounding_quantiles = interior_bounds(t.partition);
  const SlicingOptions inner{false, params.noise};

  try {
    const std::vector<int64_t> sample = subsample(x, t.derived.k, streams.sample);
    if (!t.bounding_quantiles.empty()) {
      const auto sp = SlicingParams::make(params.epsilon1, params.delta, params.beta,
                                          static_cast<int64_t>(t.bounding_quantiles.size()), d);
      const auto r1 = slicing_em(sample, t.bounding_quantiles, sp, d, adv, streams, inner);
      t.bounding_estimates = r1.estimates;
      t.comparisons += r1.comparisons;
    }
    // Charged even when every bound falls outside (0, 1) and nothing is released.
    t.budget.push_back({"bounding_estimates", 1, params.epsilon1});
    t.boundaries = assemble_boundaries(t.partition, t.bounding_estimates, d);

    const auto br = private_bucketing(x, t.boundaries, params.epsilon2, params.delta, adv,
                                      streams, params.noise);
    t.tau = br.hist.tau;
    t.cnt = br.hist.cnt;
    t.leaked_gamma_sum = br.leaked_gamma_sum;
    t.gamma_adv = br.gamma_adv;
    t.budget.push_back({"noisy_counts", 2, params.epsilon2});

    const auto buckets = buckets_with_dummies(x, t.boundaries, t.cnt);
    std::vector<int64_t> sorted_est(m);
    for (size_t gi = 0; gi < t.partition.groups.size(); ++gi) {
      const auto& g = t.partition.groups[gi];
      const auto& bucket = buckets[2 * gi + 1];
      std::vector<double> qh;
      for (size_t idx : g.members)
        qh.push_back(renormalize(q[idx], gi + 1, t.cnt, n, t.tau, params.debias));
      t.renormalized.push_back(qh);
      const auto sp = SlicingParams::make(params.epsilon3, params.delta, params.beta,
                                          static_cast<int64_t>(qh.size()), d);
      const auto r3 = slicing_em(bucket, qh, sp, d, adv, streams, inner);
      t.comparisons += r3.comparisons;
      for (size_t j = 0; j < g.members.size(); ++j) sorted_est[g.members[j]] = r3.estimates[j];
    }
    t.budget.push_back({"final_estimates", 3, params.epsilon3});
    res.estimates.resize(m);
    for (int64_t i = 0; i < m; ++i) res.estimates[order[i]] = sorted_est[i];
    t.estimates = res.estimates;
  } catch (const Halt& h) {
    res.halted = t.halted = true;
    t.halt_stage = h.stage;
    res.estimates.clear();
    t.estimates.clear();
  }
  return res;
}

inline void attach_ground_truth(PipelineTranscript& t, const std::vector<int64_t>& sorted,
                                const std::vector<double>& q) {
  t.bounding_rank_errors.clear();
  t.final_rank_errors.clear();
  for (size_t i = 0; i < t.bounding_estimates.size(); ++i)
    t.bounding_rank_errors.push_back(
        quantile_error(sorted, t.bounding_quantiles[i], t.bounding_estimates[i]));
  for (size_t i = 0; i < t.estimates.size(); ++i)
    t.final_rank_errors.push_back(quantile_error(sorted, q[i], t.estimates[i]));
}

inline nlohmann::json to_json(const PipelineTranscript& t) {
  nlohmann::json j;
  j["n"] = t.n;
  j["m"] = t.m;
  j["d"] = t.d;
  j["params"] = {{"epsilon1", t.params.epsilon1}, {"epsilon2", t.params.epsilon2},
                 {"epsilon3", t.params.epsilon3}, {"delta", t.params.delta},
                 {"beta", t.params.beta},         {"debias", t.params.debias},
                 {"epsilon_total", t.params.total()},
                 {"epsilon1_effective", t.epsilon1_effective}};
  j["derived"] = {{"k", t.derived.k},
                  {"alpha1", t.derived.alpha1},
                  {"alpha2", t.derived.alpha2},
                  {"alpha", t.derived.alpha},
                  {"merge_threshold", t.derived.merge_threshold}};
  auto groups = nlohmann::json::array();
  for (const auto& g : t.partition.groups)
    groups.push_back({{"members", g.members}, {"lo", g.lo}, {"hi", g.hi}});
  j["groups"] = groups;
  j["bounding_quantiles"] = t.bounding_quantiles;
  j["bounding_estimates"] = t.bounding_estimates;
  j["boundaries"] = t.boundaries;
  j["leaked"] = {{"gamma_sum", t.leaked_gamma_sum}, {"gamma_adv", t.gamma_adv}, {"cnt", t.cnt}};
  j["tau"] = t.tau;
  j["renormalized"] = t.renormalized;
  auto budget = nlohmann::json::array();
  for (const auto& b : t.budget)
    budget.push_back({{"release", b.release}, {"phase", b.phase}, {"epsilon", b.epsilon}});
  j["budget"] = budget;
  j["halted"] = t.halted;
  if (t.halted) j["halt_stage"] = t.halt_stage;
  j["estimates"] = t.estimates;
  j["comparisons"] = t.comparisons;
  if (!t.final_rank_errors.empty() || !t.bounding_rank_errors.empty())
    j["rank_errors"] = {{"phase1", t.bounding_rank_errors}, {"final", t.final_rank_errors}};
  return j;
}

}  // namespace piquant
