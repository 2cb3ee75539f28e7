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
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "piquant/pipeline.hpp"
#include "piquant/protocol/dummy.hpp"
#include "piquant/protocol/masking.hpp"
#include "piquant/protocol/pi_em.hpp"
#include "piquant/protocol/shuffle_sort.hpp"

namespace piquant::protocol {

// S1's noise submission for `tag`. An "abort" step fires on the at-th
// submission of any kind; a step with the same tag replaces the vector.
inline std::optional<std::vector<int64_t>> s1_override(Session& s, const std::string& tag) {
  if (s.script().next("abort")) throw Abort("script");
  if (auto st = s.script().next(tag)) return st->payload;
  return std::nullopt;
}

// Pi_Sample: shuffle, then reveal uniformly drawn positions until k distinct
// ones are found. Same draws as piquant::subsample on the sample stream.
inline SharedVec pi_sample(Session& s, SharedVec data, int64_t k) {
  const int64_t n = static_cast<int64_t>(data.size());
  if (k < 1 || k > n) throw std::invalid_argument("subsample size out of range");
  auto& ctx = s.ctx();
  f_shuffle(s, data, s.streams().sample);
  std::vector<char> taken(n, 0);
  SharedVec out{{}, true};
  while (static_cast<int64_t>(out.size()) < k) {
    const SharePair r = ctx.rand(kFixedBits, s.streams().sample);
    const int64_t idx =
        s.open(ctx.trunc(Fp::from_int(n) * r, kFixedBits), RevealKind::SampleIndex, true);
    if (taken[idx]) continue;
    taken[idx] = 1;
    out.items.push_back(data.items[idx]);
  }
  return out;
}

inline SharePair sentinel_key(MpcContext& ctx, int64_t rank, int64_t n, int64_t d) {
  if (rank < 0) return ctx.constant(key_of(0, kRealTagBase + rank));
  return ctx.constant(key_of(d, kHighTagBase + (rank - n)));
}

// Pi_SlicingEM on shared keys. Returns the shared estimates unopened.
inline std::vector<SharePair> pi_slicing_em(Session& s, SharedVec data, const std::vector<double>& q,
                                            const SlicingParams& p, NoiseOptions noise = {}) {
  const int64_t n = static_cast<int64_t>(data.size());
  const int64_t m = static_cast<int64_t>(q.size());
  const int64_t d = s.d();
  std::vector<SliceWindow> win;
  std::vector<RankRange> required;
  for (double qi : q) {
    win.push_back(slice_window(n, target_rank(qi, data.size()), p.h, p.w));
    required.push_back({win.back().ext_lo, win.back().ext_hi});
  }
  secure_partial_sort(s, data, required);

  const CCParams cc{p.epsilon / 2, m};
  const auto eta0 = sample_cc_shifted(cc, p.w, s.streams().party0, noise);
  auto eta1 = s1_override(s, "slicing_eta");
  if (!eta1) eta1 = sample_cc_shifted(cc, p.w, s.streams().party1, noise);
  if (static_cast<int64_t>(eta1->size()) != m) throw Abort("masking");
  std::optional<std::pair<int64_t, int64_t>> bad_entry;
  if (auto st = s.script().next("masking_entry")) bad_entry = {{st->payload.at(0), st->payload.at(1)}};
  const MaskingArrays masks = build_and_verify_masking(s, eta0, *eta1, p.w, bad_entry);

  std::vector<SharePair> est;
  for (int64_t i = 0; i < m; ++i) {
    const int64_t start = win[i].base - p.w;
    std::vector<SharePair> ext;
    ext.reserve(2 * (p.h + p.w));
    for (int64_t j = start; j < start + 2 * (p.h + p.w); ++j)
      ext.push_back(j >= 0 && j < n ? data.items[j] : sentinel_key(s.ctx(), j, n, d));
    const auto slice = secure_shift(s, std::move(ext), masks.block0(i), masks.block1(i), p.h, p.w);
    est.push_back(pi_em(s, slice, win[i].target, p.epsilon / 6, d, s.streams().em));
  }
  return est;
}

// Comparison tree over the public boundaries, built as an optimal
// alphabetic tree for the expected bucket masses.
struct BucketTree {
  struct Node {
    int64_t boundary = -1;  // split: key < boundaries[boundary] goes left
    int left = -1, right = -1;
    int64_t bucket = -1;  // leaf
  };
  std::vector<Node> nodes;
  int root = 0;

  int64_t depth(int at = -2) const {
    if (at == -2) at = root;
    const Node& nd = nodes[at];
    if (nd.bucket >= 0) return 0;
    return 1 + std::max(depth(nd.left), depth(nd.right));
  }
};

inline BucketTree optimal_bucket_tree(const std::vector<double>& mass) {
  const int k = static_cast<int>(mass.size());
  std::vector<double> pre(k + 1, 0);
  for (int i = 0; i < k; ++i) pre[i + 1] = pre[i] + mass[i];
  // cost[i][j]: expected comparisons for buckets i..j, split[i][j]: first
  // bucket of the right subtree.
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0));
  std::vector<std::vector<int>> split(k, std::vector<int>(k, -1));
  for (int len = 2; len <= k; ++len)
    for (int i = 0; i + len - 1 < k; ++i) {
      const int j = i + len - 1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = i + 1; r <= j; ++r) {
        const double c = cost[i][r - 1] + cost[r][j];
        if (c < best) {
          best = c;
          split[i][j] = r;
        }
      }
      cost[i][j] = best + pre[j + 1] - pre[i];
    }
  BucketTree t;
  auto build = [&](auto& self, int i, int j) -> int {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (i == j) {
      t.nodes[id].bucket = i;
      return id;
    }
    const int r = split[i][j];
    t.nodes[id].boundary = r - 1;
    const int l = self(self, i, r - 1);
    const int rr = self(self, r, j);
    t.nodes[id].left = l;
    t.nodes[id].right = rr;
    return id;
  };
  t.root = build(build, 0, k - 1);
  return t;
}

// Public bucket masses implied by the bounding quantiles, floored so that
// every bucket keeps a leaf.
inline std::vector<double> bucket_masses(const QuantilePartition& part) {
  std::vector<double> cut;
  for (const auto& g : part.groups) {
    cut.push_back(std::clamp(g.lo, 0.0, 1.0));
    cut.push_back(std::clamp(g.hi, 0.0, 1.0));
  }
  std::vector<double> mass;
  double prev = 0;
  for (double c : cut) {
    mass.push_back(std::max(1e-6, c - prev));
    prev = std::max(prev, c);
  }
  mass.push_back(std::max(1e-6, 1.0 - prev));
  return mass;
}

struct ProtocolOptions {
  uint64_t session_seed = 0;
  MaliciousScript script;
  bool interactive = false;
  // Test hook: this client reports a bucket label one off from the truth.
  std::optional<int64_t> lying_client;
};

struct ProtocolResult {
  bool aborted = false;
  std::string abort_stage;
  std::vector<int64_t> estimates;  // aligned with the caller's quantiles
  std::vector<int64_t> bounding_estimates;
  std::vector<int64_t> boundaries;
  std::vector<int64_t> cnt;
  int64_t tau = 0;
  int64_t k = 0;
  std::vector<uint64_t> phase_comparisons;  // phases 1, 2, 3
  Transcript transcript;
  CostLedger ledger;
};

namespace detail {

// Shuffles records and their labels under one permutation.
inline void shuffle_labelled(Session& s, SharedVec& v, std::vector<SharePair>& labels) {
  std::vector<size_t> perm(v.size());
  std::iota(perm.begin(), perm.end(), 0);
  s.shuffle_rng().shuffle(perm);
  std::vector<SharePair> a(v.size()), b(v.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    a[i] = v.items[perm[i]] + s.ctx().dealer().share(Fp());
    b[i] = labels[perm[i]] + s.ctx().dealer().share(Fp());
  }
  v.items = std::move(a);
  labels = std::move(b);
  v.shuffled = true;
  auto& l = s.ctx().ledger();
  ++l.shuffles;
  s.ctx().add_rounds(1);
  l.bytes += 2 * v.size() * kShareBytes * 2;
}

inline std::vector<int64_t> assign_by_tree(Session& s, const SharedVec& v,
                                           const std::vector<int64_t>& boundaries,
                                           const BucketTree& tree) {
  std::vector<int64_t> label(v.size());
  {
    RoundBatch batch(s.ctx());
    for (size_t r = 0; r < v.size(); ++r) {
      int at = tree.root;
      while (tree.nodes[at].bucket < 0) {
        const auto& nd = tree.nodes[at];
        const Fp cut = value_key(boundaries[nd.boundary]);
        at = s.less_public_revealed(v.items[r], cut, v.shuffled) ? nd.left : nd.right;
      }
      label[r] = tree.nodes[at].bucket;
    }
  }
  const int64_t depth = tree.depth();
  if (depth > 1) s.ctx().add_rounds(depth - 1);
  return label;
}

// Interactive variant: labels are opened after the shuffle and each record
// is checked against its bucket's two ends.
inline std::vector<int64_t> assign_by_labels(Session& s, const SharedVec& v,
                                             const std::vector<SharePair>& labels,
                                             const std::vector<int64_t>& lowers,
                                             const std::vector<int64_t>& boundaries) {
  auto& ctx = s.ctx();
  std::vector<int64_t> label(v.size());
  {
    RoundBatch batch(ctx);
    for (size_t r = 0; r < v.size(); ++r)
      label[r] = s.open(labels[r], RevealKind::BucketLabel, v.shuffled);
  }
  const int64_t buckets = static_cast<int64_t>(lowers.size());
  SharePair bad = ctx.constant(Fp());
  {
    RoundBatch batch(ctx);
    const SharePair one = ctx.constant(Fp(1));
    for (size_t r = 0; r < v.size(); ++r) {
      const int64_t b = label[r];
      if (b < 0 || b >= buckets) throw Abort("bucket_label");
      if (b > 0) bad += ctx.cmp_public(v.items[r], value_key(lowers[b]));
      if (b + 1 < buckets)
        bad += one - ctx.cmp_public(v.items[r], value_key(boundaries[b]));
    }
  }
  if (s.open(ctx.equal_public(bad, Fp()), RevealKind::CheckBit) != 1) throw Abort("bucket_label");
  return label;
}

}  // namespace detail

// Pi_Piquant: the two-server simulation of run_pipeline. With the same
// Streams seed and an honest S1 it returns the same estimates.
inline ProtocolResult pi_piquante(const std::vector<int64_t>& x, const std::vector<double>& q_in,
                                  int64_t d, const PipelineParams& params, Streams& streams,
                                  ProtocolOptions opt = {}) {
  const int64_t n = static_cast<int64_t>(x.size());
  const int64_t m = static_cast<int64_t>(q_in.size());
  if (m == 0 || n == 0) throw std::invalid_argument("empty input");
  if (n >= kRealTagBase / 2) throw std::invalid_argument("too many records for the tag space");
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return q_in[a] < q_in[b]; });
  std::vector<double> q(m);
  for (int64_t i = 0; i < m; ++i) q[i] = q_in[order[i]];

  const DerivedParams dp = derive(params, n, m, d);
  const QuantilePartition part = merge_quantiles(q, dp.alpha1, dp.alpha2);
  const std::vector<double> bounds = interior_bounds(part);

  Session s(opt.session_seed, streams, d, std::move(opt.script));
  ProtocolResult res;
  res.k = dp.k;
  try {
    try {
      // Clients share their records as tagged keys.
      SharedVec clients;
      for (int64_t j = 0; j < n; ++j)
        clients.items.push_back(s.ctx().input(key_of(x[j], kRealTagBase + j)));
      s.note("client shares");

      s.enter_phase(1);
      SharedVec sample = pi_sample(s, clients, dp.k);
      if (!bounds.empty()) {
        const auto sp = SlicingParams::make(params.epsilon1, params.delta, params.beta,
                                            static_cast<int64_t>(bounds.size()), d);
        const auto est = pi_slicing_em(s, sample, bounds, sp, params.noise);
        for (const auto& e : est)
          res.bounding_estimates.push_back(s.open(e, RevealKind::BoundingEstimate));
      }
      s.note("phase 1");
      res.boundaries = assemble_boundaries(part, res.bounding_estimates, d);

      auto mark = [&] {
        uint64_t before = 0;
        for (uint64_t c : res.phase_comparisons) before += c;
        res.phase_comparisons.push_back(s.ctx().ledger().comparisons - before);
      };
      mark();
      s.enter_phase(2);
      const int64_t buckets = static_cast<int64_t>(res.boundaries.size()) + 1;
      res.tau = bucketing_tau(params.epsilon2, params.delta, (buckets - 1) / 2);
      std::vector<int64_t> lowers{0};
      lowers.insert(lowers.end(), res.boundaries.begin(), res.boundaries.end());

      const auto gamma0 =
          sample_cd_tau(params.epsilon2, res.tau, buckets, streams.party0, params.noise).nu;
      if (s.script().next("abort")) throw Abort("script");
      auto gamma1 =
          sample_cd_tau(params.epsilon2, res.tau, buckets, streams.party1, params.noise).nu;
      if (auto st = s.script().next("dummy_count")) gamma1.at(st->payload.at(0)) = st->payload.at(1);
      for (int64_t g : gamma1)
        if (g < 0) throw Abort("dummy");

      auto make_dummies = [&](const std::vector<int64_t>& gamma) {
        std::vector<int64_t> v;
        for (int64_t i = 0; i < buckets; ++i) v.insert(v.end(), gamma[i], lowers[i]);
        return v;
      };
      const std::vector<int64_t> r0 = make_dummies(gamma0);
      std::vector<int64_t> r1 = make_dummies(gamma1);
      if (auto st = s.script().next("dummy_value")) {
        const int64_t at = st->payload.at(0);
        if (at >= 0 && at < static_cast<int64_t>(r1.size())) r1[at] = st->payload.at(1);
      }
      std::vector<SharePair> sr0, sr1;
      for (int64_t v : r0) sr0.push_back(s.ctx().input(v));
      for (int64_t v : r1) sr1.push_back(s.ctx().input(v));
      s.transcript().reveal(RevealKind::DummyTotal, 2, static_cast<int64_t>(r0.size()), false);
      s.transcript().reveal(RevealKind::DummyTotal, 2, static_cast<int64_t>(r1.size()), false);
      s.note("dummy shares");
      const bool ok1 = pi_dummy(s, sr1, lowers, res.tau);  // run against S1
      const bool ok0 = pi_dummy(s, sr0, lowers, res.tau);  // run against S0
      if (!ok0 || !ok1) throw Abort("dummy");

      // Merge clients and dummies, then shuffle.
      SharedVec all = clients;
      std::vector<SharePair> labels;
      if (opt.interactive)
        for (int64_t j = 0; j < n; ++j) {
          int64_t b = static_cast<int64_t>(bucket_of(res.boundaries, x[j]));
          if (opt.lying_client && *opt.lying_client == j) b = b + 1 < buckets ? b + 1 : b - 1;
          labels.push_back(s.ctx().input(b));
        }
      int64_t tag = kRealTagBase + n;
      auto add = [&](const std::vector<SharePair>& vals, const std::vector<int64_t>& clear) {
        for (size_t i = 0; i < vals.size(); ++i) {
          all.items.push_back(s.ctx().add_public(Fp(u128(1) << kTagBits) * vals[i],
                                                 Fp(static_cast<u128>(tag++))));
          if (opt.interactive)
            labels.push_back(s.ctx().input(
                static_cast<int64_t>(bucket_of(res.boundaries, clear[i]))));
        }
      };
      add(sr0, r0);
      add(sr1, r1);
      all.shuffled = false;
      if (opt.interactive) detail::shuffle_labelled(s, all, labels);
      else f_shuffle(s, all);

      const std::vector<int64_t> label =
          opt.interactive
              ? detail::assign_by_labels(s, all, labels, lowers, res.boundaries)
              : detail::assign_by_tree(s, all, res.boundaries,
                                       optimal_bucket_tree(bucket_masses(part)));
      std::vector<std::vector<SharePair>> bucket(buckets);
      for (size_t r = 0; r < label.size(); ++r) bucket[label[r]].push_back(all.items[r]);
      for (int64_t i = 0; i < buckets; ++i) {
        res.cnt.push_back(static_cast<int64_t>(bucket[i].size()));
        s.transcript().reveal(RevealKind::NoisyCount, 2, res.cnt.back(), true);
      }
      // Simulation-side check that the populated buckets have the noisy
      // sizes, so renormalizing with |B_i| and with cnt_i agree.
      std::vector<int64_t> expect(buckets, 0);
      for (const auto* src : std::array<const std::vector<int64_t>*, 3>{&x, &r0, &r1})
        for (int64_t v : *src) ++expect[bucket_of(res.boundaries, v)];
      for (int64_t i = 0; i < buckets; ++i)
        if (res.cnt[i] != expect[i])
          throw std::logic_error("bucket size differs from the noisy count");
      s.note("phase 2");

      mark();
      s.enter_phase(3);
      std::vector<SharePair> final_shared(m);
      for (size_t gi = 0; gi < part.groups.size(); ++gi) {
        const auto& g = part.groups[gi];
        std::vector<double> qh;
        for (size_t idx : g.members)
          qh.push_back(renormalize(q[idx], gi + 1, res.cnt, n, res.tau, params.debias));
        const auto sp = SlicingParams::make(params.epsilon3, params.delta, params.beta,
                                            static_cast<int64_t>(qh.size()), d);
        const auto est =
            pi_slicing_em(s, SharedVec{bucket[2 * gi + 1], true}, qh, sp, params.noise);
        for (size_t j = 0; j < g.members.size(); ++j) final_shared[g.members[j]] = est[j];
      }
      // All final estimates open together, so an abort never leaves a
      // partial release behind.
      const auto opened = s.ctx().rec_batch(final_shared);
      std::vector<int64_t> sorted_est;
      for (const Fp& v : opened) {
        sorted_est.push_back(v.to_i64());
        s.transcript().reveal(RevealKind::FinalEstimate, 3, sorted_est.back(), false);
      }
      s.note("phase 3");
      mark();
      res.estimates.resize(m);
      for (int64_t i = 0; i < m; ++i) res.estimates[order[i]] = sorted_est[i];
    } catch (const MacFailure&) {
      throw Abort("mac");
    }
  } catch (const Abort& a) {
    res.aborted = true;
    res.abort_stage = a.stage;
    res.estimates.clear();
    s.transcript().aborted = true;
    s.transcript().abort_stage = a.stage;
  }
  res.transcript = s.transcript();
  res.ledger = s.ctx().ledger();
  return res;
}

}  // namespace piquant::protocol
