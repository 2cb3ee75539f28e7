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

#include <optional>
#include <utility>
#include <vector>

#include "piquant/protocol/shuffle_sort.hpp"

namespace piquant::protocol {

// Cleartext masking block layouts. S0 puts +D on a prefix of length eta;
// S1 uses -D. Out-of-range eta gives a malformed block on purpose: too long
// for eta > w, wrong sign for eta < 0.
inline std::vector<Fp> masking_block(int64_t eta, int64_t w, Fp entry) {
  std::vector<Fp> b;
  if (eta > w) return std::vector<Fp>(eta, entry);
  if (eta < 0) {
    b.assign(-eta, -entry);
    eta = -eta;
  } else {
    b.assign(eta, entry);
  }
  b.resize(std::max<int64_t>(w, eta), Fp());
  return b;
}

struct MaskingArrays {
  int64_t w = 0;
  std::vector<SharePair> l0, l1;  // m blocks of w each, contiguous after repair

  std::vector<SharePair> block0(size_t i) const { return slice(l0, i); }
  std::vector<SharePair> block1(size_t i) const { return slice(l1, i); }

 private:
  std::vector<SharePair> slice(const std::vector<SharePair>& a, size_t i) const {
    return {a.begin() + i * w, a.begin() + (i + 1) * w};
  }
};

// Opens a random combination of (e - target) * e over all entries through a
// zero test; honest arrays give 0 exactly.
inline bool verify_entries(Session& s, const std::vector<SharePair>& a, Fp target) {
  auto& ctx = s.ctx();
  std::vector<SharePair> lhs;
  lhs.reserve(a.size());
  for (const auto& e : a) lhs.push_back(ctx.add_public(e, -target));
  const auto prod = ctx.mult_batch(lhs, a);
  SharePair z = ctx.constant(Fp());
  for (const auto& p : prod) z += Fp(s.check_rng().next()) * p;
  return s.open(ctx.equal_public(z, Fp()), RevealKind::CheckBit) == 1;
}

// Rewrites a verified 0/entry block into its descending-sorted layout: count
// the non-zero entries, then threshold each position against the count.
inline std::vector<SharePair> make_contiguous(Session& s, const std::vector<SharePair>& block,
                                              Fp entry, bool prefix) {
  auto& ctx = s.ctx();
  const int64_t w = static_cast<int64_t>(block.size());
  SharePair sum = ctx.constant(Fp());
  for (const auto& e : block) sum += e;
  if (!prefix) sum = Fp::from_int(-1) * sum;  // S1 entries are -D
  const Fp mag = prefix ? entry : -entry;
  std::vector<SharePair> out(w);
  for (int64_t j = 0; j < w; ++j) {
    // position j holds an entry iff its rank within the block is < count
    const int64_t rank = prefix ? j : w - 1 - j;
    const SharePair below = ctx.cmp_public(sum, Fp::from_int(rank + 1) * mag);
    out[j] = entry * (ctx.constant(Fp(1)) - below);
  }
  return out;
}

// Masking array generation and verification for both servers. eta1 is what
// S1 claims; `s1_entry` optionally overwrites one raw entry of S1's array.
inline MaskingArrays build_and_verify_masking(
    Session& s, const std::vector<int64_t>& eta0, const std::vector<int64_t>& eta1, int64_t w,
    std::optional<std::pair<int64_t, int64_t>> s1_entry = std::nullopt) {
  const Fp big = s.mask();
  const size_t m = eta0.size();
  std::vector<Fp> a0, a1;
  for (size_t i = 0; i < m; ++i) {
    const auto b0 = masking_block(eta0[i], w, big);
    const auto b1 = masking_block(eta1.at(i), w, -big);
    a0.insert(a0.end(), b0.begin(), b0.end());
    a1.insert(a1.end(), b1.begin(), b1.end());
  }
  if (s1_entry && s1_entry->first >= 0 && s1_entry->first < static_cast<int64_t>(a1.size()))
    a1[s1_entry->first] = Fp::from_int(s1_entry->second);
  if (a0.size() != m * w || a1.size() != m * w) throw Abort("masking");

  MaskingArrays out;
  out.w = w;
  for (const Fp& e : a0) out.l0.push_back(s.ctx().input(e));
  for (const Fp& e : a1) out.l1.push_back(s.ctx().input(e));
  s.note("masking arrays");

  const bool ok1 = verify_entries(s, out.l1, -big);  // checked by S0
  const bool ok0 = verify_entries(s, out.l0, big);   // checked by S1
  if (!ok0 || !ok1) throw Abort("masking");

  RoundBatch batch(s.ctx());
  std::vector<SharePair> c0, c1;
  for (size_t i = 0; i < m; ++i) {
    const auto b0 = make_contiguous(s, out.block0(i), big, true);
    const auto b1 = make_contiguous(s, out.block1(i), -big, false);
    c0.insert(c0.end(), b0.begin(), b0.end());
    c1.insert(c1.end(), b1.begin(), b1.end());
  }
  out.l0 = std::move(c0);
  out.l1 = std::move(c1);
  return out;
}

// Adds L0 to the first w and L1 to the last w entries of a sorted extended
// slice of length 2(h + w), sorts the middle and keeps it. The result is the
// original slice shifted by eta0 - eta1.
inline std::vector<SharePair> secure_shift(Session& s, std::vector<SharePair> ext,
                                           const std::vector<SharePair>& l0,
                                           const std::vector<SharePair>& l1, int64_t h,
                                           int64_t w) {
  const int64_t len = static_cast<int64_t>(ext.size());
  if (len != 2 * (h + w)) throw std::invalid_argument("extended slice has the wrong length");
  for (int64_t j = 0; j < w; ++j) {
    ext[j] += l0[j];
    ext[len - w + j] += l1[j];
  }
  SharedVec v{std::move(ext), false};
  secure_partial_sort(s, v, {{w, len - w}});
  return {v.items.begin() + w, v.items.begin() + w + 2 * h};
}

}  // namespace piquant::protocol
