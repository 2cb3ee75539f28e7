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

#include <cstdint>
#include <vector>

#include "piquant/em.hpp"
#include "piquant/protocol/runtime.hpp"

namespace piquant::protocol {

// Pi_EM over a sorted shared slice of keys. The exponent is public, so the
// weights are public 40-bit constants times shared interval lengths. Returns
// the shared estimate; nothing is opened here.
inline SharePair pi_em(Session& s, const std::vector<SharePair>& keys, int64_t target,
                       double epsilon, int64_t d, Rng& em) {
  if (d <= 0) throw DegenerateDomain();
  auto& ctx = s.ctx();
  const size_t len = keys.size();

  std::vector<SharePair> lower(len + 1), width(len + 1);
  {
    RoundBatch batch(ctx);
    lower[0] = ctx.constant(Fp());
    for (size_t i = 0; i < len; ++i) lower[i + 1] = ctx.trunc(keys[i], kTagBits);
  }
  for (size_t k = 0; k < len; ++k) width[k] = lower[k + 1] - lower[k];
  width[len] = ctx.constant(Fp::from_int(d + 1)) - lower[len];

  std::vector<SharePair> cum(len + 1);
  SharePair total = ctx.constant(Fp());
  for (size_t k = 0; k <= len; ++k) {
    total += Fp(exp_weight_fixed(epsilon, rank_distance(k, target))) * width[k];
    cum[k] = total;
  }

  const SharePair t = ctx.rand(kFixedBits, em);
  const SharePair r = ctx.rand(kFixedBits, em);
  const SharePair u = ctx.trunc(ctx.mult(total, t), kFixedBits);

  // Linear search: a_j = [u < cum_j] is monotone, so a_j - a_{j-1} marks
  // the selected interval.
  std::vector<SharePair> below(len + 1);
  {
    RoundBatch batch(ctx);
    for (size_t j = 0; j <= len; ++j) below[j] = ctx.cmp(u, cum[j]);
  }
  std::vector<SharePair> sel(len + 1);
  for (size_t j = 0; j <= len; ++j) sel[j] = j == 0 ? below[0] : below[j] - below[j - 1];

  // Interval search: pick out the chosen lower end and length, then offset.
  std::vector<SharePair> lhs(sel), rhs(lower);
  lhs.insert(lhs.end(), sel.begin(), sel.end());
  rhs.insert(rhs.end(), width.begin(), width.end());
  const auto picked = ctx.mult_batch(lhs, rhs);
  SharePair lo = ctx.constant(Fp()), ln = ctx.constant(Fp());
  for (size_t j = 0; j <= len; ++j) {
    lo += picked[j];
    ln += picked[len + 1 + j];
  }
  return lo + ctx.trunc(ctx.mult(ln, r), kFixedBits);
}

}  // namespace piquant::protocol
