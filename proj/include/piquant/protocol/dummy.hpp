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

#include "piquant/protocol/runtime.hpp"

namespace piquant::protocol {

// Pi_Dummy: every record must take one of the allowed values (one per
// bucket, in bucket order) and the per-bucket counts must satisfy
// |prefix_i - 2(i+1)tau| <= tau and count_i <= 4 tau. All failure bits are
// summed and only the zero test on the sum is opened.
inline bool pi_dummy(Session& s, const std::vector<SharePair>& values,
                     const std::vector<int64_t>& allowed, int64_t tau) {
  auto& ctx = s.ctx();
  const size_t buckets = allowed.size();
  std::vector<SharePair> count(buckets, ctx.constant(Fp()));
  SharePair bad = ctx.constant(Fp());
  {
    RoundBatch batch(ctx);
    for (const auto& v : values) {
      SharePair hits = ctx.constant(Fp());
      for (size_t i = 0; i < buckets; ++i) {
        const SharePair eq = ctx.equal_public(v, Fp::from_int(allowed[i]));
        count[i] += eq;
        hits += eq;
      }
      bad += ctx.constant(Fp(1)) - hits;  // allowed values are distinct
    }
  }
  {
    RoundBatch batch(ctx);
    SharePair prefix = ctx.constant(Fp());
    const SharePair one = ctx.constant(Fp(1));
    for (size_t i = 0; i < buckets; ++i) {
      prefix += count[i];
      const int64_t mid = 2 * tau * static_cast<int64_t>(i + 1);
      bad += ctx.cmp_public(prefix, Fp::from_int(mid - tau));
      bad += one - ctx.cmp_public(prefix, Fp::from_int(mid + tau + 1));
      bad += one - ctx.cmp_public(count[i], Fp::from_int(4 * tau + 1));
    }
  }
  return s.open(ctx.equal_public(bad, Fp()), RevealKind::CheckBit) == 1;
}

}  // namespace piquant::protocol
