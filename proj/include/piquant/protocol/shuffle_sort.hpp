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

#include <vector>

#include "piquant/partial_sort.hpp"
#include "piquant/protocol/runtime.hpp"

namespace piquant::protocol {

// F_Shuffle: hidden permutation plus re-randomised shares. The permutation
// comes from `perm_rng` so a caller can align it with the ideal world.
inline void f_shuffle(Session& s, SharedVec& v, Rng& perm_rng) {
  perm_rng.shuffle(v.items);
  for (auto& x : v.items) x += s.ctx().dealer().share(Fp());
  auto& l = s.ctx().ledger();
  ++l.shuffles;
  s.ctx().add_rounds(1);
  l.bytes += v.size() * kShareBytes * 2;
  v.shuffled = true;
}

inline void f_shuffle(Session& s, SharedVec& v) { f_shuffle(s, v, s.shuffle_rng()); }

// Shuffle, then the partial quicksort with revealed Cmp outcomes. One round
// per partition step. Returns the number of comparisons.
inline uint64_t secure_partial_sort(Session& s, SharedVec& v, const std::vector<RankRange>& required,
                                    bool descending = false) {
  f_shuffle(s, v);
  uint64_t partitions = 0, cmps = 0;
  {
    RoundBatch batch(s.ctx());
    cmps = partial_quicksort(
        v.items, required, s.pivot_rng(),
        [&](const SharePair& a, const SharePair& b) {
          return descending ? s.less_revealed(b, a, v.shuffled) : s.less_revealed(a, b, v.shuffled);
        },
        &partitions);
  }
  if (partitions > 1) s.ctx().add_rounds(partitions - 1);
  return cmps;
}

inline uint64_t secure_sort(Session& s, SharedVec& v, bool descending = false) {
  return secure_partial_sort(s, v, {{0, static_cast<int64_t>(v.size())}}, descending);
}

}  // namespace piquant::protocol
