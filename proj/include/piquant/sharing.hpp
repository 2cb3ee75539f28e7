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
#include <optional>
#include <stdexcept>
#include <vector>

#include "piquant/field.hpp"
#include "piquant/random.hpp"

namespace piquant {

enum class Party : uint8_t { S0 = 0, S1 = 1 };

struct AuthenticatedShare {
  Fp value_share;
  Fp mac_share;
  Party owner = Party::S0;
};

// Both halves of one authenticated value. The simulation keeps them side by
// side; only reconstruction combines them.
struct SharePair {
  AuthenticatedShare s0{{}, {}, Party::S0};
  AuthenticatedShare s1{{}, {}, Party::S1};
};

struct MacFailure : std::runtime_error {
  MacFailure() : std::runtime_error("MAC check failed") {}
};

struct CostLedger {
  uint64_t comparisons = 0;
  uint64_t equality_tests = 0;
  uint64_t multiplications = 0;
  uint64_t truncations = 0;
  uint64_t randoms = 0;
  uint64_t openings = 0;
  uint64_t shuffles = 0;
  uint64_t rounds = 0;
  uint64_t bytes = 0;

  void reset() { *this = CostLedger{}; }
};

// Bytes on the wire for one party's share of one element (value and MAC).
inline constexpr uint64_t kShareBytes = 32;

inline Fp random_field_element(Rng& rng) {
  for (;;) {
    const u128 v = (u128(rng.next()) << 64 | rng.next()) >> 1;
    if (v < Fp::kP) return Fp(v);
  }
}

struct BeaverTriple {
  SharePair a, b, c;
};

// Trusted offline dealer: picks the global MAC key and hands out correlated
// randomness. It never sees protocol messages.
class Dealer {
 public:
  explicit Dealer(uint64_t seed) : rng_(seed, "dealer") {
    gamma0_ = random_field_element(rng_);
    gamma1_ = random_field_element(rng_);
  }

  Fp mac_key() const { return gamma0_ + gamma1_; }
  Fp key_share(Party p) const { return p == Party::S0 ? gamma0_ : gamma1_; }

  SharePair share(Fp x) {
    const Fp r = random_field_element(rng_);
    const Fp mac = mac_key() * x;
    const Fp t = random_field_element(rng_);
    SharePair s;
    s.s0 = {r, t, Party::S0};
    s.s1 = {x - r, mac - t, Party::S1};
    return s;
  }

  BeaverTriple triple() {
    ++triples_used_;
    const Fp a = random_field_element(rng_), b = random_field_element(rng_);
    return {share(a), share(b), share(a * b)};
  }

  uint64_t triples_used() const { return triples_used_; }

 private:
  Rng rng_;
  Fp gamma0_, gamma1_;
  uint64_t triples_used_ = 0;
};

// Local, zero-round operations.
inline SharePair operator+(const SharePair& a, const SharePair& b) {
  SharePair r;
  r.s0 = {a.s0.value_share + b.s0.value_share, a.s0.mac_share + b.s0.mac_share, Party::S0};
  r.s1 = {a.s1.value_share + b.s1.value_share, a.s1.mac_share + b.s1.mac_share, Party::S1};
  return r;
}
inline SharePair operator-(const SharePair& a, const SharePair& b) {
  SharePair r;
  r.s0 = {a.s0.value_share - b.s0.value_share, a.s0.mac_share - b.s0.mac_share, Party::S0};
  r.s1 = {a.s1.value_share - b.s1.value_share, a.s1.mac_share - b.s1.mac_share, Party::S1};
  return r;
}
inline SharePair operator*(Fp c, const SharePair& a) {
  SharePair r;
  r.s0 = {c * a.s0.value_share, c * a.s0.mac_share, Party::S0};
  r.s1 = {c * a.s1.value_share, c * a.s1.mac_share, Party::S1};
  return r;
}
inline SharePair& operator+=(SharePair& a, const SharePair& b) { return a = a + b; }

// Opens the pair and checks the MAC relation sum(m_b - gamma_b * x) == 0.
inline Fp open_checked(const SharePair& s, const Dealer& dealer) {
  const Fp x = s.s0.value_share + s.s1.value_share;
  const Fp sigma = (s.s0.mac_share - dealer.key_share(Party::S0) * x) +
                   (s.s1.mac_share - dealer.key_share(Party::S1) * x);
  if (sigma != Fp()) throw MacFailure();
  return x;
}

// Dealer-assisted arithmetic plus the hybrid-model ideal operations. The
// hybrid operations are run by a trusted environment that reconstructs its
// inputs (checking MACs), computes in the clear and re-shares the result.
class MpcContext {
 public:
  explicit MpcContext(uint64_t seed) : dealer_(seed) {}

  Dealer& dealer() { return dealer_; }
  const Dealer& dealer() const { return dealer_; }
  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }

  // One party (or a client) contributes a private input.
  SharePair input(Fp x) {
    ledger_.bytes += kShareBytes * 2;
    return dealer_.share(x);
  }
  SharePair input(int64_t x) { return input(Fp::from_int(x)); }

  // Public constant, with no communication.
  SharePair constant(Fp c) const {
    SharePair r;
    r.s0 = {c, dealer_.key_share(Party::S0) * c, Party::S0};
    r.s1 = {Fp(), dealer_.key_share(Party::S1) * c, Party::S1};
    return r;
  }
  SharePair add_public(const SharePair& a, Fp c) const { return a + constant(c); }

  // Arms a one-shot tamper: the next opening sees S1's value share shifted.
  void arm_tamper(Fp delta) { tamper_ = delta; }

  // Operations issued inside a batch share one round, charged when the
  // outermost batch closes.
  void begin_batch() { ++batch_depth_; }
  void end_batch() {
    if (--batch_depth_ == 0) ++ledger_.rounds;
  }
  void add_rounds(uint64_t r) { ledger_.rounds += r; }

  Fp rec(const SharePair& s) {
    ++ledger_.openings;
    tick();
    ledger_.bytes += kShareBytes * 2;
    return open_internal(s);
  }

  std::vector<Fp> rec_batch(const std::vector<SharePair>& v) {
    tick();
    std::vector<Fp> out;
    out.reserve(v.size());
    for (const auto& s : v) {
      ++ledger_.openings;
      ledger_.bytes += kShareBytes * 2;
      out.push_back(open_internal(s));
    }
    return out;
  }

  SharePair mult(const SharePair& x, const SharePair& y) {
    tick();
    return mult_unrounded(x, y);
  }

  // Element-wise products in one round.
  std::vector<SharePair> mult_batch(const std::vector<SharePair>& x,
                                    const std::vector<SharePair>& y) {
    tick();
    std::vector<SharePair> out;
    out.reserve(x.size());
    for (size_t i = 0; i < x.size(); ++i) out.push_back(mult_unrounded(x[i], y[i]));
    return out;
  }

  // 1 iff x < y under the signed interpretation.
  SharePair cmp(const SharePair& x, const SharePair& y) {
    ++ledger_.comparisons;
    return hybrid(open_internal(x).to_signed() < open_internal(y).to_signed() ? 1 : 0, 2);
  }
  SharePair cmp_public(const SharePair& x, Fp c) {
    ++ledger_.comparisons;
    return hybrid(open_internal(x).to_signed() < c.to_signed() ? 1 : 0, 1);
  }
  SharePair equal(const SharePair& x, const SharePair& y) {
    ++ledger_.equality_tests;
    return hybrid(open_internal(x) == open_internal(y) ? 1 : 0, 2);
  }
  SharePair equal_public(const SharePair& x, Fp c) {
    ++ledger_.equality_tests;
    return hybrid(open_internal(x) == c ? 1 : 0, 1);
  }
  SharePair abs(const SharePair& x) {
    const i128 v = open_internal(x).to_signed();
    return hybrid(v < 0 ? -v : v, 1);
  }
  // floor(x / 2^bits) under the signed interpretation.
  SharePair trunc(const SharePair& x, int bits) {
    ++ledger_.truncations;
    const i128 v = open_internal(x).to_signed();
    const i128 q = v >= 0 ? (v >> bits) : -((-v + (i128(1) << bits) - 1) >> bits);
    return hybrid(q, 1);
  }
  // Uniform bits-bit value from jointly seeded randomness.
  SharePair rand(int bits, Rng& joint) {
    ++ledger_.randoms;
    return hybrid(static_cast<i128>(joint.bits(bits)), 0);
  }

 private:
  Fp open_internal(const SharePair& s) {
    if (tamper_) {
      SharePair t = s;
      t.s1.value_share += *tamper_;
      tamper_.reset();
      return open_checked(t, dealer_);
    }
    return open_checked(s, dealer_);
  }

  SharePair mult_unrounded(const SharePair& x, const SharePair& y) {
    ++ledger_.multiplications;
    ledger_.bytes += kShareBytes * 4;
    const BeaverTriple t = dealer_.triple();
    const Fp e = open_internal(x - t.a);
    const Fp f = open_internal(y - t.b);
    return add_public(t.c + e * t.b + f * t.a, e * f);
  }

  void tick() {
    if (batch_depth_ == 0) ++ledger_.rounds;
  }

  SharePair hybrid(i128 result, int inputs) {
    tick();
    ledger_.bytes += kShareBytes * 2 * (inputs + 1);
    return dealer_.share(Fp::from_int(result));
  }

  Dealer dealer_;
  CostLedger ledger_;
  std::optional<Fp> tamper_;
  int batch_depth_ = 0;
};

class RoundBatch {
 public:
  explicit RoundBatch(MpcContext& ctx) : ctx_(ctx) { ctx_.begin_batch(); }
  ~RoundBatch() { ctx_.end_batch(); }
  RoundBatch(const RoundBatch&) = delete;
  RoundBatch& operator=(const RoundBatch&) = delete;

 private:
  MpcContext& ctx_;
};

}  // namespace piquant
