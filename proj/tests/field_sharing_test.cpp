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

#include "piquant/field.hpp"
#include "piquant/sharing.hpp"

namespace piquant {
namespace {

TEST(FieldTest, ModularIdentities) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Fp a = random_field_element(rng), b = random_field_element(rng);
    EXPECT_EQ((a + b) - b, a);
    EXPECT_EQ(a * (b + Fp(1)), a * b + a);
    EXPECT_LT(a.value(), Fp::kP);
  }
  EXPECT_EQ(Fp(Fp::kP), Fp(0));
  EXPECT_EQ(Fp(Fp::kP - 1) + Fp(1), Fp(0));
}

TEST(FieldTest, MultiplicationAgainstSmallOracle) {
  // 2^31 * 2^31 = 2^62 < p.
  EXPECT_EQ(Fp(u128(1) << 31) * Fp(u128(1) << 31), Fp(u128(1) << 62));
  // 2^64 * 2^64 = 2^128 = 2 (mod 2^127 - 1).
  EXPECT_EQ(Fp(u128(1) << 64) * Fp(u128(1) << 64), Fp(2));
  // (p - 1)^2 = 1.
  EXPECT_EQ(Fp(Fp::kP - 1) * Fp(Fp::kP - 1), Fp(1));
  // Random 62-bit operands: the product fits in 124 bits, no reduction.
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const uint64_t a = rng.bits(62), b = rng.bits(62);
    EXPECT_EQ(Fp(a) * Fp(b), Fp(u128(a) * b));
  }
}

TEST(FieldTest, SignedInterpretation) {
  EXPECT_EQ(Fp::from_int(-5).to_signed(), -5);
  EXPECT_EQ(Fp::from_int(7).to_i64(), 7);
  EXPECT_EQ((Fp::from_int(-3) + Fp(10)).to_i64(), 7);
  EXPECT_EQ(Fp(Fp::kHalf - 1).to_signed(), static_cast<i128>(Fp::kHalf - 1));
  EXPECT_LT(Fp(Fp::kHalf).to_signed(), 0);
}

TEST(SharingTest, RoundTrip) {
  MpcContext ctx(3);
  EXPECT_EQ(ctx.rec(ctx.input(Fp(0))), Fp(0));
  EXPECT_EQ(ctx.rec(ctx.input(Fp(42))), Fp(42));
  EXPECT_EQ(ctx.rec(ctx.input(Fp(7))), Fp(7));
  EXPECT_EQ(ctx.rec(ctx.input(Fp(Fp::kP - 1))), Fp(Fp::kP - 1));
}

TEST(SharingTest, MacRelationHolds) {
  MpcContext ctx(4);
  const SharePair s = ctx.input(Fp(42));
  const Fp x = s.s0.value_share + s.s1.value_share;
  const Fp mac = s.s0.mac_share + s.s1.mac_share;
  EXPECT_EQ(x, Fp(42));
  EXPECT_EQ(mac, ctx.dealer().mac_key() * Fp(42));
}

TEST(SharingTest, TamperedValueShareFailsMac) {
  MpcContext ctx(5);
  SharePair s = ctx.input(Fp(42));
  s.s1.value_share += Fp(1);
  EXPECT_THROW(ctx.rec(s), MacFailure);
}

TEST(SharingTest, TamperedMacShareFails) {
  MpcContext ctx(6);
  SharePair s = ctx.input(Fp(7));
  s.s0.mac_share += Fp(1);
  EXPECT_THROW(ctx.rec(s), MacFailure);
}

TEST(SharingTest, RandomTampersAlwaysCaught) {
  MpcContext ctx(7);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    SharePair s = ctx.input(random_field_element(rng));
    Fp delta = random_field_element(rng);
    if (delta == Fp()) delta = Fp(1);
    switch (i % 4) {
      case 0: s.s0.value_share += delta; break;
      case 1: s.s1.value_share += delta; break;
      case 2: s.s0.mac_share += delta; break;
      default: s.s1.mac_share += delta; break;
    }
    EXPECT_THROW(ctx.rec(s), MacFailure);
  }
}

TEST(SharingTest, Linearity) {
  MpcContext ctx(9);
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const Fp x = random_field_element(rng), y = random_field_element(rng);
    const Fp c = random_field_element(rng);
    const SharePair sx = ctx.input(x), sy = ctx.input(y);
    const uint64_t rounds = ctx.ledger().rounds;
    const SharePair sum = sx + sy, scaled = c * sx, shifted = ctx.add_public(sx, c);
    EXPECT_EQ(ctx.ledger().rounds, rounds);
    EXPECT_EQ(ctx.rec(sum), x + y);
    EXPECT_EQ(ctx.rec(scaled), c * x);
    EXPECT_EQ(ctx.rec(shifted), c + x);
  }
}

TEST(SharingTest, Multiplication) {
  MpcContext ctx(11);
  EXPECT_EQ(ctx.rec(ctx.mult(ctx.input(Fp(3)), ctx.input(Fp(4)))), Fp(12));
  const SharePair big = ctx.input(Fp(u128(1) << 31));
  EXPECT_EQ(ctx.rec(ctx.mult(big, big)), Fp(u128(1) << 62));
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const Fp x = random_field_element(rng);
    EXPECT_EQ(ctx.rec(ctx.mult(ctx.input(x), ctx.input(Fp(0)))), Fp(0));
  }
  const uint64_t before = ctx.ledger().multiplications;
  const uint64_t triples = ctx.dealer().triples_used();
  ctx.mult(ctx.input(Fp(2)), ctx.input(Fp(5)));
  EXPECT_EQ(ctx.ledger().multiplications, before + 1);
  EXPECT_EQ(ctx.dealer().triples_used(), triples + 1);
}

TEST(SharingTest, TamperedMultiplicationInputFails) {
  MpcContext ctx(13);
  SharePair a = ctx.input(Fp(3));
  a.s1.value_share += Fp(9);
  EXPECT_THROW(ctx.mult(a, ctx.input(Fp(4))), MacFailure);
}

TEST(SharingTest, HybridOperations) {
  MpcContext ctx(14);
  auto v = [&](int64_t x) { return ctx.input(x); };
  EXPECT_EQ(ctx.rec(ctx.cmp(v(3), v(5))), Fp(1));
  EXPECT_EQ(ctx.rec(ctx.cmp(v(5), v(3))), Fp(0));
  EXPECT_EQ(ctx.rec(ctx.cmp(v(-2), v(1))), Fp(1));
  EXPECT_EQ(ctx.rec(ctx.equal(v(9), v(9))), Fp(1));
  EXPECT_EQ(ctx.rec(ctx.equal(v(9), v(8))), Fp(0));
  EXPECT_EQ(ctx.rec(ctx.trunc(v(13), 2)), Fp(3));
  EXPECT_EQ(ctx.rec(ctx.trunc(v(-13), 2)).to_i64(), -4);
  EXPECT_EQ(ctx.rec(ctx.abs(v(-17))), Fp(17));
  Rng joint(15);
  for (int i = 0; i < 100; ++i) EXPECT_LT(ctx.rec(ctx.rand(10, joint)).to_i64(), 1024);
}

TEST(SharingTest, LedgerCountsComparisons) {
  MpcContext ctx(16);
  const SharePair a = ctx.input(1), b = ctx.input(2);
  const uint64_t c0 = ctx.ledger().comparisons, r0 = ctx.ledger().rounds;
  for (int k = 0; k < 37; ++k) ctx.cmp(a, b);
  EXPECT_EQ(ctx.ledger().comparisons, c0 + 37);
  EXPECT_EQ(ctx.ledger().rounds, r0 + 37);
  ctx.ledger().reset();
  EXPECT_EQ(ctx.ledger().comparisons, 0u);
}

TEST(SharingTest, ArmedTamperHitsNextOpening) {
  MpcContext ctx(17);
  const SharePair a = ctx.input(5);
  ctx.arm_tamper(Fp(1));
  EXPECT_THROW(ctx.rec(a), MacFailure);
  EXPECT_EQ(ctx.rec(a), Fp(5));
}

}  // namespace
}  // namespace piquant
