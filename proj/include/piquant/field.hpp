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
#include <ostream>
#include <stdexcept>
#include <string>

namespace piquant {

using u128 = unsigned __int128;
using i128 = __int128;

// Element of GF(p) for the Mersenne prime p = 2^127 - 1. Fixed-point products
// of weights and 40-bit uniforms need about 2^125 of headroom, which rules out
// a 61-bit prime.
class Fp {
 public:
  static constexpr u128 kP = (u128(1) << 127) - 1;
  static constexpr u128 kHalf = u128(1) << 126;

  constexpr Fp() = default;
  constexpr explicit Fp(u128 v) : v_(reduce(reduce(v))) {}

  static constexpr Fp from_int(i128 x) {
    if (x >= 0) return Fp(static_cast<u128>(x));
    return Fp(kP - reduce(reduce(static_cast<u128>(-x))));
  }

  constexpr u128 value() const { return v_; }

  // Values in [0, 2^126) are non-negative, the rest are negative.
  constexpr i128 to_signed() const {
    return v_ < kHalf ? static_cast<i128>(v_) : -static_cast<i128>(kP - v_);
  }

  int64_t to_i64() const {
    const i128 s = to_signed();
    if (s > INT64_MAX || s < INT64_MIN)
      throw std::overflow_error("field element outside int64 range");
    return static_cast<int64_t>(s);
  }

  friend constexpr Fp operator+(Fp a, Fp b) {
    u128 s = a.v_ + b.v_;  // < 2^128
    return Fp(s);
  }
  friend constexpr Fp operator-(Fp a, Fp b) {
    return Fp(a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + (kP - b.v_));
  }
  constexpr Fp operator-() const { return Fp() - *this; }
  friend constexpr Fp operator*(Fp a, Fp b) { return Fp::raw(mulmod(a.v_, b.v_)); }
  Fp& operator+=(Fp o) { return *this = *this + o; }
  Fp& operator-=(Fp o) { return *this = *this - o; }
  Fp& operator*=(Fp o) { return *this = *this * o; }
  friend constexpr bool operator==(Fp a, Fp b) { return a.v_ == b.v_; }
  friend constexpr bool operator!=(Fp a, Fp b) { return a.v_ != b.v_; }

  std::string to_string() const {
    if (v_ == 0) return "0";
    std::string s;
    for (u128 v = v_; v; v /= 10) s.insert(s.begin(), char('0' + int(v % 10)));
    return s;
  }

 private:
  static constexpr Fp raw(u128 v) {
    Fp f;
    f.v_ = v;
    return f;
  }

  static constexpr u128 reduce(u128 v) {
    v = (v & kP) + (v >> 127);
    return v >= kP ? v - kP : v;
  }

  static constexpr u128 mulmod(u128 a, u128 b) {
    constexpr u128 m64 = (u128(1) << 64) - 1;
    const uint64_t a0 = uint64_t(a), a1 = uint64_t(a >> 64);
    const uint64_t b0 = uint64_t(b), b1 = uint64_t(b >> 64);
    const u128 p00 = u128(a0) * b0, p01 = u128(a0) * b1;
    const u128 p10 = u128(a1) * b0, p11 = u128(a1) * b1;
    const u128 mid = (p00 >> 64) + (p01 & m64) + (p10 & m64);
    const u128 lo = (p00 & m64) | (mid << 64);
    const u128 hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    // a*b = hi*2^128 + lo and 2^128 = 2 (mod p); hi < 2^126 since a, b < p.
    return reduce(reduce(lo) + (hi << 1));
  }

  u128 v_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Fp f) { return os << f.to_string(); }

}  // namespace piquant
