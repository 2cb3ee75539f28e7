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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "piquant/dataset.hpp"
#include "piquant/em.hpp"
#include "piquant/noise.hpp"
#include "piquant/partial_sort.hpp"
#include "piquant/random.hpp"

namespace piquant {

struct Halt : std::runtime_error {
  explicit Halt(std::string stage)
      : std::runtime_error("halt in " + stage), stage(std::move(stage)) {}
  std::string stage;
};

struct GapViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// How the second party behaves. Passive draws from the honest distribution
// on its own stream; active asks the supplier, and a nullopt means ABORT.
struct AdversaryHook {
  enum class Mode { Passive, Active };
  using Supplier =
      std::function<std::optional<std::vector<int64_t>>(std::string_view stage, size_t length)>;

  Mode mode = Mode::Passive;
  Supplier supplier;

  static AdversaryHook passive() { return {}; }
  static AdversaryHook active(Supplier s) { return {Mode::Active, std::move(s)}; }
};

struct SlicingParams {
  double epsilon = 1;
  double delta = 1e-6;
  double beta = 0.05;
  int64_t m = 1;
  int64_t domain_size = 2;  // |D| = d + 1
  int64_t h = 0;            // slice half-width
  int64_t w = 2;            // shift bound, even

  static SlicingParams make(double epsilon, double delta, double beta, int64_t m, int64_t d) {
    if (!(epsilon > 0) || !(delta > 0) || !(beta > 0) || m < 1)
      throw std::invalid_argument("bad slicing parameters");
    SlicingParams p{epsilon, delta, beta, m, d + 1, 0, 0};
    p.h = static_cast<int64_t>(
        std::ceil(12.0 / epsilon * std::log(static_cast<double>(m) * (d + 1) / beta)));
    p.w = static_cast<int64_t>(std::ceil(24.0 / epsilon * log_m(m) * std::log(2.0 * m / delta)));
    p.w = std::max<int64_t>(2, p.w + (p.w & 1));
    return p;
  }

  double min_gap(size_t n) const { return 2.0 * static_cast<double>(w + h + 1) / n; }

  // Rank-error bound that holds for all m estimates w.p. 1 - beta.
  double error_bound() const {
    return 12.0 * std::log(double(domain_size) * m / beta) / epsilon +
           24.0 * log_m(m) * std::log(2.0 * m / beta) / epsilon;
  }
};

// Where the slice for target rank r sits in the sorted data. Ranks outside
// [0, n) are virtual sentinels: value 0 below the data, d above it. They are
// public and never compared, so the slice is always [base + shift,
// base + shift + 2h) with the target at its centre, even for extreme q.
// [ext_lo, ext_hi) is the real part of the extended window that gets sorted.
struct SliceWindow {
  int64_t ext_lo = 0;
  int64_t ext_hi = 0;
  int64_t base = 0;  // r - h; may be negative
  int64_t target = 0;
};

inline SliceWindow slice_window(int64_t n, int64_t r, int64_t h, int64_t w) {
  SliceWindow s;
  s.base = r - h;
  s.target = h;
  s.ext_lo = std::clamp(r - h - w, int64_t(0), n);
  s.ext_hi = std::clamp(r + h + w, int64_t(0), n);
  return s;
}

// sorted[start, start + len) with sentinels outside the data.
inline std::vector<int64_t> padded_range(const std::vector<int64_t>& sorted, int64_t start,
                                         int64_t len, int64_t d) {
  const int64_t n = static_cast<int64_t>(sorted.size());
  std::vector<int64_t> out(len);
  for (int64_t i = 0; i < len; ++i) {
    const int64_t j = start + i;
    out[i] = j < 0 ? 0 : j >= n ? d : sorted[j];
  }
  return out;
}

inline void check_gap(const std::vector<double>& q, size_t n, const SlicingParams& p) {
  for (size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0 && q[i] < 1)) throw GapViolation("quantiles must lie in (0, 1)");
    if (i > 0 && q[i] - q[i - 1] < p.min_gap(n))
      throw GapViolation("quantiles closer than the slicing gap");
  }
}

// Draws the adversary's vector for `stage`: supplied (active) or sampled
// from `passive_draw`. A missing or wrong-length vector halts.
inline std::vector<int64_t> adversary_vector(AdversaryHook& adv, std::string_view stage,
                                             size_t length,
                                             const std::function<std::vector<int64_t>()>& passive_draw) {
  if (adv.mode == AdversaryHook::Mode::Passive) return passive_draw();
  std::optional<std::vector<int64_t>> v = adv.supplier ? adv.supplier(stage, length) : std::nullopt;
  if (!v || v->size() != length) throw Halt(std::string(stage));
  return *v;
}

struct SlicingOptions {
  bool check_gap = true;
  NoiseOptions noise;
};

struct SlicingResult {
  std::vector<int64_t> estimates;
  std::vector<int64_t> eta;
  std::vector<int64_t> eta_adv;
  std::vector<int64_t> shift;
  std::vector<SliceWindow> windows;
  std::vector<std::vector<int64_t>> slices;
  uint64_t comparisons = 0;
};

// F_SlicingEM. `data` need not be sorted; `q` is ascending.
inline SlicingResult slicing_em(const std::vector<int64_t>& data, const std::vector<double>& q,
                                const SlicingParams& p, int64_t d, AdversaryHook& adv,
                                Streams& streams, SlicingOptions opt = {}) {
  const int64_t n = static_cast<int64_t>(data.size());
  const int64_t m = static_cast<int64_t>(q.size());
  if (m != p.m) throw std::invalid_argument("quantile count does not match parameters");
  if (opt.check_gap) check_gap(q, data.size(), p);

  SlicingResult res;
  std::vector<RankRange> required;
  for (double qi : q) {
    res.windows.push_back(slice_window(n, target_rank(qi, data.size()), p.h, p.w));
    required.push_back({res.windows.back().ext_lo, res.windows.back().ext_hi});
  }
  // Ties (dummies share a value) are broken by position, as the protocol's
  // tagged keys do; plain Lomuto partitioning is quadratic on equal runs.
  std::vector<std::pair<int64_t, int64_t>> keyed(n);
  for (int64_t i = 0; i < n; ++i) keyed[i] = {data[i], i};
  res.comparisons = partial_quicksort(keyed, required, streams.sort);
  std::vector<int64_t> x(n);
  for (int64_t i = 0; i < n; ++i) x[i] = keyed[i].first;

  const CCParams cc{p.epsilon / 2, m};
  res.eta = sample_cc_shifted(cc, p.w, streams.party0, opt.noise);
  res.eta_adv = adversary_vector(adv, "slicing", m, [&] {
    return sample_cc_shifted(cc, p.w, streams.party1, opt.noise);
  });
  for (int64_t v : res.eta_adv)
    if (v < 0 || v > p.w) throw Halt("slicing");

  for (int64_t i = 0; i < m; ++i) {
    const SliceWindow& win = res.windows[i];
    const int64_t delta = res.eta[i] - res.eta_adv[i];
    res.shift.push_back(delta);
    std::vector<int64_t> slice = padded_range(x, win.base + delta, 2 * p.h, d);
    res.estimates.push_back(em_sample_rank(slice, win.target, p.epsilon / 6, d, streams.em).value);
    res.slices.push_back(std::move(slice));
  }
  return res;
}

}  // namespace piquant
