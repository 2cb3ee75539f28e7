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
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "piquant/dataset.hpp"
#include "piquant/random.hpp"

namespace piquant::bench {

enum class DatasetKind { Uniform, GaussianMixture, Zipf, File };

inline DatasetKind parse_kind(const std::string& s) {
  if (s == "uniform") return DatasetKind::Uniform;
  if (s == "gaussian_mixture" || s == "mixture") return DatasetKind::GaussianMixture;
  if (s == "zipf") return DatasetKind::Zipf;
  if (s == "file") return DatasetKind::File;
  throw std::invalid_argument("unknown dataset kind: " + s);
}

inline const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Uniform: return "uniform";
    case DatasetKind::GaussianMixture: return "gaussian_mixture";
    case DatasetKind::Zipf: return "zipf";
    case DatasetKind::File: return "file";
  }
  return "?";
}

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Uniform;
  int64_t n = 1000;
  int64_t d = 1000000000;
  int components = 13;
  double zipf_exponent = 1.1;
  uint64_t seed = 1;
  bool unique = true;  // off only when d + 1 < n
  std::string path;    // kind == File
};

struct DataFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One integer per line; blank lines and '#' comments are skipped.
inline std::vector<int64_t> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFileError("cannot open " + path);
  std::vector<int64_t> v;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    int64_t x;
    if (!(ls >> x)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw DataFileError(path + ":" + std::to_string(lineno) + ": not an integer");
    }
    std::string rest;
    if (ls >> rest) throw DataFileError(path + ":" + std::to_string(lineno) + ": trailing text");
    if (x < 0) throw DataFileError(path + ":" + std::to_string(lineno) + ": negative value");
    v.push_back(x);
  }
  return v;
}

inline void write_values(const std::string& path, const std::vector<int64_t>& v) {
  std::ofstream out(path);
  if (!out) throw DataFileError("cannot write " + path);
  for (int64_t x : v) out << x << '\n';
}

// Continuous power-law inverse CDF on [1, d + 1), floored and shifted to
// start at 0. Exponent 1 is the log-uniform case.
inline int64_t zipf_draw(double s, int64_t d, Rng& rng) {
  const double top = static_cast<double>(d) + 1.0;
  const double u = rng.uniform01();
  double x;
  if (std::abs(s - 1.0) < 1e-12) {
    x = std::exp(u * std::log(top));
  } else {
    const double a = 1.0 - s;
    // (1 + u (top^a - 1))^(1/a), written to stay finite for large s.
    x = std::exp(std::log1p(u * std::expm1(a * std::log(top))) / a);
  }
  return std::clamp<int64_t>(static_cast<int64_t>(x) - 1, 0, d);
}

// Deterministic for a fixed spec. Values lie in [0, d], distinct when
// spec.unique, in random order.
inline Dataset generate(const DatasetSpec& spec) {
  Dataset out;
  out.d = spec.d;
  if (spec.kind == DatasetKind::File) {
    out.values = read_values(spec.path);
    if (out.values.empty()) throw DataFileError(spec.path + ": no values");
    const int64_t mx = *std::max_element(out.values.begin(), out.values.end());
    if (out.d <= 0) out.d = std::max<int64_t>(1, mx);
    if (mx > out.d) throw DataFileError(spec.path + ": value above the domain");
    return out;
  }
  if (spec.n < 1) throw std::invalid_argument("dataset needs n >= 1");
  if (spec.unique && spec.d + 1 < spec.n) throw DomainTooSmall("need d + 1 >= n");
  Rng rng(spec.seed, to_string(spec.kind));
  std::vector<int64_t> v;
  v.reserve(spec.n);
  const double dd = static_cast<double>(spec.d);
  for (int64_t i = 0; i < spec.n; ++i) {
    switch (spec.kind) {
      case DatasetKind::Uniform:
        v.push_back(static_cast<int64_t>(rng.below(spec.d + 1)));
        break;
      case DatasetKind::GaussianMixture: {
        const int l = std::max(1, spec.components);
        const int c = static_cast<int>(rng.below(l));
        const double mean = (c + 0.5) * dd / l;
        const double y = mean + rng.normal() * dd / (4.0 * l);
        v.push_back(std::clamp<int64_t>(std::llround(y), 0, spec.d));
        break;
      }
      case DatasetKind::Zipf:
        v.push_back(zipf_draw(spec.zipf_exponent, spec.d, rng));
        break;
      case DatasetKind::File:
        break;
    }
  }
  if (spec.unique) v = uniquify_in_domain(std::move(v), spec.d);
  rng.shuffle(v);
  out.values = std::move(v);
  return out;
}

// Maximal runs of histogram bins holding under half the average count.
inline int count_plateaus(const std::vector<int64_t>& x, int64_t d, int bins) {
  std::vector<int64_t> h(bins, 0);
  for (int64_t v : x) {
    const int b = static_cast<int>(static_cast<double>(v) / (static_cast<double>(d) + 1) * bins);
    ++h[std::clamp(b, 0, bins - 1)];
  }
  const double avg = static_cast<double>(x.size()) / bins;
  int runs = 0;
  bool in = false;
  for (int64_t c : h) {
    const bool low = static_cast<double>(c) < 0.5 * avg;
    runs += low && !in;
    in = low;
  }
  return runs;
}

}  // namespace piquant::bench
