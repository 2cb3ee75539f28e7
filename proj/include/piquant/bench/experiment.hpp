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
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "piquant/bench/baselines.hpp"
#include "piquant/bench/datasets.hpp"
#include "piquant/pipeline.hpp"
#include "piquant/protocol/piquante.hpp"

namespace piquant::bench {

struct ConfigError : std::runtime_error {
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : msg),
        line(line) {}
  int line;
};

enum class Method { Pipeline, NaiveEm, Ldp, Protocol };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Pipeline: return "pipeline";
    case Method::NaiveEm: return "naive_em_sequential";
    case Method::Ldp: return "ldp_hierarchical";
    case Method::Protocol: return "protocol";
  }
  return "?";
}

struct ExperimentConfig {
  DatasetSpec data;
  std::vector<Method> methods = {Method::Pipeline};
  std::vector<double> epsilons = {1.0};
  std::vector<int64_t> ms = {4};
  std::vector<double> quantiles;  // overrides ms when set
  int seeds = 1;
  uint64_t seed_base = 0;
  double split[3] = {0.2, 0.4, 0.4};
  double delta = 1e-6;
  double beta = 0.05;
  int ldp_fanout = 2;
  int threads = 1;
  bool record_time = true;
  std::string output;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, int line, const std::string& key) {
  T v{};
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(line, "bad value for " + key + ": '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s, int line, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(line, "bad boolean for " + key + ": '" + s + "'");
}

}  // namespace detail

// Flat "key = value" lines; '#' starts a comment. Lists are comma-separated.
inline ExperimentConfig parse_config(std::istream& in) {
  using namespace detail;
  ExperimentConfig c;
  std::map<std::string, int> seen;
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string val = trim(text.substr(eq + 1));
    if (val.empty()) throw ConfigError(line, "empty value for " + key);
    if (seen.count(key)) throw ConfigError(line, "duplicate key " + key);
    seen[key] = line;
    const auto list = split_list(val);
    try {
      if (key == "dataset") c.data.kind = parse_kind(val);
      else if (key == "n") c.data.n = parse_number<int64_t>(val, line, key);
      else if (key == "d") c.data.d = parse_number<int64_t>(val, line, key);
      else if (key == "components") c.data.components = parse_number<int>(val, line, key);
      else if (key == "zipf_exponent") c.data.zipf_exponent = parse_number<double>(val, line, key);
      else if (key == "data_file") c.data.path = val;
      else if (key == "unique") c.data.unique = parse_bool(val, line, key);
      else if (key == "methods") {
        c.methods.clear();
        for (const auto& m : list) {
          if (m == "pipeline") c.methods.push_back(Method::Pipeline);
          else if (m == "naive_em") c.methods.push_back(Method::NaiveEm);
          else if (m == "ldp") c.methods.push_back(Method::Ldp);
          else if (m == "protocol") c.methods.push_back(Method::Protocol);
          else throw ConfigError(line, "unknown method " + m);
        }
      } else if (key == "epsilons") {
        c.epsilons.clear();
        for (const auto& e : list) c.epsilons.push_back(parse_number<double>(e, line, key));
      } else if (key == "m") {
        c.ms.clear();
        for (const auto& e : list) c.ms.push_back(parse_number<int64_t>(e, line, key));
      } else if (key == "quantiles") {
        for (const auto& e : list) c.quantiles.push_back(parse_number<double>(e, line, key));
      } else if (key == "seeds") c.seeds = parse_number<int>(val, line, key);
      else if (key == "seed_base") c.seed_base = parse_number<uint64_t>(val, line, key);
      else if (key == "split") {
        if (list.size() != 3) throw ConfigError(line, "split needs three fractions");
        for (int i = 0; i < 3; ++i) c.split[i] = parse_number<double>(list[i], line, key);
      } else if (key == "delta") c.delta = parse_number<double>(val, line, key);
      else if (key == "beta") c.beta = parse_number<double>(val, line, key);
      else if (key == "ldp_fanout") c.ldp_fanout = parse_number<int>(val, line, key);
      else if (key == "threads") c.threads = parse_number<int>(val, line, key);
      else if (key == "record_time") c.record_time = parse_bool(val, line, key);
      else if (key == "output") c.output = val;
      else throw ConfigError(line, "unknown key " + key);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line, e.what());
    }
    if (key == "n" && c.data.n < 1) throw ConfigError(line, "n must be positive");
    if (key == "seeds" && c.seeds < 1) throw ConfigError(line, "seeds must be positive");
    if (key == "threads" && c.threads < 1) throw ConfigError(line, "threads must be positive");
  }
  if (c.methods.empty() || c.epsilons.empty() || (c.ms.empty() && c.quantiles.empty()))
    throw ConfigError(0, "config defines no cells");
  if (c.data.kind == DatasetKind::File && c.data.path.empty())
    throw ConfigError(seen.count("dataset") ? seen["dataset"] : 0, "dataset = file needs data_file");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path);
  return parse_config(in);
}

// Midpoints (i - 0.5) / m: equally spaced, and wide enough apart for the
// slicing gap at desk-scale n.
inline std::vector<double> equally_spaced(int64_t m) {
  std::vector<double> q;
  for (int64_t i = 1; i <= m; ++i) q.push_back((static_cast<double>(i) - 0.5) / m);
  return q;
}

struct Cell {
  Method method;
  double epsilon;
  int64_t m;
  uint64_t seed;
};

struct Row {
  Cell cell;
  std::string dataset;
  int64_t n = 0, d = 0;
  int64_t max_rank_error = 0;
  double mean_rank_error = 0;
  double normalized_error = 0;
  uint64_t comparisons = 0, multiplications = 0, rounds = 0, bytes = 0;
  double wall_ms = 0;
  std::string status = "ok";
};

inline std::vector<Cell> cells_of(const ExperimentConfig& c) {
  std::vector<Cell> out;
  std::vector<int64_t> ms = c.ms;
  if (!c.quantiles.empty()) ms = {static_cast<int64_t>(c.quantiles.size())};
  for (Method meth : c.methods)
    for (double e : c.epsilons)
      for (int64_t m : ms)
        for (int s = 0; s < c.seeds; ++s) out.push_back({meth, e, m, c.seed_base + s});
  return out;
}

inline PipelineParams pipeline_params(const ExperimentConfig& c, double epsilon) {
  PipelineParams p;
  p.epsilon1 = c.split[0] * epsilon;
  p.epsilon2 = c.split[1] * epsilon;
  p.epsilon3 = c.split[2] * epsilon;
  p.delta = c.delta;
  p.beta = c.beta;
  return p;
}

inline Row run_cell(const ExperimentConfig& c, const Cell& cell) {
  Row row;
  row.cell = cell;
  row.dataset = to_string(c.data.kind);
  DatasetSpec spec = c.data;
  spec.seed = c.data.seed + cell.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Dataset data = generate(spec);
    row.n = static_cast<int64_t>(data.n());
    row.d = data.d;
    const std::vector<double> q = c.quantiles.empty() ? equally_spaced(cell.m) : c.quantiles;
    std::vector<int64_t> est;
    Rng rng(cell.seed, to_string(cell.method));
    switch (cell.method) {
      case Method::Pipeline: {
        auto streams = Streams::from_seed(cell.seed);
        auto adv = AdversaryHook::passive();
        const auto r = run_pipeline(data.values, q, data.d, pipeline_params(c, cell.epsilon), adv,
                                    streams);
        if (r.halted) row.status = "halted";
        est = r.estimates;
        row.comparisons = r.transcript.comparisons;
        break;
      }
      case Method::NaiveEm:
        est = baseline_naive_em(data.values, q, cell.epsilon, data.d, rng).estimates;
        break;
      case Method::Ldp:
        est = baseline_ldp_hierarchical(data.values, q, cell.epsilon, data.d, rng,
                                        {c.ldp_fanout})
                  .estimates;
        break;
      case Method::Protocol: {
        auto streams = Streams::from_seed(cell.seed);
        protocol::ProtocolOptions opt;
        opt.session_seed = cell.seed;
        const auto r = protocol::pi_piquante(data.values, q, data.d,
                                             pipeline_params(c, cell.epsilon), streams, opt);
        if (r.aborted) row.status = "aborted";
        est = r.estimates;
        row.comparisons = r.ledger.comparisons;
        row.multiplications = r.ledger.multiplications;
        row.rounds = r.ledger.rounds;
        row.bytes = r.ledger.bytes;
        break;
      }
    }
    if (row.status == "ok") {
      const auto sorted = data.sorted();
      double sum = 0;
      for (size_t i = 0; i < q.size(); ++i) {
        const int64_t e = quantile_error(sorted, q[i], est[i]);
        row.max_rank_error = std::max(row.max_rank_error, e);
        sum += static_cast<double>(e);
      }
      row.mean_rank_error = sum / static_cast<double>(q.size());
      row.normalized_error = static_cast<double>(row.max_rank_error) / static_cast<double>(row.n);
    }
  } catch (const DomainTooLarge&) {
    row.status = "domain_too_large";
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    std::replace(row.status.begin(), row.status.end(), ',', ';');
  }
  if (c.record_time)
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

inline const char* kCsvHeader =
    "method,dataset,n,d,epsilon,m,seed,max_rank_error,mean_rank_error,normalized_error,"
    "comparisons,multiplications,rounds,bytes,wall_ms,status";

// Shortest round-trip decimal form, independent of the locale.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, p) : "nan";
}

inline void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.cell.method) << ',' << r.dataset << ',' << r.n << ',' << r.d << ','
        << format_double(r.cell.epsilon) << ',' << r.cell.m << ',' << r.cell.seed << ','
        << r.max_rank_error << ',' << format_double(r.mean_rank_error) << ','
        << format_double(r.normalized_error) << ',' << r.comparisons << ','
        << r.multiplications << ',' << r.rounds << ',' << r.bytes << ','
        << format_double(r.wall_ms) << ',' << r.status << '\n';
  }
}

// Runs every cell on a worker pool; rows come back in cell order.
inline std::vector<Row> run_experiment(const ExperimentConfig& c) {
  const auto cells = cells_of(c);
  std::vector<Row> rows(cells.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < cells.size();) rows[i] = run_cell(c, cells[i]);
  };
  const int threads = std::max(1, std::min<int>(c.threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace piquant::bench
