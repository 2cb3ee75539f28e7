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

// piquant: dataset generation, one-shot estimation, config sweeps and the
// two-server protocol simulation.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "piquant/bench/datasets.hpp"
#include "piquant/bench/experiment.hpp"
#include "piquant/pipeline.hpp"
#include "piquant/protocol/piquante.hpp"

namespace {

using namespace piquant;
using nlohmann::json;

struct DataArgs {
  std::string dataset = "uniform";
  std::string data_file;
  int64_t n = 10000;
  int64_t d = 1000000000;
  int components = 13;
  double zipf_exponent = 1.1;
  uint64_t seed = 1;
  bool non_unique = false;

  void add_to(CLI::App* app, bool allow_file) {
    app->add_option("--dataset", dataset, "uniform, gaussian_mixture or zipf")
        ->check(CLI::IsMember({"uniform", "gaussian_mixture", "mixture", "zipf"}));
    if (allow_file) app->add_option("--data", data_file, "one integer per line");
    app->add_option("-n,--n", n, "number of records");
    app->add_option("-d,--domain", d, "domain [0, d]");
    app->add_option("--components", components, "mixture components");
    app->add_option("--zipf-exponent", zipf_exponent, "power-law exponent");
    app->add_option("--data-seed", seed, "dataset seed");
    app->add_flag("--non-unique", non_unique, "skip uniquification");
  }

  Dataset load(bool domain_given) const {
    bench::DatasetSpec s;
    s.n = n;
    s.d = d;
    s.components = components;
    s.zipf_exponent = zipf_exponent;
    s.seed = seed;
    s.unique = !non_unique;
    if (!data_file.empty()) {
      s.kind = bench::DatasetKind::File;
      s.path = data_file;
      if (!domain_given) s.d = 0;  // take it from the data
    } else {
      s.kind = bench::parse_kind(dataset);
    }
    return bench::generate(s);
  }
};

struct QueryArgs {
  std::vector<double> quantiles;
  int64_t m = 4;
  double epsilon = 1.0;
  std::vector<double> split = {0.2, 0.4, 0.4};
  double delta = 1e-6;
  double beta = 0.05;
  uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("-q,--quantiles", quantiles, "quantiles in (0, 1)")->delimiter(',');
    app->add_option("-m,--m", m, "equally spaced quantile count when -q is absent");
    app->add_option("-e,--epsilon", epsilon, "total privacy budget");
    app->add_option("--split", split, "fractions of epsilon for the three phases")
        ->delimiter(',')
        ->expected(3);
    app->add_option("--delta", delta);
    app->add_option("--beta", beta);
    app->add_option("-s,--seed", seed, "randomness seed");
  }

  std::vector<double> qs() const { return quantiles.empty() ? bench::equally_spaced(m) : quantiles; }

  PipelineParams params() const {
    PipelineParams p;
    p.epsilon1 = split[0] * epsilon;
    p.epsilon2 = split[1] * epsilon;
    p.epsilon3 = split[2] * epsilon;
    p.delta = delta;
    p.beta = beta;
    return p;
  }
};

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json errors_of(const Dataset& data, const std::vector<double>& q,
               const std::vector<int64_t>& est) {
  const auto sorted = data.sorted();
  json e = json::array();
  for (size_t i = 0; i < est.size(); ++i) e.push_back(quantile_error(sorted, q[i], est[i]));
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private multi-quantile estimation toolkit"};
  app.require_subcommand(1);

  DataArgs gen_data;
  std::string gen_out = "-";
  auto* gen = app.add_subcommand("gen", "emit a synthetic dataset, one value per line");
  gen_data.add_to(gen, false);
  gen->add_option("-o,--output", gen_out, "output file, '-' for stdout");

  DataArgs est_data;
  QueryArgs est_query;
  std::string est_out = "-";
  bool est_truth = false;
  auto* est = app.add_subcommand("estimate", "run the central pipeline once");
  est_data.add_to(est, true);
  est_query.add_to(est);
  est->add_option("-o,--output", est_out, "JSON output, '-' for stdout");
  est->add_flag("--with-errors", est_truth, "also report true rank errors");

  std::string bench_config, bench_out;
  int bench_threads = 0;
  auto* bench_cmd = app.add_subcommand("bench", "run a config sweep and write CSV");
  bench_cmd->add_option("config", bench_config, "config file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("-o,--output", bench_out, "CSV output; overrides the config");
  bench_cmd->add_option("-j,--threads", bench_threads, "worker threads; overrides the config");

  DataArgs proto_data;
  QueryArgs proto_query;
  std::string script_path, transcript_path, proto_out = "-";
  bool interactive = false;
  auto* proto = app.add_subcommand("protocol", "simulate the two-server protocol");
  proto_data.add_to(proto, true);
  proto_query.add_to(proto);
  proto->add_option("--malicious-script", script_path, "JSON steps for the corrupted server")
      ->check(CLI::ExistingFile);
  proto->add_flag("--interactive", interactive, "clients label their own buckets");
  proto->add_option("--transcript", transcript_path, "write the reveal transcript as JSON");
  proto->add_option("-o,--output", proto_out, "JSON output, '-' for stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto data = gen_data.load(true);
      if (gen_out == "-") {
        for (int64_t v : data.values) std::cout << v << '\n';
      } else {
        bench::write_values(gen_out, data.values);
      }
    } else if (*est) {
      const auto data = est_data.load(est->count("--domain") > 0);
      const auto q = est_query.qs();
      auto streams = Streams::from_seed(est_query.seed);
      auto adv = AdversaryHook::passive();
      const auto r = run_pipeline(data.values, q, data.d, est_query.params(), adv, streams);
      json j{{"n", data.n()}, {"d", data.d}, {"quantiles", q}, {"halted", r.halted},
             {"estimates", r.estimates}, {"transcript", to_json(r.transcript)}};
      if (est_truth && !r.halted) j["rank_errors"] = errors_of(data, q, r.estimates);
      write_json(j, est_out);
      return r.halted ? 3 : 0;
    } else if (*bench_cmd) {
      auto cfg = bench::load_config(bench_config);
      if (!bench_out.empty()) cfg.output = bench_out;
      if (bench_threads > 0) cfg.threads = bench_threads;
      const auto rows = bench::run_experiment(cfg);
      if (cfg.output.empty() || cfg.output == "-") {
        bench::write_csv(std::cout, rows);
      } else {
        std::ofstream out(cfg.output);
        if (!out) throw std::runtime_error("cannot write " + cfg.output);
        bench::write_csv(out, rows);
        std::cerr << rows.size() << " rows written to " << cfg.output << '\n';
      }
    } else if (*proto) {
      const auto data = proto_data.load(proto->count("--domain") > 0);
      const auto q = proto_query.qs();
      protocol::ProtocolOptions opt;
      opt.session_seed = proto_query.seed;
      opt.interactive = interactive;
      if (!script_path.empty()) {
        std::ifstream in(script_path);
        opt.script = protocol::MaliciousScript::parse(json::parse(in));
      }
      auto streams = Streams::from_seed(proto_query.seed);
      const auto r = protocol::pi_piquante(data.values, q, data.d, proto_query.params(), streams, opt);
      json j{{"n", data.n()}, {"d", data.d}, {"quantiles", q}, {"aborted", r.aborted},
             {"estimates", r.estimates}, {"ledger", protocol::to_json(r.ledger)},
             {"phase_comparisons", r.phase_comparisons}};
      if (r.aborted) j["abort_stage"] = r.abort_stage;
      write_json(j, proto_out);
      if (!transcript_path.empty()) write_json(protocol::to_json(r.transcript), transcript_path);
      return r.aborted ? 3 : 0;
    }
  } catch (const bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
