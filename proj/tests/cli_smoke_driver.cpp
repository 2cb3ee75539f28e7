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

// Drives the piquant binary (argv[1]) through each subcommand.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::cout << (ok ? "ok   " : "FAIL ") << what << '\n';
  failures += !ok;
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_smoke_driver <path-to-piquant>\n";
    return 2;
  }
  const std::string bin = std::string("\"") + argv[1] + "\"";
  const fs::path dir = fs::temp_directory_path() / "piquant_cli_smoke";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };

  const fs::path data = dir / "data.txt";
  check(run(bin + " gen --dataset gaussian_mixture -n 3000 --data-seed 5 -o " + q(data)) == 0, "gen");
  {
    std::ifstream in(data);
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    check(lines == 3000, "gen writes n lines");
  }

  const fs::path est = dir / "est.json";
  check(run(bin + " estimate --data " + q(data) + " -d 1000000000 -q 0.25,0.75 -e 2 --with-errors -o " +
            q(est)) == 0,
        "estimate");
  {
    const auto j = nlohmann::json::parse(slurp(est));
    check(j["estimates"].size() == 2 && j["rank_errors"].size() == 2, "estimate output shape");
  }

  const fs::path cfg = dir / "sweep.cfg", csv = dir / "sweep.csv";
  std::ofstream(cfg) << "n = 2000\nmethods = pipeline, naive_em\nepsilons = 2\nm = 2\nseeds = 2\n"
                        "record_time = false\noutput = "
                     << csv.string() << "\n";
  check(run(bin + " bench " + q(cfg)) == 0, "bench");
  {
    std::ifstream in(csv);
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    check(lines == 5, "bench writes header plus four rows");
  }
  const fs::path bad = dir / "bad.cfg";
  std::ofstream(bad) << "n = 100\nwhat = 1\n";
  check(run(bin + " bench " + q(bad)) == 2, "bench rejects a bad config");

  const fs::path out = dir / "proto.json", tr = dir / "transcript.json";
  check(run(bin + " protocol -n 2000 -m 2 -e 4 --transcript " + q(tr) + " -o " + q(out)) == 0,
        "protocol honest run");
  {
    const auto j = nlohmann::json::parse(slurp(out));
    check(!j["aborted"].get<bool>() && j["estimates"].size() == 2, "protocol estimates");
    check(j["ledger"]["comparisons"].get<uint64_t>() > 0, "protocol ledger");
    check(nlohmann::json::parse(slurp(tr)).contains("reveals"), "protocol transcript");
  }
  check(run(bin + " protocol -n 2000 -m 2 -e 4 --interactive -o " + q(out)) == 0, "protocol interactive");

  const fs::path script = dir / "script.json";
  std::ofstream(script) << R"([{"step": "mac_tamper", "payload": [1], "at": 2}])";
  check(run(bin + " protocol -n 2000 -m 2 -e 4 --malicious-script " + q(script) + " -o " + q(out)) == 3,
        "protocol aborts on a tampered share");
  {
    const auto j = nlohmann::json::parse(slurp(out));
    check(j["aborted"].get<bool>() && j["estimates"].empty() && j["abort_stage"] == "mac",
          "abort reveals no estimate");
  }

  check(run(bin) != 0, "no subcommand is an error");
  fs::remove_all(dir);
  std::cout << (failures ? "cli smoke: FAILED\n" : "cli smoke: all ok\n");
  return failures ? 1 : 0;
}
