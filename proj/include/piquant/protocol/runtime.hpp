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
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "piquant/random.hpp"
#include "piquant/sharing.hpp"

namespace piquant::protocol {

struct Abort : std::runtime_error {
  explicit Abort(std::string stage)
      : std::runtime_error("abort in " + stage), stage(std::move(stage)) {}
  std::string stage;
};

// Composite sort keys: value * 2^kTagBits + tag. Tags below kRealTagBase are
// reserved for low sentinels, tags at or above kHighTagBase for high ones.
inline constexpr int kTagBits = 34;
inline constexpr int64_t kRealTagBase = int64_t(1) << 32;
inline constexpr int64_t kHighTagBase = int64_t(1) << 33;

inline Fp key_of(int64_t value, int64_t tag) {
  return Fp(u128(value) << kTagBits) + Fp(static_cast<u128>(tag));
}

// Smallest key with the given value: key < value_key(b) iff value < b.
inline Fp value_key(int64_t value) { return Fp(u128(value) << kTagBits); }

// What may ever be opened in the clear.
enum class RevealKind {
  Comparison,       // sort or bucket comparison bit on shuffled data
  SampleIndex,      // position drawn by the sampler on shuffled data
  BucketLabel,      // client-supplied bucket, interactive mode, shuffled
  BoundingEstimate,
  NoisyCount,
  DummyTotal,
  CheckBit,         // dummy and masking verification outcomes
  FinalEstimate,
};

inline const char* to_string(RevealKind k) {
  switch (k) {
    case RevealKind::Comparison: return "comparison";
    case RevealKind::SampleIndex: return "sample_index";
    case RevealKind::BucketLabel: return "bucket_label";
    case RevealKind::BoundingEstimate: return "bounding_estimate";
    case RevealKind::NoisyCount: return "noisy_count";
    case RevealKind::DummyTotal: return "dummy_total";
    case RevealKind::CheckBit: return "check_bit";
    case RevealKind::FinalEstimate: return "final_estimate";
  }
  return "?";
}

struct Reveal {
  RevealKind kind;
  int phase;
  int64_t value;
  bool after_shuffle;
};

struct Message {
  std::string label;
  int phase;
  uint64_t bytes;
};

// Everything observable in a run. Comparison and index reveals are frequent,
// so they are tallied per (kind, phase, after_shuffle); others are listed.
struct Transcript {
  std::vector<Reveal> reveals;
  std::map<std::tuple<RevealKind, int, bool>, uint64_t> tallies;
  std::vector<Message> messages;
  bool aborted = false;
  std::string abort_stage;

  void reveal(RevealKind k, int phase, int64_t value, bool after_shuffle) {
    if (k == RevealKind::Comparison || k == RevealKind::SampleIndex ||
        k == RevealKind::BucketLabel)
      ++tallies[{k, phase, after_shuffle}];
    else
      reveals.push_back({k, phase, value, after_shuffle});
  }

  size_t count(RevealKind k) const {
    size_t c = 0;
    for (const auto& r : reveals) c += r.kind == k;
    for (const auto& [key, n] : tallies) c += std::get<0>(key) == k ? n : 0;
    return c;
  }
};

inline nlohmann::json to_json(const Transcript& t) {
  nlohmann::json j;
  auto rv = nlohmann::json::array();
  for (const auto& r : t.reveals)
    rv.push_back({{"kind", to_string(r.kind)}, {"phase", r.phase}, {"value", r.value},
                  {"after_shuffle", r.after_shuffle}});
  j["reveals"] = rv;
  auto tl = nlohmann::json::array();
  for (const auto& [key, n] : t.tallies)
    tl.push_back({{"kind", to_string(std::get<0>(key))}, {"phase", std::get<1>(key)},
                  {"after_shuffle", std::get<2>(key)}, {"count", n}});
  j["tallies"] = tl;
  auto ms = nlohmann::json::array();
  for (const auto& m : t.messages)
    ms.push_back({{"label", m.label}, {"phase", m.phase}, {"bytes", m.bytes}});
  j["messages"] = ms;
  j["aborted"] = t.aborted;
  if (t.aborted) j["abort_stage"] = t.abort_stage;
  return j;
}

inline nlohmann::json to_json(const CostLedger& l) {
  return {{"comparisons", l.comparisons},     {"equality_tests", l.equality_tests},
          {"multiplications", l.multiplications}, {"truncations", l.truncations},
          {"randoms", l.randoms},             {"openings", l.openings},
          {"shuffles", l.shuffles},           {"rounds", l.rounds},
          {"bytes", l.bytes}};
}

// Scripted misbehaviour of the corrupted server S1. Each step fires on the
// `at`-th occurrence (0-based) of its tag; for mac_tamper `at` is the phase.
//   slicing_eta    payload: S1's shift noise vector
//   masking_entry  payload: [index, raw value] in S1's masking array
//   dummy_value    payload: [index, value] of one S1 dummy record
//   dummy_count    payload: [bucket, count] of S1 dummies
//   mac_tamper     payload: [delta] added to S1's share at the next opening
//   abort          S1 sends ABORT at its at-th noise submission
struct ScriptStep {
  std::string step;
  std::vector<int64_t> payload;
  int at = 0;
};

class MaliciousScript {
 public:
  MaliciousScript() = default;
  explicit MaliciousScript(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {}

  static MaliciousScript parse(const nlohmann::json& j) {
    static const char* kTags[] = {"slicing_eta", "masking_entry", "dummy_value",
                                  "dummy_count", "mac_tamper",    "abort"};
    if (!j.is_array()) throw std::invalid_argument("malicious script must be a JSON array");
    std::vector<ScriptStep> steps;
    for (const auto& e : j) {
      ScriptStep s;
      s.step = e.at("step").get<std::string>();
      if (std::find(std::begin(kTags), std::end(kTags), s.step) == std::end(kTags))
        throw std::invalid_argument("unknown script step: " + s.step);
      if (e.contains("payload")) s.payload = e["payload"].get<std::vector<int64_t>>();
      if (e.contains("at")) s.at = e["at"].get<int>();
      steps.push_back(std::move(s));
    }
    return MaliciousScript(std::move(steps));
  }

  bool empty() const { return steps_.empty(); }

  // Advances the occurrence counter of `tag` and returns the matching step.
  std::optional<ScriptStep> next(const std::string& tag) {
    const int occ = seen_[tag]++;
    for (const auto& s : steps_)
      if (s.step == tag && s.at == occ) return s;
    return std::nullopt;
  }

  // mac_tamper for `phase`, without a counter.
  std::optional<ScriptStep> tamper_for(int phase) const {
    for (const auto& s : steps_)
      if (s.step == "mac_tamper" && s.at == phase) return s;
    return std::nullopt;
  }

 private:
  std::vector<ScriptStep> steps_;
  std::map<std::string, int> seen_;
};

// A vector of shared records plus whether it has been through F_Shuffle since
// it was formed. Comparison outcomes may only be revealed when it has.
struct SharedVec {
  std::vector<SharePair> items;
  bool shuffled = false;

  size_t size() const { return items.size(); }
};

// One run of the two-server simulation: the dealer-backed context, the noise
// streams shared with the ideal pipeline, protocol-private randomness and the
// transcript.
class Session {
 public:
  Session(uint64_t seed, Streams& streams, int64_t d, MaliciousScript script = {})
      : ctx_(seed),
        streams_(streams),
        shuffle_rng_(seed, "protocol-shuffle"),
        pivot_rng_(seed, "protocol-pivot"),
        check_rng_(seed, "protocol-check"),
        d_(d),
        script_(std::move(script)) {}

  MpcContext& ctx() { return ctx_; }
  Streams& streams() { return streams_; }
  Rng& shuffle_rng() { return shuffle_rng_; }
  Rng& pivot_rng() { return pivot_rng_; }
  Rng& check_rng() { return check_rng_; }
  Transcript& transcript() { return transcript_; }
  MaliciousScript& script() { return script_; }
  int64_t d() const { return d_; }

  // Mask magnitude in key space: exceeds the spread of all keys.
  Fp mask() const { return Fp(u128(d_ + 2) << kTagBits); }

  int phase() const { return phase_; }
  void enter_phase(int p) {
    phase_ = p;
    if (auto s = script_.tamper_for(p)) ctx_.arm_tamper(Fp::from_int(s->payload.at(0)));
  }

  // Opens a value and records it.
  int64_t open(const SharePair& s, RevealKind k, bool after_shuffle = false) {
    const int64_t v = ctx_.rec(s).to_i64();
    transcript_.reveal(k, phase_, v, after_shuffle);
    return v;
  }

  // Cmp with its outcome opened, allowed only on shuffled data.
  bool less_revealed(const SharePair& a, const SharePair& b, bool after_shuffle) {
    if (!after_shuffle) throw std::logic_error("comparison revealed before shuffle");
    return open(ctx_.cmp(a, b), RevealKind::Comparison, true) == 1;
  }
  bool less_public_revealed(const SharePair& a, Fp c, bool after_shuffle) {
    if (!after_shuffle) throw std::logic_error("comparison revealed before shuffle");
    return open(ctx_.cmp_public(a, c), RevealKind::Comparison, true) == 1;
  }

  // Coalesces the bytes sent since the previous call into one message.
  void note(const std::string& label) {
    const uint64_t b = ctx_.ledger().bytes;
    transcript_.messages.push_back({label, phase_, b - last_bytes_});
    last_bytes_ = b;
  }

 private:
  MpcContext ctx_;
  Streams& streams_;
  Rng shuffle_rng_, pivot_rng_, check_rng_;
  int64_t d_;
  MaliciousScript script_;
  Transcript transcript_;
  int phase_ = 0;
  uint64_t last_bytes_ = 0;
};

}  // namespace piquant::protocol
