// Copyright 2026 The mpxlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mpxlab/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mpxlab {
namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  fail(ErrorKind::kMalformedSpec, "field '" + field + "': " + why);
}

std::int64_t get_int(const json& j, const char* field, std::int64_t lo) {
  const json& v = j.at(field);
  if (!v.is_number_integer()) bad_field(field, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo) bad_field(field, "must be >= " + std::to_string(lo));
  return x;
}

std::string get_string(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_string()) bad_field(field, "expected a string");
  return v.get<std::string>();
}

std::vector<int> get_grid(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_array() || v.empty()) bad_field(field, "expected a non-empty array");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
      bad_field(field, "entries must be positive integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

bool get_bool(const json& j, const char* field, const std::string& path) {
  const json& v = j.at(field);
  if (!v.is_boolean()) bad_field(path, "expected true or false");
  return v.get<bool>();
}

// Translates a byte offset from the parser into a 1-based line number.
std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "kind",        "process_grid",      "thread_grid",  "iterations",
      "payload_bytes", "mechanism",       "hints",        "channel_pool",
      "policy",      "seed",              "events",       "tiles",
      "buffer_elems", "legion_comms",     "endpoint_numbering",
      "partitioned_buffers", "cost",      "stencil_phase"};
  return keys;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kMalformedSpec,
         "line " + std::to_string(line_of(text, e.byte)) + ": invalid JSON");
  }
  if (!j.is_object()) fail(ErrorKind::kMalformedSpec, "line 1: spec must be an object");
  for (const auto& [key, value] : j.items()) {
    if (known_keys().count(key) == 0) bad_field(key, "unknown key");
  }
  for (const char* required : {"kind", "process_grid", "thread_grid", "mechanism"}) {
    if (!j.contains(required)) bad_field(required, "missing");
  }

  Scenario s;
  const auto kind = parse_pattern_kind(get_string(j, "kind"));
  if (!kind) bad_field("kind", "unknown pattern '" + j["kind"].get<std::string>() + "'");
  s.kind = *kind;
  s.process_grid = get_grid(j, "process_grid");
  s.thread_grid = get_grid(j, "thread_grid");
  const auto mech = parse_mechanism(get_string(j, "mechanism"));
  if (!mech) {
    bad_field("mechanism", "unknown mechanism '" + j["mechanism"].get<std::string>() + "'");
  }
  s.mechanism = *mech;

  if (j.contains("iterations")) s.iterations = static_cast<int>(get_int(j, "iterations", 1));
  if (j.contains("payload_bytes")) {
    s.payload_bytes = static_cast<std::uint64_t>(get_int(j, "payload_bytes", 1));
  }
  if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
  if (j.contains("hints")) {
    const json& h = j["hints"];
    if (!h.is_object()) bad_field("hints", "expected an object");
    for (const auto& [key, value] : h.items()) {
      const std::string path = "hints." + key;
      if (key == "allow_overtaking") {
        s.hints.allow_overtaking = get_bool(h, "allow_overtaking", path);
      } else if (key == "no_any_tag") {
        s.hints.no_any_tag = get_bool(h, "no_any_tag", path);
      } else if (key == "no_any_source") {
        s.hints.no_any_source = get_bool(h, "no_any_source", path);
      } else if (key == "accumulate_ordering_none") {
        s.hints.accumulate_ordering_none = get_bool(h, "accumulate_ordering_none", path);
      } else {
        bad_field(path, "unknown hint");
      }
    }
  }
  if (j.contains("channel_pool")) {
    const json& v = j["channel_pool"];
    if (v.is_string() && v.get<std::string>() == "unlimited") {
      s.unlimited_channels = true;
    } else {
      s.channels = static_cast<int>(get_int(j, "channel_pool", 1));
    }
  }
  if (j.contains("policy")) {
    const auto policy = parse_policy(get_string(j, "policy"));
    if (!policy) bad_field("policy", "unknown policy '" + j["policy"].get<std::string>() + "'");
    s.policy = *policy;
  }
  if (j.contains("events")) s.events = static_cast<int>(get_int(j, "events", 1));
  if (j.contains("tiles")) s.tiles = static_cast<int>(get_int(j, "tiles", 1));
  if (j.contains("buffer_elems")) {
    s.buffer_elems = static_cast<std::uint64_t>(get_int(j, "buffer_elems", 1));
  }
  if (j.contains("legion_comms")) {
    s.legion_comms = static_cast<int>(get_int(j, "legion_comms", 1));
  }
  if (j.contains("endpoint_numbering")) {
    const std::string n = get_string(j, "endpoint_numbering");
    if (n == "compact") {
      s.endpoint_numbering = EndpointNumbering::kCompact;
    } else if (n == "dense") {
      s.endpoint_numbering = EndpointNumbering::kDense;
    } else {
      bad_field("endpoint_numbering", "expected 'compact' or 'dense'");
    }
  }
  if (j.contains("partitioned_buffers")) {
    s.partitioned_buffers = static_cast<int>(get_int(j, "partitioned_buffers", 1));
  }
  if (j.contains("stencil_phase")) {
    s.stencil_phase = get_string(j, "stencil_phase");
    if (s.stencil_phase != "all" && s.stencil_phase != "ns") {
      bad_field("stencil_phase", "expected 'all' or 'ns'");
    }
  }
  if (j.contains("cost")) {
    const json& c = j["cost"];
    if (!c.is_object()) bad_field("cost", "expected an object");
    for (const auto& [key, value] : c.items()) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        bad_field("cost." + key, "expected a non-negative integer");
      }
      const auto v = value.get<Tick>();
      if (key == "per_message_issue") {
        s.cost.per_message_issue = v;
      } else if (key == "per_match_attempt") {
        s.cost.per_match_attempt = v;
      } else if (key == "per_channel_transfer") {
        s.cost.per_channel_transfer = v;
      } else if (key == "sync_wait") {
        s.cost.sync_wait = v;
      } else if (key == "probe") {
        s.cost.probe = v;
      } else {
        bad_field("cost." + key, "unknown cost term");
      }
    }
  }
  if (is_stencil(s.kind) && s.process_grid.size() != s.thread_grid.size()) {
    bad_field("thread_grid", "must have as many dimensions as process_grid");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kMalformedSpec, "cannot read spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["process_grid"] = s.process_grid;
  j["thread_grid"] = s.thread_grid;
  j["iterations"] = s.iterations;
  j["payload_bytes"] = s.payload_bytes;
  j["mechanism"] = to_string(s.mechanism);
  j["hints"] = {{"allow_overtaking", s.hints.allow_overtaking},
                {"no_any_tag", s.hints.no_any_tag},
                {"no_any_source", s.hints.no_any_source},
                {"accumulate_ordering_none", s.hints.accumulate_ordering_none}};
  if (s.unlimited_channels) {
    j["channel_pool"] = "unlimited";
  } else {
    j["channel_pool"] = s.channels;
  }
  if (s.policy) j["policy"] = to_string(*s.policy);
  j["seed"] = s.seed;
  j["events"] = s.events;
  j["tiles"] = s.tiles;
  j["buffer_elems"] = s.buffer_elems;
  j["legion_comms"] = s.legion_comms;
  j["endpoint_numbering"] =
      s.endpoint_numbering == EndpointNumbering::kDense ? "dense" : "compact";
  j["partitioned_buffers"] = s.partitioned_buffers;
  j["stencil_phase"] = s.stencil_phase;
  j["cost"] = {{"per_message_issue", s.cost.per_message_issue},
               {"per_match_attempt", s.cost.per_match_attempt},
               {"per_channel_transfer", s.cost.per_channel_transfer},
               {"sync_wait", s.cost.sync_wait},
               {"probe", s.cost.probe}};
  return j.dump(2) + "\n";
}

CommPattern build_pattern(const Scenario& s) {
  const int procs = s.process_grid.front();
  const int threads = s.thread_grid.front();
  switch (s.kind) {
    case PatternKind::kStencil2D5pt:
    case PatternKind::kStencil2D9pt:
    case PatternKind::kStencil3D27pt: {
      const int dims = s.kind == PatternKind::kStencil3D27pt ? 3 : 2;
      const int points = s.kind == PatternKind::kStencil2D5pt   ? 5
                         : s.kind == PatternKind::kStencil2D9pt ? 9
                                                              : 27;
      if (static_cast<int>(s.process_grid.size()) != dims) {
        bad_field("process_grid", "expected " + std::to_string(dims) + " dimensions");
      }
      StencilOptions options;
      options.ns_faces_only = s.stencil_phase == "ns";
      return gen_stencil(dims, points, s.process_grid, s.thread_grid, s.iterations,
                         s.payload_bytes, options);
    }
    case PatternKind::kLegionPolling:
      return gen_legion(procs, threads, s.events, s.seed, s.payload_bytes);
    case PatternKind::kBspmmRMA:
      return gen_bspmm(procs, threads, s.tiles, s.payload_bytes);
    case PatternKind::kMultithreadedAllreduce:
      return gen_allreduce(procs, threads, s.buffer_elems, s.iterations);
    case PatternKind::kDynamicGraph:
      return gen_dynamic(procs, threads, s.iterations, s.seed, s.payload_bytes);
    case PatternKind::kFanIn:
      return gen_fan_in(threads, s.payload_bytes);
  }
  fail(ErrorKind::kMalformedSpec, "field 'kind': unsupported pattern");
}

AssignOptions assign_options(const Scenario& s) {
  AssignOptions o;
  o.legion_comms = s.legion_comms;
  o.numbering = s.endpoint_numbering;
  o.hints = s.hints;
  return o;
}

ChannelPool channel_pool(const Scenario& s) {
  return s.unlimited_channels ? ChannelPool::unlimited() : ChannelPool::of(s.channels);
}

MappingPolicy mapping_policy(const Scenario& s, const Assignment& a) {
  if (!s.policy) return default_policy(a);
  switch (*s.policy) {
    case PolicyKind::kTagBitsOneToOne:
      if (!a.hints.tag_vci_bits) {
        fail(ErrorKind::kMapping, "tag_bits policy needs a tag layout (use the tags mechanism)");
      }
      return MappingPolicy::tag_bits(*a.hints.tag_vci_bits);
    case PolicyKind::kRoundRobinPerCommunicator: return MappingPolicy::round_robin();
    case PolicyKind::kHashCommunicator: return MappingPolicy::hash();
    case PolicyKind::kEndpointIdentity: return MappingPolicy::endpoint_identity();
    case PolicyKind::kPartitionIndex: return MappingPolicy::partition_index();
  }
  return default_policy(a);
}

ResolvedScenario resolve(const Scenario& s) {
  ResolvedScenario r;
  r.pattern = build_pattern(s);
  r.assignment = assign(r.pattern, s.mechanism, assign_options(s));
  r.pool = channel_pool(s);
  r.policy = mapping_policy(s, r.assignment);
  r.cost = s.cost;
  r.options.partitioned_buffers = s.partitioned_buffers;
  return r;
}

SimReport simulate(const Scenario& s, bool record_events) {
  ResolvedScenario r = resolve(s);
  r.options.record_events = record_events;
  return run(r.pattern, r.assignment, r.pool, r.policy, r.cost, s.seed, r.options);
}

}  // namespace mpxlab
