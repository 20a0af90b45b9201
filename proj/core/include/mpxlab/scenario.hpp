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


// JSON scenario specs and report serialization.

#ifndef MPXLAB_SCENARIO_HPP_
#define MPXLAB_SCENARIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mpxlab/simulator.hpp"

namespace mpxlab {

struct Scenario {
  PatternKind kind = PatternKind::kStencil2D5pt;
  std::vector<int> process_grid{2, 2};
  std::vector<int> thread_grid{3, 3};
  int iterations = 1;
  std::uint64_t payload_bytes = kDefaultPayload;
  Mechanism mechanism = Mechanism::kCommunicators;
  InfoHints hints;
  int channels = kDefaultChannels;
  bool unlimited_channels = false;
  // Empty means the mechanism's default mapping.
  std::optional<PolicyKind> policy;
  std::uint64_t seed = 0;

  int events = 64;
  int tiles = 4;
  std::uint64_t buffer_elems = 1024;
  int legion_comms = 1;
  EndpointNumbering endpoint_numbering = EndpointNumbering::kCompact;
  int partitioned_buffers = 1;
  CostModel cost;
  // "all" or "ns" (north/south faces only).
  std::string stencil_phase = "all";

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Throws kMalformedSpec naming the offending line or field.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string emit_scenario(const Scenario& s);

CommPattern build_pattern(const Scenario& s);
AssignOptions assign_options(const Scenario& s);
ChannelPool channel_pool(const Scenario& s);
MappingPolicy mapping_policy(const Scenario& s, const Assignment& a);

struct ResolvedScenario {
  CommPattern pattern;
  Assignment assignment;
  ChannelPool pool;
  MappingPolicy policy;
  CostModel cost;
  SimOptions options;
};

ResolvedScenario resolve(const Scenario& s);
SimReport simulate(const Scenario& s, bool record_events = false);

std::string report_json(const SimReport& r, bool include_events = true);
std::string csv_header();
std::string csv_row(const SimReport& r);

}  // namespace mpxlab

#endif  // MPXLAB_SCENARIO_HPP_
