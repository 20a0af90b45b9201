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

// Deterministic discrete-event engine over (pattern, assignment, mapping).

#ifndef MPXLAB_SIMULATOR_HPP_
#define MPXLAB_SIMULATOR_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mpxlab/channels.hpp"
#include "mpxlab/patterns.hpp"

namespace mpxlab {

using Tick = std::uint64_t;

enum class EventKind {
  kIssue,
  kChannelAcquire,
  kTransfer,
  kMatchAttempt,
  kMatchSuccess,
  kWaitBlock,
  kWaitRelease,
  kBarrier,
  kProbeIteration,
};

std::string to_string(EventKind kind);

inline constexpr std::uint32_t kNoOp = std::numeric_limits<std::uint32_t>::max();

struct Event {
  Tick time = 0;
  EventKind kind = EventKind::kIssue;
  std::uint32_t op = kNoOp;
  ProcessId process = 0;
  ThreadId thread = -1;
  int channel = -1;
  int iteration = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct CostModel {
  Tick per_message_issue = 1;
  Tick per_match_attempt = 1;
  Tick per_channel_transfer = 4;
  Tick sync_wait = 2;
  Tick probe = 1;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct SimReport {
  std::string mechanism;
  std::string policy;
  std::uint64_t seed = 0;
  Tick makespan = 0;
  std::uint64_t max_concurrent_transfers = 0;
  // Highest number of busy channels on any single process.
  std::uint64_t max_channels_busy_per_process = 0;
  std::uint64_t match_attempts_total = 0;
  std::uint64_t matches_total = 0;
  std::uint64_t messages_total = 0;
  std::uint64_t transfers_total = 0;
  std::uint64_t sync_wait_events = 0;
  std::uint64_t barrier_events = 0;
  std::uint64_t probe_iterations = 0;
  std::vector<Tick> channel_occupancy;
  std::uint64_t memory_footprint_bytes = 0;
  ObjectCounts objects;
  std::size_t objects_total = 0;
  std::vector<Event> events;
};

struct SimOptions {
  bool record_events = false;
  int partitioned_buffers = 1;
};

SimReport run(const CommPattern& pattern, const Assignment& assignment,
              const ChannelPool& pool, const MappingPolicy& policy,
              const CostModel& cost = {}, std::uint64_t seed = 0,
              const SimOptions& options = {});

// A sensible mapping for each mechanism when none is configured.
MappingPolicy default_policy(const Assignment& assignment);

struct ComparisonRow {
  Mechanism mechanism = Mechanism::kCommunicators;
  SimReport report;
  // Makespan relative to the first row.
  double makespan_ratio = 1.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

ComparisonTable compare_mechanisms(const CommPattern& pattern,
                                   const std::vector<Mechanism>& mechanisms,
                                   const ChannelPool& pool,
                                   const CostModel& cost = {},
                                   std::uint64_t seed = 0,
                                   const AssignOptions& options = {});

}  // namespace mpxlab

#endif  // MPXLAB_SIMULATOR_HPP_
