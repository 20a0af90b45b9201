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

// Application communication patterns, the per-mechanism assignments that
// bind their operations to matching contexts, and closed-form counts.

#ifndef MPXLAB_PATTERNS_HPP_
#define MPXLAB_PATTERNS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpxlab/model.hpp"
#include "mpxlab/semantics.hpp"

namespace mpxlab {

inline constexpr std::uint64_t kDefaultPayload = 8192;

enum class PatternKind {
  kStencil2D5pt,
  kStencil2D9pt,
  kStencil3D27pt,
  kLegionPolling,
  kBspmmRMA,
  kMultithreadedAllreduce,
  kDynamicGraph,
  kFanIn,
};

std::string to_string(PatternKind kind);
std::optional<PatternKind> parse_pattern_kind(const std::string& name);
bool is_stencil(PatternKind kind);

using Offset = std::array<int, 3>;

struct PatternOp {
  std::uint32_t id = 0;
  OpKind kind = OpKind::kSend;
  ThreadRef actor;
  // Intended partner thread; for wildcard receives, the eventual sender.
  ThreadRef peer;
  bool wildcard = false;
  int iteration = 0;
  std::uint32_t program_index = 0;
  // Stencil offset index toward the partner, or -1.
  int direction = -1;
  // Application-level tag carried by the message.
  std::uint32_t app_tag = 0;
  // Messages sharing (sender, receiver, group_key) may share a
  // persistent partitioned request.
  int group_key = 0;
  std::optional<std::uint64_t> location;
  std::uint64_t bytes = 0;
  // The thread waits for all of its outstanding ops after issuing this one.
  bool wait_after = false;
};

struct CommPattern {
  PatternKind kind = PatternKind::kStencil2D5pt;
  std::vector<int> process_grid;
  std::vector<int> thread_grid;
  int iterations = 1;
  std::uint64_t payload = kDefaultPayload;
  std::uint64_t seed = 0;

  int num_processes = 0;
  int threads_per_process = 0;
  std::vector<PatternOp> ops;
  // (send op, recv op) pairs meant to match.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> matches;

  // Stencil metadata.
  std::vector<Offset> offsets;
  // Legion metadata: thread index of each node's polling thread.
  int poller_thread = -1;

  int dims() const { return static_cast<int>(thread_grid.size()); }

  // Ops of one process and iteration issued by distinct threads.
  bool intended_concurrent(const PatternOp& a, const PatternOp& b) const;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> intended_concurrency() const;

  // Threads of `process` that issue at least one op.
  std::vector<ThreadId> communicating_threads(ProcessId process) const;
};

struct StencilOptions {
  // Restrict to the two y-axis face offsets (the opposite-edge exchange).
  bool ns_faces_only = false;
};

CommPattern gen_stencil(int dims, int points, std::vector<int> process_grid,
                        std::vector<int> thread_grid, int iterations = 1,
                        std::uint64_t payload = kDefaultPayload,
                        StencilOptions options = {});

CommPattern gen_legion(int nodes, int task_threads, int events,
                       std::uint64_t seed = 1,
                       std::uint64_t payload = kDefaultPayload);
CommPattern gen_bspmm(int procs, int threads, int tiles,
                      std::uint64_t payload = kDefaultPayload);
CommPattern gen_allreduce(int procs, int threads, std::uint64_t buffer_elems,
                          int iterations = 1);
CommPattern gen_dynamic(int procs, int threads, int iterations,
                        std::uint64_t seed = 1,
                        std::uint64_t payload = kDefaultPayload);
// n sender threads on process 0, one receiver thread on process 1 posting
// its receives in reverse tag order.
CommPattern gen_fan_in(int senders, std::uint64_t payload = kDefaultPayload);

// Stencil geometry helpers, x-fastest numbering.
std::vector<int> unflatten(int index, const std::vector<int>& dims);
int flatten(const std::vector<int>& coords, const std::vector<int>& dims);
std::vector<Offset> stencil_offsets(int dims, int points);
std::string direction_name(const Offset& d);

enum class Mechanism {
  kCommunicators,
  kCommunicatorsNaive,
  kSharedCommunicator,
  kTagsWithHints,
  kEndpoints,
  kPartitioned,
  kWindows,
};

std::string to_string(Mechanism m);
std::optional<Mechanism> parse_mechanism(const std::string& name);

struct Binding {
  bool bound = false;
  OpKind kind = OpKind::kSend;
  MatchContextId context;
  std::optional<Rank> endpoint;
  Rank target = 0;
  Tag tag;
  std::optional<PartitionRef> partition;
  // Index into Assignment::comms, or -1.
  int comm_index = -1;
  // Collective instance key, shared by the ops that form one call.
  int collective_group = -1;
};

struct ObjectCounts {
  std::size_t communicators = 0;
  std::size_t endpoints = 0;
  std::size_t requests = 0;
  std::size_t windows = 0;

  friend bool operator==(const ObjectCounts&, const ObjectCounts&) = default;
};

struct RequestInfo {
  RequestId id = 0;
  PartitionDirection direction = PartitionDirection::kSend;
  ProcessId owner = 0;
  ProcessId peer = 0;
  Tag tag;
  ContextId comm = 0;
  // Pattern ops by partition index.
  std::vector<std::uint32_t> partitions;
  // The matching request on the peer.
  RequestId partner = 0;
};

enum class EndpointNumbering { kCompact, kDense };

struct Assignment {
  Mechanism mechanism = Mechanism::kCommunicators;
  InfoHints hints;
  std::vector<Binding> bindings;
  // Communicators created by the assignment, in creation order.
  std::vector<Communicator> comms;
  std::optional<EndpointsComm> endpoints;
  std::vector<Window> windows;
  std::vector<RequestInfo> requests;
  // Per-process object counts.
  ObjectCounts objects_created;
  // One WaitAll plus one barrier per process and iteration.
  bool sync_per_iteration = false;
  // Collective results need a user-level intranode reduction step.
  bool intranode_step = false;
};

struct AssignOptions {
  int legion_comms = 1;
  EndpointNumbering numbering = EndpointNumbering::kCompact;
  // Hints applied to the communicators the assignment creates; the tags
  // mechanism always adds its own relaxations.
  InfoHints hints;
};

Assignment assign_communicators_naive(const CommPattern& p,
                                      const AssignOptions& options = {});
Assignment assign_communicators_ideal(const CommPattern& p,
                                      const AssignOptions& options = {});
Assignment assign_shared_communicator(const CommPattern& p,
                                      const AssignOptions& options = {});
Assignment assign_tags(const CommPattern& p, const AssignOptions& options = {});
Assignment assign_endpoints(const CommPattern& p,
                            const AssignOptions& options = {});
Assignment assign_partitioned(const CommPattern& p,
                              const AssignOptions& options = {});
Assignment assign_windows(const CommPattern& p,
                          const AssignOptions& options = {});

// Dispatches on mechanism; unsupported combinations throw
// kUnsupportedPattern with the reason in the message.
Assignment assign(const CommPattern& p, Mechanism m,
                  const AssignOptions& options = {});

OpDescriptor descriptor(const CommPattern& p, const Assignment& a,
                        std::uint32_t op);

struct ValidationReport {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> violations;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> lost_parallelism;
  std::size_t contexts_used = 0;
  std::size_t pairs_examined = 0;

  bool clean() const { return violations.empty() && lost_parallelism.empty(); }
};

ValidationReport validate_assignment(const CommPattern& p, const Assignment& a);

// Closed forms.
long long min_communicators_3d(long long x, long long y, long long z);
long long min_channels_3d(long long x, long long y, long long z);

// Endpoint targets of the 2D 5-point listing with dense numbering.
struct ListingEndpointTargets {
  Rank north = 0;
  Rank south = 0;
  Rank east = 0;
  Rank west = 0;
};
ListingEndpointTargets listing_endpoint_targets(int tx, int ty, int tid_x,
                                                int tid_y, Rank n_rank,
                                                Rank s_rank, Rank e_rank,
                                                Rank w_rank);

enum class CollectiveMechanism { kCommunicators, kEndpoints, kPartitioned };

struct CollectiveFootprint {
  int steps = 0;
  std::uint64_t result_buffer_bytes = 0;
  // Per-thread partial buffers held before the intranode step.
  std::uint64_t scratch_bytes = 0;
};

CollectiveFootprint collective_footprint(CollectiveMechanism mechanism,
                                         std::uint64_t threads,
                                         std::uint64_t buffer_bytes);

}  // namespace mpxlab

#endif  // MPXLAB_PATTERNS_HPP_
