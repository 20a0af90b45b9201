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

// Domain types: communicators, endpoints, windows, tags, hints and
// partitioned requests.

#ifndef MPXLAB_MODEL_HPP_
#define MPXLAB_MODEL_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpxlab/error.hpp"

namespace mpxlab {

using ProcessId = std::int32_t;
using ThreadId = std::int32_t;
using Rank = std::int32_t;
using ContextId = std::uint64_t;
using WindowId = std::uint64_t;
using RequestId = std::uint64_t;

inline constexpr Rank kAnySource = -1;
inline constexpr int kDefaultTagWidth = 23;

enum class TagPlacement { kMostSignificant, kLeastSignificant };
enum class TagHashType { kOneToOne, kHashed };

struct TagBitLayout {
  int num_vcis = 1;
  int num_tid_bits = 1;
  int num_app_bits = 8;
  int tag_width = kDefaultTagWidth;
  TagPlacement placement = TagPlacement::kMostSignificant;
  TagHashType hash_type = TagHashType::kOneToOne;

  // Throws kInvalidArgument on an inconsistent layout.
  void validate() const;

  friend bool operator==(const TagBitLayout&, const TagBitLayout&) = default;
};

class Tag {
 public:
  using Raw = std::uint32_t;

  constexpr Tag() = default;
  constexpr explicit Tag(Raw raw) : raw_(raw) {}

  static constexpr Tag any() { return Tag(kAnyRaw); }

  constexpr bool is_any() const { return raw_ == kAnyRaw; }
  constexpr Raw raw() const { return raw_; }

  friend constexpr auto operator<=>(Tag, Tag) = default;

 private:
  // Every layout is capped at 31 bits, so this value is never encodable.
  static constexpr Raw kAnyRaw = 0xFFFFFFFFu;
  Raw raw_ = 0;
};

struct DecodedTag {
  std::uint32_t src_tid = 0;
  std::uint32_t dst_tid = 0;
  std::uint32_t app = 0;

  friend bool operator==(const DecodedTag&, const DecodedTag&) = default;
};

Tag encode_tag(std::uint32_t src_tid, std::uint32_t dst_tid,
               std::uint32_t app_bits, const TagBitLayout& layout);
DecodedTag decode_tag(Tag tag, const TagBitLayout& layout);

// Plain tag for callers that do not use thread bits; checks the width.
Tag make_tag(std::uint32_t value, int tag_width = kDefaultTagWidth);

struct InfoHints {
  bool allow_overtaking = false;
  bool no_any_tag = false;
  bool no_any_source = false;
  bool accumulate_ordering_none = false;
  std::optional<TagBitLayout> tag_vci_bits;

  void validate() const;

  bool wildcards_possible() const { return !no_any_tag || !no_any_source; }

  // Bit i of `flags` sets the i-th boolean in declaration order.
  static InfoHints from_flags(unsigned flags);
  unsigned flags() const;

  // True when every flag set in `other` is also set here.
  bool at_least(const InfoHints& other) const;

  friend bool operator==(const InfoHints&, const InfoHints&) = default;
};

enum class CommPurpose { kGeneral, kParallelismExposure };

struct Communicator {
  ContextId context_id = 0;
  std::vector<ProcessId> group;
  InfoHints hints;
  CommPurpose purpose = CommPurpose::kGeneral;
};

struct Window {
  WindowId window_id = 0;
  InfoHints hints;
};

class EndpointsComm {
 public:
  EndpointsComm(Communicator comm, Communicator parent,
                std::vector<int> eps_per_process);

  const Communicator& comm() const { return comm_; }
  const Communicator& parent() const { return parent_; }
  std::span<const int> eps_per_process() const { return eps_; }

  int num_processes() const { return static_cast<int>(eps_.size()); }
  Rank size() const { return offsets_.back(); }

  // `process` is the process's rank in the parent communicator.
  Rank rank_of(int process, int local) const;
  std::pair<int, int> locate(Rank rank) const;

 private:
  Communicator comm_;
  Communicator parent_;
  std::vector<int> eps_;
  std::vector<Rank> offsets_;
};

// Hands out scenario-unique ids. Context 0 is the world communicator.
class ObjectRegistry {
 public:
  static constexpr ContextId kWorldContext = 0;

  Communicator world(int num_processes) const;
  Communicator create_comm(std::vector<ProcessId> group, InfoHints hints = {},
                           CommPurpose purpose = CommPurpose::kGeneral);
  Communicator dup(const Communicator& comm);
  Communicator dup(const Communicator& comm, InfoHints hints);
  Window create_window(InfoHints hints = {});
  RequestId next_request_id() { return next_request_++; }

  std::size_t communicators_created() const { return comms_created_; }
  std::size_t windows_created() const { return windows_created_; }

 private:
  // Disjoint ranges keep ids from different families distinguishable.
  ContextId next_context_ = 1;
  WindowId next_window_ = WindowId{1} << 32;
  RequestId next_request_ = RequestId{1} << 40;
  std::size_t comms_created_ = 0;
  std::size_t windows_created_ = 0;
};

EndpointsComm create_endpoints_comm(ObjectRegistry& registry,
                                    const Communicator& parent,
                                    std::span<const int> eps_per_process);

enum class PartitionDirection { kSend, kRecv };
enum class RequestState { kInactive, kActive, kCompleting, kComplete };

enum class PartitionEventKind { kStart, kPready, kParrivedQuery, kWaitAll };

struct PartitionEvent {
  PartitionEventKind kind = PartitionEventKind::kStart;
  int partition = 0;

  static PartitionEvent start() { return {PartitionEventKind::kStart, 0}; }
  static PartitionEvent pready(int i) { return {PartitionEventKind::kPready, i}; }
  static PartitionEvent parrived(int i) {
    return {PartitionEventKind::kParrivedQuery, i};
  }
  static PartitionEvent wait_all() { return {PartitionEventKind::kWaitAll, 0}; }
};

enum class TransitionOutcome { kOk, kFlagSet, kFlagUnset, kWaitBlocked, kCompleted };

class PartitionedRequest {
 public:
  PartitionedRequest(RequestId id, PartitionDirection direction,
                     int num_partitions, std::size_t partition_size,
                     ProcessId peer, Tag tag, ContextId comm);

  RequestId id() const { return id_; }
  PartitionDirection direction() const { return direction_; }
  int num_partitions() const { return static_cast<int>(flags_.size()); }
  std::size_t partition_size() const { return partition_size_; }
  ProcessId peer() const { return peer_; }
  Tag tag() const { return tag_; }
  ContextId comm() const { return comm_; }
  RequestState state() const { return state_; }

  bool flag(int i) const;
  bool all_flags_set() const;

  // Applies one user-visible event.
  TransitionOutcome apply(PartitionEvent event);

  // Transport side: partition i of a receive request has landed.
  // Completes a pending WaitAll once the last partition lands.
  void deliver(int i);

 private:
  void check_index(int i) const;
  void maybe_complete();

  RequestId id_;
  PartitionDirection direction_;
  std::size_t partition_size_;
  ProcessId peer_;
  Tag tag_;
  ContextId comm_;
  RequestState state_ = RequestState::kInactive;
  std::vector<bool> flags_;
};

// Functional form of PartitionedRequest::apply.
std::pair<PartitionedRequest, TransitionOutcome> partitioned_transition(
    PartitionedRequest request, PartitionEvent event);

enum class OpKind {
  kSend,
  kRecv,
  kPut,
  kGet,
  kAccumulate,
  kFlush,
  kCollectiveCall,
  kPartitionReady,
  kPartitionArrivedTest,
};

enum class ContextFamily { kComm, kEndpoints, kWindow, kPartitionedRequest };

struct MatchContextId {
  ContextFamily family = ContextFamily::kComm;
  // Communicator context, window id or request id depending on family.
  std::uint64_t id = 0;
  // Owning communicator context of a partitioned request.
  ContextId comm = 0;

  static MatchContextId comm_context(ContextId id) {
    return {ContextFamily::kComm, id, id};
  }
  static MatchContextId endpoints(ContextId id) {
    return {ContextFamily::kEndpoints, id, id};
  }
  static MatchContextId window(WindowId id) {
    return {ContextFamily::kWindow, id, 0};
  }
  static MatchContextId partitioned(RequestId id, ContextId comm) {
    return {ContextFamily::kPartitionedRequest, id, comm};
  }

  friend auto operator<=>(const MatchContextId&, const MatchContextId&) = default;
};

struct ThreadRef {
  ProcessId process = 0;
  ThreadId thread = 0;

  friend auto operator<=>(const ThreadRef&, const ThreadRef&) = default;
};

struct PartitionRef {
  RequestId request = 0;
  int index = 0;

  friend auto operator<=>(const PartitionRef&, const PartitionRef&) = default;
};

struct OpDescriptor {
  OpKind kind = OpKind::kSend;
  ThreadRef source;
  std::optional<Rank> endpoint;
  // Destination for sends and RMA, source for receives; may be kAnySource.
  Rank target = 0;
  Tag tag;
  MatchContextId context;
  std::optional<std::uint64_t> target_location;
  std::optional<PartitionRef> partition;
  std::uint32_t program_index = 0;

  Rank origin() const { return endpoint.value_or(source.process); }

  friend bool operator==(const OpDescriptor&, const OpDescriptor&) = default;
};

bool is_point_to_point(OpKind kind);
bool is_rma(OpKind kind);
bool is_partition(OpKind kind);

// Checks the addressing family and wildcard use against `hints`.
void validate_descriptor(const OpDescriptor& op, const InfoHints& hints);

std::string to_string(OpKind kind);
std::string to_string(const OpDescriptor& op);

}  // namespace mpxlab

#endif  // MPXLAB_MODEL_HPP_
