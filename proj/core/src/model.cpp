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

#include "mpxlab/model.hpp"

#include <algorithm>
#include <sstream>

namespace mpxlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kTagOverflow: return "tag-overflow";
    case ErrorKind::kDoubleReady: return "double-ready";
    case ErrorKind::kInvalidOp: return "invalid-op";
    case ErrorKind::kIllegalTransition: return "illegal-transition";
    case ErrorKind::kOracleBound: return "oracle-bound";
    case ErrorKind::kIncompleteAssignment: return "incomplete-assignment";
    case ErrorKind::kInvalidAssignment: return "invalid-assignment";
    case ErrorKind::kMapping: return "mapping";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kUnsupportedPattern: return "unsupported-pattern";
    case ErrorKind::kMalformedSpec: return "malformed-spec";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

namespace {

constexpr int kMaxTagWidth = 31;

std::uint32_t field_limit(int bits) {
  return bits >= 32 ? 0xFFFFFFFFu : (std::uint32_t{1} << bits);
}

}  // namespace

void TagBitLayout::validate() const {
  if (num_vcis < 1) fail(ErrorKind::kInvalidArgument, "num_vcis must be >= 1");
  if (num_tid_bits < 1) {
    fail(ErrorKind::kInvalidArgument, "num_tid_bits must be >= 1");
  }
  if (num_app_bits < 0) {
    fail(ErrorKind::kInvalidArgument, "num_app_bits must be >= 0");
  }
  if (tag_width < 1 || tag_width > kMaxTagWidth) {
    fail(ErrorKind::kInvalidArgument, "tag width must be in [1, 31]");
  }
  if (2 * num_tid_bits + num_app_bits > tag_width) {
    fail(ErrorKind::kInvalidArgument,
         "2 * num_tid_bits + num_app_bits exceeds the tag width");
  }
  if (hash_type == TagHashType::kOneToOne &&
      static_cast<std::uint64_t>(num_vcis) > (std::uint64_t{1} << num_tid_bits)) {
    fail(ErrorKind::kInvalidArgument,
         "one-to-one mapping needs num_vcis <= 2^num_tid_bits");
  }
}

Tag encode_tag(std::uint32_t src_tid, std::uint32_t dst_tid,
               std::uint32_t app_bits, const TagBitLayout& layout) {
  layout.validate();
  const int tid = layout.num_tid_bits;
  const int app = layout.num_app_bits;
  if (src_tid >= field_limit(tid)) {
    fail(ErrorKind::kTagOverflow,
         "src_tid " + std::to_string(src_tid) + " needs more than " +
             std::to_string(tid) + " bits");
  }
  if (dst_tid >= field_limit(tid)) {
    fail(ErrorKind::kTagOverflow,
         "dst_tid " + std::to_string(dst_tid) + " needs more than " +
             std::to_string(tid) + " bits");
  }
  if (app_bits >= field_limit(app)) {
    fail(ErrorKind::kTagOverflow,
         "application tag " + std::to_string(app_bits) + " needs more than " +
             std::to_string(app) + " bits");
  }
  std::uint32_t raw = 0;
  if (layout.placement == TagPlacement::kMostSignificant) {
    raw = (src_tid << (tid + app)) | (dst_tid << app) | app_bits;
  } else {
    raw = (app_bits << (2 * tid)) | (src_tid << tid) | dst_tid;
  }
  return Tag(raw);
}

DecodedTag decode_tag(Tag tag, const TagBitLayout& layout) {
  layout.validate();
  if (tag.is_any()) fail(ErrorKind::kInvalidArgument, "cannot decode ANY_TAG");
  const int tid = layout.num_tid_bits;
  const int app = layout.num_app_bits;
  const std::uint32_t tid_mask = field_limit(tid) - 1;
  const std::uint32_t app_mask = field_limit(app) - 1;
  const std::uint32_t raw = tag.raw();
  DecodedTag out;
  if (layout.placement == TagPlacement::kMostSignificant) {
    out.app = raw & app_mask;
    out.dst_tid = (raw >> app) & tid_mask;
    out.src_tid = (raw >> (tid + app)) & tid_mask;
  } else {
    out.dst_tid = raw & tid_mask;
    out.src_tid = (raw >> tid) & tid_mask;
    out.app = (raw >> (2 * tid)) & app_mask;
  }
  return out;
}

Tag make_tag(std::uint32_t value, int tag_width) {
  if (tag_width < 1 || tag_width > kMaxTagWidth) {
    fail(ErrorKind::kInvalidArgument, "tag width must be in [1, 31]");
  }
  if (value >= field_limit(tag_width)) {
    fail(ErrorKind::kTagOverflow, "tag " + std::to_string(value) +
                                      " exceeds " + std::to_string(tag_width) +
                                      " bits");
  }
  return Tag(value);
}

void InfoHints::validate() const {
  if (tag_vci_bits) {
    if (!no_any_tag || !no_any_source) {
      fail(ErrorKind::kInvalidArgument,
           "tag_vci_bits requires no_any_tag and no_any_source");
    }
    tag_vci_bits->validate();
  }
}

InfoHints InfoHints::from_flags(unsigned flags) {
  InfoHints h;
  h.allow_overtaking = (flags & 1u) != 0;
  h.no_any_tag = (flags & 2u) != 0;
  h.no_any_source = (flags & 4u) != 0;
  h.accumulate_ordering_none = (flags & 8u) != 0;
  return h;
}

unsigned InfoHints::flags() const {
  return (allow_overtaking ? 1u : 0u) | (no_any_tag ? 2u : 0u) |
         (no_any_source ? 4u : 0u) | (accumulate_ordering_none ? 8u : 0u);
}

bool InfoHints::at_least(const InfoHints& other) const {
  return (flags() & other.flags()) == other.flags();
}

EndpointsComm::EndpointsComm(Communicator comm, Communicator parent,
                             std::vector<int> eps_per_process)
    : comm_(std::move(comm)),
      parent_(std::move(parent)),
      eps_(std::move(eps_per_process)) {
  offsets_.reserve(eps_.size() + 1);
  offsets_.push_back(0);
  for (int n : eps_) {
    if (n < 1) {
      fail(ErrorKind::kInvalidArgument,
           "every process needs at least one endpoint");
    }
    offsets_.push_back(offsets_.back() + n);
  }
}

Rank EndpointsComm::rank_of(int process, int local) const {
  if (process < 0 || process >= num_processes()) {
    fail(ErrorKind::kInvalidArgument,
         "process " + std::to_string(process) + " outside the parent group");
  }
  if (local < 0 || local >= eps_[static_cast<std::size_t>(process)]) {
    fail(ErrorKind::kInvalidArgument,
         "local endpoint " + std::to_string(local) + " out of range");
  }
  return offsets_[static_cast<std::size_t>(process)] + local;
}

std::pair<int, int> EndpointsComm::locate(Rank rank) const {
  if (rank < 0 || rank >= size()) {
    fail(ErrorKind::kInvalidArgument,
         "endpoint rank " + std::to_string(rank) + " out of range");
  }
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), rank);
  const auto p = static_cast<int>(it - offsets_.begin()) - 1;
  return {p, rank - offsets_[static_cast<std::size_t>(p)]};
}

Communicator ObjectRegistry::world(int num_processes) const {
  Communicator c;
  c.context_id = kWorldContext;
  for (int p = 0; p < num_processes; ++p) c.group.push_back(p);
  return c;
}

Communicator ObjectRegistry::create_comm(std::vector<ProcessId> group,
                                         InfoHints hints, CommPurpose purpose) {
  hints.validate();
  Communicator c;
  c.context_id = next_context_++;
  c.group = std::move(group);
  c.hints = std::move(hints);
  c.purpose = purpose;
  ++comms_created_;
  return c;
}

Communicator ObjectRegistry::dup(const Communicator& comm) {
  return create_comm(comm.group, comm.hints, comm.purpose);
}

Communicator ObjectRegistry::dup(const Communicator& comm, InfoHints hints) {
  return create_comm(comm.group, std::move(hints), comm.purpose);
}

Window ObjectRegistry::create_window(InfoHints hints) {
  hints.validate();
  ++windows_created_;
  return Window{next_window_++, std::move(hints)};
}

EndpointsComm create_endpoints_comm(ObjectRegistry& registry,
                                    const Communicator& parent,
                                    std::span<const int> eps_per_process) {
  if (eps_per_process.size() != parent.group.size()) {
    fail(ErrorKind::kInvalidArgument,
         "need one endpoint count per process of the parent");
  }
  for (int n : eps_per_process) {
    if (n < 1) {
      fail(ErrorKind::kInvalidArgument,
           "every process needs at least one endpoint");
    }
  }
  // The endpoints communicator gets its own context; it is not counted as
  // a communicator object in per-mechanism tallies.
  Communicator comm = registry.dup(parent);
  return EndpointsComm(std::move(comm), parent,
                       {eps_per_process.begin(), eps_per_process.end()});
}

PartitionedRequest::PartitionedRequest(RequestId id,
                                       PartitionDirection direction,
                                       int num_partitions,
                                       std::size_t partition_size,
                                       ProcessId peer, Tag tag, ContextId comm)
    : id_(id),
      direction_(direction),
      partition_size_(partition_size),
      peer_(peer),
      tag_(tag),
      comm_(comm) {
  if (num_partitions < 1) {
    fail(ErrorKind::kInvalidArgument, "num_partitions must be >= 1");
  }
  flags_.assign(static_cast<std::size_t>(num_partitions), false);
}

void PartitionedRequest::check_index(int i) const {
  if (i < 0 || i >= num_partitions()) {
    fail(ErrorKind::kInvalidArgument,
         "partition " + std::to_string(i) + " out of range");
  }
}

bool PartitionedRequest::flag(int i) const {
  check_index(i);
  return flags_[static_cast<std::size_t>(i)];
}

bool PartitionedRequest::all_flags_set() const {
  return std::all_of(flags_.begin(), flags_.end(), [](bool f) { return f; });
}

void PartitionedRequest::maybe_complete() {
  if (state_ == RequestState::kCompleting && all_flags_set()) {
    state_ = RequestState::kComplete;
  }
}

// A request with a pending WaitAll (kCompleting) is still active from the
// caller's point of view, so Pready and Parrived remain legal there.
TransitionOutcome PartitionedRequest::apply(PartitionEvent event) {
  const bool active = state_ == RequestState::kActive ||
                      state_ == RequestState::kCompleting;
  switch (event.kind) {
    case PartitionEventKind::kStart:
      if (state_ != RequestState::kInactive &&
          state_ != RequestState::kComplete) {
        fail(ErrorKind::kIllegalTransition,
             "start on a request that is still active");
      }
      std::fill(flags_.begin(), flags_.end(), false);
      state_ = RequestState::kActive;
      return TransitionOutcome::kOk;
    case PartitionEventKind::kPready:
      if (direction_ != PartitionDirection::kSend) {
        fail(ErrorKind::kInvalidOp, "pready on a receive request");
      }
      check_index(event.partition);
      if (!active) fail(ErrorKind::kIllegalTransition, "pready on inactive request");
      if (flags_[static_cast<std::size_t>(event.partition)]) {
        fail(ErrorKind::kDoubleReady,
             "partition " + std::to_string(event.partition) + " already ready");
      }
      flags_[static_cast<std::size_t>(event.partition)] = true;
      maybe_complete();
      return TransitionOutcome::kOk;
    case PartitionEventKind::kParrivedQuery:
      if (direction_ != PartitionDirection::kRecv) {
        fail(ErrorKind::kInvalidOp, "parrived on a send request");
      }
      check_index(event.partition);
      if (!active) {
        fail(ErrorKind::kIllegalTransition, "parrived on inactive request");
      }
      return flags_[static_cast<std::size_t>(event.partition)]
                 ? TransitionOutcome::kFlagSet
                 : TransitionOutcome::kFlagUnset;
    case PartitionEventKind::kWaitAll:
      if (state_ == RequestState::kInactive) {
        fail(ErrorKind::kIllegalTransition, "wait on inactive request");
      }
      if (state_ == RequestState::kComplete) return TransitionOutcome::kCompleted;
      if (all_flags_set()) {
        state_ = RequestState::kComplete;
        return TransitionOutcome::kCompleted;
      }
      state_ = RequestState::kCompleting;
      return TransitionOutcome::kWaitBlocked;
  }
  return TransitionOutcome::kOk;
}

void PartitionedRequest::deliver(int i) {
  if (direction_ != PartitionDirection::kRecv) {
    fail(ErrorKind::kInvalidOp, "deliver on a send request");
  }
  check_index(i);
  if (state_ != RequestState::kActive && state_ != RequestState::kCompleting) {
    fail(ErrorKind::kIllegalTransition, "delivery to inactive request");
  }
  if (flags_[static_cast<std::size_t>(i)]) {
    fail(ErrorKind::kInvalidOp,
         "partition " + std::to_string(i) + " delivered twice");
  }
  flags_[static_cast<std::size_t>(i)] = true;
  maybe_complete();
}

std::pair<PartitionedRequest, TransitionOutcome> partitioned_transition(
    PartitionedRequest request, PartitionEvent event) {
  const TransitionOutcome outcome = request.apply(event);
  return {std::move(request), outcome};
}

bool is_point_to_point(OpKind kind) {
  return kind == OpKind::kSend || kind == OpKind::kRecv;
}

bool is_rma(OpKind kind) {
  return kind == OpKind::kPut || kind == OpKind::kGet ||
         kind == OpKind::kAccumulate || kind == OpKind::kFlush;
}

bool is_partition(OpKind kind) {
  return kind == OpKind::kPartitionReady ||
         kind == OpKind::kPartitionArrivedTest;
}

void validate_descriptor(const OpDescriptor& op, const InfoHints& hints) {
  const ContextFamily f = op.context.family;
  const bool comm_like =
      f == ContextFamily::kComm || f == ContextFamily::kEndpoints;
  if (f == ContextFamily::kEndpoints && !op.endpoint) {
    fail(ErrorKind::kInvalidOp, "endpoints context without endpoint rank");
  }
  if (is_point_to_point(op.kind) || op.kind == OpKind::kCollectiveCall) {
    if (!comm_like) fail(ErrorKind::kInvalidOp, to_string(op.kind) + " needs a communicator context");
    if (op.partition) fail(ErrorKind::kInvalidOp, "partition on a non-partition op");
  } else if (is_rma(op.kind)) {
    if (f != ContextFamily::kWindow) {
      fail(ErrorKind::kInvalidOp, to_string(op.kind) + " needs a window");
    }
    if (op.partition) fail(ErrorKind::kInvalidOp, "partition on an RMA op");
  } else {
    if (f != ContextFamily::kPartitionedRequest || !op.partition) {
      fail(ErrorKind::kInvalidOp,
           to_string(op.kind) + " needs a partitioned request and index");
    }
    if (op.partition->request != op.context.id) {
      fail(ErrorKind::kInvalidOp, "partition request differs from context");
    }
  }
  if (op.kind != OpKind::kRecv) {
    if (op.tag.is_any() || op.target == kAnySource) {
      fail(ErrorKind::kInvalidOp, "wildcards are only legal on receives");
    }
  } else {
    if (op.tag.is_any() && hints.no_any_tag) {
      fail(ErrorKind::kInvalidOp, "ANY_TAG forbidden by no_any_tag");
    }
    if (op.target == kAnySource && hints.no_any_source) {
      fail(ErrorKind::kInvalidOp, "ANY_SOURCE forbidden by no_any_source");
    }
  }
}

std::string to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kSend: return "send";
    case OpKind::kRecv: return "recv";
    case OpKind::kPut: return "put";
    case OpKind::kGet: return "get";
    case OpKind::kAccumulate: return "accumulate";
    case OpKind::kFlush: return "flush";
    case OpKind::kCollectiveCall: return "collective";
    case OpKind::kPartitionReady: return "pready";
    case OpKind::kPartitionArrivedTest: return "parrived";
  }
  return "?";
}

std::string to_string(const OpDescriptor& op) {
  static constexpr const char* kFamily[] = {"comm", "ep", "win", "preq"};
  std::ostringstream os;
  os << to_string(op.kind) << " p" << op.source.process << ".t"
     << op.source.thread << " ctx=" << kFamily[static_cast<int>(op.context.family)]
     << ':' << op.context.id;
  if (op.endpoint) os << " ep=" << *op.endpoint;
  os << " target=";
  if (op.target == kAnySource) {
    os << "ANY";
  } else {
    os << op.target;
  }
  os << " tag=";
  if (op.tag.is_any()) {
    os << "ANY";
  } else {
    os << op.tag.raw();
  }
  if (op.target_location) os << " loc=" << *op.target_location;
  if (op.partition) os << " part=" << op.partition->index;
  os << " #" << op.program_index;
  return os.str();
}

}  // namespace mpxlab
