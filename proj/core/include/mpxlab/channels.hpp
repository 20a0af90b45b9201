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

// Virtual communication interfaces: pools, mapping policies and
// collision accounting.

#ifndef MPXLAB_CHANNELS_HPP_
#define MPXLAB_CHANNELS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpxlab/model.hpp"

namespace mpxlab {

inline constexpr int kDefaultChannels = 16;
inline constexpr int kOmniPathChannels = 160;

struct ChannelPool {
  int num_channels = kDefaultChannels;
  // No exclusivity at all; used to measure logical parallelism alone.
  bool unbounded = false;

  static ChannelPool of(int r);
  static ChannelPool omni_path() { return of(kOmniPathChannels); }
  static ChannelPool unlimited() { return {kDefaultChannels, true}; }

  friend bool operator==(const ChannelPool&, const ChannelPool&) = default;
};

enum class PolicyKind {
  kRoundRobinPerCommunicator,
  kHashCommunicator,
  kTagBitsOneToOne,
  kEndpointIdentity,
  kPartitionIndex,
};

struct MappingPolicy {
  PolicyKind kind = PolicyKind::kHashCommunicator;
  std::optional<TagBitLayout> layout;

  static MappingPolicy round_robin() { return {PolicyKind::kRoundRobinPerCommunicator, {}}; }
  static MappingPolicy hash() { return {PolicyKind::kHashCommunicator, {}}; }
  static MappingPolicy tag_bits(const TagBitLayout& l) { return {PolicyKind::kTagBitsOneToOne, l}; }
  static MappingPolicy endpoint_identity() { return {PolicyKind::kEndpointIdentity, {}}; }
  static MappingPolicy partition_index() { return {PolicyKind::kPartitionIndex, {}}; }
};

std::string to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(const std::string& name);

// 64-bit FNV-1a over the little-endian bytes of `value`.
std::uint64_t fnv1a64(std::uint64_t value);
std::uint64_t fnv1a64(std::span<const std::uint64_t> values);

// Round-robin table filled at communicator creation time.
class ChannelAllocator {
 public:
  explicit ChannelAllocator(ChannelPool pool) : pool_(pool) {}

  int on_create(ContextId context);

  std::optional<int> channel_of(ContextId context) const;
  const ChannelPool& pool() const { return pool_; }
  std::size_t size() const { return table_.size(); }

 private:
  ChannelPool pool_;
  std::map<ContextId, int> table_;
  int cursor_ = 0;
};

struct ChannelPair {
  int local = 0;
  int remote = 0;

  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

// The context a policy keys on (communicator, window or owning comm).
std::uint64_t mapping_key(const OpDescriptor& op);

ChannelPair map_entity(const MappingPolicy& policy, const OpDescriptor& op,
                       const ChannelPool& pool,
                       const ChannelAllocator* allocator = nullptr);

struct MappedEntity {
  std::uint64_t entity = 0;
  int channel = 0;
};

struct CollisionReport {
  std::size_t entities_mapped = 0;
  std::size_t distinct_channels_used = 0;
  std::size_t max_entities_per_channel = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> serialized_pairs;
};

CollisionReport collision_report(std::span<const MappedEntity> entities,
                                 const ChannelPool& pool);

// Maps plain entity ids (communicator contexts, endpoint ranks) under a
// context-level policy: hash, round-robin in order, or identity.
std::vector<MappedEntity> map_ids(PolicyKind policy,
                                  std::span<const std::uint64_t> ids,
                                  const ChannelPool& pool);

struct GroupingReport {
  CollisionReport collisions;
  // Channels taken by grouping comms before any parallelism comm existed.
  std::size_t channels_consumed_by_grouping = 0;
  // Parallelism comms whose channel is shared with any other comm.
  std::size_t parallelism_comms_sharing = 0;
};

// Round-robin allocation in creation order, blind to purpose. With
// `purpose_aware` set, parallelism comms get dedicated channels and the
// grouping comms share whatever is left.
GroupingReport grouping_mismatch_demo(std::span<const Communicator> comms,
                                      const ChannelPool& pool,
                                      bool purpose_aware = false);

}  // namespace mpxlab

#endif  // MPXLAB_CHANNELS_HPP_
