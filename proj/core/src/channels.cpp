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

#include "mpxlab/channels.hpp"

#include <algorithm>
#include <set>

namespace mpxlab {

ChannelPool ChannelPool::of(int r) {
  if (r < 1) fail(ErrorKind::kInvalidArgument, "channel pool needs R >= 1");
  return {r, false};
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRoundRobinPerCommunicator: return "round_robin";
    case PolicyKind::kHashCommunicator: return "hash";
    case PolicyKind::kTagBitsOneToOne: return "tag_bits";
    case PolicyKind::kEndpointIdentity: return "endpoint_identity";
    case PolicyKind::kPartitionIndex: return "partition_index";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy(const std::string& name) {
  for (PolicyKind k :
       {PolicyKind::kRoundRobinPerCommunicator, PolicyKind::kHashCommunicator,
        PolicyKind::kTagBitsOneToOne, PolicyKind::kEndpointIdentity,
        PolicyKind::kPartitionIndex}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv_step(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xFFu;
    h *= kFnvPrime;
  }
  return h;
}

int reduce(std::uint64_t value, const ChannelPool& pool) {
  return static_cast<int>(value % static_cast<std::uint64_t>(pool.num_channels));
}

}  // namespace

std::uint64_t fnv1a64(std::uint64_t value) { return fnv_step(kFnvOffset, value); }

std::uint64_t fnv1a64(std::span<const std::uint64_t> values) {
  std::uint64_t h = kFnvOffset;
  for (std::uint64_t v : values) h = fnv_step(h, v);
  return h;
}

int ChannelAllocator::on_create(ContextId context) {
  auto it = table_.find(context);
  if (it != table_.end()) return it->second;
  const int ch = cursor_;
  cursor_ = (cursor_ + 1) % pool_.num_channels;
  table_.emplace(context, ch);
  return ch;
}

std::optional<int> ChannelAllocator::channel_of(ContextId context) const {
  auto it = table_.find(context);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t mapping_key(const OpDescriptor& op) {
  if (op.context.family == ContextFamily::kPartitionedRequest) {
    return op.context.comm;
  }
  return op.context.id;
}

ChannelPair map_entity(const MappingPolicy& policy, const OpDescriptor& op,
                       const ChannelPool& pool,
                       const ChannelAllocator* allocator) {
  if (pool.num_channels < 1) {
    fail(ErrorKind::kInvalidArgument, "channel pool needs R >= 1");
  }
  switch (policy.kind) {
    case PolicyKind::kRoundRobinPerCommunicator: {
      if (allocator == nullptr) {
        fail(ErrorKind::kMapping, "round-robin mapping needs an allocation table");
      }
      const auto ch = allocator->channel_of(mapping_key(op));
      if (!ch) {
        fail(ErrorKind::kMapping, "context " + std::to_string(mapping_key(op)) +
                                      " was never allocated a channel");
      }
      const int c = *ch % pool.num_channels;
      return {c, c};
    }
    case PolicyKind::kHashCommunicator: {
      std::uint64_t h = 0;
      if (op.target_location) {
        const std::uint64_t key[] = {mapping_key(op), *op.target_location};
        h = fnv1a64(key);
      } else {
        h = fnv1a64(mapping_key(op));
      }
      const int c = reduce(h, pool);
      return {c, c};
    }
    case PolicyKind::kTagBitsOneToOne: {
      if (!policy.layout) {
        fail(ErrorKind::kMapping, "tag-bit mapping without a tag layout");
      }
      if (op.tag.is_any()) fail(ErrorKind::kMapping, "tag-bit mapping of ANY_TAG");
      const TagBitLayout& layout = *policy.layout;
      const DecodedTag d = decode_tag(op.tag, layout);
      auto vci = [&](std::uint32_t tid) -> std::uint64_t {
        const auto n = static_cast<std::uint64_t>(layout.num_vcis);
        if (layout.hash_type == TagHashType::kOneToOne) return tid % n;
        return fnv1a64(tid) % n;
      };
      // The local side of a receive is its own (destination) thread.
      const bool receiving = op.kind == OpKind::kRecv ||
                             op.kind == OpKind::kPartitionArrivedTest;
      const std::uint32_t local_tid = receiving ? d.dst_tid : d.src_tid;
      const std::uint32_t remote_tid = receiving ? d.src_tid : d.dst_tid;
      return {reduce(vci(local_tid), pool), reduce(vci(remote_tid), pool)};
    }
    case PolicyKind::kEndpointIdentity: {
      if (!op.endpoint) {
        fail(ErrorKind::kMapping, "endpoint mapping of an op without endpoint");
      }
      const int local = reduce(static_cast<std::uint64_t>(*op.endpoint), pool);
      const int remote = op.target == kAnySource
                             ? local
                             : reduce(static_cast<std::uint64_t>(op.target), pool);
      return {local, remote};
    }
    case PolicyKind::kPartitionIndex: {
      if (!op.partition) {
        fail(ErrorKind::kMapping, "partition mapping of a non-partition op");
      }
      const int c = reduce(static_cast<std::uint64_t>(op.partition->index), pool);
      return {c, c};
    }
  }
  fail(ErrorKind::kMapping, "unknown policy");
}

CollisionReport collision_report(std::span<const MappedEntity> entities,
                                 const ChannelPool& pool) {
  if (entities.empty()) {
    fail(ErrorKind::kInvalidArgument, "collision report needs entities");
  }
  std::map<int, std::vector<std::uint64_t>> by_channel;
  for (const MappedEntity& e : entities) {
    if (e.channel < 0 || e.channel >= pool.num_channels) {
      fail(ErrorKind::kMapping, "channel " + std::to_string(e.channel) +
                                    " outside the pool");
    }
    by_channel[e.channel].push_back(e.entity);
  }
  CollisionReport r;
  r.entities_mapped = entities.size();
  r.distinct_channels_used = by_channel.size();
  for (const auto& [ch, members] : by_channel) {
    r.max_entities_per_channel = std::max(r.max_entities_per_channel, members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        r.serialized_pairs.emplace_back(members[i], members[j]);
      }
    }
  }
  return r;
}

std::vector<MappedEntity> map_ids(PolicyKind policy,
                                  std::span<const std::uint64_t> ids,
                                  const ChannelPool& pool) {
  std::vector<MappedEntity> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::uint64_t v = 0;
    switch (policy) {
      case PolicyKind::kHashCommunicator: v = fnv1a64(ids[i]); break;
      case PolicyKind::kRoundRobinPerCommunicator: v = i; break;
      case PolicyKind::kEndpointIdentity:
      case PolicyKind::kPartitionIndex: v = ids[i]; break;
      case PolicyKind::kTagBitsOneToOne:
        fail(ErrorKind::kMapping, "tag-bit policy maps operations, not ids");
    }
    out.push_back({ids[i], reduce(v, pool)});
  }
  return out;
}

GroupingReport grouping_mismatch_demo(std::span<const Communicator> comms,
                                      const ChannelPool& pool,
                                      bool purpose_aware) {
  const int r = pool.num_channels;
  std::vector<MappedEntity> mapped;
  mapped.reserve(comms.size());
  const auto parallel_count = static_cast<int>(std::count_if(
      comms.begin(), comms.end(), [](const Communicator& c) {
        return c.purpose == CommPurpose::kParallelismExposure;
      }));
  const bool reserve = purpose_aware && parallel_count > 0 && parallel_count < r;
  int cursor = 0;
  int next_dedicated = 0;
  int grouping_seen = 0;
  for (const Communicator& c : comms) {
    int ch = 0;
    if (reserve) {
      if (c.purpose == CommPurpose::kParallelismExposure) {
        ch = next_dedicated++;
      } else {
        ch = parallel_count + grouping_seen++ % (r - parallel_count);
      }
    } else {
      ch = cursor;
      cursor = (cursor + 1) % r;
    }
    mapped.push_back({c.context_id, ch});
  }

  GroupingReport g;
  if (mapped.empty()) return g;
  g.collisions = collision_report(mapped, pool);

  std::set<int> grouping_channels;
  std::map<int, int> load;
  for (const MappedEntity& m : mapped) ++load[m.channel];
  for (std::size_t i = 0; i < comms.size(); ++i) {
    if (comms[i].purpose == CommPurpose::kParallelismExposure) break;
    grouping_channels.insert(mapped[i].channel);
  }
  g.channels_consumed_by_grouping = grouping_channels.size();
  for (std::size_t i = 0; i < comms.size(); ++i) {
    if (comms[i].purpose == CommPurpose::kParallelismExposure &&
        load[mapped[i].channel] > 1) {
      ++g.parallelism_comms_sharing;
    }
  }
  return g;
}

}  // namespace mpxlab
