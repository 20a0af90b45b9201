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


#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "mpxlab/channels.hpp"

using namespace mpxlab;

namespace {

// Reference FNV-1a, byte at a time.
std::uint64_t reference_fnv(const std::vector<std::uint64_t>& words) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t w : words) {
    for (int i = 0; i < 8; ++i) {
      h ^= (w >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

OpDescriptor comm_send(ContextId ctx, ThreadId thread = 0) {
  OpDescriptor d;
  d.kind = OpKind::kSend;
  d.source = {0, thread};
  d.target = 1;
  d.context = MatchContextId::comm_context(ctx);
  return d;
}

std::vector<std::uint64_t> iota_ids(std::size_t n, std::uint64_t first) {
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

}  // namespace

TEST_CASE("fnv1a64 matches a byte-wise reference") {
  for (std::uint64_t v : {0ull, 1ull, 42ull, 808ull, 0xdeadbeefcafef00dull}) {
    CHECK(fnv1a64(v) == reference_fnv({v}));
  }
  const std::vector<std::uint64_t> pair{7, 9};
  CHECK(fnv1a64(pair) == reference_fnv(pair));
}

TEST_CASE("channel pool presets") {
  CHECK(ChannelPool{}.num_channels == 16);
  CHECK(ChannelPool::omni_path().num_channels == 160);
  CHECK(ChannelPool::of(3).num_channels == 3);
  CHECK_THROWS_AS(ChannelPool::of(0), Error);
}

TEST_CASE("endpoint identity maps rank modulo R") {
  OpDescriptor d = comm_send(1);
  d.context = MatchContextId::endpoints(1);
  d.endpoint = 5;
  d.target = 10;
  const ChannelPair cp = map_entity(MappingPolicy::endpoint_identity(), d, ChannelPool::of(4));
  CHECK(cp.local == 1);
  CHECK(cp.remote == 10 % 4);
  d.endpoint.reset();
  CHECK_THROWS_AS(map_entity(MappingPolicy::endpoint_identity(), d, ChannelPool::of(4)), Error);
}

TEST_CASE("tag bits one-to-one uses sender bits locally and receiver bits remotely") {
  TagBitLayout l;
  l.num_tid_bits = 4;
  l.num_app_bits = 8;
  l.num_vcis = 16;
  OpDescriptor d = comm_send(1);
  d.tag = encode_tag(2, 6, 0, l);
  const ChannelPair cp = map_entity(MappingPolicy::tag_bits(l), d, ChannelPool::of(16));
  CHECK(cp == ChannelPair{2, 6});

  // On the receive side the roles swap.
  OpDescriptor r = d;
  r.kind = OpKind::kRecv;
  CHECK(map_entity(MappingPolicy::tag_bits(l), r, ChannelPool::of(16)) == ChannelPair{6, 2});

  d.tag = Tag::any();
  CHECK_THROWS_AS(map_entity(MappingPolicy::tag_bits(l), d, ChannelPool::of(16)), Error);
  CHECK_THROWS_AS(map_entity(MappingPolicy{PolicyKind::kTagBitsOneToOne, {}}, comm_send(1),
                             ChannelPool::of(16)),
                  Error);
}

TEST_CASE("hash policy is symmetric and keyed on the context") {
  const ChannelPool pool = ChannelPool::of(160);
  for (ContextId c = 1; c < 50; ++c) {
    const ChannelPair cp = map_entity(MappingPolicy::hash(), comm_send(c), pool);
    CHECK(cp.local == cp.remote);
    CHECK(cp.local == static_cast<int>(reference_fnv({c}) % 160));
    CHECK(map_entity(MappingPolicy::hash(), comm_send(c, 3), pool) == cp);
  }
}

TEST_CASE("round robin follows creation order") {
  ChannelAllocator alloc(ChannelPool::of(3));
  for (ContextId c : {10, 11, 12, 13}) alloc.on_create(c);
  CHECK(alloc.channel_of(10) == 0);
  CHECK(alloc.channel_of(12) == 2);
  CHECK(alloc.channel_of(13) == 0);
  CHECK_FALSE(alloc.channel_of(99).has_value());
  CHECK(map_entity(MappingPolicy::round_robin(), comm_send(11), ChannelPool::of(3), &alloc) ==
        ChannelPair{1, 1});
  CHECK_THROWS_AS(map_entity(MappingPolicy::round_robin(), comm_send(11), ChannelPool::of(3)),
                  Error);
}

TEST_CASE("partition index policy") {
  OpDescriptor d;
  d.kind = OpKind::kPartitionReady;
  d.context = MatchContextId::partitioned(1, 0);
  d.partition = PartitionRef{1, 7};
  CHECK(map_entity(MappingPolicy::partition_index(), d, ChannelPool::of(4)) ==
        ChannelPair{3, 3});
}

TEST_CASE("808 hashed communicators overload 160 channels") {
  const ChannelPool pool = ChannelPool::omni_path();
  const auto ids = iota_ids(808, 1);
  const CollisionReport r = collision_report(map_ids(PolicyKind::kHashCommunicator, ids, pool), pool);
  CHECK(r.entities_mapped == 808);
  CHECK(r.distinct_channels_used == 160);
  CHECK(r.max_entities_per_channel >= (808 + 159) / 160);
  CHECK_FALSE(r.serialized_pairs.empty());

  // Count pairs independently from the per-channel histogram.
  std::vector<std::size_t> hist(160);
  for (std::uint64_t id : ids) ++hist[reference_fnv({id}) % 160];
  std::size_t pairs = 0;
  for (std::size_t h : hist) pairs += h * (h - 1) / 2;
  CHECK(r.serialized_pairs.size() == pairs);
}

TEST_CASE("56 endpoints fit 160 channels without collision") {
  const ChannelPool pool = ChannelPool::omni_path();
  const auto ids = iota_ids(56, 0);
  const CollisionReport r = collision_report(map_ids(PolicyKind::kEndpointIdentity, ids, pool), pool);
  CHECK(r.max_entities_per_channel == 1);
  CHECK(r.serialized_pairs.empty());
  CHECK(r.distinct_channels_used == 56);
}

TEST_CASE("collision report edge cases") {
  const ChannelPool pool = ChannelPool::of(4);
  const std::vector<MappedEntity> one{{7, 2}};
  CHECK(collision_report(one, pool).distinct_channels_used == 1);
  CHECK_THROWS_AS(collision_report(std::vector<MappedEntity>{}, pool), Error);
  const std::vector<MappedEntity> bad{{7, 4}};
  CHECK_THROWS_AS(collision_report(bad, pool), Error);
}

TEST_CASE("property: distinct channels never exceed min(entities, R)") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int r = 1 + static_cast<int>(rng() % 40);
    const std::size_t n = 1 + rng() % 100;
    const ChannelPool pool = ChannelPool::of(r);
    std::vector<std::uint64_t> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(rng() % 1000);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (PolicyKind k : {PolicyKind::kHashCommunicator, PolicyKind::kRoundRobinPerCommunicator,
                         PolicyKind::kEndpointIdentity}) {
      const auto mapped = map_ids(k, ids, pool);
      const CollisionReport c = collision_report(mapped, pool);
      std::set<int> used;
      for (const MappedEntity& m : mapped) used.insert(m.channel);
      REQUIRE(c.distinct_channels_used == used.size());
      REQUIRE(c.distinct_channels_used <= std::min<std::size_t>(ids.size(), static_cast<std::size_t>(r)));
      if (k == PolicyKind::kRoundRobinPerCommunicator && ids.size() <= static_cast<std::size_t>(r)) {
        REQUIRE(c.distinct_channels_used == ids.size());
      }
      // Determinism.
      const auto again = map_ids(k, ids, pool);
      for (std::size_t i = 0; i < mapped.size(); ++i) REQUIRE(again[i].channel == mapped[i].channel);
    }
  }
}

TEST_CASE("property: full one-to-one layout is injective over sender threads") {
  for (int bits = 1; bits <= 5; ++bits) {
    TagBitLayout l;
    l.num_tid_bits = bits;
    l.num_vcis = 1 << bits;
    l.num_app_bits = 4;
    const ChannelPool pool = ChannelPool::of(1 << bits);
    std::set<int> locals;
    for (std::uint32_t src = 0; src < (1u << bits); ++src) {
      OpDescriptor d = comm_send(1);
      d.tag = encode_tag(src, 0, 3, l);
      locals.insert(map_entity(MappingPolicy::tag_bits(l), d, pool).local);
    }
    CHECK(locals.size() == (1u << bits));
  }
}

TEST_CASE("grouping comms crowd out parallelism comms under round robin") {
  ObjectRegistry reg;
  const Communicator world = reg.world(2);
  std::vector<Communicator> comms;
  for (int i = 0; i < 150; ++i) {
    comms.push_back(reg.create_comm(world.group, {}, CommPurpose::kGeneral));
  }
  for (int i = 0; i < 20; ++i) {
    comms.push_back(reg.create_comm(world.group, {}, CommPurpose::kParallelismExposure));
  }
  const ChannelPool pool = ChannelPool::omni_path();
  const GroupingReport blind = grouping_mismatch_demo(comms, pool);
  CHECK(blind.channels_consumed_by_grouping == 150);
  CHECK(blind.parallelism_comms_sharing == 10);
  const GroupingReport aware = grouping_mismatch_demo(comms, pool, true);
  CHECK(aware.parallelism_comms_sharing == 0);

  const std::vector<Communicator> only_parallel(comms.begin() + 150, comms.end());
  const GroupingReport fresh = grouping_mismatch_demo(only_parallel, pool);
  CHECK(fresh.channels_consumed_by_grouping == 0);
  CHECK(fresh.parallelism_comms_sharing == 0);
  CHECK(fresh.collisions.distinct_channels_used == 20);
}
