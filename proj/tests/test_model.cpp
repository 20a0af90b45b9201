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


#include <random>
#include <set>

#include "doctest.h"
#include "mpxlab/model.hpp"

using namespace mpxlab;

namespace {

TagBitLayout layout(int tid_bits, int app_bits) {
  TagBitLayout l;
  l.num_tid_bits = tid_bits;
  l.num_app_bits = app_bits;
  l.num_vcis = 1 << tid_bits;
  return l;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_CASE("tag encoding places source, destination and application bits") {
  const Tag t = encode_tag(1, 2, 5, layout(4, 8));
  CHECK(t.raw() == ((1u << 12) | (2u << 8) | 5u));
  CHECK(encode_tag(0, 0, 0, layout(3, 5)).raw() == 0);

  TagBitLayout lsb = layout(4, 8);
  lsb.placement = TagPlacement::kLeastSignificant;
  const Tag l = encode_tag(1, 2, 5, lsb);
  CHECK(l.raw() == ((5u << 8) | (1u << 4) | 2u));
  CHECK(decode_tag(l, lsb) == DecodedTag{1, 2, 5});
}

TEST_CASE("tag fields that do not fit raise tag overflow") {
  CHECK(kind_of([] { encode_tag(16, 0, 0, layout(4, 8)); }) == ErrorKind::kTagOverflow);
  CHECK(kind_of([] { encode_tag(0, 16, 0, layout(4, 8)); }) == ErrorKind::kTagOverflow);
  CHECK(kind_of([] { encode_tag(0, 0, 256, layout(4, 8)); }) == ErrorKind::kTagOverflow);
  CHECK(kind_of([] { make_tag(1u << 23); }) == ErrorKind::kTagOverflow);
}

TEST_CASE("wildcard tag sits outside every encodable value") {
  TagBitLayout wide = layout(8, 15);
  wide.tag_width = 31;
  const Tag max = encode_tag(255, 255, (1u << 15) - 1, wide);
  CHECK_FALSE(max.is_any());
  CHECK(Tag::any().is_any());
  CHECK(max.raw() < Tag::any().raw());
}

TEST_CASE("layout validation") {
  TagBitLayout l = layout(7, 8);
  l.validate();
  TagBitLayout too_wide = layout(7, 8);
  too_wide.tag_width = 20;
  CHECK(kind_of([&] { too_wide.validate(); }) == ErrorKind::kInvalidArgument);
  TagBitLayout too_many_vcis = layout(2, 4);
  too_many_vcis.num_vcis = 5;
  CHECK(kind_of([&] { too_many_vcis.validate(); }) == ErrorKind::kInvalidArgument);
  too_many_vcis.hash_type = TagHashType::kHashed;
  too_many_vcis.validate();
}

TEST_CASE("property: encode then decode is the identity") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 2000; ++trial) {
    const int tid_bits = 1 + static_cast<int>(rng() % 8);
    const int max_app = 23 - 2 * tid_bits;
    const int app_bits = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_app));
    TagBitLayout l = layout(tid_bits, app_bits);
    l.placement = rng() % 2 ? TagPlacement::kMostSignificant : TagPlacement::kLeastSignificant;
    l.validate();
    const auto src = static_cast<std::uint32_t>(rng() % (1u << tid_bits));
    const auto dst = static_cast<std::uint32_t>(rng() % (1u << tid_bits));
    const auto app = static_cast<std::uint32_t>(rng() % (1u << app_bits));
    const Tag t = encode_tag(src, dst, app, l);
    REQUIRE(decode_tag(t, l) == DecodedTag{src, dst, app});
    REQUIRE(t.raw() < (1u << 23));
  }
}

TEST_CASE("hints: tag layout requires both wildcard relaxations") {
  InfoHints h;
  CHECK_FALSE(h.allow_overtaking);
  CHECK(h.wildcards_possible());
  h.tag_vci_bits = layout(2, 4);
  CHECK(kind_of([&] { h.validate(); }) == ErrorKind::kInvalidArgument);
  h.no_any_tag = true;
  CHECK(kind_of([&] { h.validate(); }) == ErrorKind::kInvalidArgument);
  h.no_any_source = true;
  h.validate();
  CHECK_FALSE(h.wildcards_possible());
}

TEST_CASE("hint flags round-trip and order by inclusion") {
  for (unsigned f = 0; f < 16; ++f) {
    const InfoHints h = InfoHints::from_flags(f);
    CHECK(h.flags() == f);
    for (unsigned g = 0; g < 16; ++g) {
      CHECK(h.at_least(InfoHints::from_flags(g)) == ((f & g) == g));
    }
  }
}

TEST_CASE("registry hands out fresh context ids on dup") {
  ObjectRegistry reg;
  const Communicator world = reg.world(4);
  CHECK(world.context_id == ObjectRegistry::kWorldContext);
  const Communicator a = reg.dup(world);
  const Communicator b = reg.dup(a);
  CHECK(a.context_id != world.context_id);
  CHECK(b.context_id != a.context_id);
  CHECK(b.group == world.group);
  CHECK(reg.communicators_created() == 2);
  const Window w1 = reg.create_window();
  const Window w2 = reg.create_window();
  CHECK(w1.window_id != w2.window_id);
  CHECK(reg.windows_created() == 2);
}

TEST_CASE("endpoint ranks are contiguous by process") {
  ObjectRegistry reg;
  const Communicator parent = reg.world(2);
  const std::vector<int> three{3, 3};
  const EndpointsComm ep = create_endpoints_comm(reg, parent, three);
  CHECK(ep.rank_of(0, 0) == 0);
  CHECK(ep.rank_of(0, 2) == 2);
  CHECK(ep.rank_of(1, 0) == 3);
  CHECK(ep.rank_of(1, 2) == 5);
  CHECK(ep.comm().context_id != parent.context_id);

  const std::vector<int> nine(4, 9);
  const EndpointsComm ep4 = create_endpoints_comm(reg, reg.world(4), nine);
  CHECK(ep4.rank_of(3, 0) == 3 * 9 + 0);

  const std::vector<int> zero{2, 0};
  CHECK(kind_of([&] { create_endpoints_comm(reg, parent, zero); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("property: endpoint rank function is a bijection") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int procs = 1 + static_cast<int>(rng() % 6);
    std::vector<int> eps;
    int total = 0;
    for (int p = 0; p < procs; ++p) {
      eps.push_back(1 + static_cast<int>(rng() % 5));
      total += eps.back();
    }
    ObjectRegistry reg;
    const EndpointsComm ep = create_endpoints_comm(reg, reg.world(procs), eps);
    REQUIRE(ep.size() == total);
    std::set<Rank> seen;
    for (int p = 0; p < procs; ++p) {
      for (int e = 0; e < eps[static_cast<std::size_t>(p)]; ++e) {
        const Rank r = ep.rank_of(p, e);
        REQUIRE(r >= 0);
        REQUIRE(r < total);
        REQUIRE(ep.locate(r) == std::pair<int, int>{p, e});
        seen.insert(r);
      }
    }
    REQUIRE(static_cast<int>(seen.size()) == total);
  }
}

TEST_CASE("partitioned send lifecycle") {
  PartitionedRequest r(1, PartitionDirection::kSend, 4, 64, 1, Tag(0), 0);
  CHECK(r.state() == RequestState::kInactive);
  CHECK(r.apply(PartitionEvent::start()) == TransitionOutcome::kOk);
  CHECK(r.state() == RequestState::kActive);
  for (int i = 0; i < 4; ++i) CHECK(r.apply(PartitionEvent::pready(i)) == TransitionOutcome::kOk);
  CHECK(r.apply(PartitionEvent::wait_all()) == TransitionOutcome::kCompleted);
  CHECK(r.state() == RequestState::kComplete);
  CHECK(r.all_flags_set());

  // Re-activation resets the flags.
  r.apply(PartitionEvent::start());
  CHECK(r.state() == RequestState::kActive);
  CHECK_FALSE(r.flag(0));
}

TEST_CASE("partitioned errors") {
  PartitionedRequest s(1, PartitionDirection::kSend, 4, 64, 1, Tag(0), 0);
  CHECK(kind_of([&] { s.apply(PartitionEvent::pready(0)); }) == ErrorKind::kIllegalTransition);
  s.apply(PartitionEvent::start());
  CHECK(kind_of([&] { s.apply(PartitionEvent::start()); }) == ErrorKind::kIllegalTransition);
  s.apply(PartitionEvent::pready(2));
  CHECK(kind_of([&] { s.apply(PartitionEvent::pready(2)); }) == ErrorKind::kDoubleReady);
  CHECK(kind_of([&] { s.apply(PartitionEvent::parrived(0)); }) == ErrorKind::kInvalidOp);

  PartitionedRequest r(2, PartitionDirection::kRecv, 4, 64, 0, Tag(0), 0);
  r.apply(PartitionEvent::start());
  CHECK(kind_of([&] { r.apply(PartitionEvent::pready(0)); }) == ErrorKind::kInvalidOp);
}

TEST_CASE("parrived reflects the peer's progress without changing state") {
  PartitionedRequest send(1, PartitionDirection::kSend, 2, 64, 1, Tag(0), 0);
  PartitionedRequest recv(2, PartitionDirection::kRecv, 2, 64, 0, Tag(0), 0);
  send.apply(PartitionEvent::start());
  recv.apply(PartitionEvent::start());
  CHECK(recv.apply(PartitionEvent::parrived(1)) == TransitionOutcome::kFlagUnset);
  send.apply(PartitionEvent::pready(1));
  recv.deliver(1);
  CHECK(recv.apply(PartitionEvent::parrived(1)) == TransitionOutcome::kFlagSet);
  CHECK(recv.state() == RequestState::kActive);
  CHECK(recv.apply(PartitionEvent::wait_all()) == TransitionOutcome::kWaitBlocked);
  CHECK(recv.state() == RequestState::kCompleting);
  recv.deliver(0);
  CHECK(recv.state() == RequestState::kComplete);
}

TEST_CASE("functional transition leaves the input untouched") {
  PartitionedRequest r(1, PartitionDirection::kSend, 2, 64, 1, Tag(0), 0);
  const auto [next, outcome] = partitioned_transition(r, PartitionEvent::start());
  CHECK(outcome == TransitionOutcome::kOk);
  CHECK(r.state() == RequestState::kInactive);
  CHECK(next.state() == RequestState::kActive);
}

TEST_CASE("property: a request never completes with an unset flag") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int parts = 1 + static_cast<int>(rng() % 6);
    const bool is_send = rng() % 2;
    PartitionedRequest r(1, is_send ? PartitionDirection::kSend : PartitionDirection::kRecv,
                         parts, 8, 1, Tag(0), 0);
    for (int step = 0; step < 30; ++step) {
      const int i = static_cast<int>(rng() % static_cast<unsigned>(parts));
      try {
        switch (rng() % 5) {
          case 0: r.apply(PartitionEvent::start()); break;
          case 1: r.apply(PartitionEvent::pready(i)); break;
          case 2: r.apply(PartitionEvent::parrived(i)); break;
          case 3: r.apply(PartitionEvent::wait_all()); break;
          default:
            if (!is_send) r.deliver(i);
        }
      } catch (const Error&) {
      }
      if (r.state() == RequestState::kComplete) REQUIRE(r.all_flags_set());
    }
  }
}

TEST_CASE("descriptor validation rejects wildcards the hints forbid") {
  OpDescriptor recv;
  recv.kind = OpKind::kRecv;
  recv.target = kAnySource;
  recv.tag = Tag::any();
  recv.context = MatchContextId::comm_context(1);
  validate_descriptor(recv, InfoHints{});
  InfoHints strict;
  strict.no_any_source = true;
  CHECK(kind_of([&] { validate_descriptor(recv, strict); }) == ErrorKind::kInvalidOp);
  recv.target = 0;
  strict.no_any_tag = true;
  CHECK(kind_of([&] { validate_descriptor(recv, strict); }) == ErrorKind::kInvalidOp);

  OpDescriptor put;
  put.kind = OpKind::kPut;
  put.context = MatchContextId::comm_context(1);
  CHECK(kind_of([&] { validate_descriptor(put, {}); }) == ErrorKind::kInvalidOp);
}
