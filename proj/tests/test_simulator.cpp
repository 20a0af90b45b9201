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


#include <list>
#include <map>
#include <set>

#include "doctest.h"
#include "mpxlab/simulator.hpp"

using namespace mpxlab;

namespace {

SimReport sim(const CommPattern& p, Mechanism m, ChannelPool pool = ChannelPool::of(16),
              bool events = false, std::uint64_t seed = 0, AssignOptions o = {}) {
  const Assignment a = assign(p, m, o);
  SimOptions so;
  so.record_events = events;
  return run(p, a, pool, default_policy(a), {}, seed, so);
}

// Receives posted in reverse order against sends already sitting in the
// unexpected queue: each receive walks the queue until its own message.
std::uint64_t fan_in_queue_walk(int n) {
  std::list<int> unexpected;
  for (int t = 0; t < n; ++t) unexpected.push_back(t);
  std::uint64_t attempts = 0;
  for (int t = n - 1; t >= 0; --t) {
    for (auto it = unexpected.begin(); it != unexpected.end(); ++it) {
      ++attempts;
      if (*it == t) {
        unexpected.erase(it);
        break;
      }
    }
  }
  return attempts;
}

std::map<std::pair<ProcessId, int>, std::pair<int, int>> waits_and_barriers(
    const SimReport& r) {
  std::map<std::pair<ProcessId, int>, std::pair<int, int>> out;
  for (const Event& e : r.events) {
    if (e.kind == EventKind::kWaitBlock) ++out[{e.process, e.iteration}].first;
    if (e.kind == EventKind::kBarrier) ++out[{e.process, e.iteration}].second;
  }
  return out;
}

}  // namespace

TEST_CASE("a single message matches once") {
  const CommPattern p = gen_fan_in(1);
  const SimReport r = sim(p, Mechanism::kSharedCommunicator, ChannelPool::of(16), true);
  CHECK(r.matches_total == 1);
  CHECK(r.messages_total == 1);
  CHECK(r.match_attempts_total == 1);
  CHECK(r.makespan > 0);
  CHECK(r.transfers_total == 1);
}

TEST_CASE("fan-in on one communicator scans the unexpected queue") {
  for (int n : {1, 2, 3, 4, 8, 16}) {
    const SimReport r = sim(gen_fan_in(n), Mechanism::kSharedCommunicator);
    CHECK(r.match_attempts_total == fan_in_queue_walk(n));
    CHECK(r.matches_total == static_cast<std::uint64_t>(n));
  }
  CHECK(fan_in_queue_walk(16) == 136);
}

TEST_CASE("fan-in with a communicator per sender stays linear") {
  for (int n : {2, 4, 8, 16}) {
    const SimReport r = sim(gen_fan_in(n), Mechanism::kCommunicators);
    CHECK(r.match_attempts_total == static_cast<std::uint64_t>(n));
  }
}

TEST_CASE("partitioned fan-in matches once regardless of partitions") {
  for (int n : {1, 2, 4, 8, 16}) {
    const SimReport r = sim(gen_fan_in(n), Mechanism::kPartitioned);
    CHECK(r.match_attempts_total == 1);
    CHECK(r.matches_total == 1);
    CHECK(r.messages_total == 1);
    CHECK(r.transfers_total == static_cast<std::uint64_t>(n));
  }
}

TEST_CASE("event logs are deterministic and well formed") {
  const CommPattern p = gen_stencil(2, 9, {2, 2}, {3, 3}, 2);
  for (Mechanism m : {Mechanism::kCommunicators, Mechanism::kEndpoints, Mechanism::kPartitioned,
                      Mechanism::kTagsWithHints, Mechanism::kSharedCommunicator}) {
    const SimReport a = sim(p, m, ChannelPool::of(16), true, 7);
    const SimReport b = sim(p, m, ChannelPool::of(16), true, 7);
    REQUIRE(a.events == b.events);
    REQUIRE(a.makespan == b.makespan);
    Tick last = 0;
    std::set<std::uint32_t> attempted;
    for (const Event& e : a.events) {
      REQUIRE(e.time >= last);
      last = e.time;
      if (e.kind == EventKind::kMatchAttempt) attempted.insert(e.op);
      if (e.kind == EventKind::kMatchSuccess) REQUIRE(attempted.count(e.op) == 1);
    }
    CHECK(last <= a.makespan);
  }
}

TEST_CASE("seeds only break ties") {
  const CommPattern p = gen_stencil(2, 5, {2, 2}, {3, 3});
  const SimReport a = sim(p, Mechanism::kSharedCommunicator, ChannelPool::of(4), false, 1);
  const SimReport b = sim(p, Mechanism::kSharedCommunicator, ChannelPool::of(4), false, 2);
  CHECK(a.matches_total == b.matches_total);
  CHECK(a.messages_total == b.messages_total);
}

TEST_CASE("property: conservation and channel capacity") {
  const std::vector<CommPattern> patterns = {
      gen_stencil(2, 5, {2, 2}, {3, 3}, 2), gen_stencil(2, 9, {2, 4}, {2, 3}),
      gen_stencil(3, 27, {2, 2, 2}, {2, 2, 2}), gen_dynamic(3, 3, 3, 5), gen_fan_in(5)};
  for (const CommPattern& p : patterns) {
    for (Mechanism m : {Mechanism::kCommunicators, Mechanism::kEndpoints,
                        Mechanism::kSharedCommunicator, Mechanism::kPartitioned}) {
      if (p.kind == PatternKind::kDynamicGraph && m == Mechanism::kPartitioned) continue;
      for (int r : {1, 3, 16}) {
        const SimReport rep = sim(p, m, ChannelPool::of(r));
        REQUIRE(rep.matches_total == rep.messages_total);
        REQUIRE(rep.max_channels_busy_per_process <= static_cast<std::uint64_t>(r));
        REQUIRE(rep.channel_occupancy.size() == static_cast<std::size_t>(r));
      }
    }
  }
}

TEST_CASE("property: stronger hints never slow a run down") {
  for (int n : {2, 3, 4}) {
    const CommPattern p = gen_stencil(2, 9, {2, 2}, {n, n});
    const SimReport shared = sim(p, Mechanism::kSharedCommunicator);
    const SimReport tags = sim(p, Mechanism::kTagsWithHints);
    CHECK(tags.makespan <= shared.makespan);
  }
}

TEST_CASE("partitioned stencils synchronize every iteration") {
  const CommPattern p = gen_stencil(2, 9, {2, 2}, {3, 3}, 2);
  const SimReport part = sim(p, Mechanism::kPartitioned, ChannelPool::of(16), true);
  const auto per = waits_and_barriers(part);
  CHECK(per.size() == 8);
  for (const auto& [key, counts] : per) {
    CHECK(counts.first >= 9 - 1);
    CHECK(counts.second == 1);
  }
  for (Mechanism m : {Mechanism::kEndpoints, Mechanism::kCommunicators}) {
    const SimReport r = sim(p, m, ChannelPool::of(16), true);
    CHECK(r.sync_wait_events == 0);
    CHECK(r.barrier_events == 0);
  }
}

TEST_CASE("legion probing grows with the communicator count") {
  const CommPattern p = gen_legion(4, 8, 64);
  for (int k : {1, 2, 4}) {
    AssignOptions o;
    o.legion_comms = k;
    const SimReport comm = sim(p, Mechanism::kCommunicators, ChannelPool::of(16), false, 0, o);
    const SimReport ep = sim(p, Mechanism::kEndpoints, ChannelPool::of(16), false, 0, o);
    CHECK(comm.probe_iterations == 64u * static_cast<unsigned>(k));
    CHECK(ep.probe_iterations == 64);
    CHECK(comm.matches_total == 64);
  }
}

TEST_CASE("rma and collective patterns run to completion") {
  const CommPattern b = gen_bspmm(4, 3, 2);
  CHECK(sim(b, Mechanism::kWindows).makespan > 0);
  CHECK(sim(b, Mechanism::kEndpoints).makespan > 0);
  const CommPattern ar = gen_allreduce(4, 4, 1024, 2);
  for (Mechanism m : {Mechanism::kCommunicators, Mechanism::kEndpoints, Mechanism::kPartitioned}) {
    const SimReport r = sim(ar, m);
    CHECK(r.makespan > 0);
    CHECK(r.memory_footprint_bytes > 0);
  }
  CHECK(sim(ar, Mechanism::kEndpoints).memory_footprint_bytes ==
        4 * sim(ar, Mechanism::kPartitioned).memory_footprint_bytes);
}

TEST_CASE("unsupported pairs surface as errors") {
  try {
    sim(gen_legion(2, 2, 4), Mechanism::kPartitioned);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnsupportedPattern);
  }
}

TEST_CASE("an assignment that breaks matching is refused") {
  const CommPattern p = gen_stencil(2, 5, {2, 2}, {3, 3});
  Assignment a = assign(p, Mechanism::kCommunicators);
  for (const auto& [s, r] : p.matches) {
    a.bindings[r].context = MatchContextId::comm_context(999999);
    break;
  }
  try {
    run(p, a, ChannelPool::of(16), default_policy(a));
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidAssignment);
  }
}

TEST_CASE("default policies follow the mechanism") {
  const CommPattern p = gen_stencil(2, 5, {2, 2}, {3, 3});
  CHECK(default_policy(assign(p, Mechanism::kEndpoints)).kind == PolicyKind::kEndpointIdentity);
  CHECK(default_policy(assign(p, Mechanism::kPartitioned)).kind == PolicyKind::kPartitionIndex);
  CHECK(default_policy(assign(p, Mechanism::kTagsWithHints)).kind ==
        PolicyKind::kTagBitsOneToOne);
  CHECK(default_policy(assign(p, Mechanism::kCommunicators)).kind ==
        PolicyKind::kHashCommunicator);
}

TEST_CASE("mechanism comparison is relative to the first row") {
  const CommPattern p = gen_stencil(2, 9, {2, 2}, {3, 3});
  const ComparisonTable t = compare_mechanisms(
      p, {Mechanism::kCommunicatorsNaive, Mechanism::kCommunicators, Mechanism::kEndpoints},
      ChannelPool::of(16));
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].makespan_ratio == 1.0);
  for (const ComparisonRow& row : t.rows) {
    CHECK(row.makespan_ratio ==
          doctest::Approx(static_cast<double>(row.report.makespan) /
                          static_cast<double>(t.rows[0].report.makespan)));
  }
}
