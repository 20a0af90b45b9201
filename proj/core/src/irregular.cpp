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
#include <map>
#include <random>

#include "mpxlab/patterns.hpp"

namespace mpxlab {
namespace {

// std::uniform_int_distribution is implementation-defined; a plain modulo
// over mt19937_64 keeps sequences identical across standard libraries.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  int below(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 rng_;
};

void require_positive(int v, const char* what) {
  if (v < 1) fail(ErrorKind::kInvalidArgument, std::string(what) + " must be >= 1");
}

CommPattern base(PatternKind kind, int procs, int threads, int iterations,
                 std::uint64_t payload) {
  CommPattern p;
  p.kind = kind;
  p.process_grid = {procs};
  p.thread_grid = {threads};
  p.iterations = iterations;
  p.payload = payload;
  p.num_processes = procs;
  p.threads_per_process = threads;
  return p;
}

class OpBuilder {
 public:
  explicit OpBuilder(CommPattern& p) : p_(p) {}

  PatternOp& add(OpKind kind, ThreadRef actor, ThreadRef peer, int iteration) {
    PatternOp op;
    op.id = static_cast<std::uint32_t>(p_.ops.size());
    op.kind = kind;
    op.actor = actor;
    op.peer = peer;
    op.iteration = iteration;
    op.program_index = counters_[actor]++;
    op.bytes = p_.payload;
    p_.ops.push_back(op);
    return p_.ops.back();
  }

  // Marks the last op of every thread in `iteration` as a wait point.
  void close_iteration(int iteration) {
    std::map<ThreadRef, std::uint32_t> last;
    for (const PatternOp& op : p_.ops) {
      if (op.iteration == iteration) last[op.actor] = op.id;
    }
    for (const auto& [thread, id] : last) p_.ops[id].wait_after = true;
  }

 private:
  CommPattern& p_;
  std::map<ThreadRef, std::uint32_t> counters_;
};

}  // namespace

CommPattern gen_legion(int nodes, int task_threads, int events,
                       std::uint64_t seed, std::uint64_t payload) {
  if (nodes < 2) fail(ErrorKind::kInvalidArgument, "legion needs at least 2 nodes");
  require_positive(task_threads, "task_threads");
  require_positive(events, "events");
  CommPattern p = base(PatternKind::kLegionPolling, nodes, task_threads + 1, 1, payload);
  p.seed = seed;
  p.poller_thread = task_threads;
  Draw draw(seed);
  OpBuilder b(p);
  struct Msg {
    ThreadRef from;
    int to;
  };
  std::vector<Msg> msgs;
  for (int e = 0; e < events; ++e) {
    const int src = draw.below(nodes);
    const int thread = draw.below(task_threads);
    const int dst = (src + 1 + draw.below(nodes - 1)) % nodes;
    msgs.push_back({{src, thread}, dst});
  }
  for (std::size_t e = 0; e < msgs.size(); ++e) {
    const Msg& m = msgs[e];
    PatternOp& send = b.add(OpKind::kSend, m.from, {m.to, task_threads}, 0);
    send.app_tag = static_cast<std::uint32_t>(e % 8);
    const std::uint32_t sid = send.id;
    PatternOp& recv = b.add(OpKind::kRecv, {m.to, task_threads}, m.from, 0);
    recv.wildcard = true;
    recv.app_tag = static_cast<std::uint32_t>(e % 8);
    p.matches.emplace_back(sid, recv.id);
  }
  b.close_iteration(0);
  return p;
}

CommPattern gen_bspmm(int procs, int threads, int tiles, std::uint64_t payload) {
  require_positive(procs, "procs");
  require_positive(threads, "threads");
  require_positive(tiles, "tiles");
  CommPattern p = base(PatternKind::kBspmmRMA, procs, threads, tiles, payload);
  OpBuilder b(p);
  for (int u = 0; u < tiles; ++u) {
    for (int proc = 0; proc < procs; ++proc) {
      for (int t = 0; t < threads; ++t) {
        const int a_owner = (proc + 1 + u) % procs;
        const int b_owner = (proc + 1 + t) % procs;
        const int c_owner = (proc + u) % procs;
        PatternOp& ga = b.add(OpKind::kGet, {proc, t}, {a_owner, 0}, u);
        ga.location = 1000 + static_cast<std::uint64_t>(u);
        PatternOp& gb = b.add(OpKind::kGet, {proc, t}, {b_owner, 0}, u);
        gb.location = 2000 + static_cast<std::uint64_t>(t);
        gb.wait_after = true;
        // Every thread of a process accumulates into the same C tile.
        PatternOp& acc = b.add(OpKind::kAccumulate, {proc, t}, {c_owner, 0}, u);
        acc.location = static_cast<std::uint64_t>(u);
        acc.wait_after = true;
      }
    }
  }
  return p;
}

CommPattern gen_allreduce(int procs, int threads, std::uint64_t buffer_elems,
                          int iterations) {
  require_positive(procs, "procs");
  require_positive(threads, "threads");
  require_positive(iterations, "iterations");
  if (buffer_elems < 1) fail(ErrorKind::kInvalidArgument, "buffer_elems must be >= 1");
  const std::uint64_t bytes = buffer_elems * 8;
  CommPattern p =
      base(PatternKind::kMultithreadedAllreduce, procs, threads, iterations, bytes);
  OpBuilder b(p);
  for (int it = 0; it < iterations; ++it) {
    for (int proc = 0; proc < procs; ++proc) {
      for (int t = 0; t < threads; ++t) {
        PatternOp& op = b.add(OpKind::kCollectiveCall, {proc, t}, {proc, t}, it);
        op.bytes = std::max<std::uint64_t>(1, bytes / static_cast<std::uint64_t>(threads));
        op.wait_after = true;
      }
    }
  }
  return p;
}

CommPattern gen_dynamic(int procs, int threads, int iterations,
                        std::uint64_t seed, std::uint64_t payload) {
  if (procs < 2) fail(ErrorKind::kInvalidArgument, "dynamic graph needs >= 2 processes");
  require_positive(threads, "threads");
  require_positive(iterations, "iterations");
  CommPattern p = base(PatternKind::kDynamicGraph, procs, threads, iterations, payload);
  p.seed = seed;
  Draw draw(seed);
  OpBuilder b(p);
  for (int it = 0; it < iterations; ++it) {
    // Neighbor sets are redrawn every iteration.
    std::map<ThreadRef, std::vector<ThreadRef>> inbound;
    std::vector<std::pair<ThreadRef, ThreadRef>> edges;
    for (int proc = 0; proc < procs; ++proc) {
      for (int t = 0; t < threads; ++t) {
        const ThreadRef dst{(proc + 1 + draw.below(procs - 1)) % procs,
                            draw.below(threads)};
        edges.push_back({{proc, t}, dst});
        inbound[dst].push_back({proc, t});
      }
    }
    std::map<std::pair<ThreadRef, ThreadRef>, std::uint32_t> recv_of;
    for (int proc = 0; proc < procs; ++proc) {
      for (int t = 0; t < threads; ++t) {
        const ThreadRef me{proc, t};
        for (const ThreadRef& from : inbound[me]) {
          PatternOp& r = b.add(OpKind::kRecv, me, from, it);
          r.app_tag = static_cast<std::uint32_t>(it % 256);
          recv_of[{from, me}] = r.id;
        }
        const ThreadRef dst = edges[static_cast<std::size_t>(proc * threads + t)].second;
        PatternOp& s = b.add(OpKind::kSend, me, dst, it);
        s.app_tag = static_cast<std::uint32_t>(it % 256);
      }
    }
    for (const PatternOp& op : p.ops) {
      if (op.iteration == it && op.kind == OpKind::kSend) {
        p.matches.emplace_back(op.id, recv_of.at({op.actor, op.peer}));
      }
    }
    b.close_iteration(it);
  }
  return p;
}

CommPattern gen_fan_in(int senders, std::uint64_t payload) {
  require_positive(senders, "senders");
  CommPattern p = base(PatternKind::kFanIn, 2, senders, 1, payload);
  OpBuilder b(p);
  std::vector<std::uint32_t> send_ids;
  for (int t = 0; t < senders; ++t) {
    PatternOp& s = b.add(OpKind::kSend, {0, t}, {1, 0}, 0);
    s.app_tag = static_cast<std::uint32_t>(t);
    send_ids.push_back(s.id);
  }
  for (int t = senders - 1; t >= 0; --t) {
    PatternOp& r = b.add(OpKind::kRecv, {1, 0}, {0, t}, 0);
    r.app_tag = static_cast<std::uint32_t>(t);
    p.matches.emplace_back(send_ids[static_cast<std::size_t>(t)], r.id);
  }
  b.close_iteration(0);
  return p;
}

}  // namespace mpxlab
