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
#include <bit>
#include <map>
#include <set>
#include <tuple>

#include "mpxlab/patterns.hpp"

namespace mpxlab {

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kCommunicators: return "communicators";
    case Mechanism::kCommunicatorsNaive: return "communicators_naive";
    case Mechanism::kSharedCommunicator: return "shared";
    case Mechanism::kTagsWithHints: return "tags";
    case Mechanism::kEndpoints: return "endpoints";
    case Mechanism::kPartitioned: return "partitioned";
    case Mechanism::kWindows: return "windows";
  }
  return "?";
}

std::optional<Mechanism> parse_mechanism(const std::string& name) {
  for (Mechanism m :
       {Mechanism::kCommunicators, Mechanism::kCommunicatorsNaive,
        Mechanism::kSharedCommunicator, Mechanism::kTagsWithHints,
        Mechanism::kEndpoints, Mechanism::kPartitioned, Mechanism::kWindows}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

std::vector<ProcessId> all_processes(const CommPattern& p) {
  std::vector<ProcessId> g(static_cast<std::size_t>(p.num_processes));
  for (int i = 0; i < p.num_processes; ++i) g[static_cast<std::size_t>(i)] = i;
  return g;
}

Assignment start(const CommPattern& p, Mechanism m, const InfoHints& hints) {
  hints.validate();
  Assignment a;
  a.mechanism = m;
  a.hints = hints;
  a.bindings.resize(p.ops.size());
  return a;
}

bool has_wildcards(const CommPattern& p) {
  return std::any_of(p.ops.begin(), p.ops.end(),
                     [](const PatternOp& op) { return op.wildcard; });
}

bool is_p2p_pattern(const CommPattern& p) {
  return std::all_of(p.ops.begin(), p.ops.end(), [](const PatternOp& op) {
    return is_point_to_point(op.kind);
  });
}

[[noreturn]] void unsupported(Mechanism m, const std::string& why) {
  fail(ErrorKind::kUnsupportedPattern, to_string(m) + " unsupported: " + why);
}

void require_p2p(const CommPattern& p, Mechanism m) {
  if (!is_p2p_pattern(p)) {
    unsupported(m, to_string(p.kind) + " pattern has no point-to-point messages");
  }
}

// Plain p2p binding on a communicator: ranks are process ids.
void bind_p2p_comm(Assignment& a, const PatternOp& op, const Communicator& c,
                   int comm_index, Tag tag) {
  Binding& b = a.bindings[op.id];
  b.bound = true;
  b.kind = op.kind;
  b.context = MatchContextId::comm_context(c.context_id);
  b.comm_index = comm_index;
  if (op.kind == OpKind::kRecv && op.wildcard) {
    b.target = kAnySource;
    b.tag = Tag::any();
  } else {
    b.target = op.peer.process;
    b.tag = tag;
  }
}

Communicator add_comm(Assignment& a, ObjectRegistry& reg, const CommPattern& p,
                      const InfoHints& hints, CommPurpose purpose) {
  a.comms.push_back(reg.create_comm(all_processes(p), hints, purpose));
  return a.comms.back();
}

void finish_counts(Assignment& a) {
  a.objects_created.communicators = a.comms.size();
  a.objects_created.windows = a.windows.size();
}

// ---- stencil geometry for the mirrored communicator map ----

struct Geometry {
  std::vector<int> pgrid;
  std::vector<int> tgrid;
  std::vector<Offset> all;

  explicit Geometry(const CommPattern& p)
      : pgrid(p.process_grid),
        tgrid(p.thread_grid),
        all(stencil_offsets(p.dims(), p.kind == PatternKind::kStencil2D5pt ? 5
                                      : p.kind == PatternKind::kStencil2D9pt ? 9
                                                                             : 27)) {}

  int axes() const { return static_cast<int>(tgrid.size()); }

  // Process-offset of moving thread t by d.
  std::vector<int> delta(int thread, const Offset& d) const {
    const auto tc = unflatten(thread, tgrid);
    std::vector<int> out(tc.size());
    for (std::size_t a = 0; a < tc.size(); ++a) {
      const int moved = tc[a] + d[a];
      out[a] = moved < 0 ? -1 : (moved >= tgrid[a] ? 1 : 0);
    }
    return out;
  }

  bool remote(int thread, const Offset& d) const {
    for (int v : delta(thread, d)) {
      if (v != 0) return true;
    }
    return false;
  }

  int moved_thread(int thread, const Offset& d) const {
    auto tc = unflatten(thread, tgrid);
    for (std::size_t a = 0; a < tc.size(); ++a) {
      tc[a] = ((tc[a] + d[a]) % tgrid[a] + tgrid[a]) % tgrid[a];
    }
    return flatten(tc, tgrid);
  }

  int moved_process(int process, const std::vector<int>& dp) const {
    auto pc = unflatten(process, pgrid);
    for (std::size_t a = 0; a < pc.size(); ++a) {
      pc[a] = ((pc[a] + dp[a]) % pgrid[a] + pgrid[a]) % pgrid[a];
    }
    return flatten(pc, pgrid);
  }

  static bool canonical(const Offset& d) {
    for (int v : d) {
      if (v != 0) return v > 0;
    }
    return false;
  }
};

}  // namespace

Assignment assign_communicators_naive(const CommPattern& p,
                                      const AssignOptions& options) {
  require_p2p(p, Mechanism::kCommunicatorsNaive);
  if (has_wildcards(p)) {
    unsupported(Mechanism::kCommunicatorsNaive,
                "wildcard receives cannot name the sender's communicator");
  }
  Assignment a = start(p, Mechanism::kCommunicatorsNaive, options.hints);
  ObjectRegistry reg;
  for (int t = 0; t < p.threads_per_process; ++t) {
    add_comm(a, reg, p, options.hints, CommPurpose::kParallelismExposure);
  }
  for (const PatternOp& op : p.ops) {
    // Thread i sends on comm i; receivers use the sender's index.
    const int index = op.kind == OpKind::kSend ? op.actor.thread : op.peer.thread;
    bind_p2p_comm(a, op, a.comms[static_cast<std::size_t>(index)], index,
                  make_tag(op.app_tag));
  }
  finish_counts(a);
  return a;
}

Assignment assign_communicators_ideal(const CommPattern& p,
                                      const AssignOptions& options) {
  if (!is_stencil(p.kind)) {
    if (p.kind == PatternKind::kLegionPolling ||
        p.kind == PatternKind::kDynamicGraph || p.kind == PatternKind::kFanIn) {
      // Without a fixed geometry the best static map is one comm per
      // sending thread (Legion: K comms shared by the task threads).
      if (p.kind == PatternKind::kLegionPolling) {
        const int k = std::max(1, options.legion_comms);
        Assignment a = start(p, Mechanism::kCommunicators, options.hints);
        ObjectRegistry reg;
        for (int i = 0; i < k; ++i) {
          add_comm(a, reg, p, options.hints, CommPurpose::kParallelismExposure);
        }
        for (const PatternOp& op : p.ops) {
          const int sender = op.kind == OpKind::kSend ? op.actor.thread : op.peer.thread;
          const int index = sender % k;
          bind_p2p_comm(a, op, a.comms[static_cast<std::size_t>(index)], index,
                        make_tag(op.app_tag));
        }
        finish_counts(a);
        return a;
      }
      Assignment a = assign_communicators_naive(p, options);
      a.mechanism = Mechanism::kCommunicators;
      return a;
    }
    if (p.kind == PatternKind::kMultithreadedAllreduce) {
      Assignment a = start(p, Mechanism::kCommunicators, options.hints);
      ObjectRegistry reg;
      for (int t = 0; t < p.threads_per_process; ++t) {
        add_comm(a, reg, p, options.hints, CommPurpose::kParallelismExposure);
      }
      for (const PatternOp& op : p.ops) {
        Binding& b = a.bindings[op.id];
        b.bound = true;
        b.kind = OpKind::kCollectiveCall;
        const auto& c = a.comms[static_cast<std::size_t>(op.actor.thread)];
        b.context = MatchContextId::comm_context(c.context_id);
        b.comm_index = op.actor.thread;
        b.target = op.actor.process;
        b.collective_group = op.actor.thread;
      }
      a.intranode_step = p.threads_per_process > 1;
      finish_counts(a);
      return a;
    }
    unsupported(Mechanism::kCommunicators,
                to_string(p.kind) + " pattern needs a window for RMA");
  }

  const Geometry g(p);
  for (std::size_t ax = 0; ax < g.pgrid.size(); ++ax) {
    if (g.pgrid[ax] < 2 || g.pgrid[ax] % 2 != 0) {
      fail(ErrorKind::kInvalidArgument,
           "mirrored communicator map needs even process grid dims >= 2");
    }
  }
  Assignment a = start(p, Mechanism::kCommunicators, options.hints);
  ObjectRegistry reg;

  // Canonical offsets present in the pattern, in stencil order.
  std::vector<int> canon;
  for (std::size_t i = 0; i < g.all.size(); ++i) {
    const Offset& d = g.all[i];
    const bool present =
        std::find(p.offsets.begin(), p.offsets.end(), d) != p.offsets.end();
    if (present && Geometry::canonical(d)) canon.push_back(static_cast<int>(i));
  }
  // U(d+): threads whose d+ neighbor lives on another process.
  std::map<int, std::vector<int>> boundary;
  std::map<std::tuple<int, int, int>, int> label_to_comm;
  for (int di : canon) {
    auto& u = boundary[di];
    for (int t = 0; t < p.threads_per_process; ++t) {
      if (g.remote(t, g.all[static_cast<std::size_t>(di)])) u.push_back(t);
    }
    for (int set = 0; set < 2; ++set) {
      for (std::size_t pos = 0; pos < u.size(); ++pos) {
        label_to_comm[{di, set, static_cast<int>(pos)}] =
            static_cast<int>(a.comms.size());
        add_comm(a, reg, p, options.hints, CommPurpose::kParallelismExposure);
      }
    }
  }
  auto index_of = [&](const Offset& d) {
    return static_cast<int>(std::find(g.all.begin(), g.all.end(), d) - g.all.begin());
  };

  for (const PatternOp& op : p.ops) {
    const Offset& d = g.all[static_cast<std::size_t>(op.direction)];
    Offset dplus = d;
    int t0 = op.actor.thread;
    int low = op.actor.process;
    if (!Geometry::canonical(d)) {
      dplus = {-d[0], -d[1], -d[2]};
      t0 = g.moved_thread(op.actor.thread, d);
      low = g.moved_process(op.actor.process, g.delta(op.actor.thread, d));
    }
    const auto delta0 = g.delta(t0, dplus);
    std::size_t axis = 0;
    while (axis < delta0.size() && delta0[axis] == 0) ++axis;
    const int set = unflatten(low, g.pgrid)[axis] % 2;
    const int di = index_of(dplus);
    const auto& u = boundary.at(di);
    const int pos = static_cast<int>(std::find(u.begin(), u.end(), t0) - u.begin());
    const int index = label_to_comm.at({di, set, pos});
    bind_p2p_comm(a, op, a.comms[static_cast<std::size_t>(index)], index,
                  make_tag(op.app_tag));
  }
  finish_counts(a);
  return a;
}

Assignment assign_shared_communicator(const CommPattern& p,
                                      const AssignOptions& options) {
  require_p2p(p, Mechanism::kSharedCommunicator);
  Assignment a = start(p, Mechanism::kSharedCommunicator, options.hints);
  if (has_wildcards(p) && (options.hints.no_any_tag || options.hints.no_any_source)) {
    unsupported(Mechanism::kSharedCommunicator,
                "wildcard pattern conflicts with no_any_tag/no_any_source hints");
  }
  ObjectRegistry reg;
  add_comm(a, reg, p, options.hints, CommPurpose::kGeneral);
  for (const PatternOp& op : p.ops) {
    bind_p2p_comm(a, op, a.comms[0], 0, make_tag(op.app_tag));
  }
  finish_counts(a);
  return a;
}

Assignment assign_tags(const CommPattern& p, const AssignOptions& options) {
  require_p2p(p, Mechanism::kTagsWithHints);
  if (has_wildcards(p)) {
    unsupported(Mechanism::kTagsWithHints,
                "wildcard pattern (no_any_tag/no_any_source forbid wildcards)");
  }
  std::uint32_t max_app = 0;
  for (const PatternOp& op : p.ops) max_app = std::max(max_app, op.app_tag);

  TagBitLayout layout;
  const auto threads = static_cast<std::uint32_t>(std::max(1, p.threads_per_process));
  layout.num_tid_bits = std::max(1, static_cast<int>(std::bit_width(threads - 1)));
  layout.num_app_bits = std::max(1, static_cast<int>(std::bit_width(max_app)));
  layout.num_vcis = 1 << layout.num_tid_bits;
  if (2 * layout.num_tid_bits + layout.num_app_bits > layout.tag_width) {
    fail(ErrorKind::kTagOverflow,
         "tag bits exhausted: " + std::to_string(2 * layout.num_tid_bits) +
             " thread bits + " + std::to_string(layout.num_app_bits) +
             " application bits exceed " + std::to_string(layout.tag_width));
  }
  InfoHints hints = options.hints;
  hints.no_any_tag = true;
  hints.no_any_source = true;
  hints.tag_vci_bits = layout;

  Assignment a = start(p, Mechanism::kTagsWithHints, hints);
  ObjectRegistry reg;
  add_comm(a, reg, p, hints, CommPurpose::kParallelismExposure);
  for (const PatternOp& op : p.ops) {
    const bool sending = op.kind == OpKind::kSend;
    const auto src = static_cast<std::uint32_t>(sending ? op.actor.thread : op.peer.thread);
    const auto dst = static_cast<std::uint32_t>(sending ? op.peer.thread : op.actor.thread);
    bind_p2p_comm(a, op, a.comms[0], 0, encode_tag(src, dst, op.app_tag, layout));
  }
  finish_counts(a);
  return a;
}

Assignment assign_endpoints(const CommPattern& p, const AssignOptions& options) {
  Assignment a = start(p, Mechanism::kEndpoints, options.hints);
  ObjectRegistry reg;

  // Local endpoint index of every thread that needs one.
  std::vector<std::map<ThreadId, int>> local(static_cast<std::size_t>(p.num_processes));
  std::vector<int> eps(static_cast<std::size_t>(p.num_processes), 1);
  for (int proc = 0; proc < p.num_processes; ++proc) {
    auto& m = local[static_cast<std::size_t>(proc)];
    if (options.numbering == EndpointNumbering::kDense) {
      for (int t = 0; t < p.threads_per_process; ++t) m[t] = t;
    } else {
      int next = 0;
      for (ThreadId t : p.communicating_threads(proc)) m[t] = next++;
    }
    eps[static_cast<std::size_t>(proc)] = std::max(1, static_cast<int>(m.size()));
  }
  const Communicator world = reg.world(p.num_processes);
  EndpointsComm ec = create_endpoints_comm(reg, world, eps);
  auto rank = [&](ThreadRef t) {
    return ec.rank_of(t.process, local[static_cast<std::size_t>(t.process)].at(t.thread));
  };

  std::optional<Window> window;
  const bool rma = std::any_of(p.ops.begin(), p.ops.end(),
                               [](const PatternOp& op) { return is_rma(op.kind); });
  if (rma) {
    window = reg.create_window(options.hints);
    a.windows.push_back(*window);
  }
  for (const PatternOp& op : p.ops) {
    Binding& b = a.bindings[op.id];
    b.bound = true;
    b.kind = op.kind;
    b.endpoint = rank(op.actor);
    if (is_point_to_point(op.kind)) {
      b.context = MatchContextId::endpoints(ec.comm().context_id);
      if (op.kind == OpKind::kRecv && op.wildcard) {
        b.target = kAnySource;
        b.tag = Tag::any();
      } else {
        b.target = rank(op.peer);
        b.tag = make_tag(op.app_tag);
      }
    } else if (is_rma(op.kind)) {
      // Window ranks are process ranks; the origin is the endpoint.
      b.context = MatchContextId::window(window->window_id);
      b.target = op.peer.process;
    } else if (op.kind == OpKind::kCollectiveCall) {
      b.context = MatchContextId::endpoints(ec.comm().context_id);
      b.target = *b.endpoint;
      b.collective_group = 0;
    } else {
      unsupported(Mechanism::kEndpoints, "operation kind " + to_string(op.kind));
    }
  }
  a.objects_created.endpoints =
      static_cast<std::size_t>(*std::max_element(eps.begin(), eps.end()));
  a.endpoints = std::move(ec);
  finish_counts(a);
  return a;
}

Assignment assign_partitioned(const CommPattern& p, const AssignOptions& options) {
  if (p.kind == PatternKind::kLegionPolling || has_wildcards(p)) {
    unsupported(Mechanism::kPartitioned,
                "wildcard pattern (partitioned requests cannot use wildcards)");
  }
  if (p.kind == PatternKind::kDynamicGraph) {
    unsupported(Mechanism::kPartitioned,
                "dynamic neighbors (partitioned requests are persistent by definition)");
  }
  if (p.kind == PatternKind::kBspmmRMA) {
    unsupported(Mechanism::kPartitioned, "no partitioned RMA operations exist");
  }
  Assignment a = start(p, Mechanism::kPartitioned, options.hints);
  a.sync_per_iteration = true;
  ObjectRegistry reg;
  const ContextId world = ObjectRegistry::kWorldContext;

  if (p.kind == PatternKind::kMultithreadedAllreduce) {
    // One request per process; each thread contributes one partition.
    std::map<ProcessId, RequestId> req_of;
    for (int proc = 0; proc < p.num_processes; ++proc) {
      RequestInfo r;
      r.id = reg.next_request_id();
      r.direction = PartitionDirection::kSend;
      r.owner = proc;
      r.peer = proc;
      r.comm = world;
      req_of[proc] = r.id;
      a.requests.push_back(r);
    }
    for (const PatternOp& op : p.ops) {
      Binding& b = a.bindings[op.id];
      const RequestId id = req_of.at(op.actor.process);
      b.bound = true;
      b.kind = OpKind::kPartitionReady;
      b.context = MatchContextId::partitioned(id, world);
      b.partition = PartitionRef{id, op.actor.thread};
      b.target = op.actor.process;
      b.collective_group = 0;
      auto& parts = a.requests[static_cast<std::size_t>(op.actor.process)].partitions;
      if (op.iteration == 0) parts.push_back(op.id);
    }
    a.objects_created.requests = 1;
    finish_counts(a);
    return a;
  }
  require_p2p(p, Mechanism::kPartitioned);

  // Messages grouped by (sender, receiver, key); each group is a request
  // pair reused by every iteration.
  using Key = std::tuple<ProcessId, ProcessId, int>;
  std::map<Key, std::map<int, std::vector<std::pair<std::uint32_t, std::uint32_t>>>>
      groups;
  for (const auto& [s, r] : p.matches) {
    const PatternOp& so = p.ops[s];
    groups[{so.actor.process, so.peer.process, so.group_key}][so.iteration]
        .emplace_back(s, r);
  }
  for (auto& [key, per_iter] : groups) {
    const auto& [sender, receiver, gkey] = key;
    std::size_t width = 0;
    for (auto& [it, list] : per_iter) {
      std::sort(list.begin(), list.end(), [&](const auto& x, const auto& y) {
        const PatternOp& a1 = p.ops[x.first];
        const PatternOp& b1 = p.ops[y.first];
        return std::tie(a1.actor.thread, a1.program_index) <
               std::tie(b1.actor.thread, b1.program_index);
      });
      if (width == 0) width = list.size();
      if (list.size() != width || static_cast<int>(per_iter.size()) != p.iterations) {
        unsupported(Mechanism::kPartitioned,
                    "neighbor set changes between iterations");
      }
    }
    RequestInfo sreq;
    sreq.id = reg.next_request_id();
    sreq.direction = PartitionDirection::kSend;
    sreq.owner = sender;
    sreq.peer = receiver;
    sreq.tag = make_tag(static_cast<std::uint32_t>(gkey));
    sreq.comm = world;
    RequestInfo rreq = sreq;
    rreq.id = reg.next_request_id();
    rreq.direction = PartitionDirection::kRecv;
    rreq.owner = receiver;
    rreq.peer = sender;
    sreq.partner = rreq.id;
    rreq.partner = sreq.id;
    for (const auto& [it, list] : per_iter) {
      for (std::size_t idx = 0; idx < list.size(); ++idx) {
        const auto [s, r] = list[idx];
        if (it == per_iter.begin()->first) {
          sreq.partitions.push_back(s);
          rreq.partitions.push_back(r);
        }
        Binding& sb = a.bindings[s];
        sb.bound = true;
        sb.kind = OpKind::kPartitionReady;
        sb.context = MatchContextId::partitioned(sreq.id, world);
        sb.partition = PartitionRef{sreq.id, static_cast<int>(idx)};
        sb.target = receiver;
        sb.tag = sreq.tag;
        Binding& rb = a.bindings[r];
        rb.bound = true;
        rb.kind = OpKind::kPartitionArrivedTest;
        rb.context = MatchContextId::partitioned(rreq.id, world);
        rb.partition = PartitionRef{rreq.id, static_cast<int>(idx)};
        rb.target = sender;
        rb.tag = sreq.tag;
      }
    }
    a.requests.push_back(std::move(sreq));
    a.requests.push_back(std::move(rreq));
  }
  std::map<ProcessId, std::size_t> owned;
  for (const RequestInfo& r : a.requests) ++owned[r.owner];
  a.objects_created.requests = owned.empty() ? 0 : owned.begin()->second;
  for (const auto& [proc, n] : owned) {
    a.objects_created.requests = std::max(a.objects_created.requests, n);
  }
  finish_counts(a);
  return a;
}

Assignment assign_windows(const CommPattern& p, const AssignOptions& options) {
  const bool rma = !p.ops.empty() &&
                   std::all_of(p.ops.begin(), p.ops.end(),
                               [](const PatternOp& op) { return is_rma(op.kind); });
  if (!rma) unsupported(Mechanism::kWindows, "pattern has no RMA operations");
  Assignment a = start(p, Mechanism::kWindows, options.hints);
  ObjectRegistry reg;
  // Accumulates must share one window to stay atomic.
  a.windows.push_back(reg.create_window(options.hints));
  for (const PatternOp& op : p.ops) {
    Binding& b = a.bindings[op.id];
    b.bound = true;
    b.kind = op.kind;
    b.context = MatchContextId::window(a.windows[0].window_id);
    b.target = op.peer.process;
  }
  finish_counts(a);
  return a;
}

Assignment assign(const CommPattern& p, Mechanism m, const AssignOptions& options) {
  switch (m) {
    case Mechanism::kCommunicators: return assign_communicators_ideal(p, options);
    case Mechanism::kCommunicatorsNaive: return assign_communicators_naive(p, options);
    case Mechanism::kSharedCommunicator: return assign_shared_communicator(p, options);
    case Mechanism::kTagsWithHints: return assign_tags(p, options);
    case Mechanism::kEndpoints: return assign_endpoints(p, options);
    case Mechanism::kPartitioned: return assign_partitioned(p, options);
    case Mechanism::kWindows: return assign_windows(p, options);
  }
  unsupported(m, "unknown mechanism");
}

OpDescriptor descriptor(const CommPattern& p, const Assignment& a,
                        std::uint32_t op) {
  if (op >= p.ops.size() || op >= a.bindings.size() || !a.bindings[op].bound) {
    fail(ErrorKind::kIncompleteAssignment,
         "operation " + std::to_string(op) + " has no binding");
  }
  const PatternOp& po = p.ops[op];
  const Binding& b = a.bindings[op];
  OpDescriptor d;
  d.kind = b.kind;
  d.source = po.actor;
  d.endpoint = b.endpoint;
  d.target = b.target;
  d.tag = b.tag;
  d.context = b.context;
  d.target_location = po.location;
  d.partition = b.partition;
  d.program_index = po.program_index;
  return d;
}

}  // namespace mpxlab
