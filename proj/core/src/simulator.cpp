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

#include "mpxlab/simulator.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <set>
#include <tuple>

namespace mpxlab {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kIssue: return "Issue";
    case EventKind::kChannelAcquire: return "ChannelAcquire";
    case EventKind::kTransfer: return "Transfer";
    case EventKind::kMatchAttempt: return "MatchAttempt";
    case EventKind::kMatchSuccess: return "MatchSuccess";
    case EventKind::kWaitBlock: return "WaitBlock";
    case EventKind::kWaitRelease: return "WaitRelease";
    case EventKind::kBarrier: return "Barrier";
    case EventKind::kProbeIteration: return "ProbeIteration";
  }
  return "?";
}

MappingPolicy default_policy(const Assignment& a) {
  switch (a.mechanism) {
    case Mechanism::kTagsWithHints:
      if (a.hints.tag_vci_bits) return MappingPolicy::tag_bits(*a.hints.tag_vci_bits);
      return MappingPolicy::hash();
    case Mechanism::kEndpoints: return MappingPolicy::endpoint_identity();
    case Mechanism::kPartitioned: return MappingPolicy::partition_index();
    default: return MappingPolicy::hash();
  }
}

namespace {

enum class StepKind { kOp, kWaitOwn, kWaitAll, kBarrier, kPoll };

struct Step {
  StepKind kind = StepKind::kOp;
  std::uint32_t op = kNoOp;
  int iteration = 0;
};

enum class Block { kNone, kWaitOwn, kArrival, kWaitAll, kBarrier, kPoll };

struct ThreadState {
  ProcessId process = 0;
  ThreadId thread = 0;
  std::vector<Step> program;
  std::size_t pc = 0;
  Tick ready_at = 0;
  Block block = Block::kNone;
  std::uint32_t waiting_op = kNoOp;
  int outstanding = 0;

  bool finished() const { return pc >= program.size(); }
};

enum class MsgType { kP2P, kPartition, kRma, kCollective };

struct Message {
  MsgType type = MsgType::kP2P;
  std::vector<std::uint32_t> ops;
  std::vector<std::pair<ProcessId, int>> slots;
  Tick ready = 0;
  Tick duration = 0;
  std::uint64_t tiebreak = 0;
  // Partition transfers: send request index and partition.
  std::size_t request = 0;
  int partition = 0;
};

using EngineKey = std::tuple<int, std::uint64_t, Rank>;

struct Engine {
  std::deque<std::uint32_t> posted;
  std::deque<std::uint32_t> unexpected;
};

using BucketKey = std::tuple<ProcessId, int, std::uint64_t, Rank>;

struct RequestRuntime {
  RequestInfo info;
  PartitionedRequest state;
  int serving = 0;
  bool matched = false;
  int transferred = 0;
  std::vector<int> pending;
  std::size_t partner = 0;
};

class Simulation {
 public:
  Simulation(const CommPattern& p, const Assignment& a, const ChannelPool& pool,
             const MappingPolicy& policy, const CostModel& cost,
             std::uint64_t seed, const SimOptions& options)
      : p_(p), a_(a), pool_(pool), policy_(policy), cost_(cost), seed_(seed),
        options_(options), allocator_(pool) {}

  SimReport run();

 private:
  void prepare();
  void build_programs();
  void log(EventKind kind, std::uint32_t op, ProcessId proc, ThreadId thread,
           int channel = -1, int iteration = 0);

  void step_thread(ThreadState& t);
  void issue(ThreadState& t, std::uint32_t op);
  void issue_p2p(std::uint32_t op);
  void enqueue_match(std::uint32_t send, std::uint32_t recv, Tick ready);
  Engine& engine_for(const OpDescriptor& d, bool receiving);
  EngineKey engine_key(const OpDescriptor& d, bool receiving) const;

  void activate_request(std::size_t r, bool first);
  void request_arrival(std::size_t r);
  void request_matched(std::size_t send_req, Tick ready);
  void partition_ready(std::size_t r, int idx, Tick ready);

  bool poll(ThreadState& t);
  bool wait_all_satisfied(ProcessId proc, int iteration) const;
  void finish_wait_all(ProcessId proc, int iteration);
  void arrive_barrier(ThreadState& t, int iteration);

  void start_transfers();
  bool conflicts(const Message& m) const;
  void complete_transfers();
  void op_done(std::uint32_t op);
  void wake_threads();

  std::vector<std::pair<ProcessId, int>> slots_for(const Message& m) const;
  std::uint64_t tiebreak(std::uint32_t op) const {
    const std::uint64_t key[] = {seed_, op};
    return fnv1a64(key);
  }
  BucketKey bucket(std::uint32_t op) const {
    const OpDescriptor& d = desc_[op];
    return {d.source.process, static_cast<int>(d.context.family), d.context.id,
            d.origin()};
  }

  const CommPattern& p_;
  const Assignment& a_;
  ChannelPool pool_;
  MappingPolicy policy_;
  CostModel cost_;
  std::uint64_t seed_;
  SimOptions options_;
  ChannelAllocator allocator_;

  SimReport report_;
  Tick now_ = 0;
  std::vector<OpDescriptor> desc_;
  std::vector<ThreadState> threads_;
  std::map<ThreadRef, std::size_t> thread_index_;
  std::vector<bool> done_;
  std::vector<std::size_t> owner_thread_;
  std::map<EngineKey, Engine> engines_;
  std::map<EngineKey, std::size_t> poller_of_engine_;

  std::vector<Message> messages_;
  std::vector<std::size_t> ready_;
  struct Active {
    std::size_t msg;
    Tick end;
  };
  std::vector<Active> active_;
  std::set<std::pair<ProcessId, int>> busy_;
  std::map<ProcessId, std::uint64_t> busy_per_process_;
  std::map<BucketKey, std::vector<std::uint32_t>> in_flight_;

  // Partitioned requests.
  std::vector<RequestRuntime> requests_;
  std::map<RequestId, std::size_t> request_index_;
  std::map<ProcessId, std::vector<std::size_t>> requests_of_;
  std::vector<OpDescriptor> request_desc_;

  // Collectives: (group, iteration) -> joined ops, expected size.
  std::map<std::pair<int, int>, std::vector<std::uint32_t>> collective_joined_;
  std::map<std::pair<int, int>, std::size_t> collective_size_;

  // Barriers: (process, iteration) -> arrived threads.
  std::map<std::pair<ProcessId, int>, std::vector<std::size_t>> barrier_;
  std::map<std::pair<ProcessId, int>, std::size_t> ops_left_;

  // Polling threads: contexts swept and pending receives per context.
  std::map<std::size_t, std::vector<MatchContextId>> poll_contexts_;
  std::map<std::size_t, std::map<MatchContextId, std::deque<std::uint32_t>>>
      poll_queue_;
};

void Simulation::log(EventKind kind, std::uint32_t op, ProcessId proc,
                     ThreadId thread, int channel, int iteration) {
  switch (kind) {
    case EventKind::kMatchAttempt: ++report_.match_attempts_total; break;
    case EventKind::kMatchSuccess: ++report_.matches_total; break;
    case EventKind::kWaitBlock: ++report_.sync_wait_events; break;
    case EventKind::kBarrier: ++report_.barrier_events; break;
    case EventKind::kProbeIteration: ++report_.probe_iterations; break;
    default: break;
  }
  if (options_.record_events) {
    report_.events.push_back({now_, kind, op, proc, thread, channel, iteration});
  }
}

void Simulation::prepare() {
  if (a_.bindings.size() != p_.ops.size()) {
    fail(ErrorKind::kIncompleteAssignment, "assignment does not cover the pattern");
  }
  desc_.reserve(p_.ops.size());
  for (std::uint32_t i = 0; i < p_.ops.size(); ++i) {
    desc_.push_back(descriptor(p_, a_, i));
  }
  for (const auto& [s, r] : p_.matches) {
    if (!can_match(desc_[s], desc_[r])) {
      fail(ErrorKind::kInvalidAssignment,
           "refusing to simulate: op " + std::to_string(s) +
               " cannot match its intended receive " + std::to_string(r));
    }
  }
  done_.assign(p_.ops.size(), false);

  // Round-robin table follows creation order.
  allocator_.on_create(ObjectRegistry::kWorldContext);
  for (const Communicator& c : a_.comms) allocator_.on_create(c.context_id);
  if (a_.endpoints) allocator_.on_create(a_.endpoints->comm().context_id);
  for (const Window& w : a_.windows) allocator_.on_create(w.window_id);

  for (std::size_t i = 0; i < a_.requests.size(); ++i) {
    const RequestInfo& info = a_.requests[i];
    request_index_[info.id] = i;
    requests_of_[info.owner].push_back(i);
    const int parts = std::max<int>(1, static_cast<int>(info.partitions.size()));
    requests_.push_back({info,
                         PartitionedRequest(info.id, info.direction, parts,
                                            p_.payload, info.peer, info.tag, info.comm),
                         0, false, 0, {}, 0});
    OpDescriptor d;
    d.kind = info.direction == PartitionDirection::kSend
                 ? OpKind::kPartitionReady
                 : OpKind::kPartitionArrivedTest;
    d.source = {info.owner, 0};
    d.target = info.peer;
    d.tag = info.tag;
    d.context = MatchContextId::partitioned(info.id, info.comm);
    d.partition = PartitionRef{info.id, 0};
    request_desc_.push_back(d);
  }
  for (RequestRuntime& r : requests_) {
    auto it = request_index_.find(r.info.partner);
    if (it != request_index_.end()) r.partner = it->second;
  }

  for (std::uint32_t i = 0; i < p_.ops.size(); ++i) {
    const Binding& b = a_.bindings[i];
    if (b.collective_group >= 0) {
      ++collective_size_[{b.collective_group, p_.ops[i].iteration}];
    }
    ++ops_left_[{p_.ops[i].actor.process, p_.ops[i].iteration}];
  }

  // Expected matched messages.
  for (const PatternOp& op : p_.ops) {
    if (op.kind == OpKind::kSend && is_point_to_point(a_.bindings[op.id].kind)) {
      ++report_.messages_total;
    }
  }
  for (const RequestInfo& r : a_.requests) {
    if (r.direction == PartitionDirection::kSend && r.partner != 0) {
      report_.messages_total += static_cast<std::uint64_t>(p_.iterations);
    }
  }
}

void Simulation::build_programs() {
  const bool partitioned = a_.mechanism == Mechanism::kPartitioned;
  const bool barrier = a_.sync_per_iteration || a_.intranode_step;
  for (int proc = 0; proc < p_.num_processes; ++proc) {
    for (int t = 0; t < p_.threads_per_process; ++t) {
      ThreadState ts;
      ts.process = proc;
      ts.thread = t;
      thread_index_[{proc, t}] = threads_.size();
      threads_.push_back(ts);
    }
  }
  std::vector<std::vector<std::uint32_t>> per_thread(threads_.size());
  for (const PatternOp& op : p_.ops) {
    per_thread[thread_index_.at(op.actor)].push_back(op.id);
  }
  owner_thread_.assign(p_.ops.size(), 0);
  std::vector<MatchContextId> poll_set;
  if (p_.kind == PatternKind::kLegionPolling) {
    for (const PatternOp& op : p_.ops) {
      if (op.actor.thread != p_.poller_thread) continue;
      const MatchContextId ctx = desc_[op.id].context;
      if (std::find(poll_set.begin(), poll_set.end(), ctx) == poll_set.end()) {
        poll_set.push_back(ctx);
      }
    }
    std::sort(poll_set.begin(), poll_set.end());
  }
  for (std::size_t ti = 0; ti < threads_.size(); ++ti) {
    ThreadState& ts = threads_[ti];
    auto& ids = per_thread[ti];
    for (std::uint32_t id : ids) owner_thread_[id] = ti;
    std::stable_sort(ids.begin(), ids.end(), [&](std::uint32_t x, std::uint32_t y) {
      const PatternOp& a = p_.ops[x];
      const PatternOp& b = p_.ops[y];
      if (a.iteration != b.iteration) return a.iteration < b.iteration;
      if (partitioned) {
        // Contribute local partitions before polling for remote ones.
        const bool ra = a_.bindings[x].kind == OpKind::kPartitionArrivedTest;
        const bool rb = a_.bindings[y].kind == OpKind::kPartitionArrivedTest;
        if (ra != rb) return !ra;
      }
      return a.program_index < b.program_index;
    });
    const bool poller = p_.kind == PatternKind::kLegionPolling &&
                        ts.thread == p_.poller_thread;
    if (poller) {
      // A poller cannot know where the next event lands, so every sweep
      // covers all contexts any poller listens on.
      poll_contexts_[ti] = poll_set;
      for (const MatchContextId& ctx : poll_set) poll_queue_[ti][ctx];
      for (std::uint32_t id : ids) {
        poll_queue_[ti][desc_[id].context].push_back(id);
        poller_of_engine_[engine_key(desc_[id], true)] = ti;
      }
      if (!ids.empty()) ts.program.push_back({StepKind::kPoll, kNoOp, 0});
      continue;
    }
    for (int it = 0; it < p_.iterations; ++it) {
      for (std::uint32_t id : ids) {
        const PatternOp& op = p_.ops[id];
        if (op.iteration != it) continue;
        ts.program.push_back({StepKind::kOp, id, it});
        if (op.wait_after && !partitioned) {
          ts.program.push_back({StepKind::kWaitOwn, kNoOp, it});
        }
      }
      if (a_.sync_per_iteration && ts.thread == 0) {
        ts.program.push_back({StepKind::kWaitAll, kNoOp, it});
      }
      if (barrier) ts.program.push_back({StepKind::kBarrier, kNoOp, it});
    }
  }
}

EngineKey Simulation::engine_key(const OpDescriptor& d, bool receiving) const {
  const std::uint64_t ctx = d.context.family == ContextFamily::kPartitionedRequest
                                ? d.context.comm
                                : d.context.id;
  return {static_cast<int>(d.context.family), ctx,
          receiving ? d.origin() : d.target};
}

Engine& Simulation::engine_for(const OpDescriptor& d, bool receiving) {
  return engines_[engine_key(d, receiving)];
}

void Simulation::enqueue_match(std::uint32_t send, std::uint32_t recv, Tick ready) {
  Message m;
  m.type = MsgType::kP2P;
  m.ops = {send, recv};
  m.ready = ready;
  m.duration = cost_.per_channel_transfer;
  m.tiebreak = tiebreak(send);
  m.slots = slots_for(m);
  messages_.push_back(std::move(m));
  ready_.push_back(messages_.size() - 1);
}

// Receives traverse the unexpected queue, sends the posted queue; every
// entry looked at is one attempt.
void Simulation::issue_p2p(std::uint32_t op) {
  const OpDescriptor& d = desc_[op];
  const bool receiving = d.kind == OpKind::kRecv;
  Engine& e = engine_for(d, receiving);
  auto& queue = receiving ? e.unexpected : e.posted;
  const ProcessId proc = d.source.process;
  const int it = p_.ops[op].iteration;
  Tick attempts = 0;
  for (auto q = queue.begin(); q != queue.end(); ++q) {
    ++attempts;
    log(EventKind::kMatchAttempt, op, proc, d.source.thread, -1, it);
    const std::uint32_t other = *q;
    const bool ok = receiving ? can_match(desc_[other], d) : can_match(d, desc_[other]);
    if (ok) {
      log(EventKind::kMatchSuccess, op, proc, d.source.thread, -1, it);
      queue.erase(q);
      const Tick ready = now_ + attempts * cost_.per_match_attempt;
      if (receiving) {
        enqueue_match(other, op, ready);
      } else {
        enqueue_match(op, other, ready);
      }
      return;
    }
  }
  if (receiving) {
    e.posted.push_back(op);
  } else {
    e.unexpected.push_back(op);
    auto pit = poller_of_engine_.find(engine_key(d, false));
    if (pit != poller_of_engine_.end()) {
      ThreadState& poller = threads_[pit->second];
      if (poller.block == Block::kPoll) {
        poller.block = Block::kNone;
        poller.ready_at = std::max(poller.ready_at, now_);
      }
    }
  }
}

void Simulation::activate_request(std::size_t r, bool first) {
  RequestRuntime& rr = requests_[r];
  rr.state.apply(PartitionEvent::start());
  if (!first) ++rr.serving;
  rr.matched = false;
  rr.transferred = 0;
  rr.pending.clear();
  if (rr.info.partner == 0) return;
  request_arrival(r);
}

// Request-level matching: one send request meets one receive request per
// activation, whatever the partition count.
void Simulation::request_arrival(std::size_t r) {
  const OpDescriptor& d = request_desc_[r];
  const bool receiving = d.kind == OpKind::kPartitionArrivedTest;
  Engine& e = engines_[engine_key(d, receiving)];
  auto& queue = receiving ? e.unexpected : e.posted;
  // Request-level entries are stored with the high bit set to keep them
  // apart from op ids.
  constexpr std::uint32_t kReqBit = 0x80000000u;
  Tick attempts = 0;
  for (auto q = queue.begin(); q != queue.end(); ++q) {
    ++attempts;
    log(EventKind::kMatchAttempt, kNoOp, d.source.process, -1, -1,
        requests_[r].serving);
    const std::size_t other = *q & ~kReqBit;
    const bool ok = receiving ? can_match(request_desc_[other], d)
                              : can_match(d, request_desc_[other]);
    if (ok) {
      log(EventKind::kMatchSuccess, kNoOp, d.source.process, -1, -1,
          requests_[r].serving);
      queue.erase(q);
      const std::size_t send_req = receiving ? other : r;
      request_matched(send_req, now_ + attempts * cost_.per_match_attempt);
      return;
    }
  }
  (receiving ? e.posted : e.unexpected).push_back(static_cast<std::uint32_t>(r) | kReqBit);
}

void Simulation::request_matched(std::size_t send_req, Tick ready) {
  RequestRuntime& rr = requests_[send_req];
  rr.matched = true;
  for (int idx : rr.pending) partition_ready(send_req, idx, ready);
  rr.pending.clear();
}

void Simulation::partition_ready(std::size_t r, int idx, Tick ready) {
  RequestRuntime& rr = requests_[r];
  const RequestRuntime& peer = requests_[rr.partner];
  const std::size_t pos = static_cast<std::size_t>(idx);
  // Ops of the iteration this activation serves.
  const std::uint32_t base_send = rr.info.partitions[pos];
  const std::uint32_t base_recv = peer.info.partitions[pos];
  const std::uint32_t stride_send = static_cast<std::uint32_t>(rr.serving);
  std::uint32_t send = base_send;
  std::uint32_t recv = base_recv;
  if (stride_send > 0) {
    // Locate the op of the same (thread, direction) in later iterations.
    const PatternOp& s0 = p_.ops[base_send];
    const PatternOp& r0 = p_.ops[base_recv];
    for (const PatternOp& op : p_.ops) {
      if (op.iteration != rr.serving) continue;
      if (op.actor == s0.actor && op.direction == s0.direction &&
          op.kind == s0.kind && op.group_key == s0.group_key &&
          a_.bindings[op.id].partition &&
          a_.bindings[op.id].partition->index == idx &&
          a_.bindings[op.id].context == a_.bindings[base_send].context) {
        send = op.id;
      }
      if (op.actor == r0.actor && op.kind == r0.kind &&
          a_.bindings[op.id].partition &&
          a_.bindings[op.id].partition->index == idx &&
          a_.bindings[op.id].context == a_.bindings[base_recv].context) {
        recv = op.id;
      }
    }
  }
  Message m;
  m.type = MsgType::kPartition;
  m.ops = {send, recv};
  m.ready = ready;
  m.duration = cost_.per_channel_transfer;
  m.tiebreak = tiebreak(send);
  m.request = r;
  m.partition = idx;
  m.slots = slots_for(m);
  messages_.push_back(std::move(m));
  ready_.push_back(messages_.size() - 1);
}

std::vector<std::pair<ProcessId, int>> Simulation::slots_for(const Message& m) const {
  std::vector<std::pair<ProcessId, int>> slots;
  auto add = [&](ProcessId proc, int ch) {
    const std::pair<ProcessId, int> s{proc, ch};
    if (std::find(slots.begin(), slots.end(), s) == slots.end()) slots.push_back(s);
  };
  switch (m.type) {
    case MsgType::kP2P:
    case MsgType::kPartition: {
      const OpDescriptor& s = desc_[m.ops[0]];
      const OpDescriptor& r = desc_[m.ops[1]];
      const ChannelPair cp = map_entity(policy_, s, pool_, &allocator_);
      add(s.source.process, cp.local);
      add(r.source.process, cp.remote);
      break;
    }
    case MsgType::kRma: {
      const OpDescriptor& d = desc_[m.ops[0]];
      const ChannelPair cp = map_entity(policy_, d, pool_, &allocator_);
      add(d.source.process, cp.local);
      add(p_.ops[m.ops[0]].peer.process, cp.remote);
      break;
    }
    case MsgType::kCollective:
      for (std::uint32_t op : m.ops) {
        const ChannelPair cp = map_entity(policy_, desc_[op], pool_, &allocator_);
        add(desc_[op].source.process, cp.local);
      }
      break;
  }
  return slots;
}

void Simulation::issue(ThreadState& t, std::uint32_t op) {
  const PatternOp& po = p_.ops[op];
  const Binding& b = a_.bindings[op];
  log(EventKind::kIssue, op, t.process, t.thread, -1, po.iteration);
  if (b.collective_group >= 0) {
    ++t.outstanding;
    if (b.kind == OpKind::kPartitionReady && b.partition) {
      requests_[request_index_.at(b.partition->request)].state.apply(
          PartitionEvent::pready(b.partition->index));
    }
    auto& joined = collective_joined_[{b.collective_group, po.iteration}];
    joined.push_back(op);
    if (joined.size() == collective_size_.at({b.collective_group, po.iteration})) {
      Message m;
      m.type = MsgType::kCollective;
      m.ops = joined;
      m.ready = now_;
      const auto procs = static_cast<std::uint64_t>(std::max(2, p_.num_processes));
      m.duration = cost_.per_channel_transfer *
                   static_cast<Tick>(std::bit_width(procs - 1));
      m.tiebreak = tiebreak(joined.front());
      m.slots = slots_for(m);
      messages_.push_back(std::move(m));
      ready_.push_back(messages_.size() - 1);
    }
    return;
  }
  switch (b.kind) {
    case OpKind::kSend:
    case OpKind::kRecv:
      ++t.outstanding;
      issue_p2p(op);
      return;
    case OpKind::kPut:
    case OpKind::kGet:
    case OpKind::kAccumulate:
    case OpKind::kFlush: {
      ++t.outstanding;
      Message m;
      m.type = MsgType::kRma;
      m.ops = {op};
      m.ready = now_;
      m.duration = cost_.per_channel_transfer;
      m.tiebreak = tiebreak(op);
      m.slots = slots_for(m);
      messages_.push_back(std::move(m));
      ready_.push_back(messages_.size() - 1);
      return;
    }
    case OpKind::kPartitionReady: {
      const std::size_t r = request_index_.at(b.partition->request);
      RequestRuntime& rr = requests_[r];
      if (rr.serving != po.iteration) {
        fail(ErrorKind::kInvalidAssignment, "pready issued for an inactive iteration");
      }
      rr.state.apply(PartitionEvent::pready(b.partition->index));
      if (rr.matched) {
        partition_ready(r, b.partition->index, now_);
      } else {
        rr.pending.push_back(b.partition->index);
      }
      return;
    }
    case OpKind::kPartitionArrivedTest: {
      const std::size_t r = request_index_.at(b.partition->request);
      RequestRuntime& rr = requests_[r];
      if (rr.state.apply(PartitionEvent::parrived(b.partition->index)) ==
          TransitionOutcome::kFlagSet) {
        op_done(op);
      } else {
        t.block = Block::kArrival;
        t.waiting_op = op;
      }
      return;
    }
    case OpKind::kCollectiveCall:
      fail(ErrorKind::kInvalidAssignment, "collective without an instance group");
  }
}

bool Simulation::poll(ThreadState& t) {
  const std::size_t ti = thread_index_.at({t.process, t.thread});
  auto& queues = poll_queue_[ti];
  const bool remaining = std::any_of(queues.begin(), queues.end(),
                                     [](const auto& kv) { return !kv.second.empty(); });
  if (!remaining) return true;
  const auto& contexts = poll_contexts_[ti];
  std::optional<MatchContextId> hit;
  for (const MatchContextId& ctx : contexts) {
    if (queues[ctx].empty()) continue;
    const Engine& e = engines_[engine_key(desc_[queues[ctx].front()], true)];
    if (!e.unexpected.empty()) {
      hit = ctx;
      break;
    }
  }
  if (!hit) {
    t.block = Block::kPoll;
    return false;
  }
  // One sweep over every context, then receive the message found.
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    log(EventKind::kProbeIteration, kNoOp, t.process, t.thread,
        static_cast<int>(i), 0);
  }
  const std::uint32_t op = queues[*hit].front();
  queues[*hit].pop_front();
  issue(t, op);
  t.ready_at = now_ + cost_.probe * contexts.size() + cost_.per_message_issue;
  return false;
}

bool Simulation::wait_all_satisfied(ProcessId proc, int iteration) const {
  auto it = ops_left_.find({proc, iteration});
  return it == ops_left_.end() || it->second == 0;
}

void Simulation::finish_wait_all(ProcessId proc, int iteration) {
  auto it = requests_of_.find(proc);
  if (it == requests_of_.end()) return;
  for (std::size_t r : it->second) {
    RequestRuntime& rr = requests_[r];
    if (rr.state.apply(PartitionEvent::wait_all()) != TransitionOutcome::kCompleted) {
      fail(ErrorKind::kInvalidAssignment, "request incomplete after WaitAll");
    }
    if (iteration + 1 < p_.iterations) activate_request(r, false);
  }
}

void Simulation::arrive_barrier(ThreadState& t, int iteration) {
  auto& arrived = barrier_[{t.process, iteration}];
  arrived.push_back(thread_index_.at({t.process, t.thread}));
  if (static_cast<int>(arrived.size()) < p_.threads_per_process) {
    t.block = Block::kBarrier;
    log(EventKind::kWaitBlock, kNoOp, t.process, t.thread, -1, iteration);
    return;
  }
  log(EventKind::kBarrier, kNoOp, t.process, t.thread, -1, iteration);
  const Tick release = now_ + cost_.sync_wait;
  for (std::size_t ti : arrived) {
    ThreadState& w = threads_[ti];
    if (w.block == Block::kBarrier) {
      log(EventKind::kWaitRelease, kNoOp, w.process, w.thread, -1, iteration);
      w.block = Block::kNone;
    }
    w.ready_at = release;
    ++w.pc;
  }
}

void Simulation::step_thread(ThreadState& t) {
  while (!t.finished() && t.block == Block::kNone && t.ready_at <= now_) {
    const Step& s = t.program[t.pc];
    switch (s.kind) {
      case StepKind::kOp:
        ++t.pc;
        issue(t, s.op);
        t.ready_at = now_ + cost_.per_message_issue;
        if (cost_.per_message_issue > 0) return;
        break;
      case StepKind::kWaitOwn:
        if (t.outstanding > 0) {
          t.block = Block::kWaitOwn;
          return;
        }
        ++t.pc;
        break;
      case StepKind::kWaitAll:
        if (!wait_all_satisfied(t.process, s.iteration)) {
          t.block = Block::kWaitAll;
          log(EventKind::kWaitBlock, kNoOp, t.process, t.thread, -1, s.iteration);
          return;
        }
        finish_wait_all(t.process, s.iteration);
        ++t.pc;
        break;
      case StepKind::kBarrier:
        // The pc advances when the barrier releases.
        arrive_barrier(t, s.iteration);
        return;
      case StepKind::kPoll:
        if (poll(t)) {
          ++t.pc;
          break;
        }
        return;
    }
  }
}

bool Simulation::conflicts(const Message& m) const {
  for (std::uint32_t x : m.ops) {
    auto it = in_flight_.find(bucket(x));
    if (it == in_flight_.end()) continue;
    for (std::uint32_t y : it->second) {
      if (desc_[y].source.thread == desc_[x].source.thread) continue;
      if (!logically_parallel(desc_[x], desc_[y], a_.hints).parallel) return true;
    }
  }
  return false;
}

void Simulation::start_transfers() {
  if (ready_.empty()) return;
  std::stable_sort(ready_.begin(), ready_.end(), [&](std::size_t x, std::size_t y) {
    const Message& a = messages_[x];
    const Message& b = messages_[y];
    return std::tie(a.ready, a.tiebreak, x) < std::tie(b.ready, b.tiebreak, y);
  });
  std::vector<std::size_t> keep;
  keep.reserve(ready_.size());
  for (std::size_t id : ready_) {
    const Message& m = messages_[id];
    bool can = m.ready <= now_;
    if (can && !pool_.unbounded) {
      for (const auto& s : m.slots) {
        if (busy_.count(s) != 0) {
          can = false;
          break;
        }
      }
    }
    if (can && conflicts(m)) can = false;
    if (!can) {
      keep.push_back(id);
      continue;
    }
    for (const auto& s : m.slots) {
      if (!pool_.unbounded) busy_.insert(s);
      const std::uint64_t n = ++busy_per_process_[s.first];
      report_.max_channels_busy_per_process =
          std::max(report_.max_channels_busy_per_process, n);
      log(EventKind::kChannelAcquire, m.ops.front(), s.first, -1, s.second,
          p_.ops[m.ops.front()].iteration);
    }
    log(EventKind::kTransfer, m.ops.front(), desc_[m.ops.front()].source.process,
        desc_[m.ops.front()].source.thread,
        m.slots.empty() ? -1 : m.slots.front().second,
        p_.ops[m.ops.front()].iteration);
    for (std::uint32_t op : m.ops) in_flight_[bucket(op)].push_back(op);
    active_.push_back({id, now_ + m.duration});
    ++report_.transfers_total;
    report_.max_concurrent_transfers =
        std::max<std::uint64_t>(report_.max_concurrent_transfers, active_.size());
  }
  ready_ = std::move(keep);
}

void Simulation::op_done(std::uint32_t op) {
  if (done_[op]) return;
  done_[op] = true;
  --ops_left_[{p_.ops[op].actor.process, p_.ops[op].iteration}];
}

void Simulation::complete_transfers() {
  std::vector<Active> still;
  std::vector<Active> finished;
  for (const Active& a : active_) {
    (a.end <= now_ ? finished : still).push_back(a);
  }
  if (finished.empty()) return;
  active_ = std::move(still);
  for (const Active& fa : finished) {
    const Message& m = messages_[fa.msg];
    for (const auto& s : m.slots) {
      busy_.erase(s);
      --busy_per_process_[s.first];
      const auto ch = static_cast<std::size_t>(s.second);
      if (ch < report_.channel_occupancy.size()) {
        report_.channel_occupancy[ch] += m.duration;
      }
    }
    for (std::uint32_t op : m.ops) {
      auto& v = in_flight_[bucket(op)];
      v.erase(std::find(v.begin(), v.end(), op));
    }
    if (m.type == MsgType::kPartition) {
      RequestRuntime& sr = requests_[m.request];
      ++sr.transferred;
      requests_[sr.partner].state.deliver(m.partition);
      op_done(m.ops[0]);
    } else {
      for (std::uint32_t op : m.ops) {
        op_done(op);
        --threads_[owner_thread_[op]].outstanding;
      }
    }
  }
}

void Simulation::wake_threads() {
  for (ThreadState& t : threads_) {
    switch (t.block) {
      case Block::kWaitOwn:
        if (t.outstanding == 0) {
          t.block = Block::kNone;
          t.ready_at = std::max(t.ready_at, now_);
        }
        break;
      case Block::kArrival: {
        const Binding& b = a_.bindings[t.waiting_op];
        const RequestRuntime& rr = requests_[request_index_.at(b.partition->request)];
        if (rr.state.flag(b.partition->index)) {
          op_done(t.waiting_op);
          t.waiting_op = kNoOp;
          t.block = Block::kNone;
          t.ready_at = std::max(t.ready_at, now_);
        }
        break;
      }
      case Block::kWaitAll: {
        const Step& s = t.program[t.pc];
        if (wait_all_satisfied(t.process, s.iteration)) {
          log(EventKind::kWaitRelease, kNoOp, t.process, t.thread, -1, s.iteration);
          t.block = Block::kNone;
          t.ready_at = std::max(t.ready_at, now_ + cost_.sync_wait);
        }
        break;
      }
      default:
        break;
    }
  }
}

SimReport Simulation::run() {
  prepare();
  build_programs();
  report_.mechanism = to_string(a_.mechanism);
  report_.policy = to_string(policy_.kind);
  report_.seed = seed_;
  report_.channel_occupancy.assign(static_cast<std::size_t>(pool_.num_channels), 0);
  for (std::size_t r = 0; r < requests_.size(); ++r) activate_request(r, true);

  while (true) {
    complete_transfers();
    wake_threads();
    for (ThreadState& t : threads_) step_thread(t);
    start_transfers();

    bool all_done = active_.empty() && ready_.empty();
    Tick next = std::numeric_limits<Tick>::max();
    for (const Active& a : active_) next = std::min(next, a.end);
    for (std::size_t id : ready_) {
      if (messages_[id].ready > now_) next = std::min(next, messages_[id].ready);
    }
    for (const ThreadState& t : threads_) {
      if (t.finished()) continue;
      all_done = false;
      if (t.block == Block::kNone) next = std::min(next, std::max(t.ready_at, now_ + 1));
    }
    if (all_done) break;
    if (next == std::numeric_limits<Tick>::max()) {
      fail(ErrorKind::kInvalidAssignment,
           "simulation stalled at tick " + std::to_string(now_) +
               " with operations still pending");
    }
    now_ = std::max(next, now_ + 1);
  }
  report_.makespan = now_;

  if (report_.matches_total != report_.messages_total) {
    fail(ErrorKind::kInvalidAssignment,
         "message conservation violated: " + std::to_string(report_.matches_total) +
             " matches for " + std::to_string(report_.messages_total) + " messages");
  }

  // Footprint: buffers live across iterations, so count one iteration.
  std::uint64_t bytes = 0;
  const bool partitioned = a_.mechanism == Mechanism::kPartitioned;
  if (p_.kind == PatternKind::kMultithreadedAllreduce) {
    const CollectiveMechanism cm =
        a_.mechanism == Mechanism::kEndpoints     ? CollectiveMechanism::kEndpoints
        : a_.mechanism == Mechanism::kPartitioned ? CollectiveMechanism::kPartitioned
                                                  : CollectiveMechanism::kCommunicators;
    const CollectiveFootprint f = collective_footprint(
        cm, static_cast<std::uint64_t>(p_.threads_per_process), p_.payload);
    bytes = (f.result_buffer_bytes + f.scratch_bytes) *
            static_cast<std::uint64_t>(p_.num_processes);
  } else {
    for (const PatternOp& op : p_.ops) {
      if (op.iteration != 0) continue;
      if (op.kind == OpKind::kSend) bytes += 2 * op.bytes;
      if (is_rma(op.kind)) bytes += op.bytes;
    }
    if (partitioned) {
      bytes *= static_cast<std::uint64_t>(std::max(1, options_.partitioned_buffers));
    }
  }
  report_.memory_footprint_bytes = bytes;
  report_.objects = a_.objects_created;
  report_.objects_total = a_.objects_created.communicators + a_.objects_created.endpoints +
                          a_.objects_created.requests + a_.objects_created.windows;
  return std::move(report_);
}

}  // namespace

SimReport run(const CommPattern& pattern, const Assignment& assignment,
              const ChannelPool& pool, const MappingPolicy& policy,
              const CostModel& cost, std::uint64_t seed, const SimOptions& options) {
  if (pool.num_channels < 1) {
    fail(ErrorKind::kInvalidArgument, "channel pool needs R >= 1");
  }
  Simulation sim(pattern, assignment, pool, policy, cost, seed, options);
  return sim.run();
}

ComparisonTable compare_mechanisms(const CommPattern& pattern,
                                   const std::vector<Mechanism>& mechanisms,
                                   const ChannelPool& pool, const CostModel& cost,
                                   std::uint64_t seed, const AssignOptions& options) {
  ComparisonTable table;
  for (Mechanism m : mechanisms) {
    const Assignment a = assign(pattern, m, options);
    ComparisonRow row;
    row.mechanism = m;
    row.report = run(pattern, a, pool, default_policy(a), cost, seed);
    table.rows.push_back(std::move(row));
  }
  if (!table.rows.empty() && table.rows.front().report.makespan > 0) {
    const double base = static_cast<double>(table.rows.front().report.makespan);
    for (ComparisonRow& row : table.rows) {
      row.makespan_ratio = static_cast<double>(row.report.makespan) / base;
    }
  }
  return table;
}

}  // namespace mpxlab
