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

// The oracle does not reason about keys. It builds concrete probe messages
// over a finite domain, asks can_match whether each op could be the one to
// consume the probe, and replays both posting orders to see whether the
// winner depends on which op was posted first.

#include <algorithm>
#include <set>

#include "mpxlab/semantics.hpp"

namespace mpxlab {
namespace {

// A send behaves like a receive posted on its own stream: it competes for
// whatever a (possibly wildcard) receive at the peer could take.
OpDescriptor as_receive_pattern(const OpDescriptor& x) {
  OpDescriptor r = x;
  r.kind = OpKind::kRecv;
  return r;
}

std::vector<OpDescriptor> widened(const OpDescriptor& x, const InfoHints& h) {
  std::vector<OpDescriptor> out;
  const OpDescriptor base = as_receive_pattern(x);
  out.push_back(base);
  if (!h.no_any_source) {
    OpDescriptor v = base;
    v.target = kAnySource;
    out.push_back(v);
  }
  if (!h.no_any_tag) {
    OpDescriptor v = base;
    v.tag = Tag::any();
    out.push_back(v);
    if (!h.no_any_source) {
      v.target = kAnySource;
      out.push_back(v);
    }
  }
  return out;
}

// With both wildcard kinds ruled out, sends and receives of one rank live
// in separate matching streams.
int stream_class(const OpDescriptor& x, const InfoHints& h) {
  if (h.no_any_tag && h.no_any_source) return static_cast<int>(x.kind);
  return 0;
}

// Bit 0: a may win, bit 1: b may win, when `first` is posted before the other.
unsigned winners(const OpDescriptor& a, const OpDescriptor& b, bool a_first,
                 const InfoHints& h) {
  const bool unordered =
      a.origin() != b.origin() ||
      (a.kind == OpKind::kSend && b.kind == OpKind::kSend && h.allow_overtaking);
  if (unordered) return 3u;
  return a_first ? 1u : 2u;
}

bool order_sensitive(const OpDescriptor& a, const OpDescriptor& b,
                     const InfoHints& h) {
  return winners(a, b, true, h) != winners(a, b, false, h);
}

bool covers(const OpDescriptor& probe, const std::vector<OpDescriptor>& pats) {
  return std::any_of(pats.begin(), pats.end(),
                     [&](const OpDescriptor& p) { return can_match(probe, p); });
}

bool p2p_conflict(const OpDescriptor& a, const OpDescriptor& b,
                  std::span<const OpDescriptor> universe, const InfoHints& h) {
  // Real counterparts first: a receive in the universe that either send
  // could satisfy.
  if (a.kind == OpKind::kSend && b.kind == OpKind::kSend) {
    for (const OpDescriptor& u : universe) {
      if (u.kind == OpKind::kRecv && can_match(a, u) && can_match(b, u) &&
          order_sensitive(a, b, h)) {
        return true;
      }
    }
  }
  if (stream_class(a, h) != stream_class(b, h)) return false;

  std::set<Rank> peers{a.origin(), b.origin()};
  std::set<Tag::Raw> tags;
  auto note = [&](const OpDescriptor& x) {
    if (x.target != kAnySource) peers.insert(x.target);
    peers.insert(x.origin());
    if (!x.tag.is_any()) tags.insert(x.tag.raw());
  };
  note(a);
  note(b);
  for (const OpDescriptor& u : universe) {
    if (is_point_to_point(u.kind)) note(u);
  }
  peers.insert(*peers.rbegin() + 1);
  tags.insert(tags.empty() ? 0u : *tags.rbegin() + 1);

  const auto pa = widened(a, h);
  const auto pb = widened(b, h);
  for (const MatchContextId& ctx : {a.context, b.context}) {
    for (Rank dest : {a.origin(), b.origin()}) {
      for (Rank peer : peers) {
        for (Tag::Raw tag : tags) {
          OpDescriptor probe;
          probe.kind = OpKind::kSend;
          probe.context = ctx;
          probe.source.process = peer;
          if (ctx.family == ContextFamily::kEndpoints) probe.endpoint = peer;
          probe.target = dest;
          probe.tag = Tag(tag);
          if (covers(probe, pa) && covers(probe, pb) &&
              order_sensitive(a, b, h)) {
            return true;
          }
        }
      }
    }
  }
  return false;
}

}  // namespace

bool oracle_logically_parallel(const OpDescriptor& a, const OpDescriptor& b,
                               std::span<const OpDescriptor> universe,
                               const InfoHints& hints) {
  if (universe.size() > kOracleUniverseBound) {
    fail(ErrorKind::kOracleBound,
         "universe of " + std::to_string(universe.size()) +
             " ops exceeds the enumeration bound of " +
             std::to_string(kOracleUniverseBound));
  }
  if (is_point_to_point(a.kind) && is_point_to_point(b.kind)) {
    return !p2p_conflict(a, b, universe, hints);
  }
  return !ordered_before(a, b, hints) && !ordered_before(b, a, hints);
}

namespace {

constexpr ContextId kCommA = 1;
constexpr ContextId kCommB = 2;
constexpr ContextId kEpComm = 10;
constexpr WindowId kWinA = 20;
constexpr WindowId kWinB = 21;
constexpr RequestId kReqA = 30;
constexpr RequestId kReqB = 31;

// Endpoint ranks: process 0 owns {0, 1}, process 1 owns {2}.
constexpr Rank kRemoteEp = 2;

bool legal(const OpDescriptor& op, const InfoHints& h) {
  if (op.kind != OpKind::kRecv) return true;
  if (op.tag.is_any() && h.no_any_tag) return false;
  if (op.target == kAnySource && h.no_any_source) return false;
  return true;
}

// Operations issued by process 0; the pair under test is drawn from here.
std::vector<OpDescriptor> local_atoms() {
  std::vector<OpDescriptor> out;
  auto add = [&](OpDescriptor op) {
    const auto n = static_cast<std::uint32_t>(out.size());
    op.source = {0, static_cast<ThreadId>(n % 3)};
    op.program_index = n;
    out.push_back(op);
  };
  for (ContextId ctx : {kCommA, kCommB}) {
    for (Rank peer : {0, 1}) {
      for (std::uint32_t tag : {3u, 4u}) {
        OpDescriptor s;
        s.kind = OpKind::kSend;
        s.context = MatchContextId::comm_context(ctx);
        s.target = peer;
        s.tag = Tag(tag);
        add(s);
      }
    }
    for (Rank peer : {0, 1, kAnySource}) {
      for (Tag tag : {Tag(3), Tag(4), Tag::any()}) {
        OpDescriptor r;
        r.kind = OpKind::kRecv;
        r.context = MatchContextId::comm_context(ctx);
        r.target = peer;
        r.tag = tag;
        add(r);
      }
    }
    OpDescriptor c;
    c.kind = OpKind::kCollectiveCall;
    c.context = MatchContextId::comm_context(ctx);
    add(c);
  }
  for (Rank ep : {0, 1}) {
    OpDescriptor s;
    s.kind = OpKind::kSend;
    s.context = MatchContextId::endpoints(kEpComm);
    s.endpoint = ep;
    s.target = kRemoteEp;
    s.tag = Tag(3);
    add(s);
    for (Rank peer : {kRemoteEp, kAnySource}) {
      for (Tag tag : {Tag(3), Tag::any()}) {
        OpDescriptor r = s;
        r.kind = OpKind::kRecv;
        r.target = peer;
        r.tag = tag;
        add(r);
      }
    }
    OpDescriptor c;
    c.kind = OpKind::kCollectiveCall;
    c.context = MatchContextId::endpoints(kEpComm);
    c.endpoint = ep;
    add(c);
  }
  for (WindowId win : {kWinA, kWinB}) {
    for (OpKind kind : {OpKind::kPut, OpKind::kGet, OpKind::kAccumulate}) {
      for (std::uint64_t loc : {0u, 1u}) {
        OpDescriptor op;
        op.kind = kind;
        op.context = MatchContextId::window(win);
        op.target = 1;
        op.target_location = loc;
        add(op);
      }
    }
    OpDescriptor flush;
    flush.kind = OpKind::kFlush;
    flush.context = MatchContextId::window(win);
    flush.target = 1;
    add(flush);
    for (Rank ep : {0, 1}) {
      OpDescriptor acc;
      acc.kind = OpKind::kAccumulate;
      acc.context = MatchContextId::window(win);
      acc.endpoint = ep;
      acc.target = 1;
      acc.target_location = 0;
      add(acc);
    }
  }
  for (RequestId req : {kReqA, kReqB}) {
    for (int idx : {0, 1}) {
      OpDescriptor ready;
      ready.kind = OpKind::kPartitionReady;
      ready.context = MatchContextId::partitioned(req, kCommA);
      ready.partition = PartitionRef{req, idx};
      ready.target = 1;
      ready.tag = Tag(5);
      add(ready);
      OpDescriptor test = ready;
      test.kind = OpKind::kPartitionArrivedTest;
      add(test);
    }
  }
  return out;
}

// Counterpart operations issued by process 1.
std::vector<OpDescriptor> remote_atoms() {
  std::vector<OpDescriptor> out;
  auto add = [&](OpDescriptor op) {
    const auto n = static_cast<std::uint32_t>(out.size());
    op.source = {1, static_cast<ThreadId>(n % 3)};
    op.program_index = n;
    out.push_back(op);
  };
  for (ContextId ctx : {kCommA, kCommB}) {
    for (Tag tag : {Tag(3), Tag::any(), Tag(4)}) {
      OpDescriptor r;
      r.kind = OpKind::kRecv;
      r.context = MatchContextId::comm_context(ctx);
      r.target = 0;
      r.tag = tag;
      add(r);
      r.target = kAnySource;
      add(r);
    }
    for (std::uint32_t tag : {3u, 4u}) {
      OpDescriptor s;
      s.kind = OpKind::kSend;
      s.context = MatchContextId::comm_context(ctx);
      s.target = 0;
      s.tag = Tag(tag);
      add(s);
    }
  }
  OpDescriptor er;
  er.kind = OpKind::kRecv;
  er.context = MatchContextId::endpoints(kEpComm);
  er.endpoint = kRemoteEp;
  er.target = kAnySource;
  er.tag = Tag::any();
  add(er);
  OpDescriptor es = er;
  es.kind = OpKind::kSend;
  es.target = 0;
  es.tag = Tag(3);
  add(es);
  return out;
}

}  // namespace

OracleCheckResult run_oracle_check(std::size_t bound,
                                   const Classifier& classifier,
                                   std::size_t max_mismatches) {
  if (bound > kOracleUniverseBound) {
    fail(ErrorKind::kOracleBound,
         "bound " + std::to_string(bound) + " exceeds " +
             std::to_string(kOracleUniverseBound));
  }
  if (bound < 2) fail(ErrorKind::kInvalidArgument, "bound must be at least 2");

  const auto locals = local_atoms();
  const auto remotes = remote_atoms();
  OracleCheckResult result;
  std::size_t rotation = 0;
  for (unsigned flags = 0; flags < 16; ++flags) {
    const InfoHints hints = InfoHints::from_flags(flags);
    std::vector<OpDescriptor> counterparts;
    for (const auto& op : remotes) {
      if (legal(op, hints)) counterparts.push_back(op);
    }
    for (std::size_t i = 0; i < locals.size(); ++i) {
      if (!legal(locals[i], hints)) continue;
      for (std::size_t j = i + 1; j < locals.size(); ++j) {
        if (!legal(locals[j], hints)) continue;
        const OpDescriptor& a = locals[i];
        const OpDescriptor& b = locals[j];
        // Each pair sees a different slice of counterparts so that, taken
        // together, every counterpart appears next to every pair shape.
        std::vector<OpDescriptor> universe{a, b};
        const std::size_t extra = std::min(bound - 2, counterparts.size());
        for (std::size_t k = 0; k < extra; ++k) {
          universe.push_back(counterparts[(rotation + k) % counterparts.size()]);
        }
        ++rotation;
        ++result.scenarios;
        for (int dir = 0; dir < 2; ++dir) {
          const OpDescriptor& x = dir == 0 ? a : b;
          const OpDescriptor& y = dir == 0 ? b : a;
          const bool c = classifier(x, y, hints).parallel;
          const bool o = oracle_logically_parallel(x, y, universe, hints);
          ++result.pairs_checked;
          if (c != o && result.mismatches.size() < max_mismatches) {
            result.mismatches.push_back({x, y, hints, c, o});
          }
        }
      }
    }
  }
  return result;
}

OracleCheckResult run_oracle_check(std::size_t bound) {
  return run_oracle_check(bound, [](const OpDescriptor& a, const OpDescriptor& b,
                                    const InfoHints& h) {
    return logically_parallel(a, b, h);
  });
}

}  // namespace mpxlab
