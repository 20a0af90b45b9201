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

#include "mpxlab/semantics.hpp"

#include <tuple>

namespace mpxlab {

std::string_view to_string(VerdictReason reason) noexcept {
  switch (reason) {
    case VerdictReason::kDifferentCommunicators: return "DifferentCommunicators";
    case VerdictReason::kDifferentEndpoints: return "DifferentEndpoints";
    case VerdictReason::kDifferentWindows: return "DifferentWindows";
    case VerdictReason::kTagRelaxedNoWildcards: return "TagRelaxedNoWildcards";
    case VerdictReason::kOvertakingSendsOnly: return "OvertakingSendsOnly";
    case VerdictReason::kPartitionSameRequest: return "PartitionSameRequest";
    case VerdictReason::kIndependentTargets: return "IndependentTargets";
    case VerdictReason::kOrderedSameTriplet: return "OrderedSameTriplet";
    case VerdictReason::kWildcardRisk: return "WildcardRisk";
    case VerdictReason::kAtomicSameLocation: return "AtomicSameLocation";
    case VerdictReason::kCollectiveSerialOnComm: return "CollectiveSerialOnComm";
    case VerdictReason::kFlushSameWindow: return "FlushSameWindow";
  }
  return "?";
}

namespace {

bool same_context(const OpDescriptor& a, const OpDescriptor& b) {
  return a.context.family == b.context.family && a.context.id == b.context.id;
}

ParallelismVerdict parallel(VerdictReason r) { return {true, r}; }
ParallelismVerdict serial(VerdictReason r) { return {false, r}; }

ParallelismVerdict distinct_origins(const OpDescriptor& a,
                                    const OpDescriptor& b) {
  return parallel(a.endpoint || b.endpoint ? VerdictReason::kDifferentEndpoints
                                           : VerdictReason::kIndependentTargets);
}

// Each p2p op owns a (peer, tag) key on its (context, rank) stream. A key
// component counts as "any" when the op carries a wildcard there or when
// the hints still allow some receive to carry one.
ParallelismVerdict p2p_verdict(const OpDescriptor& a, const OpDescriptor& b,
                               const InfoHints& h) {
  if (!same_context(a, b)) return parallel(VerdictReason::kDifferentCommunicators);
  if (a.origin() != b.origin()) return distinct_origins(a, b);

  const bool mixed = a.kind != b.kind;
  if (mixed && h.no_any_tag && h.no_any_source) {
    return parallel(VerdictReason::kTagRelaxedNoWildcards);
  }
  auto peer_wide = [&](const OpDescriptor& x) {
    return x.target == kAnySource || !h.no_any_source;
  };
  auto tag_wide = [&](const OpDescriptor& x) {
    return x.tag.is_any() || !h.no_any_tag;
  };
  const bool peers = a.target == b.target || peer_wide(a) || peer_wide(b);
  const bool tags = a.tag == b.tag || tag_wide(a) || tag_wide(b);
  if (!(peers && tags)) return parallel(VerdictReason::kTagRelaxedNoWildcards);

  if (!mixed && a.kind == OpKind::kSend && h.allow_overtaking) {
    return parallel(VerdictReason::kOvertakingSendsOnly);
  }
  const bool exact = a.target == b.target && a.tag == b.tag &&
                     a.target != kAnySource && !a.tag.is_any();
  return serial(exact ? VerdictReason::kOrderedSameTriplet
                      : VerdictReason::kWildcardRisk);
}

ParallelismVerdict rma_verdict(const OpDescriptor& a, const OpDescriptor& b,
                               const InfoHints& h) {
  if (a.context.id != b.context.id) return parallel(VerdictReason::kDifferentWindows);
  if (a.origin() != b.origin()) return distinct_origins(a, b);
  if (a.kind == OpKind::kFlush || b.kind == OpKind::kFlush) {
    return serial(VerdictReason::kFlushSameWindow);
  }
  if (a.kind == OpKind::kAccumulate && b.kind == OpKind::kAccumulate &&
      a.target == b.target && a.target_location == b.target_location &&
      !h.accumulate_ordering_none) {
    return serial(VerdictReason::kAtomicSameLocation);
  }
  return parallel(VerdictReason::kIndependentTargets);
}

ParallelismVerdict collective_verdict(const OpDescriptor& a,
                                      const OpDescriptor& b) {
  if (!same_context(a, b)) return parallel(VerdictReason::kDifferentCommunicators);
  if (a.origin() != b.origin()) return distinct_origins(a, b);
  return serial(VerdictReason::kCollectiveSerialOnComm);
}

}  // namespace

bool can_match(const OpDescriptor& send, const OpDescriptor& recv) {
  if (send.kind == OpKind::kSend && recv.kind == OpKind::kRecv) {
    if (!same_context(send, recv)) return false;
    if (send.context.family != ContextFamily::kComm &&
        send.context.family != ContextFamily::kEndpoints) {
      return false;
    }
    if (send.target != recv.origin()) return false;
    if (recv.target != kAnySource && recv.target != send.origin()) return false;
    return recv.tag.is_any() || recv.tag == send.tag;
  }
  if (send.kind == OpKind::kPartitionReady &&
      recv.kind == OpKind::kPartitionArrivedTest) {
    if (send.context.family != ContextFamily::kPartitionedRequest ||
        recv.context.family != ContextFamily::kPartitionedRequest) {
      return false;
    }
    if (send.context.comm != recv.context.comm) return false;
    if (send.target != recv.source.process) return false;
    if (recv.target != send.source.process) return false;
    if (send.tag != recv.tag) return false;
    if (!send.partition || !recv.partition) return false;
    return send.partition->index == recv.partition->index;
  }
  return false;
}

ParallelismVerdict logically_parallel(const OpDescriptor& a,
                                      const OpDescriptor& b,
                                      const InfoHints& hints) {
  if (is_point_to_point(a.kind) && is_point_to_point(b.kind)) {
    return p2p_verdict(a, b, hints);
  }
  if (is_rma(a.kind) && is_rma(b.kind)) return rma_verdict(a, b, hints);
  if (a.kind == OpKind::kCollectiveCall && b.kind == OpKind::kCollectiveCall) {
    return collective_verdict(a, b);
  }
  if (is_partition(a.kind) && is_partition(b.kind)) {
    if (a.context.id == b.context.id) {
      return parallel(VerdictReason::kPartitionSameRequest);
    }
    return parallel(VerdictReason::kIndependentTargets);
  }
  return parallel(VerdictReason::kIndependentTargets);
}

bool ordered_before(const OpDescriptor& a, const OpDescriptor& b,
                    const InfoHints& hints) {
  if (logically_parallel(a, b, hints).parallel) return false;
  return std::tie(a.program_index, a.source.process, a.source.thread) <
         std::tie(b.program_index, b.source.process, b.source.thread);
}

}  // namespace mpxlab
