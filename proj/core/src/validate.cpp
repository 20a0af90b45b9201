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

#include <map>
#include <set>

#include "mpxlab/patterns.hpp"

namespace mpxlab {

ValidationReport validate_assignment(const CommPattern& p, const Assignment& a) {
  if (a.bindings.size() != p.ops.size()) {
    fail(ErrorKind::kIncompleteAssignment,
         "assignment binds " + std::to_string(a.bindings.size()) + " of " +
             std::to_string(p.ops.size()) + " operations");
  }
  std::vector<OpDescriptor> desc;
  desc.reserve(p.ops.size());
  for (std::uint32_t i = 0; i < p.ops.size(); ++i) {
    desc.push_back(descriptor(p, a, i));
  }

  ValidationReport report;
  for (const auto& [s, r] : p.matches) {
    if (!can_match(desc[s], desc[r])) report.violations.emplace_back(s, r);
  }

  std::set<std::pair<int, std::uint64_t>> contexts;
  for (const OpDescriptor& d : desc) {
    contexts.insert({static_cast<int>(d.context.family), d.context.id});
  }
  report.contexts_used = contexts.size();

  // Only ops sharing (process, iteration) are meant to overlap; a serial
  // verdict further needs a shared context and origin, so bucket on that.
  using Bucket = std::tuple<ProcessId, int, int, std::uint64_t, Rank>;
  std::map<Bucket, std::vector<std::uint32_t>> buckets;
  for (const PatternOp& op : p.ops) {
    const OpDescriptor& d = desc[op.id];
    buckets[{op.actor.process, op.iteration, static_cast<int>(d.context.family),
             d.context.id, d.origin()}]
        .push_back(op.id);
  }
  for (const auto& [key, ids] : buckets) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const PatternOp& x = p.ops[ids[i]];
        const PatternOp& y = p.ops[ids[j]];
        if (!p.intended_concurrent(x, y)) continue;
        ++report.pairs_examined;
        if (!logically_parallel(desc[x.id], desc[y.id], a.hints).parallel) {
          report.lost_parallelism.emplace_back(x.id, y.id);
        }
      }
    }
  }
  return report;
}

}  // namespace mpxlab
