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

#ifndef MPXLAB_SEMANTICS_HPP_
#define MPXLAB_SEMANTICS_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpxlab/model.hpp"

namespace mpxlab {

enum class VerdictReason {
  kDifferentCommunicators,
  kDifferentEndpoints,
  kDifferentWindows,
  kTagRelaxedNoWildcards,
  kOvertakingSendsOnly,
  kPartitionSameRequest,
  kIndependentTargets,
  kOrderedSameTriplet,
  kWildcardRisk,
  kAtomicSameLocation,
  kCollectiveSerialOnComm,
  kFlushSameWindow,
};

std::string_view to_string(VerdictReason reason) noexcept;

struct ParallelismVerdict {
  bool parallel = true;
  VerdictReason reason = VerdictReason::kIndependentTargets;

  friend bool operator==(const ParallelismVerdict&,
                         const ParallelismVerdict&) = default;
};

// Send (or partition contribution) against receive (or arrival test).
bool can_match(const OpDescriptor& send, const OpDescriptor& recv);

ParallelismVerdict logically_parallel(const OpDescriptor& a,
                                      const OpDescriptor& b,
                                      const InfoHints& hints);

// True when MPI imposes an order between a and b and a is issued first.
bool ordered_before(const OpDescriptor& a, const OpDescriptor& b,
                    const InfoHints& hints);

inline constexpr std::size_t kOracleUniverseBound = 12;

// Brute force over probe messages and posting interleavings.
bool oracle_logically_parallel(const OpDescriptor& a, const OpDescriptor& b,
                               std::span<const OpDescriptor> universe,
                               const InfoHints& hints);

using Classifier = std::function<ParallelismVerdict(
    const OpDescriptor&, const OpDescriptor&, const InfoHints&)>;

struct OracleMismatch {
  OpDescriptor a;
  OpDescriptor b;
  InfoHints hints;
  bool classifier_parallel = false;
  bool oracle_parallel = false;
};

struct OracleCheckResult {
  std::size_t scenarios = 0;
  std::size_t pairs_checked = 0;
  std::vector<OracleMismatch> mismatches;

  bool ok() const { return mismatches.empty(); }
};

// Enumerates small scenario families (two processes, three threads each,
// every hint combination) and compares `classifier` with the oracle.
// `bound` caps the universe size; above kOracleUniverseBound it throws.
OracleCheckResult run_oracle_check(std::size_t bound,
                                   const Classifier& classifier,
                                   std::size_t max_mismatches = 16);
OracleCheckResult run_oracle_check(std::size_t bound);

}  // namespace mpxlab

#endif  // MPXLAB_SEMANTICS_HPP_
