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

#include "mpxlab/patterns.hpp"

namespace mpxlab {
namespace {

void require_3d_domain(long long x, long long y, long long z) {
  if (x < 2 || y < 2 || z < 2) {
    fail(ErrorKind::kDomain, "3D thread grid dims must be >= 2, got [" +
                                 std::to_string(x) + "," + std::to_string(y) +
                                 "," + std::to_string(z) + "]");
  }
}

}  // namespace

long long min_communicators_3d(long long x, long long y, long long z) {
  require_3d_domain(x, y, z);
  const long long faces = 2 * x * y + 2 * y * z + 2 * x * z;
  const long long corners = 8 * (x * y + y * z + x * z - 1);
  const long long edges = 4 * (x * z + y * z - z) + 4 * (x * y + y * z - y) +
                          4 * (x * y + x * z - x);
  return faces + corners + edges;
}

long long min_channels_3d(long long x, long long y, long long z) {
  require_3d_domain(x, y, z);
  return x * y * z - (x - 2) * (y - 2) * (z - 2);
}

ListingEndpointTargets listing_endpoint_targets(int tx, int ty, int tid_x,
                                                int tid_y, Rank n_rank,
                                                Rank s_rank, Rank e_rank,
                                                Rank w_rank) {
  if (tx < 1 || ty < 1 || tid_x < 0 || tid_x >= tx || tid_y < 0 || tid_y >= ty) {
    fail(ErrorKind::kInvalidArgument, "thread coordinates outside the grid");
  }
  const Rank n = tx * ty;
  ListingEndpointTargets t;
  t.north = n_rank * n + tx * (ty - 1) + tid_x;
  t.south = s_rank * n + tid_x;
  t.east = e_rank * n + tid_y * tx + tx - 1;
  t.west = w_rank * n + tid_y * tx;
  return t;
}

CollectiveFootprint collective_footprint(CollectiveMechanism mechanism,
                                         std::uint64_t threads,
                                         std::uint64_t buffer_bytes) {
  if (threads < 1 || buffer_bytes < 1) {
    fail(ErrorKind::kInvalidArgument, "threads and buffer bytes must be >= 1");
  }
  switch (mechanism) {
    case CollectiveMechanism::kCommunicators:
      // Internode collective per thread segment, then a user reduction.
      return {threads > 1 ? 2 : 1, buffer_bytes,
              threads > 1 ? threads * (buffer_bytes / threads) : 0};
    case CollectiveMechanism::kEndpoints:
      return {1, threads * buffer_bytes, 0};
    case CollectiveMechanism::kPartitioned:
      return {1, buffer_bytes, 0};
  }
  fail(ErrorKind::kInvalidArgument, "unknown collective mechanism");
}

}  // namespace mpxlab
