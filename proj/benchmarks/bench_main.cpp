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


#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "mpxlab/semantics.hpp"
#include "mpxlab/simulator.hpp"

namespace {

using namespace mpxlab;

void BM_FanInShared(benchmark::State& state) {
  const CommPattern p = gen_fan_in(static_cast<int>(state.range(0)));
  const Assignment a = assign(p, Mechanism::kSharedCommunicator);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(p, a, ChannelPool::of(16), default_policy(a)));
  }
}
BENCHMARK(BM_FanInShared)->RangeMultiplier(2)->Range(2, 64);

void BM_Stencil3D(benchmark::State& state) {
  const auto m = static_cast<Mechanism>(state.range(0));
  const CommPattern p = gen_stencil(3, 27, {2, 2, 2}, {4, 4, 4});
  const Assignment a = assign(p, m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(p, a, ChannelPool::omni_path(), default_policy(a)));
  }
  state.SetLabel(to_string(m));
}
BENCHMARK(BM_Stencil3D)
    ->Arg(static_cast<int>(Mechanism::kCommunicators))
    ->Arg(static_cast<int>(Mechanism::kEndpoints))
    ->Unit(benchmark::kMillisecond);

void BM_IdealAssignment3D(benchmark::State& state) {
  const CommPattern p = gen_stencil(3, 27, {2, 2, 2}, {4, 4, 4});
  for (auto _ : state) benchmark::DoNotOptimize(assign_communicators_ideal(p));
}
BENCHMARK(BM_IdealAssignment3D)->Unit(benchmark::kMillisecond);

void BM_OracleCheck(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_oracle_check(static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_OracleCheck)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

void BM_HashMapping(benchmark::State& state) {
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(state.range(0)));
  std::iota(ids.begin(), ids.end(), 1);
  const ChannelPool pool = ChannelPool::omni_path();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        collision_report(map_ids(PolicyKind::kHashCommunicator, ids, pool), pool));
  }
}
BENCHMARK(BM_HashMapping)->Arg(808)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
