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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mpxlab/scenario.hpp"
#include "mpxlab/semantics.hpp"
#include "mpxlab/simulator.hpp"

using namespace mpxlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double num = 0;
  double den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

SimReport sim(const CommPattern& p, Mechanism m, const ChannelPool& pool,
              const AssignOptions& o = {}, bool events = false) {
  const Assignment a = assign(p, m, o);
  SimOptions so;
  so.record_events = events;
  return run(p, a, pool, default_policy(a), {}, 0, so);
}

Outcome formulas() {
  const long long comms = min_communicators_3d(4, 4, 4);
  const long long chans = min_channels_3d(4, 4, 4);
  const double ratio = static_cast<double>(comms) / static_cast<double>(chans);
  std::ostringstream d;
  d << "communicators=" << comms << " channels=" << chans << " ratio=" << ratio;
  return {comms == 808 && chans == 56 && ratio >= 14.4, d.str()};
}

Outcome construction() {
  const CommPattern p = gen_stencil(3, 27, {2, 2, 2}, {4, 4, 4});
  const Assignment ideal = assign_communicators_ideal(p);
  const ValidationReport v = validate_assignment(p, ideal);
  const Assignment ep = assign_endpoints(p);
  const ValidationReport ve = validate_assignment(p, ep);
  std::ostringstream d;
  d << "communicators=" << ideal.objects_created.communicators << " (want 808)"
    << " violations=" << v.violations.size() << " lost=" << v.lost_parallelism.size()
    << " endpoints=" << ep.objects_created.endpoints
    << " endpoint_violations=" << ve.violations.size();
  const bool pass = ideal.objects_created.communicators == 808 && v.clean() &&
                    ep.objects_created.endpoints == 56 && ve.violations.empty();
  return {pass, d.str()};
}

Outcome half_parallelism() {
  bool pass = true;
  std::ostringstream d;
  StencilOptions ns;
  ns.ns_faces_only = true;
  for (int n : {3, 4, 5}) {
    const CommPattern p = gen_stencil(2, 9, {2, 2}, {n, n}, 1, kDefaultPayload, ns);
    const auto naive = sim(p, Mechanism::kCommunicatorsNaive, ChannelPool::unlimited());
    const auto ideal = sim(p, Mechanism::kCommunicators, ChannelPool::unlimited());
    const double ratio = static_cast<double>(naive.max_concurrent_transfers) /
                         static_cast<double>(ideal.max_concurrent_transfers);
    d << "n=" << n << ":" << naive.max_concurrent_transfers << "/"
      << ideal.max_concurrent_transfers << " ";
    pass = pass && ratio == 0.5;
  }
  return {pass, d.str() + "(naive/ideal, want 1/2)"};
}

Outcome matching_scaling() {
  std::vector<double> lx;
  std::vector<double> ly;
  std::ostringstream d;
  for (int n : {2, 4, 8, 16}) {
    const auto r = sim(gen_fan_in(n), Mechanism::kSharedCommunicator, ChannelPool::of(16));
    lx.push_back(std::log(n));
    ly.push_back(std::log(static_cast<double>(r.match_attempts_total)));
  }
  const double exponent = slope(lx, ly);
  bool constant = true;
  double first = -1;
  for (int parts = 1; parts <= 16; ++parts) {
    const auto r = sim(gen_fan_in(parts), Mechanism::kPartitioned, ChannelPool::of(16));
    const double per = static_cast<double>(r.match_attempts_total) /
                       static_cast<double>(r.messages_total);
    if (first < 0) first = per;
    constant = constant && per == first;
  }
  d << "shared exponent=" << exponent << " partitioned attempts/message="
    << first << (constant ? " constant" : " varies");
  return {exponent >= 1.8 && constant, d.str()};
}

Outcome oracle() {
  const OracleCheckResult r = run_oracle_check(12);
  std::ostringstream d;
  d << "scenarios=" << r.scenarios << " pairs=" << r.pairs_checked
    << " mismatches=" << r.mismatches.size();
  return {r.ok() && r.pairs_checked > 0, d.str()};
}

Outcome collisions() {
  const ChannelPool pool = ChannelPool::omni_path();
  std::vector<std::uint64_t> comms(808);
  std::iota(comms.begin(), comms.end(), 1);
  std::vector<std::uint64_t> eps(56);
  std::iota(eps.begin(), eps.end(), 0);
  const auto hash = collision_report(map_ids(PolicyKind::kHashCommunicator, comms, pool), pool);
  const auto rr =
      collision_report(map_ids(PolicyKind::kRoundRobinPerCommunicator, comms, pool), pool);
  const auto id = collision_report(map_ids(PolicyKind::kEndpointIdentity, eps, pool), pool);
  std::ostringstream d;
  d << "hash max=" << hash.max_entities_per_channel << " rr max=" << rr.max_entities_per_channel
    << " identity pairs=" << id.serialized_pairs.size();
  const bool pass = hash.max_entities_per_channel >= 6 && !hash.serialized_pairs.empty() &&
                    rr.max_entities_per_channel >= 6 && !rr.serialized_pairs.empty() &&
                    id.serialized_pairs.empty();
  return {pass, d.str()};
}

Outcome probing() {
  const CommPattern p = gen_legion(4, 8, 64);
  std::vector<double> ks;
  std::vector<double> comm_rate;
  std::vector<double> ep_rate;
  for (int k : {1, 2, 4, 8}) {
    AssignOptions o;
    o.legion_comms = k;
    const auto c = sim(p, Mechanism::kCommunicators, ChannelPool::of(16), o);
    const auto e = sim(p, Mechanism::kEndpoints, ChannelPool::of(16), o);
    ks.push_back(k);
    comm_rate.push_back(static_cast<double>(c.probe_iterations) / 64.0);
    ep_rate.push_back(static_cast<double>(e.probe_iterations) / 64.0);
  }
  const double sc = slope(ks, comm_rate);
  const double se = slope(ks, ep_rate);
  std::ostringstream d;
  d << "communicators slope=" << sc << " endpoints slope=" << se;
  return {sc > 0.9 && std::abs(se) < 0.05, d.str()};
}

Outcome sync_overhead() {
  const CommPattern p = gen_stencil(2, 9, {2, 2}, {3, 3}, 2);
  const int t = p.threads_per_process;
  const auto part = sim(p, Mechanism::kPartitioned, ChannelPool::of(16), {}, true);
  std::map<std::pair<ProcessId, int>, std::pair<int, int>> per;
  for (const Event& e : part.events) {
    if (e.kind == EventKind::kWaitBlock) ++per[{e.process, e.iteration}].first;
    if (e.kind == EventKind::kBarrier) ++per[{e.process, e.iteration}].second;
  }
  bool pass = per.size() == static_cast<std::size_t>(p.num_processes * p.iterations);
  int min_wait = t;
  for (const auto& [key, c] : per) {
    min_wait = std::min(min_wait, c.first);
    pass = pass && c.first >= t - 1 && c.second == 1;
  }
  std::ostringstream d;
  d << "partitioned min_waits=" << min_wait << " (T-1=" << t - 1 << ")";
  for (Mechanism m : {Mechanism::kEndpoints, Mechanism::kCommunicators}) {
    const auto r = sim(p, m, ChannelPool::of(16));
    d << " " << to_string(m) << "=" << r.sync_wait_events << "/" << r.barrier_events;
    pass = pass && r.sync_wait_events == 0 && r.barrier_events == 0;
  }
  return {pass, d.str()};
}

Outcome footprint() {
  constexpr std::uint64_t kT = 4;
  constexpr std::uint64_t kB = 1024;
  const auto c = collective_footprint(CollectiveMechanism::kCommunicators, kT, kB);
  const auto e = collective_footprint(CollectiveMechanism::kEndpoints, kT, kB);
  const auto p = collective_footprint(CollectiveMechanism::kPartitioned, kT, kB);
  std::ostringstream d;
  d << "steps=(" << c.steps << "," << e.steps << "," << p.steps << ") bytes=("
    << c.result_buffer_bytes << "," << e.result_buffer_bytes << "," << p.result_buffer_bytes
    << ")";
  const bool pass = c.steps == 2 && e.steps == 1 && p.steps == 1 &&
                    c.result_buffer_bytes == kB && e.result_buffer_bytes == kT * kB &&
                    p.result_buffer_bytes == kB;
  return {pass, d.str()};
}

Outcome determinism() {
  std::vector<Scenario> scenarios;
  Scenario s;
  s.kind = PatternKind::kStencil2D9pt;
  s.iterations = 2;
  for (Mechanism m : {Mechanism::kCommunicators, Mechanism::kSharedCommunicator,
                      Mechanism::kEndpoints, Mechanism::kPartitioned}) {
    s.mechanism = m;
    scenarios.push_back(s);
  }
  Scenario legion;
  legion.kind = PatternKind::kLegionPolling;
  legion.process_grid = {4};
  legion.thread_grid = {8};
  legion.mechanism = Mechanism::kCommunicators;
  legion.legion_comms = 4;
  legion.seed = 3;
  scenarios.push_back(legion);
  bool pass = true;
  std::size_t bytes = 0;
  for (const Scenario& sc : scenarios) {
    const std::string first = report_json(simulate(sc, true));
    for (int rep = 0; rep < 3; ++rep) pass = pass && report_json(simulate(sc, true)) == first;
    bytes += first.size();
  }
  std::ostringstream d;
  d << scenarios.size() << " scenarios x 4 runs, " << bytes << " report bytes";
  return {pass, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"closed-form object counts", formulas},
      {"ideal 3D construction", construction},
      {"naive communicators halve opposite-edge parallelism", half_parallelism},
      {"match cost scaling", matching_scaling},
      {"classifier agrees with the oracle", oracle},
      {"channel collisions", collisions},
      {"probe cost per communicator", probing},
      {"partitioned synchronization", sync_overhead},
      {"collective footprint", footprint},
      {"deterministic reports", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first, o.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
