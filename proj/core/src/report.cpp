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


#include <sstream>

#include "json.hpp"
#include "mpxlab/scenario.hpp"

namespace mpxlab {

// nlohmann::json keeps keys sorted, which makes the dump byte-stable.
std::string report_json(const SimReport& r, bool include_events) {
  nlohmann::json j;
  j["mechanism"] = r.mechanism;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["makespan"] = r.makespan;
  j["max_concurrent_transfers"] = r.max_concurrent_transfers;
  j["max_channels_busy_per_process"] = r.max_channels_busy_per_process;
  j["match_attempts_total"] = r.match_attempts_total;
  j["matches_total"] = r.matches_total;
  j["messages_total"] = r.messages_total;
  j["transfers_total"] = r.transfers_total;
  j["sync_wait_events"] = r.sync_wait_events;
  j["barrier_events"] = r.barrier_events;
  j["probe_iterations"] = r.probe_iterations;
  j["channel_occupancy"] = r.channel_occupancy;
  j["memory_footprint_bytes"] = r.memory_footprint_bytes;
  j["objects"] = {{"communicators", r.objects.communicators},
                  {"endpoints", r.objects.endpoints},
                  {"requests", r.objects.requests},
                  {"windows", r.objects.windows}};
  j["objects_total"] = r.objects_total;
  if (include_events) {
    auto events = nlohmann::json::array();
    for (const Event& e : r.events) {
      nlohmann::json row = {{"t", e.time},
                            {"kind", to_string(e.kind)},
                            {"process", e.process},
                            {"thread", e.thread},
                            {"channel", e.channel},
                            {"iteration", e.iteration}};
      row["op"] = e.op == kNoOp ? nlohmann::json(nullptr) : nlohmann::json(e.op);
      events.push_back(std::move(row));
    }
    j["events"] = std::move(events);
  }
  return j.dump(2) + "\n";
}

std::string csv_header() {
  return "mechanism,makespan,max_concurrency,match_attempts,sync_waits,probes,objects,"
         "footprint_bytes\n";
}

std::string csv_row(const SimReport& r) {
  std::ostringstream out;
  out << r.mechanism << ',' << r.makespan << ',' << r.max_concurrent_transfers << ','
      << r.match_attempts_total << ',' << r.sync_wait_events << ','
      << r.probe_iterations << ',' << r.objects_total << ','
      << r.memory_footprint_bytes << '\n';
  return out.str();
}

}  // namespace mpxlab
