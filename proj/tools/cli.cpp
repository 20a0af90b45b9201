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


#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

namespace mpxlab::cli {
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedSpec:
    case ErrorKind::kInvalidArgument:
      return kExitMalformed;
    case ErrorKind::kDomain:
    case ErrorKind::kOracleBound:
      return kExitDomain;
    case ErrorKind::kUnsupportedPattern:
    case ErrorKind::kMapping:
    case ErrorKind::kTagOverflow:
      return kExitUnsupported;
    default:
      return kExitInternal;
  }
}

namespace {

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  return exit_code_for(e.kind());
}

std::string join_dims(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_overrides(Scenario& s, const Overrides& o) {
  if (!o.policy.empty()) {
    const auto p = parse_policy(o.policy);
    if (!p) fail(ErrorKind::kMalformedSpec, "--policy: unknown policy '" + o.policy + "'");
    s.policy = *p;
  }
  if (o.channels > 0) {
    s.channels = o.channels;
    s.unlimited_channels = false;
  }
  if (o.seed >= 0) s.seed = static_cast<std::uint64_t>(o.seed);
}

std::vector<Mechanism> mechanisms_for(const Scenario& s, const Overrides& o) {
  if (o.mechanism.empty()) return {s.mechanism};
  std::vector<Mechanism> out;
  for (const std::string& name : split(o.mechanism, ',')) {
    const auto m = parse_mechanism(name);
    if (!m) fail(ErrorKind::kMalformedSpec, "--mechanism: unknown mechanism '" + name + "'");
    out.push_back(*m);
  }
  return out;
}

std::string collision_line(const char* label, PolicyKind policy,
                           const std::vector<std::uint64_t>& ids, const ChannelPool& pool) {
  const auto mapped = map_ids(policy, ids, pool);
  const CollisionReport c = collision_report(mapped, pool);
  std::ostringstream out;
  out << label << ": policy=" << to_string(policy) << " entities=" << c.entities_mapped
      << " channels_used=" << c.distinct_channels_used
      << " max_per_channel=" << c.max_entities_per_channel
      << " serialized_pairs=" << c.serialized_pairs.size() << "\n";
  return out.str();
}

std::string object_summary(const ObjectCounts& o) {
  return "communicators=" + std::to_string(o.communicators) +
         " endpoints=" + std::to_string(o.endpoints) +
         " requests=" + std::to_string(o.requests) + " windows=" + std::to_string(o.windows);
}

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MPXLAB_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

}  // namespace

int cmd_analyze(const std::string& spec_path, std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = load_scenario(spec_path);
    const ChannelPool pool = channel_pool(s);
    std::ostringstream o;
    o << "pattern: " << to_string(s.kind) << "\n";
    o << "process_grid: " << join_dims(s.process_grid) << "\n";
    o << "thread_grid: " << join_dims(s.thread_grid) << "\n";

    // Formula preconditions are checked before any pattern is generated.
    std::optional<long long> formula_comms;
    std::optional<long long> formula_channels;
    if (s.kind == PatternKind::kStencil3D27pt) {
      const auto& t = s.thread_grid;
      formula_comms = min_communicators_3d(t[0], t[1], t[2]);
      formula_channels = min_channels_3d(t[0], t[1], t[2]);
    }

    const CommPattern p = build_pattern(s);
    const AssignOptions opts = assign_options(s);
    o << "threads_per_process: " << p.threads_per_process << "\n";

    std::optional<std::size_t> constructed;
    std::string constructed_note;
    try {
      constructed = assign(p, Mechanism::kCommunicators, opts).objects_created.communicators;
    } catch (const Error& e) {
      constructed_note = e.what();
    }
    if (formula_comms) {
      o << "communicators_ideal: " << *formula_comms << "\n";
      if (constructed) {
        o << "communicators_constructed: " << *constructed << "\n";
      } else {
        o << "communicators_constructed: n/a (" << constructed_note << ")\n";
      }
    } else if (constructed) {
      o << "communicators_ideal: " << *constructed << "\n";
    } else {
      o << "communicators_ideal: n/a (" << constructed_note << ")\n";
    }

    std::map<Mechanism, std::optional<ObjectCounts>> objects;
    std::map<Mechanism, std::string> why;
    for (Mechanism m : {Mechanism::kCommunicatorsNaive, Mechanism::kCommunicators,
                        Mechanism::kSharedCommunicator, Mechanism::kTagsWithHints,
                        Mechanism::kEndpoints, Mechanism::kPartitioned,
                        Mechanism::kWindows}) {
      try {
        objects[m] = assign(p, m, opts).objects_created;
      } catch (const Error& e) {
        objects[m] = std::nullopt;
        why[m] = e.what();
      }
    }
    auto count_or_na = [&](Mechanism m, std::size_t ObjectCounts::*field) {
      return objects[m] ? std::to_string((*objects[m]).*field)
                        : "n/a (" + why[m] + ")";
    };
    o << "communicators_naive: "
      << count_or_na(Mechanism::kCommunicatorsNaive, &ObjectCounts::communicators) << "\n";
    o << "endpoints: " << count_or_na(Mechanism::kEndpoints, &ObjectCounts::endpoints)
      << "\n";
    if (formula_channels) {
      o << "min_channels: " << *formula_channels << "\n";
    } else if (objects[Mechanism::kEndpoints]) {
      o << "min_channels: " << objects[Mechanism::kEndpoints]->endpoints << "\n";
    }
    o << "partitioned_requests: "
      << count_or_na(Mechanism::kPartitioned, &ObjectCounts::requests) << "\n";
    for (const auto& [m, counts] : objects) {
      o << "objects[" << to_string(m) << "]: "
        << (counts ? object_summary(*counts) : "n/a (" + why[m] + ")") << "\n";
    }

    o << "channel_pool: "
      << (pool.unbounded ? std::string("unlimited") : std::to_string(pool.num_channels))
      << "\n";
    const long long comm_entities =
        formula_comms ? *formula_comms
                      : static_cast<long long>(constructed.value_or(0));
    if (comm_entities > 0) {
      PolicyKind policy = PolicyKind::kHashCommunicator;
      if (s.policy == PolicyKind::kRoundRobinPerCommunicator) policy = *s.policy;
      std::vector<std::uint64_t> ids(static_cast<std::size_t>(comm_entities));
      std::iota(ids.begin(), ids.end(), 1);
      o << collision_line("collisions_communicators", policy, ids, pool);
    }
    if (objects[Mechanism::kEndpoints] && objects[Mechanism::kEndpoints]->endpoints > 0) {
      std::vector<std::uint64_t> ids(objects[Mechanism::kEndpoints]->endpoints);
      std::iota(ids.begin(), ids.end(), 0);
      o << collision_line("collisions_endpoints", PolicyKind::kEndpointIdentity, ids, pool);
    }
    out << o.str();
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

namespace {

struct SimJob {
  std::string path;
  std::string summary;
  std::string error;
  int code = kExitOk;
};

void run_sim_job(SimJob& job, const Overrides& overrides, const fs::path& dir,
                 const std::string& format) {
  try {
    Scenario s = load_scenario(job.path);
    apply_overrides(s, overrides);
    const std::string stem = fs::path(job.path).stem().string();
    std::string csv = csv_header();
    std::ostringstream summary;
    for (Mechanism m : mechanisms_for(s, overrides)) {
      Scenario run_s = s;
      run_s.mechanism = m;
      const SimReport r = simulate(run_s, /*record_events=*/true);
      csv += csv_row(r);
      if (format != "csv") {
        std::ofstream(dir / (stem + "." + to_string(m) + ".json")) << report_json(r);
      }
      summary << stem << " " << to_string(m) << ": makespan=" << r.makespan
              << " max_concurrency=" << r.max_concurrent_transfers
              << " match_attempts=" << r.match_attempts_total
              << " sync_waits=" << r.sync_wait_events << " probes=" << r.probe_iterations
              << " objects=" << r.objects_total << "\n";
    }
    if (format != "json") std::ofstream(dir / (stem + ".csv")) << csv;
    job.summary = summary.str();
  } catch (const Error& e) {
    job.error = std::string("error: ") + job.path + ": " + e.what() + "\n";
    job.code = exit_code_for(e.kind());
  }
}

}  // namespace

int cmd_simulate(const std::vector<std::string>& spec_paths, const Overrides& overrides,
                 const std::string& out_dir, const std::string& format, int jobs,
                 std::ostream& out, std::ostream& err) {
  if (format != "json" && format != "csv" && format != "both") {
    err << "error: malformed-spec: --format must be json or csv\n";
    return kExitMalformed;
  }
  const fs::path dir = resolve_out_dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << dir.string() << "'\n";
    return kExitInternal;
  }
  std::vector<SimJob> work(spec_paths.size());
  for (std::size_t i = 0; i < spec_paths.size(); ++i) work[i].path = spec_paths[i];

  // Each job owns its scenario and output files, so workers share nothing.
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), 1, work.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < work.size(); i += workers) {
        run_sim_job(work[i], overrides, dir, format);
      }
    });
  }
  for (std::thread& t : pool) t.join();

  int code = kExitOk;
  for (const SimJob& job : work) {
    out << job.summary;
    err << job.error;
    if (code == kExitOk) code = job.code;
  }
  return code;
}

int cmd_assign(const std::string& spec_path, const Overrides& overrides, int process,
               bool emit_spec, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  try {
    Scenario s = load_scenario(spec_path);
    apply_overrides(s, overrides);
    const auto mechs = mechanisms_for(s, overrides);
    s.mechanism = mechs.front();
    const ResolvedScenario r = resolve(s);
    const CommPattern& p = r.pattern;
    const Assignment& a = r.assignment;
    if (process < 0 || process >= p.num_processes) {
      fail(ErrorKind::kInvalidArgument, "--process out of range");
    }

    std::map<RequestId, std::size_t> request_slot;
    for (std::size_t i = 0; i < a.requests.size(); ++i) request_slot[a.requests[i].id] = i;

    std::vector<std::uint32_t> ids;
    for (const PatternOp& op : p.ops) {
      if (op.actor.process == process && op.iteration == 0) ids.push_back(op.id);
    }
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t x, std::uint32_t y) {
      const PatternOp& a_op = p.ops[x];
      const PatternOp& b_op = p.ops[y];
      return std::tie(a_op.actor.thread, a_op.program_index) <
             std::tie(b_op.actor.thread, b_op.program_index);
    });

    out << "# mechanism=" << to_string(a.mechanism) << " process=" << process << "\n";
    out << "thread\top\tdir\tpeer\tbinding\n";
    for (std::uint32_t id : ids) {
      const PatternOp& op = p.ops[id];
      const Binding& b = a.bindings[id];
      std::string thread = std::to_string(op.actor.thread);
      if (is_stencil(p.kind)) {
        const auto c = unflatten(op.actor.thread, p.thread_grid);
        thread = "(";
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (i) thread += ',';
          thread += std::to_string(c[i]);
        }
        thread += ")";
      }
      const std::string dir =
          op.direction >= 0 && static_cast<std::size_t>(op.direction) < p.offsets.size()
              ? direction_name(p.offsets[static_cast<std::size_t>(op.direction)])
              : "-";
      std::ostringstream bind;
      switch (a.mechanism) {
        case Mechanism::kEndpoints:
          bind << "endpoint=" << b.endpoint.value_or(-1) << " target=" << b.target;
          break;
        case Mechanism::kPartitioned:
          if (b.partition) {
            bind << "request=" << request_slot.at(b.partition->request)
                 << " partition=" << b.partition->index;
          }
          break;
        case Mechanism::kTagsWithHints:
          bind << "comm=" << b.comm_index << " tag=" << b.tag.raw();
          break;
        case Mechanism::kWindows:
          bind << "window=" << b.context.id << " target=" << b.target;
          break;
        default:
          bind << "comm=" << b.comm_index;
          break;
      }
      out << thread << '\t' << to_string(op.kind) << '\t' << dir << '\t' << "("
          << op.peer.process << "," << op.peer.thread << ")\t" << bind.str() << "\n";
    }

    if (emit_spec) {
      const fs::path dir = resolve_out_dir(out_dir);
      fs::create_directories(dir);
      const fs::path target = dir / (fs::path(spec_path).stem().string() + ".emitted.json");
      std::ofstream(target) << emit_scenario(s);
      out << "# spec written to " << target.string() << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int cmd_oracle_check(std::size_t bound, const Classifier& classifier, std::ostream& out,
                     std::ostream& err) {
  try {
    const OracleCheckResult r = run_oracle_check(bound, classifier);
    out << "oracle-check: bound=" << bound << " scenarios=" << r.scenarios
        << " pairs=" << r.pairs_checked << " mismatches=" << r.mismatches.size() << "\n";
    if (r.ok()) return kExitOk;
    const OracleMismatch& m = r.mismatches.front();
    err << "counterexample (hint flags " << m.hints.flags() << "):\n"
        << "  a: " << to_string(m.a) << "\n"
        << "  b: " << to_string(m.b) << "\n"
        << "  classifier=" << (m.classifier_parallel ? "parallel" : "serial")
        << " oracle=" << (m.oracle_parallel ? "parallel" : "serial") << "\n";
    return kExitOracleMismatch;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mpxlab: MPI+threads communication lab"};
  app.require_subcommand(1);

  std::vector<std::string> specs;
  std::string out_dir;
  std::string format = "both";
  Overrides overrides;
  int jobs = 1;
  int process = 0;
  bool emit_spec = false;
  std::size_t bound = 6;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--mechanism", overrides.mechanism,
                    "Mechanism, or a comma-separated list");
    cmd->add_option("--policy", overrides.policy, "VCI mapping policy");
    cmd->add_option("--channels", overrides.channels, "Channel pool size R")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", overrides.seed, "Simulation seed")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* analyze = app.add_subcommand("analyze", "Object counts and collision report");
  analyze->add_option("--spec", specs, "Scenario spec (JSON)")->required()->expected(1);

  CLI::App* simulate = app.add_subcommand("simulate", "Run the discrete-event simulation");
  simulate->add_option("--spec", specs, "Scenario spec(s) (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory (default $MPXLAB_OUT or .)");
  simulate->add_option("--format", format, "json, csv or both");
  simulate->add_option("--jobs", jobs, "Scenarios simulated in parallel")
      ->check(CLI::PositiveNumber);
  add_overrides(simulate);

  CLI::App* assign_cmd = app.add_subcommand("assign", "Print the assignment table");
  assign_cmd->add_option("--spec", specs, "Scenario spec (JSON)")->required()->expected(1);
  assign_cmd->add_option("--process", process, "Process whose threads are listed");
  assign_cmd->add_flag("--emit-spec", emit_spec, "Write the normalized spec to --out");
  assign_cmd->add_option("--out", out_dir, "Output directory (default $MPXLAB_OUT or .)");
  add_overrides(assign_cmd);

  CLI::App* oracle = app.add_subcommand("oracle-check", "Classifier vs brute-force oracle");
  oracle->add_option("--bound", bound, "Maximum operations per scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitMalformed;
  }

  if (analyze->parsed()) return cmd_analyze(specs.front(), out, err);
  if (simulate->parsed()) {
    return cmd_simulate(specs, overrides, out_dir, format, jobs, out, err);
  }
  if (assign_cmd->parsed()) {
    return cmd_assign(specs.front(), overrides, process, emit_spec, out_dir, out, err);
  }
  if (oracle->parsed()) return cmd_oracle_check(bound, logically_parallel, out, err);
  return kExitMalformed;
}

}  // namespace mpxlab::cli
