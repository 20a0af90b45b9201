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

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "mpxlab/patterns.hpp"

namespace mpxlab {

std::string to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::kStencil2D5pt: return "stencil2d5";
    case PatternKind::kStencil2D9pt: return "stencil2d9";
    case PatternKind::kStencil3D27pt: return "stencil3d27";
    case PatternKind::kLegionPolling: return "legion";
    case PatternKind::kBspmmRMA: return "bspmm";
    case PatternKind::kMultithreadedAllreduce: return "allreduce";
    case PatternKind::kDynamicGraph: return "dynamic";
    case PatternKind::kFanIn: return "fan_in";
  }
  return "?";
}

std::optional<PatternKind> parse_pattern_kind(const std::string& name) {
  for (PatternKind k :
       {PatternKind::kStencil2D5pt, PatternKind::kStencil2D9pt,
        PatternKind::kStencil3D27pt, PatternKind::kLegionPolling,
        PatternKind::kBspmmRMA, PatternKind::kMultithreadedAllreduce,
        PatternKind::kDynamicGraph, PatternKind::kFanIn}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_stencil(PatternKind kind) {
  return kind == PatternKind::kStencil2D5pt ||
         kind == PatternKind::kStencil2D9pt ||
         kind == PatternKind::kStencil3D27pt;
}

std::vector<int> unflatten(int index, const std::vector<int>& dims) {
  std::vector<int> c(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    c[a] = index % dims[a];
    index /= dims[a];
  }
  return c;
}

int flatten(const std::vector<int>& coords, const std::vector<int>& dims) {
  int index = 0;
  for (std::size_t a = dims.size(); a-- > 0;) index = index * dims[a] + coords[a];
  return index;
}

std::vector<Offset> stencil_offsets(int dims, int points) {
  const bool ok = (dims == 2 && (points == 5 || points == 9)) ||
                  (dims == 3 && points == 27);
  if (!ok) {
    fail(ErrorKind::kInvalidArgument,
         std::to_string(points) + "-point stencil is not defined in " +
             std::to_string(dims) + "D");
  }
  std::vector<Offset> out;
  const int zr = dims == 3 ? 1 : 0;
  for (int dz = -zr; dz <= zr; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nonzero = (dx != 0) + (dy != 0) + (dz != 0);
        if (nonzero == 0) continue;
        if (points == 5 && nonzero != 1) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

std::string direction_name(const Offset& d) {
  std::string s;
  if (d[2] < 0) s += 'U';
  if (d[2] > 0) s += 'D';
  if (d[1] < 0) s += 'N';
  if (d[1] > 0) s += 'S';
  if (d[0] < 0) s += 'E';
  if (d[0] > 0) s += 'W';
  return s;
}

bool CommPattern::intended_concurrent(const PatternOp& a,
                                      const PatternOp& b) const {
  return a.id != b.id && a.actor.process == b.actor.process &&
         a.iteration == b.iteration && a.actor.thread != b.actor.thread;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>>
CommPattern::intended_concurrency() const {
  std::map<std::pair<ProcessId, int>, std::vector<std::uint32_t>> groups;
  for (const PatternOp& op : ops) {
    groups[{op.actor.process, op.iteration}].push_back(op.id);
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& [key, ids] : groups) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        if (intended_concurrent(ops[ids[i]], ops[ids[j]])) {
          out.emplace_back(ids[i], ids[j]);
        }
      }
    }
  }
  return out;
}

std::vector<ThreadId> CommPattern::communicating_threads(
    ProcessId process) const {
  std::set<ThreadId> s;
  for (const PatternOp& op : ops) {
    if (op.actor.process == process) s.insert(op.actor.thread);
  }
  return {s.begin(), s.end()};
}

CommPattern gen_stencil(int dims, int points, std::vector<int> process_grid,
                        std::vector<int> thread_grid, int iterations,
                        std::uint64_t payload, StencilOptions options) {
  std::vector<Offset> offsets = stencil_offsets(dims, points);
  if (static_cast<int>(process_grid.size()) != dims ||
      static_cast<int>(thread_grid.size()) != dims) {
    fail(ErrorKind::kInvalidArgument,
         "process and thread grids must both have " + std::to_string(dims) +
             " dims");
  }
  for (int v : process_grid) {
    if (v < 1) fail(ErrorKind::kInvalidArgument, "process grid dims must be >= 1");
  }
  for (int v : thread_grid) {
    if (v < 1) fail(ErrorKind::kInvalidArgument, "thread grid dims must be >= 1");
  }
  if (iterations < 1) fail(ErrorKind::kInvalidArgument, "iterations must be >= 1");

  CommPattern p;
  p.kind = dims == 3 ? PatternKind::kStencil3D27pt
                     : (points == 5 ? PatternKind::kStencil2D5pt
                                    : PatternKind::kStencil2D9pt);
  p.process_grid = process_grid;
  p.thread_grid = thread_grid;
  p.iterations = iterations;
  p.payload = payload;
  p.num_processes = 1;
  for (int v : process_grid) p.num_processes *= v;
  p.threads_per_process = 1;
  for (int v : thread_grid) p.threads_per_process *= v;
  if (options.ns_faces_only) {
    std::erase_if(offsets, [](const Offset& d) {
      return d[0] != 0 || d[2] != 0;
    });
  }
  p.offsets = offsets;

  const std::vector<Offset> all = stencil_offsets(dims, points);
  auto offset_id = [&](const Offset& d) {
    return static_cast<std::uint32_t>(
        std::find(all.begin(), all.end(), d) - all.begin());
  };
  auto neg = [](const Offset& d) { return Offset{-d[0], -d[1], -d[2]}; };

  struct Hop {
    int process;
    int thread;
    int delta_id;  // base-3 code of the process offset
  };
  // Where the cell (process, thread) lands after moving by d, torus-wrapped.
  auto hop = [&](int process, int thread, const Offset& d) {
    const auto pc = unflatten(process, process_grid);
    const auto tc = unflatten(thread, thread_grid);
    std::vector<int> npc(pc.size());
    std::vector<int> ntc(tc.size());
    int code = 0;
    int scale = 1;
    for (std::size_t a = 0; a < tc.size(); ++a) {
      const int moved = tc[a] + d[a];
      const int delta = moved < 0 ? -1 : (moved >= thread_grid[a] ? 1 : 0);
      ntc[a] = moved - delta * thread_grid[a];
      npc[a] = ((pc[a] + delta) % process_grid[a] + process_grid[a]) %
               process_grid[a];
      code += (delta + 1) * scale;
      scale *= 3;
    }
    return Hop{flatten(npc, process_grid), flatten(ntc, thread_grid), code};
  };
  const int local_code = dims == 3 ? 13 : 4;

  std::map<std::tuple<int, int, int, int>, std::uint32_t> recv_index;
  std::vector<std::tuple<std::uint32_t, int, int, int, int>> sends;
  for (int it = 0; it < iterations; ++it) {
    for (int proc = 0; proc < p.num_processes; ++proc) {
      for (int t = 0; t < p.threads_per_process; ++t) {
        std::uint32_t pc = 0;
        std::vector<std::uint32_t> mine;
        auto emit = [&](OpKind kind, const Offset& d, const Hop& h) {
          PatternOp op;
          op.id = static_cast<std::uint32_t>(p.ops.size());
          op.kind = kind;
          op.actor = {proc, t};
          op.peer = {h.process, h.thread};
          op.iteration = it;
          op.program_index = pc++;
          op.direction = static_cast<int>(offset_id(d));
          // The tag names the sender's direction.
          op.app_tag = kind == OpKind::kSend ? offset_id(d) : offset_id(neg(d));
          op.group_key = h.delta_id;
          op.bytes = payload;
          p.ops.push_back(op);
          mine.push_back(op.id);
          return op.id;
        };
        for (const Offset& d : offsets) {
          const Hop h = hop(proc, t, d);
          if (h.delta_id == local_code) continue;
          const std::uint32_t id = emit(OpKind::kRecv, d, h);
          recv_index[{it, proc, t, static_cast<int>(offset_id(d))}] = id;
        }
        for (const Offset& d : offsets) {
          const Hop h = hop(proc, t, d);
          if (h.delta_id == local_code) continue;
          const std::uint32_t id = emit(OpKind::kSend, d, h);
          sends.emplace_back(id, it, h.process, h.thread,
                             static_cast<int>(offset_id(neg(d))));
        }
        if (!mine.empty()) p.ops[mine.back()].wait_after = true;
      }
    }
  }
  // A receive groups under its sender's process offset.
  for (const auto& [send, it, proc, t, back] : sends) {
    auto r = recv_index.find({it, proc, t, back});
    if (r == recv_index.end()) {
      fail(ErrorKind::kInvalidArgument, "stencil receive missing for a send");
    }
    p.ops[r->second].group_key = p.ops[send].group_key;
    p.matches.emplace_back(send, r->second);
  }
  return p;
}

}  // namespace mpxlab
