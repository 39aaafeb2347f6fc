// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"
#include "memcoex/scheme.hpp"

namespace memcoex {

enum class AllocFailure { None, Capacity, RegionLimit };

const char* to_string(AllocFailure f);

struct RegionAllocation {
  NodeIndex node = 0;
  int id = 0;
  std::int64_t main_rows = 0;
  std::int64_t main_cols = 0;
  std::int64_t main_bytes = 0;
  std::int64_t side_rows = 0;
  std::int64_t side_bytes = 0;
  // Byte offsets, [start, end), word aligned.
  std::int64_t main_start = 0;
  std::int64_t main_end = 0;
  std::int64_t side_start = 0;
  std::int64_t side_end = 0;
};

struct AllocationResult {
  bool feasible = true;
  AllocFailure reason = AllocFailure::None;
  std::vector<RegionAllocation> regions;
  std::int64_t total_bytes = 0;
  std::int64_t capacity = 0;
  int entries_used = 0;  // two address entries (head, end) per node block
};

// Word-rounded region sizes without any capacity check.
std::vector<RegionAllocation> region_layout(const SubgraphSchedule& sched, const ComputationGraph& g,
                                            const HardwareConfig& hw);
std::int64_t activation_footprint(const SubgraphSchedule& sched, const ComputationGraph& g,
                                  const HardwareConfig& hw);

// `resident_weight_bytes` only matters in shared mode; negative means the
// subgraph's own weights.
AllocationResult allocate_regions(const SubgraphSchedule& sched, const ComputationGraph& g, const HardwareConfig& hw,
                                  std::int64_t resident_weight_bytes = -1);

std::int64_t weight_bytes_of(const ComputationGraph& g, const std::vector<NodeIndex>& members);
std::int64_t weight_residency(const ComputationGraph& g, const PartitionScheme& p, int i);

enum class Region { Main, Side };
enum class DataSource { Dram, Compute, Side, Main };

const char* to_string(Region r);
const char* to_string(DataSource s);

struct Rect {
  std::int64_t h0 = 0, h1 = -1, w0 = 0, w1 = -1;  // inclusive bounds
  bool empty() const { return h1 < h0 || w1 < w0; }
  std::int64_t area() const { return empty() ? 0 : (h1 - h0 + 1) * (w1 - w0 + 1); }
  bool contains(const Rect& o) const {
    return o.empty() || (o.h0 >= h0 && o.h1 <= h1 && o.w0 >= w0 && o.w1 <= w1);
  }
};

struct TraceEvent {
  std::int64_t step = 0;      // elementary operation counter, prologue included
  std::int64_t row_loop = 0;  // negative during pipeline fill
  std::int64_t col_op = 0;
  NodeIndex node = 0;
  int node_id = 0;
  Region region = Region::Main;
  DataSource source = DataSource::Compute;
  Rect written;
  Rect main_window;  // node's MAIN contents after the write, [m:n] per axis
};

// Index-level replay over `rows` row loops and `cols` elementary operations per
// row (0 = the schedule's own step count). Tensors are treated as unbounded
// past their far edge, so the replay is for validation only.
std::vector<TraceEvent> replay_trace(const SubgraphSchedule& sched, const ComputationGraph& g,
                                     const HardwareConfig& hw, int rows, int cols = 0);

std::string trace_to_jsonl(const std::vector<TraceEvent>& events);

}  // namespace memcoex
