// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/memory.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace memcoex {

const char* to_string(AllocFailure f) {
  switch (f) {
    case AllocFailure::None: return "none";
    case AllocFailure::Capacity: return "capacity";
    case AllocFailure::RegionLimit: return "region-limit";
  }
  return "none";
}

const char* to_string(Region r) { return r == Region::Main ? "main" : "side"; }

const char* to_string(DataSource s) {
  switch (s) {
    case DataSource::Dram: return "dram";
    case DataSource::Compute: return "compute";
    case DataSource::Side: return "side";
    case DataSource::Main: return "main";
  }
  return "compute";
}

namespace {

std::int64_t round_to_word(std::int64_t bytes, std::int64_t word) { return ceil_div(bytes, word) * word; }

}  // namespace

std::vector<RegionAllocation> region_layout(const SubgraphSchedule& sched, const ComputationGraph& g,
                                            const HardwareConfig& hw) {
  std::vector<RegionAllocation> out;
  out.reserve(sched.nodes.size());
  for (std::size_t k = 0; k < sched.nodes.size(); ++k) {
    const auto& ns = sched.nodes[k];
    const auto& d = g.node(ns.node);
    const std::int64_t elem = d.out_channels * d.act_bytes_per_elem;
    RegionAllocation r;
    r.node = ns.node;
    r.id = ns.id;
    r.main_rows = std::min(ns.band_rows(), d.out.h);
    r.main_cols = std::min(ns.tile.w, d.out.w);
    r.main_bytes = round_to_word(r.main_rows * r.main_cols * elem, hw.word_bytes);
    const bool feeds_members = !sched.view.consumers[k].empty();
    if (feeds_members && ns.band_rows() < d.out.h) {
      r.side_rows = std::clamp<std::int64_t>(ns.tile.h - ns.delta.h, 0, d.out.h);
      r.side_bytes = round_to_word(r.side_rows * d.out.w * elem, hw.word_bytes);
    }
    out.push_back(r);
  }
  return out;
}

std::int64_t activation_footprint(const SubgraphSchedule& sched, const ComputationGraph& g,
                                  const HardwareConfig& hw) {
  std::int64_t total = 0;
  for (const auto& r : region_layout(sched, g, hw)) total += r.main_bytes + r.side_bytes;
  return total;
}

AllocationResult allocate_regions(const SubgraphSchedule& sched, const ComputationGraph& g, const HardwareConfig& hw,
                                  std::int64_t resident_weight_bytes) {
  AllocationResult res;
  if (resident_weight_bytes < 0) resident_weight_bytes = weight_bytes_of(g, sched.view.members);
  res.capacity = hw.activation_capacity(resident_weight_bytes);
  res.regions = region_layout(sched, g, hw);
  std::int64_t cursor = 0;
  for (auto& r : res.regions) {
    r.main_start = cursor;
    r.main_end = cursor + r.main_bytes;
    r.side_start = r.main_end;
    r.side_end = r.side_start + r.side_bytes;
    cursor = r.side_end;
  }
  res.total_bytes = cursor;
  res.entries_used = 2 * static_cast<int>(res.regions.size());
  if (res.entries_used > 2 * hw.region_limit) {
    res.feasible = false;
    res.reason = AllocFailure::RegionLimit;
  } else if (res.total_bytes > res.capacity) {
    res.feasible = false;
    res.reason = AllocFailure::Capacity;
  }
  return res;
}

std::int64_t weight_bytes_of(const ComputationGraph& g, const std::vector<NodeIndex>& members) {
  std::int64_t s = 0;
  for (NodeIndex v : members) s += g.node(v).weight_bytes;
  return s;
}

std::int64_t weight_residency(const ComputationGraph& g, const PartitionScheme& p, int i) {
  return weight_bytes_of(g, p.members(i));
}

namespace {

struct AxisTrack {
  std::int64_t delta, tile, lead, upd;
  std::int64_t period() const { return upd * delta; }
};

std::int64_t first_loop(const std::vector<AxisTrack>& axes) {
  std::int64_t k = 0;
  for (const auto& a : axes)
    if (a.lead > 0) k = std::max(k, ceil_div(a.lead, a.period()));
  return -k;
}

}  // namespace

std::vector<TraceEvent> replay_trace(const SubgraphSchedule& sched, const ComputationGraph&,
                                     const HardwareConfig&, int rows, int cols) {
  std::vector<TraceEvent> events;
  const std::size_t n = sched.nodes.size();
  if (n == 0 || rows <= 0) return events;
  if (cols <= 0) cols = static_cast<int>(std::max<std::int64_t>(1, sched.steps.w));

  std::vector<AxisTrack> th(n), tw(n);
  std::int64_t ticks = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ns = sched.nodes[k];
    th[k] = {ns.delta.h, ns.tile.h, ns.lead.h, ns.upd.h};
    tw[k] = {ns.delta.w, ns.tile.w, ns.lead.w, ns.upd.w};
    ticks = std::lcm(ticks, ns.upd.w);
  }
  const std::int64_t kh0 = first_loop(th), kw0 = first_loop(tw);

  std::int64_t step = 0;
  for (std::int64_t kh = kh0; kh < rows; ++kh) {
    for (std::int64_t kw = kw0; kw < cols; ++kw, ++step) {
      for (std::int64_t tau = 0; tau < ticks; ++tau) {
        for (std::size_t k = 0; k < n; ++k) {
          const auto& ns = sched.nodes[k];
          const std::int64_t every = ticks / ns.upd.w;
          if (tau % every != 0) continue;
          const auto& h = th[k];
          const auto& w = tw[k];
          const std::int64_t band = ns.band_rows();
          const std::int64_t hb1 = (kh + 1) * h.period() + h.lead - 1;
          if (hb1 < 0) continue;
          const std::int64_t hb0 = std::max<std::int64_t>(0, hb1 - band + 1);
          const std::int64_t new_r0 = std::max<std::int64_t>(0, kh * h.period() + h.lead);

          const std::int64_t gidx = kw * ns.upd.w + tau / every;
          const std::int64_t c1 = (gidx + 1) * w.delta + w.lead - 1;
          if (c1 < 0) continue;
          const std::int64_t c0 = std::max<std::int64_t>(0, gidx * w.delta + w.lead);
          const std::int64_t win0 = std::max<std::int64_t>(0, c1 - w.tile + 1);

          TraceEvent e;
          e.step = step;
          e.row_loop = kh;
          e.col_op = kw;
          e.node = ns.node;
          e.node_id = ns.id;
          e.main_window = {hb0, hb1, win0, c1};
          if (new_r0 > hb0) {
            e.region = Region::Main;
            e.source = DataSource::Side;
            e.written = {hb0, new_r0 - 1, c0, c1};
            events.push_back(e);
          }
          e.region = Region::Main;
          e.source = ns.is_source ? DataSource::Dram : DataSource::Compute;
          e.written = {new_r0, hb1, c0, c1};
          if (!e.written.empty()) events.push_back(e);
          const std::int64_t overlap = ns.tile.h - ns.delta.h;
          if (!sched.view.consumers[k].empty() && overlap > 0) {
            e.region = Region::Side;
            e.source = DataSource::Main;
            e.written = {std::max(hb0, hb1 - overlap + 1), hb1, c0, c1};
            if (!e.written.empty()) events.push_back(e);
          }
        }
      }
    }
  }
  return events;
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += fmt::format(
        "{{\"step\":{},\"row_loop\":{},\"col_op\":{},\"node\":{},\"region\":\"{}\",\"source\":\"{}\","
        "\"rows\":[{},{}],\"cols\":[{},{}],\"main_rows\":[{},{}],\"main_cols\":[{},{}]}}\n",
        e.step, e.row_loop, e.col_op, e.node_id, to_string(e.region), to_string(e.source), e.written.h0, e.written.h1,
        e.written.w0, e.written.w1, e.main_window.h0, e.main_window.h1, e.main_window.w0, e.main_window.w1);
  }
  return out;
}

}  // namespace memcoex
