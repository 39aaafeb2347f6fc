// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/scheme.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace memcoex {

std::optional<std::size_t> SubgraphView::position(NodeIndex v) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == v) return i;
  return std::nullopt;
}

SubgraphView make_view(const ComputationGraph& g, const std::vector<NodeIndex>& members) {
  SubgraphView view;
  view.members = members;
  std::sort(view.members.begin(), view.members.end());
  const std::size_t n = g.size();
  std::vector<char> in(n, 0), in_view(n, 0), external(n, 0);
  for (NodeIndex v : view.members) in[v] = 1;
  for (NodeIndex v : view.members) {
    if (g.node(v).is_input()) {
      for (NodeIndex w : g.succs(v)) in_view[v] = in_view[v] || in[w];
      continue;
    }
    in_view[v] = 1;
    for (NodeIndex u : g.preds(v)) {
      if (!in[u]) {
        in_view[u] = 1;
        external[u] = 1;
      }
    }
  }

  // A member-to-outside-to-member path would make an external input depend on
  // this very subgraph.
  std::vector<char> reached(n, 0);
  std::vector<NodeIndex> stack;
  for (NodeIndex v : view.members)
    for (NodeIndex w : g.succs(v))
      if (!in[w] && !reached[w]) {
        reached[w] = 1;
        stack.push_back(w);
      }
  while (!stack.empty()) {
    NodeIndex u = stack.back();
    stack.pop_back();
    if (external[u])
      throw Error(ErrorKind::NotSchedulable,
                  fmt::format("node {} feeds the subgraph but depends on it (non-convex subgraph)", g.id(u)),
                  {g.id(u)});
    for (NodeIndex w : g.succs(u))
      if (!in[w] && !reached[w]) {
        reached[w] = 1;
        stack.push_back(w);
      }
  }

  std::vector<NodeIndex> vnodes;
  for (NodeIndex v = 0; v < n; ++v)
    if (in_view[v]) vnodes.push_back(v);
  // Sources have no in-view producers, so the induced order works as is once
  // edges into sources are ignored.
  std::vector<std::size_t> indeg(n, 0);
  auto is_compute = [&](NodeIndex v) { return in[v] && !g.node(v).is_input(); };
  for (NodeIndex v : vnodes)
    if (is_compute(v))
      for (NodeIndex u : g.preds(v)) indeg[v] += in_view[u] ? 1 : 0;
  auto cmp = [&](NodeIndex a, NodeIndex b) { return g.id(a) > g.id(b); };
  std::priority_queue<NodeIndex, std::vector<NodeIndex>, decltype(cmp)> ready(cmp);
  for (NodeIndex v : vnodes)
    if (indeg[v] == 0) ready.push(v);
  while (!ready.empty()) {
    NodeIndex u = ready.top();
    ready.pop();
    view.nodes.push_back(u);
    for (NodeIndex w : g.succs(u))
      if (in_view[w] && is_compute(w) && --indeg[w] == 0) ready.push(w);
  }

  std::vector<std::size_t> pos(n, 0);
  for (std::size_t i = 0; i < view.nodes.size(); ++i) pos[view.nodes[i]] = i;
  view.is_source.assign(view.nodes.size(), 0);
  view.producers.assign(view.nodes.size(), {});
  view.consumers.assign(view.nodes.size(), {});
  for (std::size_t i = 0; i < view.nodes.size(); ++i) {
    const NodeIndex v = view.nodes[i];
    if (!is_compute(v)) {
      view.is_source[i] = 1;
      continue;
    }
    for (NodeIndex u : g.preds(v)) {
      view.producers[i].push_back(pos[u]);
      view.consumers[pos[u]].push_back(i);
    }
  }
  for (std::size_t i = 0; i < view.nodes.size(); ++i) {
    std::sort(view.consumers[i].begin(), view.consumers[i].end());
    if (!view.is_source[i] && view.consumers[i].empty()) view.outputs.push_back(i);
  }
  return view;
}

double modeled_utilization(const LayerDescriptor& v, Extent2 tile, const HardwareConfig& hw) {
  const double work = static_cast<double>(v.tile_macs(tile));
  return std::min(1.0, work / static_cast<double>(hw.peak_macs_per_cycle()));
}

std::vector<Extent2> tile_candidates(Extent2 extent, const HardwareConfig& hw) {
  const std::int64_t gran = std::max(hw.pe_rows, hw.pe_cols);
  const std::int64_t limit = std::max(extent.h, extent.w);
  std::vector<std::int64_t> sides{1, 2};
  for (std::int64_t t = gran; t < limit + gran; t += gran) sides.push_back(t);
  std::vector<Extent2> out;
  for (std::int64_t t : sides) {
    Extent2 c{std::min(t, extent.h), std::min(t, extent.w)};
    if (out.empty() || !(out.back() == c)) out.push_back(c);
    if (c == extent) break;
  }
  return out;
}

namespace {

Extent2 clamp_tile(Extent2 t, Extent2 extent) {
  if (t.h < 1 || t.w < 1) throw Error(ErrorKind::InvalidParams, "tile sides must be positive");
  return {std::min(t.h, extent.h), std::min(t.w, extent.w)};
}

}  // namespace

Stage1Result stage1_output_tiles(const ComputationGraph& g, const SubgraphView& view, const HardwareConfig& hw,
                                 const ScheduleOptions& options) {
  Stage1Result r;
  for (std::size_t o : view.outputs) {
    const NodeIndex v = view.nodes[o];
    const auto& d = g.node(v);
    if (auto it = options.tile_overrides.find(d.id); it != options.tile_overrides.end()) {
      r.tiles[v] = clamp_tile(it->second, d.out);
      continue;
    }
    if (options.uniform_tile) {
      r.tiles[v] = clamp_tile(*options.uniform_tile, d.out);
      continue;
    }
    bool found = false;
    for (const Extent2& c : tile_candidates(d.out, hw)) {
      if (modeled_utilization(d, c, hw) >= hw.util_threshold) {
        r.tiles[v] = c;
        found = true;
        break;
      }
    }
    if (!found) {
      r.tiles[v] = {1, 1};
      r.fallback = true;
    }
  }
  return r;
}

std::vector<Stage2Node> stage2_backward_derive(const ComputationGraph& g, const SubgraphView& view,
                                               const std::map<NodeIndex, Extent2>& output_tiles,
                                               std::int64_t lcm_cap) {
  const std::size_t n = view.size();
  std::vector<Stage2Node> out(n);
  std::vector<std::size_t> driver(n, std::numeric_limits<std::size_t>::max());
  auto chain_from = [&](std::size_t start) {
    std::vector<int> ids;
    for (std::size_t c = start; c < n && ids.size() <= n; c = driver[c]) ids.push_back(g.id(view.nodes[c]));
    return ids;
  };
  for (std::size_t k = n; k-- > 0;) {
    const NodeIndex u = view.nodes[k];
    if (view.consumers[k].empty()) {
      if (view.is_source[k]) continue;
      auto it = output_tiles.find(u);
      if (it == output_tiles.end())
        throw Error(ErrorKind::Internal, fmt::format("no stage-1 tile for output node {}", g.id(u)), {g.id(u)});
      out[k].delta = out[k].tile = {std::max<std::int64_t>(1, it->second.h), std::max<std::int64_t>(1, it->second.w)};
      out[k].lead = {0, 0};
      continue;
    }
    for (Axis a : kAxes) {
      std::int64_t delta = 1;
      std::int64_t widest = 0;
      std::int64_t lead = std::numeric_limits<std::int64_t>::min();
      std::int64_t min_shift = std::numeric_limits<std::int64_t>::max();
      for (std::size_t c : view.consumers[k]) {
        const auto& cd = g.node(view.nodes[c]);
        const std::int64_t s = cd.stride.along(a), f = cd.kernel.along(a);
        const std::int64_t need = out[c].delta.along(a) * s;
        if (need > widest) {
          widest = need;
          driver[k] = c;
        }
        std::int64_t next = 0;
        if (!checked_lcm(delta, need, lcm_cap, next)) {
          driver[k] = c;
          auto ids = chain_from(k);
          throw Error(ErrorKind::LcmOverflow,
                      fmt::format("update offset of node {} exceeds the lcm cap {} along {}; chain {{{}}}", g.id(u),
                                  lcm_cap, a == Axis::H ? "h" : "w", fmt::join(ids, "->")),
                      ids);
        }
        delta = next;
        lead = std::max(lead, out[c].lead.along(a) * s + f - s);
        min_shift = std::min(min_shift, out[c].lead.along(a) * s);
      }
      out[k].delta.along(a) = delta;
      out[k].lead.along(a) = lead;
      // Covers the furthest consumer demand while the least advanced consumer
      // still reads from the oldest element; equals max_v f_v(delta/s_v)
      // whenever all consumers run at the same lead.
      out[k].tile.along(a) = std::max(delta, delta + lead - min_shift);
    }
  }
  return out;
}

namespace {

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

Ratio reduce(std::int64_t num, std::int64_t den) {
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

}  // namespace

std::vector<Extent2> stage3_update_counts(const ComputationGraph& g, const SubgraphView& view,
                                          const std::vector<Stage2Node>& stage2) {
  const std::size_t n = view.size();
  std::vector<Extent2> upd(n, Extent2{1, 1});
  if (n == 0) return upd;
  for (Axis a : kAxes) {
    std::vector<Ratio> rate(n);
    std::vector<char> seen(n, 0);
    for (std::size_t root = 0; root < n; ++root) {
      if (seen[root]) continue;
      seen[root] = 1;
      rate[root] = {1, 1};
      std::vector<std::size_t> queue{root};
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const std::size_t x = queue[qi];
        auto relax = [&](std::size_t y, std::int64_t mul, std::int64_t div) {
          const Ratio r = reduce(rate[x].num * mul, rate[x].den * div);
          if (!seen[y]) {
            seen[y] = 1;
            rate[y] = r;
            queue.push_back(y);
          } else if (rate[y].num != r.num || rate[y].den != r.den) {
            throw Error(ErrorKind::InconsistentRates,
                        fmt::format("update rates of nodes {} and {} disagree", g.id(view.nodes[x]),
                                    g.id(view.nodes[y])),
                        {g.id(view.nodes[x]), g.id(view.nodes[y])});
          }
        };
        // upd_v * delta_v * s_v = upd_u * delta_u for producer u, consumer v.
        for (std::size_t c : view.consumers[x]) {
          const std::int64_t s = g.node(view.nodes[c]).stride.along(a);
          relax(c, stage2[x].delta.along(a), stage2[c].delta.along(a) * s);
        }
        for (std::size_t p : view.producers[x]) {
          const std::int64_t s = g.node(view.nodes[x]).stride.along(a);
          relax(p, stage2[x].delta.along(a) * s, stage2[p].delta.along(a));
        }
      }
    }
    std::int64_t l = 1;
    for (const auto& r : rate) l = std::lcm(l, r.den);
    std::int64_t common = 0;
    for (std::size_t i = 0; i < n; ++i) common = std::gcd(common, rate[i].num * (l / rate[i].den));
    for (std::size_t i = 0; i < n; ++i) upd[i].along(a) = rate[i].num * (l / rate[i].den) / common;
  }
  return upd;
}

const NodeSchedule& SubgraphSchedule::at(NodeIndex v) const {
  for (const auto& ns : nodes)
    if (ns.node == v) return ns;
  throw Error(ErrorKind::Internal, "node not part of the schedule");
}

const NodeSchedule* SubgraphSchedule::find_id(int id) const {
  for (const auto& ns : nodes)
    if (ns.id == id) return &ns;
  return nullptr;
}

SubgraphSchedule derive_schedule(const ComputationGraph& g, const std::vector<NodeIndex>& members,
                                 const HardwareConfig& hw, const ScheduleOptions& options) {
  SubgraphSchedule s;
  s.view = make_view(g, members);
  const auto& view = s.view;
  if (view.size() == 0) return s;
  const Stage1Result tiles = stage1_output_tiles(g, view, hw, options);
  s.tile_fallback = tiles.fallback;
  const auto st2 = stage2_backward_derive(g, view, tiles.tiles, hw.lcm_cap);
  const auto upd = stage3_update_counts(g, view, st2);
  s.nodes.resize(view.size());
  for (std::size_t k = 0; k < view.size(); ++k) {
    auto& ns = s.nodes[k];
    ns.node = view.nodes[k];
    ns.id = g.id(ns.node);
    ns.is_source = view.is_source[k] != 0;
    ns.is_output = !ns.is_source && view.consumers[k].empty();
    ns.delta = st2[k].delta;
    ns.tile = st2[k].tile;
    ns.lead = st2[k].lead;
    ns.upd = upd[k];
    ns.upd_num = upd[k].h * upd[k].w;
  }
  s.steps = {0, 0};
  for (std::size_t o : view.outputs) {
    const auto& ns = s.nodes[o];
    const auto& d = g.node(ns.node);
    for (Axis a : kAxes)
      s.steps.along(a) = std::max(s.steps.along(a), ceil_div(d.out.along(a), ns.upd.along(a) * ns.delta.along(a)));
  }
  s.steps_per_tensor = s.steps.h * s.steps.w;
  return s;
}

SubgraphSchedule derive_schedule(const ComputationGraph& g, const PartitionScheme& p, int i,
                                 const HardwareConfig& hw, const ScheduleOptions& options) {
  auto s = derive_schedule(g, p.members(i), hw, options);
  s.subgraph = i;
  return s;
}

}  // namespace memcoex
