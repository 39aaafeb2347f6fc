// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "memcoex/memory.hpp"
#include "memcoex/scheme.hpp"

namespace memcoex::testing {

struct ReplayVerdict {
  std::vector<std::string> violations;
  std::size_t events = 0;
  bool ok() const { return violations.empty(); }
};

// Checks a replay against three rules: every computed window finds its input
// rows and columns in the producers' MAIN windows, no element is computed
// twice, and no external element is fetched twice.
inline ReplayVerdict check_replay(const SubgraphSchedule& s, const ComputationGraph& g,
                                  const std::vector<TraceEvent>& events) {
  ReplayVerdict out;
  out.events = events.size();
  std::map<NodeIndex, Rect> window;
  std::map<NodeIndex, std::set<std::pair<std::int64_t, std::int64_t>>> produced;
  auto fail = [&](std::string msg) {
    if (out.violations.size() < 20) out.violations.push_back(std::move(msg));
    else if (out.violations.size() == 20) out.violations.push_back("...");
  };
  for (const auto& e : events) {
    const auto pos = *s.view.position(e.node);
    const bool fresh = e.region == Region::Main && (e.source == DataSource::Compute || e.source == DataSource::Dram);
    if (fresh) {
      auto& cells = produced[e.node];
      for (std::int64_t r = e.written.h0; r <= e.written.h1; ++r)
        for (std::int64_t c = e.written.w0; c <= e.written.w1; ++c)
          if (!cells.emplace(r, c).second)
            fail(fmt::format("node {} element ({},{}) {} twice", e.node_id, r, c,
                             e.source == DataSource::Dram ? "fetched" : "computed"));
    }
    if (fresh && e.source == DataSource::Compute) {
      const auto& d = g.node(e.node);
      for (std::size_t pp : s.view.producers[pos]) {
        const NodeIndex u = s.view.nodes[pp];
        const Rect need{e.written.h0 * d.stride.h, e.written.h1 * d.stride.h + d.kernel.h - 1,
                        e.written.w0 * d.stride.w, e.written.w1 * d.stride.w + d.kernel.w - 1};
        const auto it = window.find(u);
        if (it == window.end() || !it->second.contains(need))
          fail(fmt::format("step {}: node {} rows [{},{}] cols [{},{}] not resident in producer {}", e.step,
                           e.node_id, need.h0, need.h1, need.w0, need.w1, g.id(u)));
      }
    }
    if (e.region == Region::Main) window[e.node] = e.main_window;
  }
  return out;
}

// Conv-only DAG with kernels from {1,3,5,7} and strides from {1,2}. Outputs
// use "same" sizing, so multi-input nodes only join producers of equal size.
inline ComputationGraph random_conv_dag(std::uint64_t seed, int max_nodes = 8) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::int64_t n) { return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n)); };
  const std::int64_t kernels[] = {1, 3, 5, 7};
  const int n = 2 + static_cast<int>(pick(max_nodes - 1));  // input included
  std::vector<LayerDescriptor> nodes;
  std::vector<std::pair<int, int>> edges;
  LayerDescriptor in;
  in.id = 0;
  in.kind = LayerKind::Input;
  in.out_channels = in.in_channels = 1 + pick(3);
  const std::int64_t side = 32 + 8 * pick(5);
  in.out = {side, side + 8 * pick(3)};
  nodes.push_back(in);
  for (int id = 1; id < n; ++id) {
    const auto& first = nodes[static_cast<std::size_t>(pick(id))];
    LayerDescriptor d;
    d.id = id;
    d.kind = LayerKind::Conv;
    d.kernel = {kernels[pick(4)], kernels[pick(4)]};
    d.stride = {1 + pick(2), 1 + pick(2)};
    if (first.out.h < 2 * d.kernel.h) d.stride.h = 1;
    if (first.out.w < 2 * d.kernel.w) d.stride.w = 1;
    d.out = {ceil_div(first.out.h, d.stride.h), ceil_div(first.out.w, d.stride.w)};
    std::vector<int> preds{first.id};
    for (const auto& other : nodes)
      if (other.id != first.id && other.out == first.out && pick(4) == 0) preds.push_back(other.id);
    d.in_channels = 0;
    for (int p : preds) {
      d.in_channels += nodes[static_cast<std::size_t>(p)].out_channels;
      edges.emplace_back(p, id);
    }
    d.out_channels = 1 + pick(4);
    d.weight_bytes = d.kernel.area() * d.in_channels * d.out_channels;
    nodes.push_back(d);
  }
  return ComputationGraph(std::move(nodes), std::move(edges));
}

}  // namespace memcoex::testing
