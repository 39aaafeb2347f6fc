// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"

namespace memcoex {

// Nodes taking part in one subgraph execution: compute members plus every
// tensor source (external producers and member input nodes with a member consumer).
struct SubgraphView {
  std::vector<NodeIndex> members;
  std::vector<NodeIndex> nodes;  // execution order
  std::vector<char> is_source;   // parallel to nodes
  std::vector<std::vector<std::size_t>> producers;  // positions into nodes
  std::vector<std::vector<std::size_t>> consumers;
  std::vector<std::size_t> outputs;  // compute nodes without an in-view consumer

  std::size_t size() const { return nodes.size(); }
  std::optional<std::size_t> position(NodeIndex v) const;
};

// Throws NotSchedulable when a path leaves the member set and re-enters it.
SubgraphView make_view(const ComputationGraph& g, const std::vector<NodeIndex>& members);

struct ScheduleOptions {
  std::map<int, Extent2> tile_overrides;  // output node id -> tile
  std::optional<Extent2> uniform_tile;    // applies to every output without an override
};

struct Stage1Result {
  std::map<NodeIndex, Extent2> tiles;
  bool fallback = false;  // some output found no tile meeting the utilization threshold
};

// Modeled PE utilization of one update producing `tile` outputs of v.
double modeled_utilization(const LayerDescriptor& v, Extent2 tile, const HardwareConfig& hw);
// Ascending square side candidates, clamped per axis to the extent.
std::vector<Extent2> tile_candidates(Extent2 extent, const HardwareConfig& hw);

Stage1Result stage1_output_tiles(const ComputationGraph& g, const SubgraphView& view, const HardwareConfig& hw,
                                 const ScheduleOptions& options = {});

struct Stage2Node {
  Extent2 delta;
  Extent2 tile;
  // Elements a node runs ahead of the output-aligned position; nonzero on
  // nodes whose consumers need a halo.
  Extent2 lead{0, 0};
};

std::vector<Stage2Node> stage2_backward_derive(const ComputationGraph& g, const SubgraphView& view,
                                               const std::map<NodeIndex, Extent2>& output_tiles,
                                               std::int64_t lcm_cap = 4096);

// Per-axis minimal integer update counts, parallel to view.nodes.
std::vector<Extent2> stage3_update_counts(const ComputationGraph& g, const SubgraphView& view,
                                          const std::vector<Stage2Node>& stage2);

struct NodeSchedule {
  NodeIndex node = 0;
  int id = 0;
  bool is_source = false;
  bool is_output = false;
  Extent2 delta;
  Extent2 tile;
  Extent2 lead{0, 0};
  Extent2 upd;
  std::int64_t upd_num = 1;  // upd.h * upd.w

  // Rows held across one row loop: the tile plus the extra updates per loop.
  std::int64_t band_rows() const { return tile.h + (upd.h - 1) * delta.h; }
};

struct SubgraphSchedule {
  int subgraph = -1;
  SubgraphView view;
  std::vector<NodeSchedule> nodes;  // parallel to view.nodes
  Extent2 steps{0, 0};
  std::int64_t steps_per_tensor = 0;
  bool tile_fallback = false;

  const NodeSchedule& at(NodeIndex v) const;
  const NodeSchedule* find_id(int id) const;
};

SubgraphSchedule derive_schedule(const ComputationGraph& g, const std::vector<NodeIndex>& members,
                                 const HardwareConfig& hw, const ScheduleOptions& options = {});
SubgraphSchedule derive_schedule(const ComputationGraph& g, const PartitionScheme& p, int i,
                                 const HardwareConfig& hw, const ScheduleOptions& options = {});

}  // namespace memcoex
