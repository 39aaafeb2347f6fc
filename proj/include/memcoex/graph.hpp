// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memcoex/common.hpp"

namespace memcoex {

enum class LayerKind { Conv, DwConv, Pool, Eltwise, Input, OutputMarker };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);  // accepts "fc" as Conv

struct LayerDescriptor {
  int id = 0;
  LayerKind kind = LayerKind::Conv;
  Extent2 kernel{1, 1};
  Extent2 stride{1, 1};
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  Extent2 out{1, 1};
  std::int64_t weight_bytes = 0;
  std::int64_t act_bytes_per_elem = 1;

  bool is_input() const { return kind == LayerKind::Input; }
  // Channel reduction per output element: full for conv, one for depthwise-like kinds.
  std::int64_t reduction_channels() const { return kind == LayerKind::Conv ? in_channels : 1; }
  std::int64_t output_elements() const { return out.area() * out_channels; }
  std::int64_t output_bytes() const { return output_elements() * act_bytes_per_elem; }
  std::int64_t macs() const;
  // MACs for an out tile of the given extent.
  std::int64_t tile_macs(Extent2 tile) const;
};

// Required input extent to produce x outputs along one axis.
std::int64_t required_extent(const LayerDescriptor& v, std::int64_t x, Axis axis);

// Immutable, validated DAG. Internal storage is by dense NodeIndex; ids are the
// user-facing labels and may be negative.
class ComputationGraph {
 public:
  ComputationGraph(std::vector<LayerDescriptor> nodes, std::vector<std::pair<int, int>> edges,
                   std::vector<int> inputs = {}, std::vector<int> outputs = {});

  std::size_t size() const { return nodes_.size(); }
  const LayerDescriptor& node(NodeIndex i) const { return nodes_[i]; }
  const std::vector<LayerDescriptor>& nodes() const { return nodes_; }
  const std::vector<std::pair<NodeIndex, NodeIndex>>& edges() const { return edges_; }
  NodeIndex index_of(int id) const;
  bool has_id(int id) const { return by_id_.count(id) != 0; }
  int id(NodeIndex i) const { return nodes_[i].id; }

  const std::vector<NodeIndex>& preds(NodeIndex i) const { return preds_[i]; }
  const std::vector<NodeIndex>& succs(NodeIndex i) const { return succs_[i]; }
  // Kahn order with smallest id first among ready nodes.
  const std::vector<NodeIndex>& topo_order() const { return topo_; }
  std::size_t topo_rank(NodeIndex i) const { return rank_[i]; }
  // Longest path from any source, in edges.
  std::size_t depth(NodeIndex i) const { return depth_[i]; }

  bool is_model_output(NodeIndex i) const { return is_output_[i]; }
  const std::vector<NodeIndex>& model_inputs() const { return inputs_; }
  const std::vector<NodeIndex>& model_outputs() const { return outputs_; }

  std::int64_t total_macs() const;
  std::int64_t total_weight_bytes() const;

 private:
  void validate_dims() const;

  std::vector<LayerDescriptor> nodes_;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges_;
  std::unordered_map<int, NodeIndex> by_id_;
  std::vector<std::vector<NodeIndex>> preds_;
  std::vector<std::vector<NodeIndex>> succs_;
  std::vector<NodeIndex> topo_;
  std::vector<std::size_t> rank_;
  std::vector<std::size_t> depth_;
  std::vector<NodeIndex> inputs_;
  std::vector<NodeIndex> outputs_;
  std::vector<bool> is_output_;
};

// Subgraph labels per node index. Labels are non-negative; canonical form is dense.
class PartitionScheme {
 public:
  PartitionScheme() = default;
  explicit PartitionScheme(std::vector<int> assignment) : assignment_(std::move(assignment)) {}

  static PartitionScheme whole(const ComputationGraph& g) {
    return PartitionScheme(std::vector<int>(g.size(), 0));
  }
  static PartitionScheme singletons(const ComputationGraph& g);

  std::size_t size() const { return assignment_.size(); }
  int of(NodeIndex i) const { return assignment_[i]; }
  void set(NodeIndex i, int label) { assignment_[i] = label; }
  const std::vector<int>& assignment() const { return assignment_; }
  int num_subgraphs() const;  // max label + 1
  // Members of each label, ascending by node index.
  std::vector<std::vector<NodeIndex>> groups() const;
  std::vector<NodeIndex> members(int label) const;

  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;

 private:
  std::vector<int> assignment_;
};

PartitionScheme canonicalize(const PartitionScheme& p);

enum class ViolationKind { Coverage, Precedence, Disconnected };

struct Violation {
  ViolationKind kind = ViolationKind::Coverage;
  int subgraph = -1;
  std::pair<int, int> edge{0, 0};  // ids, precedence only
  std::vector<int> nodes;          // ids of the offending subgraph, connectivity only
  std::string describe() const;
};

struct PartitionVerdict {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

PartitionVerdict validate_partition(const ComputationGraph& g, const PartitionScheme& p);

// Undirected connectivity of an arbitrary node set.
bool is_connected(const ComputationGraph& g, const std::vector<NodeIndex>& members);

// Induced topological order with id-ascending tie-break.
std::vector<NodeIndex> subgraph_topo_order(const ComputationGraph& g, const PartitionScheme& p, int i);
std::vector<NodeIndex> induced_topo_order(const ComputationGraph& g, const std::vector<NodeIndex>& members);

struct BoundaryTensors {
  std::vector<NodeIndex> external_inputs;
  std::vector<NodeIndex> external_outputs;
};

BoundaryTensors boundary_tensors(const ComputationGraph& g, const PartitionScheme& p, int i);
BoundaryTensors boundary_of(const ComputationGraph& g, const std::vector<NodeIndex>& members);

std::int64_t subgraph_macs(const ComputationGraph& g, const PartitionScheme& p, int i);

}  // namespace memcoex
