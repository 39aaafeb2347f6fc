// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"
#include "memcoex/scheme.hpp"

namespace memcoex {

enum class Metric { Ema, Energy };

const char* to_string(Metric m);
Metric metric_from_string(const std::string& s);

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct EmaBreakdown {
  std::int64_t weights_in = 0;
  std::int64_t acts_in = 0;
  std::int64_t acts_out = 0;
  std::int64_t total() const { return weights_in + acts_in + acts_out; }
  std::int64_t acts() const { return acts_in + acts_out; }
};

// Everything about a subgraph that does not depend on buffer capacities.
struct SubgraphProfile {
  bool schedulable = true;
  std::string error;
  std::size_t schedule_nodes = 0;  // region blocks needed
  EmaBreakdown ema;
  std::int64_t macs = 0;
  std::int64_t weight_bytes = 0;
  std::int64_t act_bytes = 0;  // MAIN + SIDE footprint
  // On-chip traffic in bytes.
  std::int64_t act_writes = 0;
  std::int64_t act_reads = 0;
  std::int64_t weight_writes = 0;
  std::int64_t weight_reads = 0;
  double compute_cycles = 0.0;
};

SubgraphProfile profile_subgraph(const ComputationGraph& g, const std::vector<NodeIndex>& members,
                                 const HardwareConfig& hw);

// Multi-core execution context; cores = batch = 1 is the single-core model.
struct ExecContext {
  int cores = 1;
  int batch = 1;
};

// Checks one subgraph given the weights prefetched for its successor.
bool subgraph_fits(const SubgraphProfile& s, std::int64_t next_weight_bytes, const HardwareConfig& hw,
                   const ExecContext& ctx = {}, std::string* reason = nullptr);

struct SubgraphCost {
  int index = 0;
  EmaBreakdown ema;
  std::int64_t hop_bytes = 0;
  std::int64_t macs = 0;
  std::int64_t weight_bytes = 0;
  std::int64_t act_bytes = 0;
  double dram_pj = 0, onchip_pj = 0, mac_pj = 0, hop_pj = 0, energy_pj = 0;
  double compute_cycles = 0, comm_cycles = 0, hop_cycles = 0, latency_cycles = 0;
  bool feasible = true;
  std::string reason;
  double metric_value = 0;
};

// Cost of a subgraph once its capacity context is known.
SubgraphCost cost_from_profile(const SubgraphProfile& s, const HardwareConfig& hw, Metric metric,
                               const ExecContext& ctx = {});

SubgraphCost subgraph_cost(const ComputationGraph& g, const PartitionScheme& p, int i, const HardwareConfig& hw,
                           Metric metric);

struct CostReport {
  Metric metric = Metric::Energy;
  ExecContext ctx;
  std::vector<SubgraphCost> per_subgraph;
  EmaBreakdown ema;
  std::int64_t hop_bytes = 0;
  std::int64_t macs = 0;
  double energy_pj = 0;
  double compute_cycles = 0, comm_cycles = 0, latency_cycles = 0;
  double avg_bandwidth = 0;  // bytes per second
  double peak_bandwidth = 0;
  double avg_weight_bandwidth = 0;
  double avg_act_bandwidth = 0;
  std::int64_t buf_size = 0;
  double objective_partition = kInfeasible;
  double objective_codesign = kInfeasible;
  bool feasible = true;
  std::string reason;
};

// Throws InvalidPartition when p fails validation.
CostReport evaluate(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw, Metric metric);
// Throws InvalidParams for a core count that is not a power of two in [1, 64].
CostReport multicore_evaluate(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw,
                              int cores, int batch, Metric metric = Metric::Energy);

// BUF_SIZE + alpha * partition objective.
inline double codesign_objective(std::int64_t buf_size, double alpha, double partition_objective) {
  return static_cast<double>(buf_size) + alpha * partition_objective;
}

// Set of nodes as a bitmask, usable as a hash key.
struct NodeSet {
  std::vector<std::uint64_t> words;

  NodeSet() = default;
  NodeSet(std::size_t n, const std::vector<NodeIndex>& members);
  friend bool operator==(const NodeSet&, const NodeSet&) = default;
};

struct NodeSetHash {
  std::size_t operator()(const NodeSet& s) const;
};

class ProfileCache {
 public:
  ProfileCache(const ComputationGraph& g, const HardwareConfig& hw) : g_(g), hw_(hw) {}

  const SubgraphProfile& get(const std::vector<NodeIndex>& members);
  std::size_t size() const { return cache_.size(); }
  const ComputationGraph& graph() const { return g_; }

 private:
  const ComputationGraph& g_;
  HardwareConfig hw_;
  std::unordered_map<NodeSet, SubgraphProfile, NodeSetHash> cache_;
};

enum class ViolationScope { None, Alone, Pair };

struct PartitionScore {
  bool feasible = true;
  double objective = 0;  // summed metric, infinite when infeasible
  int offending = -1;     // first subgraph that breaks a constraint
  ViolationScope scope = ViolationScope::None;
};

// Scores ordered groups (group k runs k-th) with the same rules as evaluate().
PartitionScore score_groups(ProfileCache& cache, const std::vector<std::vector<NodeIndex>>& groups,
                            const HardwareConfig& hw, Metric metric, const ExecContext& ctx = {});

}  // namespace memcoex
