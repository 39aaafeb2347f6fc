// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "memcoex/cost.hpp"
#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"

namespace memcoex {

using Rng = std::mt19937_64;

enum class SearchMode { PartitionOnly, Codesign };

const char* to_string(SearchMode m);

struct Genome {
  PartitionScheme partition;
  HwChoice hw;
  double objective = kInfeasible;
  double fitness() const { return -objective; }
};

struct MutationWeights {
  double modify_node = 0.4;
  double split = 0.2;
  double merge = 0.2;
  double dse = 0.2;  // ignored outside co-design
};

struct GAParams {
  std::size_t population = 500;
  std::int64_t budget = 50000;
  double crossover_rate = 0.7;
  double mutation_rate = 0.5;
  MutationWeights weights;
  double dse_sigma = 2.0;  // grid steps
  std::size_t tournament = 4;
  double merge_on_conflict = 0.5;  // crossover: merge into a decided subgraph vs split out
  std::uint64_t seed = 1;

  void validate() const;
};

// --- partition operators -------------------------------------------------

// Makes any labelling valid: splits disconnected groups into components,
// breaks cycles between groups by halving along topological order, then
// relabels densely in an order that keeps existing label order where possible.
PartitionScheme repair_labels(const ComputationGraph& g, const std::vector<long long>& labels);
PartitionScheme repair_partition(const ComputationGraph& g, const PartitionScheme& p);

PartitionScheme random_partition(const ComputationGraph& g, Rng& rng);

// Moves v into the subgraph `target`, or into a fresh one when target is empty.
PartitionScheme modify_node(const ComputationGraph& g, const PartitionScheme& p, NodeIndex v,
                            std::optional<int> target);
// Cuts subgraph `label` after its first `cut` nodes in topological order.
PartitionScheme split_subgraph(const ComputationGraph& g, const PartitionScheme& p, int label, std::size_t cut);
// Cut that balances weight plus output bytes of the two parts.
PartitionScheme split_balanced(const ComputationGraph& g, const PartitionScheme& p, int label);
// Empty when a and b share no edge or merging them would create a cycle.
std::optional<PartitionScheme> merge_subgraphs(const ComputationGraph& g, const PartitionScheme& p, int a, int b);

struct CrossoverChoices {
  std::function<bool(NodeIndex)> take_mom;    // parent reproducing the subgraph of an undecided layer
  std::function<bool()> merge_on_conflict;    // Child-2 style when true, Child-1 style otherwise
  std::function<std::size_t(std::size_t)> pick;  // index among candidate decided subgraphs
};

PartitionScheme crossover_partition(const ComputationGraph& g, const PartitionScheme& mom,
                                    const PartitionScheme& dad, const CrossoverChoices& choices);

HwChoice random_hw_choice(const HwSpace& space, Rng& rng);
HwChoice average_hw_choice(const HwSpace& space, const HwChoice& a, const HwChoice& b);

Genome crossover(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& mom,
                 const Genome& dad, const GAParams& params, Rng& rng);

enum class MutationOp { ModifyNode, Split, Merge, Dse };

Genome mutate_with(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& genome,
                   MutationOp op, const GAParams& params, Rng& rng);
Genome mutate(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& genome,
              const GAParams& params, Rng& rng);

// Random valid genomes; seed partitions (validated, else InvalidPartition) fill a prefix.
std::vector<Genome> init_population(const ComputationGraph& g, const HwSpace& space, SearchMode mode,
                                    const GAParams& params, Rng& rng, const std::vector<Genome>& seeds = {});

// --- fitness ---------------------------------------------------------------

class GenomeEvaluator {
 public:
  GenomeEvaluator(const ComputationGraph& g, const HwSpace& space, SearchMode mode, Metric metric,
                  ExecContext ctx = {});

  // Splits over-capacity subgraphs in place until feasible or atomic, then
  // stores and returns the objective. Counts one sample.
  double evaluate_and_repair(Genome& genome);
  HardwareConfig hardware(const HwChoice& c) const;
  std::int64_t samples() const { return samples_; }
  ProfileCache& cache() { return cache_; }
  SearchMode mode() const { return mode_; }
  Metric metric() const { return metric_; }
  const HwSpace& space() const { return space_; }

 private:
  const ComputationGraph& g_;
  HwSpace space_;
  SearchMode mode_;
  Metric metric_;
  ExecContext ctx_;
  ProfileCache cache_;
  std::int64_t samples_ = 0;
};

}  // namespace memcoex
