// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "memcoex/cost.hpp"
#include "memcoex/genome.hpp"
#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"

namespace memcoex {

struct TracePoint {
  std::int64_t sample = 0;  // 1-based
  double best = kInfeasible;
  double current = kInfeasible;
};

struct SearchResult {
  Genome best;
  HardwareConfig hw;  // capacities of the best genome
  std::vector<TracePoint> trace;
  std::int64_t samples = 0;
};

std::string trace_to_csv(const std::vector<TracePoint>& trace);

// Called after each generation with the surviving population.
using GenerationObserver = std::function<void(int generation, const std::vector<Genome>& population)>;

SearchResult run_ga(const ComputationGraph& g, const HwSpace& space, const GAParams& params, Metric metric,
                    SearchMode mode, const std::vector<Genome>& seeds = {}, const ExecContext& ctx = {},
                    const GenerationObserver& observer = {});

struct SAParams {
  std::int64_t budget = 50000;
  double cooling = 0.995;
  int calibration_samples = 20;
  double initial_acceptance = 0.8;
  std::optional<double> initial_temperature;  // overrides calibration; 0 gives hill climbing
  MutationWeights weights;
  double dse_sigma = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

SearchResult run_sa(const ComputationGraph& g, const HwSpace& space, const SAParams& params, Metric metric,
                    SearchMode mode, const std::optional<Genome>& start = std::nullopt,
                    const ExecContext& ctx = {});

struct PartitionResult {
  PartitionScheme partition;
  double objective = kInfeasible;
  bool feasible = false;
};

struct EnumerationParams {
  std::int64_t max_states = 10'000'000;
  double time_limit_s = 60.0;
  std::size_t max_subgraph_nodes = 0;  // 0 = unbounded
};

struct EnumerationResult {
  bool complete = false;  // false on timeout
  PartitionResult result;
  std::int64_t states = 0;
  double seconds = 0;
};

// Exact optimum of the partition objective over every valid partition. Graphs above 64 nodes
// report a timeout without searching.
EnumerationResult run_enumeration(const ComputationGraph& g, const HardwareConfig& hw, Metric metric,
                                  const EnumerationParams& params = {});

PartitionResult run_greedy(const ComputationGraph& g, const HardwareConfig& hw, Metric metric);
PartitionResult run_dp(const ComputationGraph& g, const HardwareConfig& hw, Metric metric);

enum class CapacitySampler { Random, Grid };

const char* to_string(CapacitySampler s);
CapacitySampler capacity_sampler_from_string(const std::string& s);

struct TwoStepParams {
  CapacitySampler sampler = CapacitySampler::Random;
  std::size_t candidates = 10;
  std::size_t grid_stride = 4;  // grid steps between visited candidates
  GAParams inner;               // budget here is per capacity candidate
  std::uint64_t seed = 1;
};

struct TwoStepResult {
  SearchResult search;  // objective and trace in co-design units
  std::vector<HwChoice> visited;
};

// Capacity candidates in visiting order.
std::vector<HwChoice> two_step_candidates(const HwSpace& space, const TwoStepParams& params);

TwoStepResult run_two_step(const ComputationGraph& g, const HwSpace& space, const TwoStepParams& params,
                           Metric metric, const ExecContext& ctx = {});

}  // namespace memcoex
