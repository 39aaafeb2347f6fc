// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memcoex/benchmarks.hpp"
#include "memcoex/cost.hpp"
#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"
#include "memcoex/io.hpp"
#include "memcoex/optimizers.hpp"

namespace memcoex {

struct ModelSpec {
  std::string name;
  std::string path;  // graph JSON; empty when generated
  std::optional<BenchmarkFamily> family;
  BenchmarkParams params;
};

struct OptimizerConfig {
  std::vector<std::string> algorithms{"greedy", "dp", "sa", "ga", "enumeration"};
  GAParams ga;
  SAParams sa;
  EnumerationParams enumeration;
  TwoStepParams two_step;
};

struct ExperimentConfig {
  std::vector<ModelSpec> models;
  HwSpace space;
  Metric metric = Metric::Energy;
  SearchMode mode = SearchMode::PartitionOnly;
  OptimizerConfig optimizer;
  std::vector<double> alphas{0.0005, 0.001, 0.002, 0.004};
  std::vector<int> cores{1, 2, 4};
  std::vector<int> batches{1, 2, 4, 8};
  std::string output_dir = "out";
};

// Relative model paths resolve against `base_dir`. Throws Config.
ExperimentConfig config_from_json(const json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
// The output directory after applying the MEMCOEX_OUT_DIR override.
std::string resolve_output_dir(const ExperimentConfig& cfg);

ComputationGraph load_model(const ModelSpec& spec);

// Per-subgraph schedule table and region allocation as plain text.
std::string schedule_report(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw);

// One line per subgraph of an evaluated partition.
std::string cost_report_csv(const ComputationGraph& g, const PartitionScheme& p, const CostReport& r);

struct PartitionRun {
  std::string algorithm;
  std::string status;  // ok, infeasible, timeout
  PartitionScheme partition;
  CostReport report;
  std::int64_t samples = 0;
  std::vector<TracePoint> trace;
};

// Runs one partition algorithm at fixed hardware.
PartitionRun run_partitioner(const ComputationGraph& g, const std::string& algorithm, const HardwareConfig& hw,
                             Metric metric, const OptimizerConfig& opt);

struct CompareRow {
  std::string model;
  PartitionRun run;
  double norm_objective = 0;  // relative to greedy
  double norm_avg_bw = 0;
  double norm_peak_bw = 0;
};

std::vector<CompareRow> compare_partitioners(const ExperimentConfig& cfg);
std::string compare_csv(const std::vector<CompareRow>& rows);

struct CoexploreRow {
  std::string model;
  std::string method;  // Fixed-HW(S), Fixed-HW(M), Fixed-HW(L), RS+GA, GS+GA, SA, Cocco
  HardwareConfig hw;
  PartitionScheme partition;
  double partition_objective = kInfeasible;
  double objective = kInfeasible;  // BUF_SIZE + alpha * partition_objective
  std::int64_t samples = 0;
  std::vector<TracePoint> trace;
};

// Fixed-HW presets (small, medium, large) for the configured buffer mode.
std::vector<std::pair<std::string, HardwareConfig>> fixed_presets(const HwSpace& space);

std::vector<CoexploreRow> coexplore(const ExperimentConfig& cfg);
std::string coexplore_csv(const std::vector<CoexploreRow>& rows);

struct AlphaRow {
  std::string model;
  double alpha = 0;
  HardwareConfig hw;
  double partition_objective = kInfeasible;
  double objective = kInfeasible;
  double normalized_metric = 0;  // relative to the first alpha
  bool capacity_drop = false;    // capacity fell although alpha grew
};

std::vector<AlphaRow> alpha_sweep(const ExperimentConfig& cfg);
std::string alpha_csv(const std::vector<AlphaRow>& rows);

struct MulticoreRow {
  std::string model;
  int cores = 1;
  int batch = 1;
  HardwareConfig hw;  // per core
  double energy_pj = 0;
  double latency_cycles = 0;
  double objective = kInfeasible;
  bool size_rise = false;  // per-core size grew with more cores
};

std::vector<MulticoreRow> multicore(const ExperimentConfig& cfg);
std::string multicore_csv(const std::vector<MulticoreRow>& rows);

// Each command writes its CSVs and a gnuplot script under the output
// directory and returns the written paths.
std::vector<std::string> write_compare(const ExperimentConfig& cfg, const std::vector<CompareRow>& rows);
std::vector<std::string> write_coexplore(const ExperimentConfig& cfg, const std::vector<CoexploreRow>& rows);
std::vector<std::string> write_alpha(const ExperimentConfig& cfg, const std::vector<AlphaRow>& rows);
std::vector<std::string> write_multicore(const ExperimentConfig& cfg, const std::vector<MulticoreRow>& rows);

}  // namespace memcoex
