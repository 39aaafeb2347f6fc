// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <string>
#include <vector>

#include "memcoex/benchmarks.hpp"
#include "memcoex/graph.hpp"
#include "memcoex/hardware.hpp"
#include "memcoex/io.hpp"

#ifndef MEMCOEX_MODELS_DIR
#error "MEMCOEX_MODELS_DIR must point at the bundled models"
#endif

namespace memcoex::testing {

inline std::string model_path(const std::string& name) { return std::string(MEMCOEX_MODELS_DIR) + "/" + name; }

inline ComputationGraph load_model_file(const std::string& name) { return load_graph(model_path(name)); }

// Hardware block stored next to a fixture graph, over the defaults.
inline HardwareConfig fixture_hardware(const std::string& name) {
  HardwareConfig hw;
  const auto doc = read_json_file(model_path(name));
  if (doc.contains("hardware")) hardware_from_json(doc.at("hardware"), hw);
  return hw;
}

// Input followed by `convs` 3x3 stride-1 convolutions.
inline ComputationGraph conv_chain(int convs, int channels = 8, int spatial = 16) {
  BenchmarkParams p;
  p.depth = convs;
  p.channels = channels;
  p.spatial = spatial;
  return generate_benchmark(BenchmarkFamily::PlainChain, p);
}

inline ComputationGraph diamond(int channels = 8, int spatial = 16) {
  BenchmarkParams p;
  p.channels = channels;
  p.spatial = spatial;
  return generate_benchmark(BenchmarkFamily::Diamond, p);
}

inline HardwareConfig separate_hw(std::int64_t global, std::int64_t weight) {
  HardwareConfig hw;
  hw.mode = BufferMode::Separate;
  hw.global_buf_bytes = global;
  hw.weight_buf_bytes = weight;
  return hw;
}

inline std::vector<NodeIndex> all_nodes(const ComputationGraph& g) {
  std::vector<NodeIndex> v(g.size());
  for (NodeIndex i = 0; i < g.size(); ++i) v[i] = i;
  return v;
}

}  // namespace memcoex::testing
