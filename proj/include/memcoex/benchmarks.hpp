// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <string>

#include "memcoex/graph.hpp"

namespace memcoex {

enum class BenchmarkFamily { PlainChain, Diamond, InceptionBlock, ResidualBlock, RandWire };

BenchmarkFamily benchmark_family_from_string(const std::string& s);
const char* to_string(BenchmarkFamily f);

struct BenchmarkParams {
  int depth = 4;        // plain_chain: conv count; residual_block: block count
  int nodes = 20;       // randwire: compute node count
  std::uint64_t seed = 1;
  int channels = 32;
  int spatial = 28;
  int ring_degree = 4;  // randwire small-world neighbours (even)
  double rewire = 0.75;
  int pool_every = 0;   // plain_chain: stride-2 pooling after every k convs, 0 = never
};

// Every family starts with an input node of id 0; compute nodes get ids 1..n.
ComputationGraph generate_benchmark(BenchmarkFamily family, const BenchmarkParams& params);

}  // namespace memcoex
