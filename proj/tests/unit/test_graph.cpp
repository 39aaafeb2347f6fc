// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include "memcoex/graph.hpp"
#include "memcoex/io.hpp"
#include "support/fixtures.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

LayerDescriptor layer(int id, LayerKind kind, std::int64_t ch, std::int64_t hw, std::int64_t k = 1,
                      std::int64_t in_ch = -1) {
  LayerDescriptor d;
  d.id = id;
  d.kind = kind;
  d.kernel = {k, k};
  d.in_channels = in_ch < 0 ? ch : in_ch;
  d.out_channels = ch;
  d.out = {hw, hw};
  d.weight_bytes = kind == LayerKind::Conv ? k * k * d.in_channels * ch : 0;
  return d;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("graph construction rejects malformed input") {
  const auto in = layer(0, LayerKind::Input, 4, 8);
  const auto a = layer(1, LayerKind::Conv, 4, 8);
  const auto b = layer(2, LayerKind::Conv, 4, 8);
  CHECK(kind_of([&] { ComputationGraph({in, a, b}, {{0, 1}, {1, 2}, {2, 1}}); }) == ErrorKind::Cycle);
  CHECK(kind_of([&] { ComputationGraph({in, a}, {{0, 1}, {1, 7}}); }) == ErrorKind::DanglingEdge);
  CHECK(kind_of([&] { ComputationGraph({in, a, layer(1, LayerKind::Conv, 4, 8)}, {{0, 1}}); }) ==
        ErrorKind::InvalidGraph);
  // 3x3 valid conv on 8x8 yields 6x6; "same" yields 8x8; 4x4 fits neither.
  auto c = layer(1, LayerKind::Conv, 4, 4, 3);
  CHECK(kind_of([&] { ComputationGraph({in, c}, {{0, 1}}); }) == ErrorKind::DimensionMismatch);
  auto wrong_ch = layer(1, LayerKind::Conv, 4, 8, 1, 5);
  CHECK(kind_of([&] { ComputationGraph({in, wrong_ch}, {{0, 1}}); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { graph_from_json(json::parse(R"({"nodes":[{"id":0}],"edges":[]})")); }) == ErrorKind::Parse);
}

TEST_CASE("cycle error names the nodes on the cycle") {
  const auto in = layer(0, LayerKind::Input, 4, 8);
  try {
    ComputationGraph({in, layer(1, LayerKind::Conv, 4, 8), layer(2, LayerKind::Conv, 4, 8)},
                     {{0, 1}, {1, 2}, {2, 1}});
    FAIL("expected a cycle error");
  } catch (const Error& e) {
    auto ids = e.nodes();
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<int>{1, 2});
  }
}

TEST_CASE("topological order breaks ties by smallest id") {
  const auto g = load_model_file("fig5.json");
  std::vector<int> ids;
  for (NodeIndex v : g.topo_order()) ids.push_back(g.id(v));
  CHECK(ids == std::vector<int>{-2, -1, 0, 1, 2, 3});
  CHECK(g.depth(g.index_of(3)) == 2);
}

TEST_CASE("partition validation reports each violation kind") {
  const auto g = diamond();  // 0 -> {1, 2} -> 3
  CHECK(validate_partition(g, PartitionScheme::whole(g)).ok());
  CHECK(validate_partition(g, PartitionScheme::singletons(g)).ok());

  const auto disconnected = validate_partition(g, PartitionScheme({0, 1, 1, 2}));
  REQUIRE_FALSE(disconnected.ok());
  CHECK(disconnected.violations.front().kind == ViolationKind::Disconnected);

  // {1} runs after {0, 2, 3} although 1 feeds 3.
  const auto order = validate_partition(g, PartitionScheme({0, 1, 0, 0}));
  REQUIRE_FALSE(order.ok());
  bool precedence = false;
  for (const auto& v : order.violations) precedence = precedence || v.kind == ViolationKind::Precedence;
  CHECK(precedence);

  const auto coverage = validate_partition(g, PartitionScheme({0, 0, 0}));
  REQUIRE_FALSE(coverage.ok());
  CHECK(coverage.violations.front().kind == ViolationKind::Coverage);
}

TEST_CASE("bundled ResNet50 matches the independent tensor counts") {
  // Values printed by tests/oracles/resnet50_oracle.py.
  const auto g = load_model_file("resnet50.json");
  CHECK(g.size() == 73);
  CHECK(g.total_weight_bytes() == 25502912);
  std::int64_t conv = 0;
  for (const auto& d : g.nodes())
    if (d.kind == LayerKind::Conv) conv += d.macs();
  CHECK(conv == 4089184256);
  CHECK(g.total_macs() == 4096610304);
}

TEST_CASE("graph and partition JSON round-trip") {
  const auto g = load_model_file("fig5.json");
  const auto back = graph_from_json(graph_to_json(g));
  REQUIRE(back.size() == g.size());
  CHECK(back.edges() == g.edges());
  for (NodeIndex i = 0; i < g.size(); ++i) {
    CHECK(back.node(i).id == g.node(i).id);
    CHECK(back.node(i).kernel == g.node(i).kernel);
    CHECK(back.node(i).stride == g.node(i).stride);
    CHECK(back.node(i).out == g.node(i).out);
    CHECK(back.node(i).weight_bytes == g.node(i).weight_bytes);
  }
  const PartitionScheme p({0, 1, 0, 1, 1, 1});
  CHECK(partition_from_json(g, partition_to_json(g, p)) == p);
}
