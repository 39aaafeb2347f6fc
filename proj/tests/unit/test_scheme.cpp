// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include <algorithm>

#include "memcoex/scheme.hpp"
#include "support/fixtures.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

SubgraphSchedule fig5_schedule() {
  const static auto g = load_model_file("fig5.json");
  ScheduleOptions opt;
  opt.tile_overrides = {{0, {1, 2}}, {3, {1, 2}}};
  return derive_schedule(g, all_nodes(g), HardwareConfig{}, opt);
}

ComputationGraph strided_chain(int convs, int spatial) {
  std::vector<LayerDescriptor> nodes;
  std::vector<std::pair<int, int>> edges;
  LayerDescriptor in;
  in.id = 0;
  in.kind = LayerKind::Input;
  in.out = {spatial, spatial};
  nodes.push_back(in);
  for (int i = 1; i <= convs; ++i) {
    LayerDescriptor c;
    c.id = i;
    c.stride = {2, 2};
    spatial /= 2;
    c.out = {spatial, spatial};
    c.weight_bytes = 1;
    nodes.push_back(c);
    edges.emplace_back(i - 1, i);
  }
  return ComputationGraph(nodes, edges);
}

}  // namespace

TEST_CASE("worked two-input example reproduces offsets, tiles and update counts") {
  const auto s = fig5_schedule();
  const auto* a = s.find_id(-2);
  const auto* b = s.find_id(-1);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->delta.w == 4);
  CHECK(a->tile.w == 6);
  CHECK(b->delta.w == 2);
  CHECK(b->tile.w == 4);
  std::vector<std::int64_t> upd;
  for (int id : {-2, -1, 0, 1, 2, 3}) upd.push_back(s.find_id(id)->upd_num);
  CHECK(upd == std::vector<std::int64_t>{1, 2, 1, 2, 2, 2});
  for (const auto& n : s.nodes) CHECK(n.tile.h == 1);
}

TEST_CASE("update counts are minimal") {
  const auto s = fig5_schedule();
  std::int64_t g = 0;
  for (const auto& n : s.nodes) g = std::gcd(g, n.upd.w);
  CHECK(g == 1);
}

TEST_CASE("stage-1 tile is the smallest candidate reaching the utilization threshold") {
  // Exhaustive scan with the utilization written out from first principles.
  HardwareConfig hw;
  const std::int64_t peak = std::int64_t{hw.pe_rows} * hw.pe_cols * hw.macs_per_pe;
  for (std::int64_t ch : {1, 2, 4, 8, 16, 64}) {
    {
      const auto g = conv_chain(1, static_cast<int>(ch), 28);
      const auto& d = g.node(1);
      const auto r = stage1_output_tiles(g, make_view(g, {1}), hw);
      const Extent2 tile = r.tiles.at(1);
      std::optional<std::int64_t> expect;
      for (std::int64_t t = 1; t <= 28 && !expect; ++t) {
        const bool on_grid = t <= 2 || t % std::max(hw.pe_rows, hw.pe_cols) == 0 || t == 28;
        const double util = std::min(1.0, static_cast<double>(t * t * ch * 9 * ch) / static_cast<double>(peak));
        if (on_grid && util >= hw.util_threshold) expect = t;
      }
      if (expect) {
        CHECK_FALSE(r.fallback);
        CHECK(tile == Extent2{*expect, *expect});
      } else {
        CHECK(r.fallback);
        CHECK(tile == Extent2{1, 1});
      }
      CHECK(d.macs() == 28 * 28 * ch * 9 * ch);
    }
  }
}

TEST_CASE("lcm overflow names the node chain") {
  const auto g = strided_chain(3, 64);
  HardwareConfig hw;
  hw.lcm_cap = 4;
  ScheduleOptions opt;
  opt.uniform_tile = Extent2{1, 1};
  try {
    derive_schedule(g, all_nodes(g), hw, opt);
    FAIL("expected lcm overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LcmOverflow);
    CHECK(e.nodes().size() >= 2);
    CHECK(std::string(e.what()).find("chain") != std::string::npos);
  }
  hw.lcm_cap = 4096;
  const auto ok = derive_schedule(g, all_nodes(g), hw, opt);
  CHECK(ok.find_id(0)->delta.w == 8);
}

TEST_CASE("a path leaving and re-entering the subgraph is rejected") {
  const auto g = diamond();
  CHECK_THROWS_AS(make_view(g, {0, 1, 3}), Error);
  try {
    make_view(g, {0, 1, 3});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSchedulable);
  }
  CHECK_NOTHROW(make_view(g, {0, 1, 2, 3}));
}

TEST_CASE("singleton subgraph has a trivial schedule") {
  const auto g = conv_chain(2);
  const auto s = derive_schedule(g, std::vector<NodeIndex>{2}, HardwareConfig{});
  const auto& out = s.at(2);
  CHECK(out.upd_num == 1);
  CHECK(out.delta == out.tile);
  // The external producer is a source with a halo window.
  const auto* src = s.find_id(1);
  REQUIRE(src);
  CHECK(src->is_source);
  CHECK(src->tile.w == out.tile.w + 2);
}
