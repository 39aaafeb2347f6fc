// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include <algorithm>

#include "memcoex/memory.hpp"
#include "support/fixtures.hpp"
#include "support/replay_oracle.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

// Input 8x8x2 feeding one 3x3 conv with a 2x2 output tile.
struct Toy {
  ComputationGraph g = conv_chain(1, 2, 8);
  HardwareConfig hw;
  SubgraphSchedule s;
  Toy() {
    hw.word_bytes = 1;
    ScheduleOptions opt;
    opt.uniform_tile = Extent2{2, 2};
    s = derive_schedule(g, all_nodes(g), hw, opt);
  }
};

}  // namespace

TEST_CASE("region layout matches a hand count") {
  Toy t;
  const auto regions = region_layout(t.s, t.g, t.hw);
  REQUIRE(regions.size() == 2);
  // Input window 4x4 (tile 2 plus kernel halo) over 2 channels.
  CHECK(regions[0].main_rows == 4);
  CHECK(regions[0].main_cols == 4);
  CHECK(regions[0].main_bytes == 32);
  // Two halo rows across the full 8-wide tensor are kept for the next row loop.
  CHECK(regions[0].side_rows == 2);
  CHECK(regions[0].side_bytes == 32);
  CHECK(regions[1].main_bytes == 8);
  CHECK(regions[1].side_bytes == 0);
  CHECK(activation_footprint(t.s, t.g, t.hw) == 72);
}

TEST_CASE("word alignment rounds each region up") {
  Toy t;
  t.hw.word_bytes = 16;
  const auto regions = region_layout(t.s, t.g, t.hw);
  CHECK(regions[0].main_bytes == 32);
  CHECK(regions[1].main_bytes == 16);
}

TEST_CASE("allocation respects capacity and the region limit") {
  Toy t;
  t.hw.global_buf_bytes = 72;
  auto a = allocate_regions(t.s, t.g, t.hw);
  CHECK(a.feasible);
  CHECK(a.entries_used == 4);
  CHECK(a.regions[1].main_start == a.regions[0].side_end);
  t.hw.global_buf_bytes = 71;
  a = allocate_regions(t.s, t.g, t.hw);
  CHECK_FALSE(a.feasible);
  CHECK(a.reason == AllocFailure::Capacity);
  t.hw.global_buf_bytes = 1 << 20;
  t.hw.region_limit = 1;
  a = allocate_regions(t.s, t.g, t.hw);
  CHECK_FALSE(a.feasible);
  CHECK(a.reason == AllocFailure::RegionLimit);
}

TEST_CASE("shared buffer holds weights and activations together") {
  Toy t;
  t.hw.mode = BufferMode::Shared;
  CHECK(weight_bytes_of(t.g, all_nodes(t.g)) == 36);
  t.hw.shared_buf_bytes = 72 + 36;
  CHECK(allocate_regions(t.s, t.g, t.hw).feasible);
  t.hw.shared_buf_bytes = 72 + 35;
  CHECK_FALSE(allocate_regions(t.s, t.g, t.hw).feasible);
  // Prefetched weights of the next subgraph shrink the room further.
  t.hw.shared_buf_bytes = 72 + 36;
  CHECK_FALSE(allocate_regions(t.s, t.g, t.hw, 37).feasible);
}

TEST_CASE("replay of the toy and the worked example passes the window oracle") {
  Toy t;
  const auto ev = replay_trace(t.s, t.g, t.hw, 3);
  const auto v = check_replay(t.s, t.g, ev);
  CHECK(v.events > 0);
  CHECK(v.ok());
  for (const auto& m : v.violations) MESSAGE(m);

  const auto g5 = load_model_file("fig5.json");
  ScheduleOptions opt;
  opt.tile_overrides = {{0, {1, 2}}, {3, {1, 2}}};
  const auto s5 = derive_schedule(g5, all_nodes(g5), HardwareConfig{}, opt);
  const auto v5 = check_replay(s5, g5, replay_trace(s5, g5, HardwareConfig{}, 1, 6));
  CHECK(v5.ok());
  for (const auto& m : v5.violations) MESSAGE(m);
}

TEST_CASE("trace JSON lines carry one event per line") {
  Toy t;
  const auto ev = replay_trace(t.s, t.g, t.hw, 1, 1);
  const auto text = trace_to_jsonl(ev);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == ev.size());
  CHECK(json::parse(text.substr(0, text.find('\n'))).contains("main_rows"));
}

TEST_CASE("the window oracle notices broken schedules") {
  Toy t;
  auto shrunk = t.s;
  shrunk.nodes[0].tile.w -= 1;  // input window loses its halo column
  CHECK_FALSE(check_replay(shrunk, t.g, replay_trace(shrunk, t.g, t.hw, 3)).ok());
  auto doubled = t.s;
  doubled.nodes[1].upd.w = 2;  // output outruns its producer
  CHECK_FALSE(check_replay(doubled, t.g, replay_trace(doubled, t.g, t.hw, 3)).ok());
}
