// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include "memcoex/optimizers.hpp"
#include "support/brute_force.hpp"
#include "support/fixtures.hpp"
#include "support/random_dag.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

// Tight buffers: some fusions fit, the whole graph usually does not.
HardwareConfig tight(const ComputationGraph& g) {
  std::int64_t max_w = 0;
  for (const auto& d : g.nodes()) max_w = std::max(max_w, d.weight_bytes);
  return separate_hw(6144, std::max(g.total_weight_bytes() * 3 / 5, 2 * max_w));
}

std::int64_t weight_bytes_of_group(const ComputationGraph& g, const std::vector<NodeIndex>& m) {
  std::int64_t s = 0;
  for (NodeIndex v : m) s += g.node(v).weight_bytes;
  return s;
}

bool monotone(const std::vector<TracePoint>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i].best > t[i - 1].best) return false;
  return true;
}

}  // namespace

TEST_CASE("enumeration matches brute force") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto g = random_dag(seed, {.nodes = 6});
    const auto hw = tight(g);
    const auto e = run_enumeration(g, hw, Metric::Ema);
    const auto b = brute_force(g, hw, Metric::Ema);
    REQUIRE(e.complete);
    CHECK(e.result.objective == b.objective);
    if (e.result.feasible) CHECK(evaluate(g, e.result.partition, hw, Metric::Ema).objective_partition == b.objective);
  }
  const auto chain = conv_chain(5, 16, 16);
  const auto hw = separate_hw(4096, 6000);
  CHECK(run_enumeration(chain, hw, Metric::Ema).result.objective == brute_force(chain, hw, Metric::Ema).objective);
}

TEST_CASE("huge buffer makes the whole graph optimal") {
  // A lone input node costs nothing, so splitting it off ties with the whole graph.
  const auto g = diamond();
  const auto hw = separate_hw(1 << 24, 1 << 24);
  const auto e = run_enumeration(g, hw, Metric::Ema);
  CHECK(e.result.objective == evaluate(g, PartitionScheme::whole(g), hw, Metric::Ema).objective_partition);
  const auto& p = e.result.partition;
  CHECK(p.of(1) == p.of(3));
  CHECK(p.of(2) == p.of(3));
}

TEST_CASE("DP equals enumeration on chains and never beats it") {
  for (int n = 2; n <= 7; ++n) {
    const auto g = conv_chain(n, 16, 16);
    const auto hw = separate_hw(4096, 6000);
    const auto e = run_enumeration(g, hw, Metric::Ema);
    CHECK(run_dp(g, hw, Metric::Ema).objective == e.result.objective);
  }
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto g = random_dag(seed);
    const auto hw = tight(g);
    const auto e = run_enumeration(g, hw, Metric::Ema).result.objective;
    CHECK(run_dp(g, hw, Metric::Ema).objective >= e);
    CHECK(run_greedy(g, hw, Metric::Ema).objective >= e);
  }
}

TEST_CASE("witness graphs separate the baselines from the optimum") {
  const auto gg = load_model_file("witness_greedy.json");
  const auto hg = fixture_hardware("witness_greedy.json");
  CHECK(run_enumeration(gg, hg, Metric::Ema).result.objective == 17920);
  CHECK(run_greedy(gg, hg, Metric::Ema).objective == 22016);
  const auto gd = load_model_file("witness_dp.json");
  const auto hd = fixture_hardware("witness_dp.json");
  CHECK(run_enumeration(gd, hd, Metric::Ema).result.objective == 19072);
  CHECK(run_dp(gd, hd, Metric::Ema).objective == 35456);
}

TEST_CASE("greedy fuses profitable pairs and stops at infeasible ones") {
  const auto g = conv_chain(2, 8, 16);
  const auto fused = run_greedy(g, separate_hw(1 << 20, 1 << 20), Metric::Ema).partition;
  CHECK(fused.of(1) == fused.of(2));
  // Nothing fits with anything else: a pair never satisfies the weight buffer.
  const auto c = conv_chain(3, 8, 16);
  const auto r = run_greedy(c, separate_hw(1 << 20, 1152), Metric::Ema);
  for (const auto& grp : r.partition.groups()) CHECK(weight_bytes_of_group(c, grp) <= 576);
  const auto single = run_dp(conv_chain(1), separate_hw(1 << 20, 1 << 20), Metric::Ema);
  CHECK(single.feasible);
}

TEST_CASE("enumeration reports a timeout on a large random wiring") {
  BenchmarkParams p;
  p.nodes = 40;
  p.spatial = 14;
  const auto g = generate_benchmark(BenchmarkFamily::RandWire, p);
  EnumerationParams ep;
  ep.max_states = 200000;
  const auto r = run_enumeration(g, separate_hw(1 << 20, 1 << 20), Metric::Ema, ep);
  CHECK_FALSE(r.complete);
}

TEST_CASE("GA finds the diamond optimum and respects seeds") {
  const auto g = diamond(16, 16);
  HwSpace space;
  space.base = separate_hw(2048, 4096);
  const auto opt = run_enumeration(g, space.base, Metric::Ema).result.objective;
  GAParams params;
  params.population = 50;
  params.budget = 5000;
  const auto r = run_ga(g, space, params, Metric::Ema, SearchMode::PartitionOnly);
  CHECK(r.best.objective == opt);
  CHECK(monotone(r.trace));
  CHECK(r.samples == 5000);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto h = random_dag(seed);
    space.base = tight(h);
    const auto greedy = run_greedy(h, space.base, Metric::Ema);
    params.budget = 300;
    params.seed = seed;
    const auto s = run_ga(h, space, params, Metric::Ema, SearchMode::PartitionOnly, {{greedy.partition, {}, 0}});
    CHECK(s.best.objective <= greedy.objective);
  }
}

TEST_CASE("GA populations stay valid and on the grid; runs are deterministic") {
  const auto g = random_dag(11);
  HwSpace space;
  space.base = tight(g);
  GAParams params;
  params.population = 30;
  params.budget = 600;
  int bad = 0;
  auto obs = [&](int, const std::vector<Genome>& pop) {
    for (const auto& x : pop)
      if (!validate_partition(g, x.partition).ok() || x.hw.global >= space.global.size() ||
          x.hw.weight >= space.weight.size())
        ++bad;
  };
  const auto a = run_ga(g, space, params, Metric::Energy, SearchMode::Codesign, {}, {}, obs);
  const auto b = run_ga(g, space, params, Metric::Energy, SearchMode::Codesign);
  CHECK(bad == 0);
  CHECK(a.best.partition == b.best.partition);
  CHECK(a.best.objective == b.best.objective);
  CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
  params.seed = 2;
  const auto c = run_ga(g, space, params, Metric::Energy, SearchMode::Codesign);
  CHECK(monotone(c.trace));
}

TEST_CASE("SA hill-climbs at zero temperature and reaches the diamond optimum") {
  const auto g = diamond(16, 16);
  HwSpace space;
  space.base = separate_hw(2048, 4096);
  const auto opt = run_enumeration(g, space.base, Metric::Ema).result.objective;
  SAParams sp;
  sp.budget = 5000;
  bool found = false;
  for (std::uint64_t s = 1; s <= 3 && !found; ++s) {
    sp.seed = s;
    found = run_sa(g, space, sp, Metric::Ema, SearchMode::PartitionOnly).best.objective == opt;
  }
  CHECK(found);

  const auto h = random_dag(3);
  space.base = tight(h);
  sp.initial_temperature = 0.0;
  sp.budget = 400;
  const auto r = run_sa(h, space, sp, Metric::Ema, SearchMode::PartitionOnly);
  CHECK(r.trace.size() == 400);
  CHECK(monotone(r.trace));
}

TEST_CASE("two-step search") {
  const auto g = random_dag(4);
  HwSpace space;
  space.base = tight(g);
  TwoStepParams tp;
  tp.sampler = CapacitySampler::Grid;
  tp.candidates = 1;
  tp.inner.population = 20;
  tp.inner.budget = 200;
  const auto one = run_two_step(g, space, tp, Metric::Ema);
  REQUIRE(one.visited.size() == 1);
  // The only grid candidate is the largest capacity.
  CHECK(one.visited[0].global == space.global.size() - 1);
  CHECK(one.visited[0].weight == space.weight.size() - 1);
  HwSpace fixed = space;
  fixed.base = apply_choice(space, one.visited[0]);
  const auto ga = run_ga(g, fixed, tp.inner, Metric::Ema, SearchMode::PartitionOnly);
  CHECK(one.search.best.objective ==
        codesign_objective(fixed.base.buf_size(), fixed.base.alpha, ga.best.objective));
  CHECK(monotone(one.search.trace));

  tp.sampler = CapacitySampler::Random;
  tp.candidates = 5;
  tp.seed = 9;
  CHECK(two_step_candidates(space, tp) == two_step_candidates(space, tp));
  tp.seed = 10;
  const auto rs = run_two_step(g, space, tp, Metric::Ema);
  CHECK(rs.search.samples == 5 * 200);
  CHECK(monotone(rs.search.trace));
}

TEST_CASE("optimal cost does not increase with a larger subgraph bound") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = random_dag(seed);
    const auto hw = tight(g);
    double prev = kInfeasible;
    for (std::size_t k = 1; k <= g.size(); ++k) {
      EnumerationParams ep;
      ep.max_subgraph_nodes = k;
      const double obj = run_enumeration(g, hw, Metric::Ema, ep).result.objective;
      CHECK(obj <= prev);
      prev = obj;
    }
  }
}
