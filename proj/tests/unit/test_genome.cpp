// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include "memcoex/genome.hpp"
#include "support/fixtures.hpp"
#include "support/random_dag.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

bool on_grid(const HwSpace& s, const HwChoice& c) {
  return c.global < s.global.size() && c.weight < s.weight.size() && c.shared < s.shared.size();
}

CrossoverChoices scripted(std::vector<bool> moms, bool merge) {
  auto queue = std::make_shared<std::vector<bool>>(std::move(moms));
  auto next = std::make_shared<std::size_t>(0);
  CrossoverChoices c;
  c.take_mom = [queue, next](NodeIndex) { return (*queue)[(*next)++]; };
  c.merge_on_conflict = [merge] { return merge; };
  c.pick = [](std::size_t) { return std::size_t{0}; };
  return c;
}

}  // namespace

TEST_CASE("repair turns any labelling into a valid partition") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto g = random_dag(seed, {.nodes = 9});
    Rng rng(seed);
    std::vector<long long> labels(g.size());
    for (auto& l : labels) l = static_cast<long long>(rng() % 4);
    const auto p = repair_labels(g, labels);
    CHECK(validate_partition(g, p).ok());
    CHECK(p == canonicalize(p));
    // Nodes that shared nothing never end up together.
    for (NodeIndex a = 0; a < g.size(); ++a)
      for (NodeIndex b = 0; b < g.size(); ++b)
        if (p.of(a) == p.of(b)) CHECK(labels[a] == labels[b]);
  }
}

TEST_CASE("crossover of identical parents reproduces the parent") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto g = random_dag(seed);
    Rng rng(seed);
    const auto p = canonicalize(random_partition(g, rng));
    for (bool merge : {false, true}) {
      CrossoverChoices c;
      c.take_mom = [&](NodeIndex) { return (rng() & 1) != 0; };
      c.merge_on_conflict = [merge] { return merge; };
      c.pick = [&](std::size_t k) { return static_cast<std::size_t>(rng() % k); };
      CHECK(crossover_partition(g, p, p, c) == p);
    }
  }
}

TEST_CASE("six-layer crossover yields exactly the two documented children") {
  const auto g = conv_chain(5);  // layers 1..6 are ids 0..5
  const PartitionScheme mom({0, 0, 0, 1, 1, 1});
  const PartitionScheme dad({0, 0, 1, 1, 2, 2});
  // Layers 1 and 3 reproduce Dad's {1,2} and {3,4}; layer 5 takes Mom's {4,5,6}.
  const auto child1 = crossover_partition(g, mom, dad, scripted({false, false, true}, false));
  const auto child2 = crossover_partition(g, mom, dad, scripted({false, false, true}, true));
  CHECK(child1 == PartitionScheme({0, 0, 1, 1, 2, 2}));
  CHECK(child2 == PartitionScheme({0, 0, 1, 1, 1, 1}));
}

TEST_CASE("random crossovers stay valid") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto g = random_dag(seed, {.nodes = 9});
    Rng rng(seed);
    const auto mom = random_partition(g, rng);
    const auto dad = random_partition(g, rng);
    GAParams params;
    HwSpace space;
    const auto child = crossover(g, space, SearchMode::PartitionOnly, {mom, {}, 0}, {dad, {}, 0}, params, rng);
    CHECK(validate_partition(g, child.partition).ok());
  }
}

TEST_CASE("capacity averaging rounds exact halves up") {
  const CapacityGrid grid{128 * kKiB, 2048 * kKiB, 64 * kKiB};
  // 512KB and 576KB average to 544KB, halfway between two candidates.
  CHECK(grid.at(grid.nearest_to_mean(512 * kKiB, 576 * kKiB)) == 576 * kKiB);
  CHECK(grid.at(grid.nearest_to_mean(512 * kKiB, 512 * kKiB)) == 512 * kKiB);
  CHECK(grid.at(grid.nearest_to_mean(512 * kKiB, 640 * kKiB)) == 576 * kKiB);
  HwSpace space;
  const HwChoice a{6, 0, 0}, b{7, 2, 3};
  const auto c = average_hw_choice(space, a, b);
  CHECK(c.global == 7);
  CHECK(c.weight == 1);
}

TEST_CASE("merge, split and modify-node on a chain") {
  const auto g = conv_chain(3);
  const auto single = PartitionScheme::singletons(g);
  const auto merged = merge_subgraphs(g, single, 1, 2);
  REQUIRE(merged);
  CHECK(*merged == PartitionScheme({0, 1, 1, 2}));
  CHECK_FALSE(merge_subgraphs(g, single, 0, 2));

  Rng rng(3);
  GAParams params;
  HwSpace space;
  const Genome s{single, {}, 0};
  CHECK(mutate_with(g, space, SearchMode::PartitionOnly, s, MutationOp::Split, params, rng).partition == single);

  // A node leaves {1,2} and forms its own subgraph.
  const PartitionScheme pair({0, 1, 1, 2});
  CHECK(canonicalize(modify_node(g, pair, 2, std::nullopt)) == PartitionScheme({0, 1, 2, 3}));
  CHECK(canonicalize(modify_node(g, pair, 3, 1)) == PartitionScheme({0, 1, 1, 1}));
  CHECK(canonicalize(split_subgraph(g, PartitionScheme::whole(g), 0, 2)) == PartitionScheme({0, 0, 1, 1}));
}

TEST_CASE("mutations keep genomes valid and on the grid") {
  HwSpace space;
  GAParams params;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = random_dag(seed);
    Rng rng(seed);
    Genome x{random_partition(g, rng), random_hw_choice(space, rng), 0};
    for (int i = 0; i < 100; ++i) {
      x = mutate(g, space, SearchMode::Codesign, x, params, rng);
      CHECK(validate_partition(g, x.partition).ok());
      CHECK(on_grid(space, x.hw));
    }
    for (int i = 0; i < 50; ++i) {
      x = mutate_with(g, space, SearchMode::Codesign, x, MutationOp::Dse, params, rng);
      CHECK(on_grid(space, x.hw));
    }
  }
}

TEST_CASE("random initialization is valid and reproducible") {
  const auto g = diamond();
  HwSpace space;
  GAParams params;
  params.population = 1000;
  Rng a(42), b(42);
  const auto pa = init_population(g, space, SearchMode::Codesign, params, a);
  const auto pb = init_population(g, space, SearchMode::Codesign, params, b);
  REQUIRE(pa.size() == 1000);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(validate_partition(g, pa[i].partition).ok());
    CHECK(on_grid(space, pa[i].hw));
    CHECK(pa[i].partition == pb[i].partition);
    CHECK(pa[i].hw == pb[i].hw);
  }
}

TEST_CASE("seeded population keeps the seed; invalid seeds are rejected") {
  const auto g = conv_chain(3);
  HwSpace space;
  GAParams params;
  params.population = 1;
  Rng rng(1);
  const Genome seed{PartitionScheme({0, 0, 1, 1}), {}, 0};
  const auto pop = init_population(g, space, SearchMode::PartitionOnly, params, rng, {seed});
  REQUIRE(pop.size() == 1);
  CHECK(pop[0].partition == seed.partition);
  try {
    init_population(g, space, SearchMode::PartitionOnly, params, rng, {{PartitionScheme({0, 1, 0, 1}), {}, 0}});
    FAIL("expected InvalidPartition");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidPartition);
  }
}

TEST_CASE("fitness of a feasible genome is the evaluator objective") {
  const auto g = random_dag(5);
  HwSpace space;
  space.base = separate_hw(1 << 20, 1 << 20);
  GenomeEvaluator ev(g, space, SearchMode::PartitionOnly, Metric::Ema);
  Rng rng(5);
  Genome x{random_partition(g, rng), {}, 0};
  const auto before = x.partition;
  const double obj = ev.evaluate_and_repair(x);
  CHECK(x.partition == before);
  CHECK(obj == evaluate(g, before, space.base, Metric::Ema).objective_partition);
  CHECK(x.fitness() == -obj);
  CHECK(ev.samples() == 1);
}

TEST_CASE("oversized subgraph is split in place") {
  const auto g = conv_chain(4, 8, 16);
  HwSpace space;
  space.base = separate_hw(1 << 20, 1 << 20);
  const auto whole = profile_subgraph(g, all_nodes(g), space.base);
  space.base.global_buf_bytes = whole.act_bytes - 1;
  GenomeEvaluator ev(g, space, SearchMode::PartitionOnly, Metric::Ema);
  Genome x{PartitionScheme::whole(g), {}, 0};
  const double obj = ev.evaluate_and_repair(x);
  CHECK(std::isfinite(obj));
  CHECK(x.partition.num_subgraphs() == 2);
  CHECK(obj == evaluate(g, x.partition, space.base, Metric::Ema).objective_partition);
  CHECK(ev.samples() == 1);
}

TEST_CASE("a layer that fits no buffer scores infinity") {
  const auto g = conv_chain(2, 8, 16);  // 576 weight bytes per conv
  HwSpace space;
  space.base = separate_hw(1 << 20, 500);
  GenomeEvaluator ev(g, space, SearchMode::PartitionOnly, Metric::Ema);
  Genome x{PartitionScheme::whole(g), {}, 0};
  CHECK(ev.evaluate_and_repair(x) == kInfeasible);
  CHECK(validate_partition(g, x.partition).ok());
}
