// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "memcoex/cost.hpp"
#include "memcoex/graph.hpp"

namespace memcoex::testing {

struct BruteForceResult {
  double objective = kInfeasible;
  PartitionScheme partition;
  std::size_t orderings = 0;
};

// Every set partition of the nodes, every topological order of its
// subgraphs, scored with score_groups. Exponential; meant for <= 8 nodes.
inline BruteForceResult brute_force(const ComputationGraph& g, const HardwareConfig& hw, Metric metric) {
  const std::size_t n = g.size();
  BruteForceResult best;
  ProfileCache cache(g, hw);
  std::vector<int> rgs(n, 0);
  std::function<void(std::size_t, int)> sets = [&](std::size_t i, int used) {
    if (i < n) {
      for (int l = 0; l <= used; ++l) {
        rgs[i] = l;
        sets(i + 1, std::max(used, l + 1));
      }
      return;
    }
    const int k = used;
    std::vector<std::vector<NodeIndex>> groups(static_cast<std::size_t>(k));
    for (NodeIndex v = 0; v < n; ++v) groups[static_cast<std::size_t>(rgs[v])].push_back(v);
    for (const auto& m : groups)
      if (!is_connected(g, m)) return;
    std::vector<std::vector<char>> before(static_cast<std::size_t>(k), std::vector<char>(static_cast<std::size_t>(k), 0));
    for (const auto& [u, v] : g.edges())
      if (rgs[u] != rgs[v]) before[static_cast<std::size_t>(rgs[u])][static_cast<std::size_t>(rgs[v])] = 1;
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    do {
      bool ok = true;
      for (int a = 0; a < k && ok; ++a)
        for (int b = a + 1; b < k && ok; ++b)
          if (before[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])]
                    [static_cast<std::size_t>(order[static_cast<std::size_t>(a)])])
            ok = false;
      if (!ok) continue;
      ++best.orderings;
      std::vector<std::vector<NodeIndex>> ordered;
      for (int x : order) ordered.push_back(groups[static_cast<std::size_t>(x)]);
      const auto score = score_groups(cache, ordered, hw, metric);
      if (score.feasible && score.objective < best.objective) {
        best.objective = score.objective;
        std::vector<int> labels(n);
        for (std::size_t pos = 0; pos < ordered.size(); ++pos)
          for (NodeIndex v : ordered[pos]) labels[v] = static_cast<int>(pos);
        best.partition = PartitionScheme(labels);
      }
    } while (std::next_permutation(order.begin(), order.end()));
  };
  sets(0, 0);
  return best;
}

}  // namespace memcoex::testing
