// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/genome.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <set>

#include <fmt/format.h>

namespace memcoex {

const char* to_string(SearchMode m) { return m == SearchMode::PartitionOnly ? "partition_only" : "codesign"; }

void GAParams::validate() const {
  auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (population < 2) throw Error(ErrorKind::Config, "population must be at least 2");
  if (budget <= 0) throw Error(ErrorKind::Config, "sample budget must be positive");
  if (!rate(crossover_rate) || !rate(mutation_rate) || !rate(merge_on_conflict))
    throw Error(ErrorKind::Config, "rates must lie in [0,1]");
  if (weights.modify_node < 0 || weights.split < 0 || weights.merge < 0 || weights.dse < 0)
    throw Error(ErrorKind::Config, "mutation weights must be non-negative");
  if (tournament < 1) throw Error(ErrorKind::Config, "tournament size must be positive");
  if (dse_sigma < 0) throw Error(ErrorKind::Config, "dse sigma must be non-negative");
}

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

using Key = std::pair<long long, std::size_t>;  // (label, smallest topological rank)

struct Components {
  std::vector<int> comp;  // per node
  std::vector<std::vector<NodeIndex>> members;
  std::vector<Key> key;
};

// Connected pieces of `nodes` under `label`, sorted members by rank.
void add_components(const ComputationGraph& g, const std::vector<NodeIndex>& nodes, long long label,
                    Components& c) {
  std::vector<char> in(g.size(), 0);
  for (NodeIndex v : nodes) in[v] = 1;
  std::vector<NodeIndex> ordered = nodes;
  std::sort(ordered.begin(), ordered.end(), [&](NodeIndex a, NodeIndex b) { return g.topo_rank(a) < g.topo_rank(b); });
  for (NodeIndex start : ordered) {
    if (!in[start]) continue;
    const int id = static_cast<int>(c.members.size());
    std::vector<NodeIndex> part;
    std::vector<NodeIndex> stack{start};
    in[start] = 0;
    while (!stack.empty()) {
      NodeIndex u = stack.back();
      stack.pop_back();
      part.push_back(u);
      c.comp[u] = id;
      auto visit = [&](NodeIndex w) {
        if (in[w]) {
          in[w] = 0;
          stack.push_back(w);
        }
      };
      for (NodeIndex w : g.succs(u)) visit(w);
      for (NodeIndex w : g.preds(u)) visit(w);
    }
    std::sort(part.begin(), part.end(), [&](NodeIndex a, NodeIndex b) { return g.topo_rank(a) < g.topo_rank(b); });
    c.key.emplace_back(label, g.topo_rank(part.front()));
    c.members.push_back(std::move(part));
  }
}

// Tarjan over the not-yet-ordered components; returns one strongly connected
// set with at least two members.
std::vector<int> find_cyclic_scc(const std::vector<std::vector<int>>& succ, const std::vector<char>& alive) {
  const int k = static_cast<int>(succ.size());
  std::vector<int> index(k, -1), low(k, 0), stack;
  std::vector<char> on(k, 0);
  int counter = 0;
  std::vector<int> found;
  std::function<void(int)> dfs = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = 1;
    for (int w : succ[v]) {
      if (!alive[w]) continue;
      if (index[w] < 0) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> scc;
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on[w] = 0;
        scc.push_back(w);
      } while (w != v);
      if (scc.size() >= 2 && found.empty()) found = std::move(scc);
    }
  };
  for (int v = 0; v < k && found.empty(); ++v)
    if (alive[v] && index[v] < 0) dfs(v);
  return found;
}

}  // namespace

PartitionScheme repair_labels(const ComputationGraph& g, const std::vector<long long>& labels) {
  const std::size_t n = g.size();
  Components c;
  c.comp.assign(n, -1);
  {
    std::vector<long long> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::vector<NodeIndex>> groups(distinct.size());
    for (NodeIndex v = 0; v < n; ++v)
      groups[static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), labels[v]) -
                                      distinct.begin())]
          .push_back(v);
    for (std::size_t i = 0; i < groups.size(); ++i) add_components(g, groups[i], distinct[i], c);
  }

  for (;;) {
    const std::size_t k = c.members.size();
    std::vector<std::vector<int>> succ(k);
    for (const auto& [u, v] : g.edges()) {
      const int cu = c.comp[u], cv = c.comp[v];
      if (cu != cv) succ[static_cast<std::size_t>(cu)].push_back(cv);
    }
    std::vector<int> indeg(k, 0);
    for (auto& s : succ) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      for (int w : s) ++indeg[static_cast<std::size_t>(w)];
    }
    auto cmp = [&](int a, int b) { return c.key[static_cast<std::size_t>(a)] > c.key[static_cast<std::size_t>(b)]; };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> ready(cmp);
    for (std::size_t i = 0; i < k; ++i)
      if (indeg[i] == 0) ready.push(static_cast<int>(i));
    std::vector<int> order;
    std::vector<char> alive(k, 1);
    while (!ready.empty()) {
      const int x = ready.top();
      ready.pop();
      order.push_back(x);
      alive[static_cast<std::size_t>(x)] = 0;
      for (int w : succ[static_cast<std::size_t>(x)])
        if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push(w);
    }
    if (order.size() == k) {
      std::vector<int> out(n);
      for (std::size_t pos = 0; pos < k; ++pos)
        for (NodeIndex v : c.members[static_cast<std::size_t>(order[pos])]) out[v] = static_cast<int>(pos);
      return PartitionScheme(std::move(out));
    }
    const auto scc = find_cyclic_scc(succ, alive);
    if (scc.empty()) throw Error(ErrorKind::Internal, "quotient graph cycle without a cyclic component");
    int victim = scc.front();
    for (int x : scc) {
      const auto& mx = c.members[static_cast<std::size_t>(x)];
      const auto& mv = c.members[static_cast<std::size_t>(victim)];
      if (mx.size() > mv.size() ||
          (mx.size() == mv.size() && c.key[static_cast<std::size_t>(x)] < c.key[static_cast<std::size_t>(victim)]))
        victim = x;
    }
    // Halve the victim along topological order; both halves stay behind the
    // same label so their relative order is preserved.
    const auto nodes = c.members[static_cast<std::size_t>(victim)];
    const long long label = c.key[static_cast<std::size_t>(victim)].first;
    const std::size_t half = nodes.size() / 2;
    Components next;
    next.comp.assign(n, -1);
    for (std::size_t i = 0; i < k; ++i)
      if (static_cast<int>(i) != victim) add_components(g, c.members[i], c.key[i].first, next);
    add_components(g, std::vector<NodeIndex>(nodes.begin(), nodes.begin() + static_cast<long>(half)), label, next);
    add_components(g, std::vector<NodeIndex>(nodes.begin() + static_cast<long>(half), nodes.end()), label, next);
    c = std::move(next);
  }
}

PartitionScheme repair_partition(const ComputationGraph& g, const PartitionScheme& p) {
  std::vector<long long> labels(p.assignment().begin(), p.assignment().end());
  return repair_labels(g, labels);
}

PartitionScheme random_partition(const ComputationGraph& g, Rng& rng) {
  std::vector<long long> labels(g.size(), -1);
  long long fresh = 0;
  for (NodeIndex v : g.topo_order()) {
    std::vector<long long> options;
    for (NodeIndex u : g.preds(v)) options.push_back(labels[u]);
    std::sort(options.begin(), options.end());
    options.erase(std::unique(options.begin(), options.end()), options.end());
    const std::size_t pick = below(rng, options.size() + 1);
    labels[v] = pick < options.size() ? options[pick] : fresh++;
  }
  return repair_labels(g, labels);
}

namespace {

std::vector<long long> doubled(const PartitionScheme& p) {
  std::vector<long long> out(p.size());
  for (NodeIndex i = 0; i < p.size(); ++i) out[i] = 2LL * p.of(i);
  return out;
}

std::vector<NodeIndex> members_by_rank(const ComputationGraph& g, const PartitionScheme& p, int label) {
  auto m = p.members(label);
  std::sort(m.begin(), m.end(), [&](NodeIndex a, NodeIndex b) { return g.topo_rank(a) < g.topo_rank(b); });
  return m;
}

}  // namespace

PartitionScheme modify_node(const ComputationGraph& g, const PartitionScheme& p, NodeIndex v,
                            std::optional<int> target) {
  auto labels = doubled(p);
  labels[v] = target ? 2LL * *target : 2LL * p.of(v) + 1;
  return repair_labels(g, labels);
}

PartitionScheme split_subgraph(const ComputationGraph& g, const PartitionScheme& p, int label, std::size_t cut) {
  const auto m = members_by_rank(g, p, label);
  if (cut == 0 || cut >= m.size()) return repair_partition(g, p);
  auto labels = doubled(p);
  for (std::size_t i = cut; i < m.size(); ++i) labels[m[i]] = 2LL * label + 1;
  return repair_labels(g, labels);
}

PartitionScheme split_balanced(const ComputationGraph& g, const PartitionScheme& p, int label) {
  const auto m = members_by_rank(g, p, label);
  if (m.size() < 2) return p;
  std::vector<std::int64_t> bytes;
  std::int64_t total = 0;
  for (NodeIndex v : m) {
    const auto& d = g.node(v);
    bytes.push_back(d.weight_bytes + (d.is_input() ? 0 : d.output_bytes()));
    total += bytes.back();
  }
  std::size_t best = 1;
  std::int64_t best_gap = -1, prefix = 0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    prefix += bytes[k - 1];
    const std::int64_t gap = std::abs(2 * prefix - total);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return split_subgraph(g, p, label, best);
}

std::optional<PartitionScheme> merge_subgraphs(const ComputationGraph& g, const PartitionScheme& p, int a, int b) {
  if (a == b) return std::nullopt;
  const PartitionScheme base = canonicalize(p);
  bool adjacent = false;
  for (const auto& [u, v] : g.edges()) {
    const int x = base.of(u), y = base.of(v);
    if ((x == a && y == b) || (x == b && y == a)) {
      adjacent = true;
      break;
    }
  }
  if (!adjacent) return std::nullopt;
  auto labels = doubled(base);
  const long long merged = 2LL * std::min(a, b);
  for (NodeIndex i = 0; i < base.size(); ++i)
    if (base.of(i) == a || base.of(i) == b) labels[i] = merged;
  PartitionScheme out = repair_labels(g, labels);
  // Any split performed by the repair means the merge closed a cycle.
  if (out.num_subgraphs() != base.num_subgraphs() - 1) return std::nullopt;
  return out;
}

PartitionScheme crossover_partition(const ComputationGraph& g, const PartitionScheme& mom,
                                    const PartitionScheme& dad, const CrossoverChoices& choices) {
  const std::size_t n = g.size();
  const long long stride = static_cast<long long>(n) + 1;
  std::vector<long long> child(n, -1);
  std::vector<char> decided(n, 0);
  long long created = 0;
  for (NodeIndex v : g.topo_order()) {
    if (decided[v]) continue;
    const bool from_mom = choices.take_mom(v);
    const PartitionScheme& parent = from_mom ? mom : dad;
    const auto group = parent.members(parent.of(v));
    std::vector<long long> taken;
    for (NodeIndex u : group)
      if (decided[u]) taken.push_back(child[u]);
    std::sort(taken.begin(), taken.end());
    taken.erase(std::unique(taken.begin(), taken.end()), taken.end());
    long long label;
    if (!taken.empty() && choices.merge_on_conflict()) {
      label = taken[choices.pick(taken.size())];
    } else {
      // Order new subgraphs by the parent's own order, then creation.
      label = (2LL * parent.of(v) + (from_mom ? 1 : 0)) * stride + created++;
    }
    for (NodeIndex u : group) {
      if (decided[u]) continue;
      decided[u] = 1;
      child[u] = label;
    }
  }
  return repair_labels(g, child);
}

HwChoice random_hw_choice(const HwSpace& space, Rng& rng) {
  HwChoice c;
  c.global = below(rng, space.global.size());
  c.weight = below(rng, space.weight.size());
  c.shared = below(rng, space.shared.size());
  return c;
}

HwChoice average_hw_choice(const HwSpace& space, const HwChoice& a, const HwChoice& b) {
  HwChoice c;
  c.global = space.global.nearest_to_mean(space.global.at(a.global), space.global.at(b.global));
  c.weight = space.weight.nearest_to_mean(space.weight.at(a.weight), space.weight.at(b.weight));
  c.shared = space.shared.nearest_to_mean(space.shared.at(a.shared), space.shared.at(b.shared));
  return c;
}

Genome crossover(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& mom,
                 const Genome& dad, const GAParams& params, Rng& rng) {
  CrossoverChoices choices;
  choices.take_mom = [&](NodeIndex) { return (rng() & 1) != 0; };
  choices.merge_on_conflict = [&] { return uniform01(rng) < params.merge_on_conflict; };
  choices.pick = [&](std::size_t k) { return below(rng, k); };
  Genome child;
  child.partition = crossover_partition(g, mom.partition, dad.partition, choices);
  child.hw = mode == SearchMode::Codesign ? average_hw_choice(space, mom.hw, dad.hw) : mom.hw;
  return child;
}

Genome mutate_with(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& genome,
                   MutationOp op, const GAParams& params, Rng& rng) {
  Genome out = genome;
  out.objective = kInfeasible;
  const PartitionScheme& p = genome.partition;
  switch (op) {
    case MutationOp::ModifyNode: {
      const NodeIndex v = below(rng, g.size());
      std::vector<int> targets;
      for (NodeIndex u : g.preds(v)) targets.push_back(p.of(u));
      for (NodeIndex u : g.succs(v)) targets.push_back(p.of(u));
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      std::erase(targets, p.of(v));
      const bool can_leave = p.members(p.of(v)).size() > 1;
      const std::size_t options = targets.size() + (can_leave ? 1 : 0);
      if (options == 0) break;
      const std::size_t pick = below(rng, options);
      out.partition = modify_node(g, p, v, pick < targets.size() ? std::optional<int>(targets[pick]) : std::nullopt);
      break;
    }
    case MutationOp::Split: {
      const auto groups = p.groups();
      std::vector<int> splittable;
      for (std::size_t i = 0; i < groups.size(); ++i)
        if (groups[i].size() >= 2) splittable.push_back(static_cast<int>(i));
      if (splittable.empty()) break;
      const int label = splittable[below(rng, splittable.size())];
      const std::size_t size = groups[static_cast<std::size_t>(label)].size();
      out.partition = split_subgraph(g, p, label, 1 + below(rng, size - 1));
      break;
    }
    case MutationOp::Merge: {
      std::set<std::pair<int, int>> pairs;
      for (const auto& [u, v] : g.edges())
        if (p.of(u) != p.of(v)) pairs.emplace(std::min(p.of(u), p.of(v)), std::max(p.of(u), p.of(v)));
      std::vector<std::pair<int, int>> order(pairs.begin(), pairs.end());
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
      for (const auto& [a, b] : order) {
        if (auto merged = merge_subgraphs(g, p, a, b)) {
          out.partition = std::move(*merged);
          break;
        }
      }
      break;
    }
    case MutationOp::Dse: {
      if (mode != SearchMode::Codesign) break;
      auto redraw = [&](std::size_t idx, const CapacityGrid& grid) {
        std::normal_distribution<double> dist(static_cast<double>(idx), params.dse_sigma);
        return grid.clamp_index(std::llround(dist(rng)));
      };
      if (space.base.mode == BufferMode::Separate) {
        out.hw.global = redraw(genome.hw.global, space.global);
        out.hw.weight = redraw(genome.hw.weight, space.weight);
      } else {
        out.hw.shared = redraw(genome.hw.shared, space.shared);
      }
      break;
    }
  }
  return out;
}

Genome mutate(const ComputationGraph& g, const HwSpace& space, SearchMode mode, const Genome& genome,
              const GAParams& params, Rng& rng) {
  const auto& w = params.weights;
  const double dse = mode == SearchMode::Codesign ? w.dse : 0.0;
  const double total = w.modify_node + w.split + w.merge + dse;
  if (total <= 0) return genome;
  double r = uniform01(rng) * total;
  MutationOp op = MutationOp::Dse;
  if ((r -= w.modify_node) < 0)
    op = MutationOp::ModifyNode;
  else if ((r -= w.split) < 0)
    op = MutationOp::Split;
  else if ((r -= w.merge) < 0)
    op = MutationOp::Merge;
  else if (dse <= 0)
    op = MutationOp::Merge;
  return mutate_with(g, space, mode, genome, op, params, rng);
}

std::vector<Genome> init_population(const ComputationGraph& g, const HwSpace& space, SearchMode mode,
                                    const GAParams& params, Rng& rng, const std::vector<Genome>& seeds) {
  std::vector<Genome> pop;
  pop.reserve(params.population);
  for (const auto& s : seeds) {
    if (pop.size() == params.population) break;
    const auto verdict = validate_partition(g, s.partition);
    if (!verdict.ok())
      throw Error(ErrorKind::InvalidPartition,
                  fmt::format("seed partition rejected: {}", verdict.violations.front().describe()));
    Genome x = s;
    x.partition = canonicalize(s.partition);
    pop.push_back(std::move(x));
  }
  while (pop.size() < params.population) {
    Genome x;
    x.partition = random_partition(g, rng);
    x.hw = mode == SearchMode::Codesign ? random_hw_choice(space, rng) : HwChoice{};
    pop.push_back(std::move(x));
  }
  return pop;
}

GenomeEvaluator::GenomeEvaluator(const ComputationGraph& g, const HwSpace& space, SearchMode mode, Metric metric,
                                 ExecContext ctx)
    : g_(g), space_(space), mode_(mode), metric_(metric), ctx_(ctx), cache_(g, space.base) {}

HardwareConfig GenomeEvaluator::hardware(const HwChoice& c) const {
  return mode_ == SearchMode::Codesign ? apply_choice(space_, c) : space_.base;
}

double GenomeEvaluator::evaluate_and_repair(Genome& genome) {
  ++samples_;
  const HardwareConfig hw = hardware(genome.hw);
  PartitionScheme p = canonicalize(genome.partition);
  for (;;) {
    const auto groups = p.groups();
    const PartitionScore score = score_groups(cache_, groups, hw, metric_, ctx_);
    if (score.feasible) {
      genome.partition = std::move(p);
      genome.objective = mode_ == SearchMode::Codesign ? codesign_objective(hw.buf_size(), hw.alpha, score.objective)
                                                       : score.objective;
      return genome.objective;
    }
    int target = score.offending;
    if (score.scope == ViolationScope::Pair) {
      const auto t = static_cast<std::size_t>(target);
      const bool first_ok = groups[t].size() >= 2;
      const bool second_ok = groups[t + 1].size() >= 2;
      if (second_ok && (!first_ok || cache_.get(groups[t + 1]).weight_bytes > cache_.get(groups[t]).weight_bytes))
        target += 1;
    }
    if (groups[static_cast<std::size_t>(target)].size() < 2) {
      genome.partition = std::move(p);
      genome.objective = kInfeasible;
      return genome.objective;
    }
    p = split_balanced(g_, p, target);
  }
}

}  // namespace memcoex
