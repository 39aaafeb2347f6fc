// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "memcoex/optimizers.hpp"

namespace memcoex {

namespace {

using Mask = std::uint64_t;

Mask bit(NodeIndex v) { return Mask{1} << v; }

std::vector<NodeIndex> nodes_of(Mask m) {
  std::vector<NodeIndex> out;
  while (m) {
    out.push_back(static_cast<NodeIndex>(std::countr_zero(m)));
    m &= m - 1;
  }
  return out;
}

PartitionResult finish(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw, Metric metric) {
  PartitionResult r;
  r.partition = canonicalize(p);
  ProfileCache cache(g, hw);
  const auto score = score_groups(cache, r.partition.groups(), hw, metric);
  r.feasible = score.feasible;
  r.objective = score.objective;
  return r;
}

struct StateKey {
  Mask done;
  std::int64_t slack;
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    return std::hash<Mask>()(k.done) ^ (std::hash<std::int64_t>()(k.slack) * 0x9e3779b97f4a7c15ULL);
  }
};

struct Timeout {};

// Memoized search over (finished nodes, weight room left by the previous
// subgraph). Subgraph costs do not depend on their neighbours; only the
// prefetch constraint couples consecutive subgraphs.
class Enumerator {
 public:
  Enumerator(const ComputationGraph& g, const HardwareConfig& hw, Metric metric, const EnumerationParams& params)
      : g_(g), hw_(hw), metric_(metric), params_(params), cache_(g, hw), start_(std::chrono::steady_clock::now()) {
    const std::size_t n = g.size();
    adj_.assign(n, 0);
    preds_.assign(n, 0);
    for (const auto& [u, v] : g.edges()) {
      adj_[u] |= bit(v);
      adj_[v] |= bit(u);
      preds_[v] |= bit(u);
    }
    all_ = n == 64 ? ~Mask{0} : (bit(n) - 1);
  }

  double solve(Mask done, std::int64_t slack) {
    if (done == all_) return 0.0;
    const StateKey key{done, slack};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.value;
    tick();
    Entry best;
    const Mask rest = all_ & ~done;
    for_each_candidate(done, rest, slack, [&](Mask s, const Candidate& c) {
      const double tail = solve(done | s, c.next_slack);
      const double total = c.cost + tail;
      if (total < best.value) {
        best.value = total;
        best.choice = s;
      }
    });
    memo_.emplace(key, best);
    return best.value;
  }

  PartitionScheme reconstruct(std::int64_t slack) const {
    std::vector<int> labels(g_.size(), -1);
    Mask done = 0;
    int label = 0;
    while (done != all_) {
      const auto& e = memo_.at(StateKey{done, slack});
      for (NodeIndex v : nodes_of(e.choice)) labels[v] = label;
      ++label;
      slack = candidates_.at(e.choice).next_slack;
      done |= e.choice;
    }
    return PartitionScheme(std::move(labels));
  }

  std::int64_t initial_slack() const {
    return hw_.mode == BufferMode::Separate ? hw_.weight_buf_bytes : hw_.shared_buf_bytes;
  }
  std::int64_t states() const { return states_; }

 private:
  struct Entry {
    double value = kInfeasible;
    Mask choice = 0;
  };
  struct Candidate {
    bool ok = false;
    std::int64_t weight = 0;
    double cost = 0;
    std::int64_t next_slack = 0;
  };

  void tick() {
    if (++states_ > params_.max_states) throw Timeout{};
    if ((states_ & 1023) == 0) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (secs > params_.time_limit_s) throw Timeout{};
    }
  }

  const Candidate& candidate(Mask s) {
    auto [it, inserted] = candidates_.try_emplace(s);
    if (!inserted) return it->second;
    Candidate& c = it->second;
    const SubgraphProfile& prof = cache_.get(nodes_of(s));
    c.weight = prof.weight_bytes;
    if (!subgraph_fits(prof, 0, hw_)) return c;
    c.ok = true;
    c.cost = cost_from_profile(prof, hw_, metric_).metric_value;
    c.next_slack = hw_.mode == BufferMode::Separate ? hw_.weight_buf_bytes - prof.weight_bytes
                                                    : hw_.shared_buf_bytes - prof.act_bytes - prof.weight_bytes;
    return c;
  }

  std::int64_t weight_of(Mask s) const {
    std::int64_t w = 0;
    for (NodeIndex v : nodes_of(s)) w += g_.node(v).weight_bytes;
    return w;
  }

  // Connected sets inside `rest`, each visited once (anchored at its lowest
  // index). Supersets of a set whose weights exceed the room are skipped.
  template <class Fn>
  void for_each_candidate(Mask done, Mask rest, std::int64_t slack, Fn&& fn) {
    for (Mask r = rest; r; r &= r - 1) {
      const NodeIndex anchor = static_cast<NodeIndex>(std::countr_zero(r));
      const Mask above = anchor + 1 >= 64 ? 0 : ~(bit(anchor + 1) - 1);
      extend(bit(anchor), adj_[anchor] & rest & above, bit(anchor) | adj_[anchor], rest & above, done, slack, fn);
    }
  }

  template <class Fn>
  void extend(Mask s, Mask ext, Mask seen, Mask allowed, Mask done, std::int64_t slack, Fn& fn) {
    tick();
    if (weight_of(s) > slack) return;
    const std::size_t size = static_cast<std::size_t>(std::popcount(s));
    if (params_.max_subgraph_nodes && size > params_.max_subgraph_nodes) return;
    bool ready = true;
    for (Mask m = s; m; m &= m - 1)
      if (preds_[static_cast<NodeIndex>(std::countr_zero(m))] & ~(done | s)) {
        ready = false;
        break;
      }
    if (ready) {
      const Candidate& c = candidate(s);
      if (c.ok) fn(s, c);
    }
    while (ext) {
      const NodeIndex w = static_cast<NodeIndex>(std::countr_zero(ext));
      ext &= ext - 1;
      const Mask fresh = adj_[w] & allowed & ~seen;
      extend(s | bit(w), ext | fresh, seen | adj_[w] | bit(w), allowed, done, slack, fn);
    }
  }

  const ComputationGraph& g_;
  HardwareConfig hw_;
  Metric metric_;
  EnumerationParams params_;
  ProfileCache cache_;
  std::chrono::steady_clock::time_point start_;
  std::vector<Mask> adj_, preds_;
  Mask all_ = 0;
  std::int64_t states_ = 0;
  std::unordered_map<StateKey, Entry, StateKeyHash> memo_;
  std::unordered_map<Mask, Candidate> candidates_;
};

}  // namespace

EnumerationResult run_enumeration(const ComputationGraph& g, const HardwareConfig& hw, Metric metric,
                                  const EnumerationParams& params) {
  EnumerationResult out;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  if (g.size() > 64) {
    out.seconds = elapsed();
    return out;
  }
  Enumerator e(g, hw, metric, params);
  try {
    const double best = e.solve(0, e.initial_slack());
    out.complete = true;
    if (std::isfinite(best)) {
      out.result = finish(g, e.reconstruct(e.initial_slack()), hw, metric);
    } else {
      out.result.partition = PartitionScheme::singletons(g);
    }
  } catch (const Timeout&) {
    out.complete = false;
  }
  out.states = e.states();
  out.seconds = elapsed();
  return out;
}

PartitionResult run_greedy(const ComputationGraph& g, const HardwareConfig& hw, Metric metric) {
  ProfileCache cache(g, hw);
  PartitionScheme p = PartitionScheme::singletons(g);
  auto score = [&](const PartitionScheme& q) { return score_groups(cache, q.groups(), hw, metric); };
  // The objective is a sum over subgraphs, so the benefit of fusing a and b
  // is their separate cost minus the fused cost.
  auto cost_of = [&](const std::vector<NodeIndex>& m) {
    return cost_from_profile(cache.get(m), hw, metric).metric_value;
  };
  PartitionScore current = score(p);
  for (;;) {
    const auto groups = p.groups();
    std::set<std::pair<int, int>> pairs;
    for (const auto& [u, v] : g.edges())
      if (p.of(u) != p.of(v)) pairs.emplace(std::min(p.of(u), p.of(v)), std::max(p.of(u), p.of(v)));
    double best_gain = 0;
    std::optional<PartitionScheme> best;
    PartitionScore best_score;
    for (const auto& [a, b] : pairs) {
      auto merged = merge_subgraphs(g, p, a, b);
      if (!merged) continue;
      std::vector<NodeIndex> fused = groups[static_cast<std::size_t>(a)];
      fused.insert(fused.end(), groups[static_cast<std::size_t>(b)].begin(), groups[static_cast<std::size_t>(b)].end());
      std::sort(fused.begin(), fused.end());
      if (!subgraph_fits(cache.get(fused), 0, hw)) continue;
      const PartitionScore s = score(*merged);
      if (!s.feasible && current.feasible) continue;
      const double gain = cost_of(groups[static_cast<std::size_t>(a)]) +
                          cost_of(groups[static_cast<std::size_t>(b)]) - cost_of(fused);
      if (gain > best_gain) {
        best_gain = gain;
        best = std::move(merged);
        best_score = s;
      }
    }
    if (!best) break;
    p = std::move(*best);
    current = best_score;
  }
  return finish(g, p, hw, metric);
}

PartitionResult run_dp(const ComputationGraph& g, const HardwareConfig& hw, Metric metric) {
  const std::size_t n = g.size();
  std::vector<NodeIndex> order(n);
  for (NodeIndex i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    if (g.depth(a) != g.depth(b)) return g.depth(a) < g.depth(b);
    return g.id(a) < g.id(b);
  });
  ProfileCache cache(g, hw);
  auto segment = [&](std::size_t i, std::size_t j) {
    std::vector<NodeIndex> m(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(j));
    std::sort(m.begin(), m.end());
    return m;
  };
  // seg_ok[i][j]: nodes order[i..j) form a connected subgraph that fits alone.
  std::vector<std::vector<const SubgraphProfile*>> prof(n + 1, std::vector<const SubgraphProfile*>(n + 1, nullptr));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j) {
      const auto m = segment(i, j);
      if (!is_connected(g, m)) continue;
      const SubgraphProfile& s = cache.get(m);
      if (subgraph_fits(s, 0, hw)) prof[i][j] = &s;
    }
  // best[j][i]: prefix order[0..j) whose last segment starts at i.
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(n + 1, kInfeasible));
  std::vector<std::vector<std::size_t>> from(n + 1, std::vector<std::size_t>(n + 1, 0));
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (!prof[i][j]) continue;
      const double own = cost_from_profile(*prof[i][j], hw, metric).metric_value;
      if (i == 0) {
        best[j][i] = own;
        continue;
      }
      for (std::size_t k = 0; k < i; ++k) {
        if (!prof[k][i] || !std::isfinite(best[i][k])) continue;
        if (!subgraph_fits(*prof[k][i], prof[i][j]->weight_bytes, hw)) continue;
        const double v = best[i][k] + own;
        if (v < best[j][i]) {
          best[j][i] = v;
          from[j][i] = k;
        }
      }
    }
  }
  std::size_t start = 0;
  double total = kInfeasible;
  for (std::size_t i = 0; i < n; ++i)
    if (best[n][i] < total) {
      total = best[n][i];
      start = i;
    }
  if (!std::isfinite(total)) {
    PartitionResult r;
    r.partition = PartitionScheme::singletons(g);
    return r;
  }
  std::vector<int> labels(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  for (std::size_t j = n, i = start;;) {
    segs.emplace_back(i, j);
    if (i == 0) break;
    const std::size_t k = from[j][i];
    j = i;
    i = k;
  }
  std::reverse(segs.begin(), segs.end());
  for (std::size_t s = 0; s < segs.size(); ++s)
    for (std::size_t q = segs[s].first; q < segs[s].second; ++q) labels[order[q]] = static_cast<int>(s);
  return finish(g, PartitionScheme(std::move(labels)), hw, metric);
}

}  // namespace memcoex
