// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace memcoex {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Cycle: return "cycle detected";
    case ErrorKind::DanglingEdge: return "dangling edge";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidGraph: return "invalid graph";
    case ErrorKind::InvalidParams: return "invalid parameters";
    case ErrorKind::InvalidPartition: return "invalid partition";
    case ErrorKind::NotSchedulable: return "subgraph not schedulable";
    case ErrorKind::LcmOverflow: return "lcm overflow";
    case ErrorKind::InconsistentRates: return "inconsistent rates";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Internal: return "internal error";
  }
  return "unknown";
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::DwConv: return "dwconv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Eltwise: return "eltwise";
    case LayerKind::Input: return "input";
    case LayerKind::OutputMarker: return "output";
  }
  return "conv";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv" || s == "fc") return LayerKind::Conv;
  if (s == "dwconv") return LayerKind::DwConv;
  if (s == "pool") return LayerKind::Pool;
  if (s == "eltwise" || s == "add") return LayerKind::Eltwise;
  if (s == "input") return LayerKind::Input;
  if (s == "output") return LayerKind::OutputMarker;
  throw Error(ErrorKind::Parse, fmt::format("unknown layer kind '{}'", s));
}

std::int64_t LayerDescriptor::macs() const { return tile_macs(out); }

std::int64_t LayerDescriptor::tile_macs(Extent2 tile) const {
  if (is_input()) return 0;
  return tile.area() * out_channels * kernel.area() * reduction_channels();
}

std::int64_t required_extent(const LayerDescriptor& v, std::int64_t x, Axis axis) {
  return v.kernel.along(axis) + (x - 1) * v.stride.along(axis);
}

namespace {

// Edges u->marker make u a model output; the marker itself disappears.
void fold_output_markers(std::vector<LayerDescriptor>& nodes, std::vector<std::pair<int, int>>& edges,
                         std::vector<int>& outputs) {
  std::set<int> markers;
  for (const auto& n : nodes)
    if (n.kind == LayerKind::OutputMarker) markers.insert(n.id);
  if (markers.empty()) return;
  std::vector<std::pair<int, int>> kept;
  for (const auto& e : edges) {
    if (markers.count(e.first))
      throw Error(ErrorKind::InvalidGraph, fmt::format("output marker {} has a consumer", e.first), {e.first});
    if (markers.count(e.second))
      outputs.push_back(e.first);
    else
      kept.push_back(e);
  }
  edges = std::move(kept);
  std::erase_if(nodes, [&](const LayerDescriptor& n) { return markers.count(n.id) != 0; });
  std::erase_if(outputs, [&](int id) { return markers.count(id) != 0; });
}

// Walks predecessor links from a node known to lie on a cycle.
std::vector<int> extract_cycle(const std::vector<LayerDescriptor>& nodes,
                               const std::vector<std::vector<NodeIndex>>& preds,
                               const std::vector<std::size_t>& indeg_left) {
  NodeIndex start = 0;
  while (indeg_left[start] == 0) ++start;
  std::vector<int> seen(nodes.size(), -1);
  NodeIndex cur = start;
  int step = 0;
  while (seen[cur] < 0) {
    seen[cur] = step++;
    for (NodeIndex p : preds[cur]) {
      if (indeg_left[p] != 0) {
        cur = p;
        break;
      }
    }
  }
  std::vector<int> cycle;
  const NodeIndex anchor = cur;
  do {
    cycle.push_back(nodes[cur].id);
    for (NodeIndex p : preds[cur]) {
      if (indeg_left[p] != 0) {
        cur = p;
        break;
      }
    }
  } while (cur != anchor && cycle.size() <= nodes.size());
  std::sort(cycle.begin(), cycle.end());
  return cycle;
}

}  // namespace

ComputationGraph::ComputationGraph(std::vector<LayerDescriptor> nodes, std::vector<std::pair<int, int>> edges,
                                   std::vector<int> inputs, std::vector<int> outputs) {
  fold_output_markers(nodes, edges, outputs);
  nodes_ = std::move(nodes);
  const std::size_t n = nodes_.size();
  for (NodeIndex i = 0; i < n; ++i) {
    auto& v = nodes_[i];
    if (!by_id_.emplace(v.id, i).second)
      throw Error(ErrorKind::InvalidGraph, fmt::format("duplicate node id {}", v.id), {v.id});
    if (v.kernel.h < 1 || v.kernel.w < 1 || v.stride.h < 1 || v.stride.w < 1 || v.out.h < 1 || v.out.w < 1 ||
        v.in_channels < 1 || v.out_channels < 1 || v.act_bytes_per_elem < 1 || v.weight_bytes < 0)
      throw Error(ErrorKind::InvalidGraph, fmt::format("node {} has non-positive dimensions", v.id), {v.id});
    if ((v.kind == LayerKind::Eltwise || v.kind == LayerKind::Input) &&
        (v.kernel != Extent2{1, 1} || v.stride != Extent2{1, 1}))
      throw Error(ErrorKind::InvalidGraph, fmt::format("node {} ({}) must have unit kernel and stride", v.id,
                                                       to_string(v.kind)), {v.id});
    if ((v.kind == LayerKind::Pool || v.kind == LayerKind::Eltwise || v.kind == LayerKind::Input) &&
        v.weight_bytes != 0)
      throw Error(ErrorKind::InvalidGraph, fmt::format("node {} ({}) cannot carry weights", v.id, to_string(v.kind)),
                  {v.id});
  }

  preds_.assign(n, {});
  succs_.assign(n, {});
  std::set<std::pair<NodeIndex, NodeIndex>> seen_edges;
  for (const auto& [u, v] : edges) {
    auto iu = by_id_.find(u);
    auto iv = by_id_.find(v);
    if (iu == by_id_.end() || iv == by_id_.end()) {
      const int missing = iu == by_id_.end() ? u : v;
      throw Error(ErrorKind::DanglingEdge, fmt::format("edge ({}, {}) references unknown node {}", u, v, missing),
                  {missing});
    }
    if (u == v) throw Error(ErrorKind::Cycle, fmt::format("self loop on node {}", u), {u});
    if (!seen_edges.emplace(iu->second, iv->second).second) continue;
    edges_.emplace_back(iu->second, iv->second);
    succs_[iu->second].push_back(iv->second);
    preds_[iv->second].push_back(iu->second);
  }
  auto by_node_id = [&](NodeIndex a, NodeIndex b) { return nodes_[a].id < nodes_[b].id; };
  for (NodeIndex i = 0; i < n; ++i) {
    std::sort(preds_[i].begin(), preds_[i].end(), by_node_id);
    std::sort(succs_[i].begin(), succs_[i].end(), by_node_id);
  }

  // Kahn with a min-id ready queue.
  std::vector<std::size_t> indeg(n);
  for (NodeIndex i = 0; i < n; ++i) indeg[i] = preds_[i].size();
  auto cmp = [&](NodeIndex a, NodeIndex b) { return nodes_[a].id > nodes_[b].id; };
  std::priority_queue<NodeIndex, std::vector<NodeIndex>, decltype(cmp)> ready(cmp);
  for (NodeIndex i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  while (!ready.empty()) {
    NodeIndex u = ready.top();
    ready.pop();
    topo_.push_back(u);
    for (NodeIndex v : succs_[u])
      if (--indeg[v] == 0) ready.push(v);
  }
  if (topo_.size() != n) {
    auto cycle = extract_cycle(nodes_, preds_, indeg);
    throw Error(ErrorKind::Cycle, fmt::format("cycle through nodes {{{}}}", fmt::join(cycle, ",")), cycle);
  }
  rank_.assign(n, 0);
  depth_.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) rank_[topo_[r]] = r;
  for (NodeIndex u : topo_)
    for (NodeIndex v : succs_[u]) depth_[v] = std::max(depth_[v], depth_[u] + 1);

  // Model inputs: declared ids or every input-kind node.
  if (inputs.empty()) {
    for (NodeIndex i = 0; i < n; ++i)
      if (nodes_[i].is_input()) inputs_.push_back(i);
  } else {
    for (int id : inputs) {
      auto it = by_id_.find(id);
      if (it == by_id_.end())
        throw Error(ErrorKind::DanglingEdge, fmt::format("model input {} does not exist", id), {id});
      inputs_.push_back(it->second);
    }
  }
  for (NodeIndex i : inputs_) {
    if (!nodes_[i].is_input() || !preds_[i].empty())
      throw Error(ErrorKind::InvalidGraph, fmt::format("model input {} must be an input node without producers",
                                                       nodes_[i].id), {nodes_[i].id});
  }
  for (NodeIndex i = 0; i < n; ++i) {
    if (nodes_[i].is_input() && !preds_[i].empty())
      throw Error(ErrorKind::InvalidGraph, fmt::format("input node {} has producers", nodes_[i].id), {nodes_[i].id});
    if (!nodes_[i].is_input() && preds_[i].empty())
      throw Error(ErrorKind::InvalidGraph, fmt::format("node {} is not reachable from a model input", nodes_[i].id),
                  {nodes_[i].id});
  }
  std::sort(inputs_.begin(), inputs_.end());
  inputs_.erase(std::unique(inputs_.begin(), inputs_.end()), inputs_.end());

  // Reachability from model inputs.
  std::vector<bool> reach(n, false);
  for (NodeIndex i : inputs_) reach[i] = true;
  for (NodeIndex u : topo_)
    if (reach[u])
      for (NodeIndex v : succs_[u]) reach[v] = true;
  for (NodeIndex i = 0; i < n; ++i)
    if (!reach[i])
      throw Error(ErrorKind::InvalidGraph, fmt::format("node {} is not reachable from a model input", nodes_[i].id),
                  {nodes_[i].id});

  is_output_.assign(n, false);
  if (outputs.empty()) {
    for (NodeIndex i = 0; i < n; ++i)
      if (succs_[i].empty() && !nodes_[i].is_input()) is_output_[i] = true;
  } else {
    for (int id : outputs) {
      auto it = by_id_.find(id);
      if (it == by_id_.end())
        throw Error(ErrorKind::DanglingEdge, fmt::format("model output {} does not exist", id), {id});
      is_output_[it->second] = true;
    }
  }
  for (NodeIndex i = 0; i < n; ++i)
    if (is_output_[i]) outputs_.push_back(i);

  validate_dims();
}

void ComputationGraph::validate_dims() const {
  for (NodeIndex v = 0; v < size(); ++v) {
    const auto& d = nodes_[v];
    if (d.is_input()) continue;
    std::int64_t sum_ch = 0;
    bool all_equal = true;
    for (NodeIndex u : preds_[v]) {
      const auto& s = nodes_[u];
      sum_ch += s.out_channels;
      all_equal = all_equal && s.out_channels == d.in_channels;
      for (Axis a : kAxes) {
        const std::int64_t in = s.out.along(a), f = d.kernel.along(a), st = d.stride.along(a);
        // Between a fully valid (no padding) window count and a "same" padded one.
        const std::int64_t lo = in >= f ? (in - f) / st + 1 : 1;
        const std::int64_t hi = ceil_div(in, st);
        const std::int64_t out = d.out.along(a);
        if (out < std::min(lo, hi) || out > std::max(lo, hi))
          throw Error(ErrorKind::DimensionMismatch,
                      fmt::format("node {} output {} along {} is inconsistent with producer {} extent {}", d.id, out,
                                  a == Axis::H ? "h" : "w", s.id, in),
                      {d.id, s.id});
      }
    }
    const bool channels_ok = d.in_channels == sum_ch || all_equal;
    if (!channels_ok)
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("node {} expects {} input channels, producers provide {}", d.id, d.in_channels, sum_ch),
                  {d.id});
    if ((d.kind == LayerKind::DwConv || d.kind == LayerKind::Pool || d.kind == LayerKind::Eltwise) &&
        d.in_channels != d.out_channels)
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("node {} ({}) must preserve channels", d.id, to_string(d.kind)), {d.id});
  }
}

NodeIndex ComputationGraph::index_of(int id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error(ErrorKind::InvalidGraph, fmt::format("unknown node id {}", id), {id});
  return it->second;
}

std::int64_t ComputationGraph::total_macs() const {
  std::int64_t s = 0;
  for (const auto& v : nodes_) s += v.macs();
  return s;
}

std::int64_t ComputationGraph::total_weight_bytes() const {
  std::int64_t s = 0;
  for (const auto& v : nodes_) s += v.weight_bytes;
  return s;
}

PartitionScheme PartitionScheme::singletons(const ComputationGraph& g) {
  std::vector<int> a(g.size());
  for (NodeIndex i = 0; i < g.size(); ++i) a[i] = static_cast<int>(g.topo_rank(i));
  return PartitionScheme(std::move(a));
}

int PartitionScheme::num_subgraphs() const {
  int m = -1;
  for (int l : assignment_) m = std::max(m, l);
  return m + 1;
}

std::vector<std::vector<NodeIndex>> PartitionScheme::groups() const {
  std::vector<std::vector<NodeIndex>> out(static_cast<std::size_t>(num_subgraphs()));
  for (NodeIndex i = 0; i < assignment_.size(); ++i) out[static_cast<std::size_t>(assignment_[i])].push_back(i);
  return out;
}

std::vector<NodeIndex> PartitionScheme::members(int label) const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < assignment_.size(); ++i)
    if (assignment_[i] == label) out.push_back(i);
  return out;
}

PartitionScheme canonicalize(const PartitionScheme& p) {
  std::vector<int> labels = p.assignment();
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<int> out(p.size());
  for (NodeIndex i = 0; i < p.size(); ++i)
    out[i] = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), p.of(i)) - labels.begin());
  return PartitionScheme(std::move(out));
}

std::string Violation::describe() const {
  switch (kind) {
    case ViolationKind::Coverage: return "partition does not cover the graph";
    case ViolationKind::Precedence:
      return fmt::format("precedence violated on edge ({}, {})", edge.first, edge.second);
    case ViolationKind::Disconnected:
      return fmt::format("subgraph {} is disconnected: {{{}}}", subgraph, fmt::join(nodes, ","));
  }
  return {};
}

bool is_connected(const ComputationGraph& g, const std::vector<NodeIndex>& members) {
  if (members.size() <= 1) return true;
  std::vector<char> in(g.size(), 0), seen(g.size(), 0);
  for (NodeIndex v : members) in[v] = 1;
  std::vector<NodeIndex> stack{members.front()};
  seen[members.front()] = 1;
  std::size_t count = 0;
  while (!stack.empty()) {
    NodeIndex u = stack.back();
    stack.pop_back();
    ++count;
    auto visit = [&](NodeIndex w) {
      if (in[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    };
    for (NodeIndex w : g.succs(u)) visit(w);
    for (NodeIndex w : g.preds(u)) visit(w);
  }
  return count == members.size();
}

PartitionVerdict validate_partition(const ComputationGraph& g, const PartitionScheme& p) {
  PartitionVerdict verdict;
  if (p.size() != g.size() ||
      std::any_of(p.assignment().begin(), p.assignment().end(), [](int l) { return l < 0; })) {
    Violation x;
    x.kind = ViolationKind::Coverage;
    verdict.violations.push_back(x);
    return verdict;
  }
  for (const auto& [u, v] : g.edges()) {
    if (p.of(u) > p.of(v)) {
      Violation x;
      x.kind = ViolationKind::Precedence;
      x.subgraph = p.of(v);
      x.edge = {g.id(u), g.id(v)};
      verdict.violations.push_back(x);
    }
  }
  const auto groups = p.groups();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (is_connected(g, groups[i])) continue;
    Violation x;
    x.kind = ViolationKind::Disconnected;
    x.subgraph = static_cast<int>(i);
    for (NodeIndex v : groups[i]) x.nodes.push_back(g.id(v));
    std::sort(x.nodes.begin(), x.nodes.end());
    verdict.violations.push_back(x);
  }
  return verdict;
}

std::vector<NodeIndex> induced_topo_order(const ComputationGraph& g, const std::vector<NodeIndex>& members) {
  std::vector<char> in(g.size(), 0);
  for (NodeIndex v : members) in[v] = 1;
  std::vector<std::size_t> indeg(g.size(), 0);
  for (NodeIndex v : members)
    for (NodeIndex u : g.preds(v))
      if (in[u]) ++indeg[v];
  auto cmp = [&](NodeIndex a, NodeIndex b) { return g.id(a) > g.id(b); };
  std::priority_queue<NodeIndex, std::vector<NodeIndex>, decltype(cmp)> ready(cmp);
  for (NodeIndex v : members)
    if (indeg[v] == 0) ready.push(v);
  std::vector<NodeIndex> order;
  order.reserve(members.size());
  while (!ready.empty()) {
    NodeIndex u = ready.top();
    ready.pop();
    order.push_back(u);
    for (NodeIndex w : g.succs(u))
      if (in[w] && --indeg[w] == 0) ready.push(w);
  }
  return order;
}

std::vector<NodeIndex> subgraph_topo_order(const ComputationGraph& g, const PartitionScheme& p, int i) {
  return induced_topo_order(g, p.members(i));
}

BoundaryTensors boundary_of(const ComputationGraph& g, const std::vector<NodeIndex>& members) {
  std::vector<char> in(g.size(), 0);
  for (NodeIndex v : members) in[v] = 1;
  BoundaryTensors b;
  std::vector<char> added(g.size(), 0);
  for (NodeIndex v : members) {
    for (NodeIndex u : g.preds(v)) {
      if (!in[u] && !added[u]) {
        added[u] = 1;
        b.external_inputs.push_back(u);
      }
    }
    if (g.node(v).is_input()) {
      // Model input tensors are fetched like any external producer.
      const bool used = std::any_of(g.succs(v).begin(), g.succs(v).end(), [&](NodeIndex w) { return in[w] != 0; });
      if (used && !added[v]) {
        added[v] = 1;
        b.external_inputs.push_back(v);
      }
      continue;
    }
    const bool leaves = g.is_model_output(v) ||
                        std::any_of(g.succs(v).begin(), g.succs(v).end(), [&](NodeIndex w) { return in[w] == 0; });
    if (leaves) b.external_outputs.push_back(v);
  }
  std::sort(b.external_inputs.begin(), b.external_inputs.end());
  std::sort(b.external_outputs.begin(), b.external_outputs.end());
  return b;
}

BoundaryTensors boundary_tensors(const ComputationGraph& g, const PartitionScheme& p, int i) {
  return boundary_of(g, p.members(i));
}

std::int64_t subgraph_macs(const ComputationGraph& g, const PartitionScheme& p, int i) {
  std::int64_t s = 0;
  for (NodeIndex v : p.members(i)) s += g.node(v).macs();
  return s;
}

}  // namespace memcoex
