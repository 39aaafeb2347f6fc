// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/cost.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "memcoex/memory.hpp"

namespace memcoex {

const char* to_string(Metric m) { return m == Metric::Ema ? "ema" : "energy"; }

Metric metric_from_string(const std::string& s) {
  if (s == "ema") return Metric::Ema;
  if (s == "energy") return Metric::Energy;
  throw Error(ErrorKind::Config, fmt::format("unknown metric '{}'", s));
}

SubgraphProfile profile_subgraph(const ComputationGraph& g, const std::vector<NodeIndex>& members,
                                 const HardwareConfig& hw) {
  SubgraphProfile s;
  const auto b = boundary_of(g, members);
  for (NodeIndex v : members) {
    s.weight_bytes += g.node(v).weight_bytes;
    s.macs += g.node(v).macs();
  }
  s.ema.weights_in = s.weight_bytes;
  for (NodeIndex u : b.external_inputs) s.ema.acts_in += g.node(u).output_bytes();
  for (NodeIndex u : b.external_outputs) s.ema.acts_out += g.node(u).output_bytes();
  s.weight_writes = s.weight_bytes;

  SubgraphSchedule sched;
  try {
    sched = derive_schedule(g, members, hw);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotSchedulable && e.kind() != ErrorKind::LcmOverflow &&
        e.kind() != ErrorKind::InconsistentRates)
      throw;
    s.schedulable = false;
    s.error = e.what();
    return s;
  }
  s.schedule_nodes = sched.nodes.size();
  s.act_bytes = activation_footprint(sched, g, hw);
  const double peak = static_cast<double>(hw.peak_macs_per_cycle());
  for (std::size_t k = 0; k < sched.nodes.size(); ++k) {
    const auto& ns = sched.nodes[k];
    const auto& d = g.node(ns.node);
    s.act_writes += d.output_bytes();
    if (ns.is_source) continue;
    const std::int64_t updates = ceil_div(d.out.h, ns.delta.h) * ceil_div(d.out.w, ns.delta.w);
    s.weight_reads += d.weight_bytes * updates;
    for (std::size_t p : sched.view.producers[k]) {
      const auto& ud = g.node(sched.view.nodes[p]);
      const std::int64_t fh = required_extent(d, ns.delta.h, Axis::H);
      const std::int64_t fw = required_extent(d, ns.delta.w, Axis::W);
      s.act_reads += updates * fh * fw * ud.out_channels * ud.act_bytes_per_elem;
    }
    if (d.macs() > 0) {
      const double util = modeled_utilization(d, ns.delta, hw);
      s.compute_cycles += static_cast<double>(d.macs()) / (peak * util);
    }
  }
  s.act_reads += s.ema.acts_out;  // write-back drains the buffer
  return s;
}

bool subgraph_fits(const SubgraphProfile& s, std::int64_t next_weight_bytes, const HardwareConfig& hw,
                   const ExecContext& ctx, std::string* reason) {
  auto fail = [&](std::string why) {
    if (reason) *reason = std::move(why);
    return false;
  };
  if (!s.schedulable) return fail(s.error);
  if (s.schedule_nodes > static_cast<std::size_t>(hw.region_limit))
    return fail(fmt::format("region limit: {} blocks > {}", s.schedule_nodes, hw.region_limit));
  const std::int64_t c = ctx.cores;
  const std::int64_t w = ceil_div(s.weight_bytes, c);
  const std::int64_t wn = ceil_div(next_weight_bytes, c);
  const std::int64_t act = ceil_div(s.act_bytes, c);
  if (hw.mode == BufferMode::Separate) {
    if (w + wn > hw.weight_buf_bytes)
      return fail(fmt::format("weights {} + prefetch {} > weight buffer {}", w, wn, hw.weight_buf_bytes));
    if (act > hw.global_buf_bytes)
      return fail(fmt::format("activations {} > global buffer {}", act, hw.global_buf_bytes));
  } else if (act + w + wn > hw.shared_buf_bytes) {
    return fail(fmt::format("activations {} + weights {} + prefetch {} > shared buffer {}", act, w, wn,
                            hw.shared_buf_bytes));
  }
  return true;
}

SubgraphCost cost_from_profile(const SubgraphProfile& s, const HardwareConfig& hw, Metric metric,
                               const ExecContext& ctx) {
  SubgraphCost c;
  const double batch = ctx.batch;
  const auto& e = hw.energy;
  c.ema.weights_in = s.ema.weights_in;
  c.ema.acts_in = s.ema.acts_in * ctx.batch;
  c.ema.acts_out = s.ema.acts_out * ctx.batch;
  c.macs = s.macs * ctx.batch;
  c.weight_bytes = s.weight_bytes;
  c.act_bytes = s.act_bytes;
  if (ctx.cores > 1) c.hop_bytes = ceil_div(s.weight_bytes * (ctx.cores - 1), ctx.cores) * ctx.batch;

  const double act_r = e.sram_read_pj_per_byte(hw.activation_sram_bytes());
  const double act_w = e.sram_write_pj_per_byte(hw.activation_sram_bytes());
  const double wt_r = e.sram_read_pj_per_byte(hw.weight_sram_bytes());
  const double wt_w = e.sram_write_pj_per_byte(hw.weight_sram_bytes());
  c.dram_pj = static_cast<double>(c.ema.total()) * 8.0 * e.dram_pj_per_bit;
  c.onchip_pj = batch * (static_cast<double>(s.act_writes) * act_w + static_cast<double>(s.act_reads) * act_r +
                         static_cast<double>(s.weight_reads) * wt_r) +
                static_cast<double>(s.weight_writes) * wt_w;
  c.mac_pj = static_cast<double>(c.macs) * e.mac_pj;
  c.hop_pj = static_cast<double>(c.hop_bytes) * e.hop_pj_per_byte;
  c.energy_pj = c.dram_pj + c.onchip_pj + c.mac_pj + c.hop_pj;

  c.compute_cycles = batch * s.compute_cycles / ctx.cores;
  c.comm_cycles = static_cast<double>(c.ema.total()) / (hw.dram_bytes_per_cycle() * ctx.cores);
  c.hop_cycles = static_cast<double>(c.hop_bytes) / (hw.hop_bw_bytes_per_s / hw.freq_hz);
  c.latency_cycles = std::max({c.compute_cycles, c.comm_cycles, c.hop_cycles});
  c.metric_value = metric == Metric::Ema ? static_cast<double>(c.ema.total()) : c.energy_pj;
  return c;
}

namespace {

CostReport evaluate_impl(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw,
                         Metric metric, const ExecContext& ctx) {
  const auto verdict = validate_partition(g, p);
  if (!verdict.ok())
    throw Error(ErrorKind::InvalidPartition, verdict.violations.front().describe());
  const auto groups = canonicalize(p).groups();
  CostReport r;
  r.metric = metric;
  r.ctx = ctx;
  r.buf_size = hw.buf_size();
  std::vector<SubgraphProfile> prof;
  prof.reserve(groups.size());
  for (const auto& m : groups) prof.push_back(profile_subgraph(g, m, hw));
  double objective = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    SubgraphCost c = cost_from_profile(prof[i], hw, metric, ctx);
    c.index = static_cast<int>(i);
    const std::int64_t next_w = i + 1 < groups.size() ? prof[i + 1].weight_bytes : 0;
    std::string why;
    c.feasible = subgraph_fits(prof[i], next_w, hw, ctx, &why);
    if (!c.feasible) {
      c.reason = why;
      if (r.feasible) r.reason = fmt::format("subgraph {}: {}", i, why);
      r.feasible = false;
    }
    r.ema.weights_in += c.ema.weights_in;
    r.ema.acts_in += c.ema.acts_in;
    r.ema.acts_out += c.ema.acts_out;
    r.hop_bytes += c.hop_bytes;
    r.macs += c.macs;
    r.energy_pj += c.energy_pj;
    r.compute_cycles += c.compute_cycles;
    r.comm_cycles += c.comm_cycles;
    r.latency_cycles += c.latency_cycles;
    objective += c.metric_value;
    if (c.latency_cycles > 0)
      r.peak_bandwidth =
          std::max(r.peak_bandwidth, static_cast<double>(c.ema.total()) / (c.latency_cycles / hw.freq_hz));
    r.per_subgraph.push_back(std::move(c));
  }
  if (r.latency_cycles > 0) {
    const double seconds = r.latency_cycles / hw.freq_hz;
    r.avg_bandwidth = static_cast<double>(r.ema.total()) / seconds;
    r.avg_weight_bandwidth = static_cast<double>(r.ema.weights_in) / seconds;
    r.avg_act_bandwidth = static_cast<double>(r.ema.acts()) / seconds;
  }
  if (r.feasible) {
    r.objective_partition = objective;
    r.objective_codesign = codesign_objective(r.buf_size, hw.alpha, objective);
  }
  return r;
}

}  // namespace

SubgraphCost subgraph_cost(const ComputationGraph& g, const PartitionScheme& p, int i, const HardwareConfig& hw,
                           Metric metric) {
  const auto prof = profile_subgraph(g, p.members(i), hw);
  SubgraphCost c = cost_from_profile(prof, hw, metric);
  c.index = i;
  std::string why;
  c.feasible = subgraph_fits(prof, 0, hw, {}, &why);
  c.reason = why;
  return c;
}

CostReport evaluate(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw, Metric metric) {
  return evaluate_impl(g, p, hw, metric, {});
}

CostReport multicore_evaluate(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw,
                              int cores, int batch, Metric metric) {
  if (cores < 1 || cores > 64 || (cores & (cores - 1)) != 0)
    throw Error(ErrorKind::InvalidParams, fmt::format("unsupported core count {}", cores));
  if (batch < 1) throw Error(ErrorKind::InvalidParams, fmt::format("batch must be positive, got {}", batch));
  return evaluate_impl(g, p, hw, metric, {cores, batch});
}

NodeSet::NodeSet(std::size_t n, const std::vector<NodeIndex>& members) : words((n + 63) / 64, 0) {
  for (NodeIndex v : members) words[v / 64] |= std::uint64_t{1} << (v % 64);
}

std::size_t NodeSetHash::operator()(const NodeSet& s) const {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t w : s.words) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

const SubgraphProfile& ProfileCache::get(const std::vector<NodeIndex>& members) {
  NodeSet key(g_.size(), members);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(std::move(key), profile_subgraph(g_, members, hw_)).first->second;
}

PartitionScore score_groups(ProfileCache& cache, const std::vector<std::vector<NodeIndex>>& groups,
                            const HardwareConfig& hw, Metric metric, const ExecContext& ctx) {
  PartitionScore score;
  std::vector<const SubgraphProfile*> prof;
  prof.reserve(groups.size());
  for (const auto& m : groups) prof.push_back(&cache.get(m));
  double total = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!subgraph_fits(*prof[i], 0, hw, ctx)) {
      score = {false, kInfeasible, static_cast<int>(i), ViolationScope::Alone};
      return score;
    }
    const std::int64_t next_w = i + 1 < groups.size() ? prof[i + 1]->weight_bytes : 0;
    if (next_w > 0 && !subgraph_fits(*prof[i], next_w, hw, ctx)) {
      score = {false, kInfeasible, static_cast<int>(i), ViolationScope::Pair};
      return score;
    }
    total += cost_from_profile(*prof[i], hw, metric, ctx).metric_value;
  }
  score.objective = total;
  return score;
}

}  // namespace memcoex
