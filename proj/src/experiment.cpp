// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "memcoex/memory.hpp"
#include "memcoex/scheme.hpp"

namespace memcoex {

namespace fs = std::filesystem;

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, const char* block, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error(ErrorKind::Config, fmt::format("'{}' must be an object", block));
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw Error(ErrorKind::Config, fmt::format("unknown key '{}' in {}", k, block));
}

ModelSpec model_from_json(const json& m, const std::string& base_dir, std::size_t index) {
  ModelSpec spec;
  if (m.is_string()) {
    spec.path = m.get<std::string>();
  } else {
    check_keys(m, "model", {"name", "path", "generator"});
    read_opt(m, "name", spec.name);
    read_opt(m, "path", spec.path);
    if (m.contains("generator")) {
      const auto& gen = m.at("generator");
      check_keys(gen, "generator", {"family", "depth", "nodes", "seed", "channels", "spatial", "ring_degree", "rewire",
                                    "pool_every"});
      spec.family = benchmark_family_from_string(gen.at("family").get<std::string>());
      auto& p = spec.params;
      read_opt(gen, "depth", p.depth);
      read_opt(gen, "nodes", p.nodes);
      read_opt(gen, "seed", p.seed);
      read_opt(gen, "channels", p.channels);
      read_opt(gen, "spatial", p.spatial);
      read_opt(gen, "ring_degree", p.ring_degree);
      read_opt(gen, "rewire", p.rewire);
      read_opt(gen, "pool_every", p.pool_every);
    }
  }
  if (spec.path.empty() == !spec.family.has_value())
    throw Error(ErrorKind::Config, fmt::format("model {} needs exactly one of 'path' or 'generator'", index));
  if (!spec.path.empty()) {
    fs::path p(spec.path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) throw Error(ErrorKind::Config, fmt::format("model file '{}' not found", p.string()));
    spec.path = p.lexically_normal().string();
    if (spec.name.empty()) spec.name = p.stem().string();
  }
  if (spec.name.empty())
    spec.name = fmt::format("{}_{}", to_string(*spec.family), spec.family == BenchmarkFamily::RandWire
                                                                  ? spec.params.nodes
                                                                  : spec.params.depth);
  return spec;
}

void ga_from_json(const json& o, GAParams& ga) {
  read_opt(o, "budget", ga.budget);
  read_opt(o, "population", ga.population);
  read_opt(o, "seed", ga.seed);
  read_opt(o, "crossover_rate", ga.crossover_rate);
  read_opt(o, "mutation_rate", ga.mutation_rate);
  read_opt(o, "tournament", ga.tournament);
  read_opt(o, "merge_on_conflict", ga.merge_on_conflict);
  read_opt(o, "dse_sigma", ga.dse_sigma);
  if (o.contains("weights")) {
    const auto& w = o.at("weights");
    check_keys(w, "optimizer.weights", {"modify_node", "split", "merge", "dse"});
    read_opt(w, "modify_node", ga.weights.modify_node);
    read_opt(w, "split", ga.weights.split);
    read_opt(w, "merge", ga.weights.merge);
    read_opt(w, "dse", ga.weights.dse);
  }
}

bool power_of_two(int c) { return c >= 1 && c <= 64 && (c & (c - 1)) == 0; }

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", v);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::vector<TracePoint> to_codesign_units(const std::vector<TracePoint>& trace, const HardwareConfig& hw) {
  std::vector<TracePoint> out;
  out.reserve(trace.size());
  for (const auto& t : trace)
    out.push_back({t.sample, codesign_objective(hw.buf_size(), hw.alpha, t.best),
                   codesign_objective(hw.buf_size(), hw.alpha, t.current)});
  return out;
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  write_text_file(p.string(), text);
  return p.string();
}

fs::path ensure_dir(const ExperimentConfig& cfg) {
  fs::path dir(resolve_output_dir(cfg));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  return dir;
}

}  // namespace

ExperimentConfig config_from_json(const json& doc, const std::string& base_dir) {
  ExperimentConfig cfg;
  std::int64_t per_capacity = 0;
  try {
    check_keys(doc, "config", {"models", "hardware", "grids", "metric", "mode", "alpha", "optimizer", "alphas", "cores",
                               "batches", "output_dir"});
    if (doc.contains("hardware")) hardware_from_json(doc.at("hardware"), cfg.space.base);
    if (doc.contains("grids")) grids_from_json(doc.at("grids"), cfg.space);
    if (doc.contains("metric")) cfg.metric = metric_from_string(doc.at("metric").get<std::string>());
    if (doc.contains("mode")) {
      const auto m = doc.at("mode").get<std::string>();
      if (m == "partition_only" || m == "partition")
        cfg.mode = SearchMode::PartitionOnly;
      else if (m == "codesign" || m == "co-design")
        cfg.mode = SearchMode::Codesign;
      else
        throw Error(ErrorKind::Config, fmt::format("unknown mode '{}'", m));
    }
    if (doc.contains("alpha")) cfg.space.base.alpha = doc.at("alpha").get<double>();
    if (cfg.space.base.alpha < 0) throw Error(ErrorKind::Config, "alpha must be non-negative");
    if (doc.contains("models")) {
      const auto& models = doc.at("models");
      if (!models.is_array()) throw Error(ErrorKind::Config, "'models' must be a list");
      for (std::size_t i = 0; i < models.size(); ++i) cfg.models.push_back(model_from_json(models[i], base_dir, i));
    }
    if (doc.contains("optimizer")) {
      const auto& o = doc.at("optimizer");
      check_keys(o, "optimizer", {"algorithms", "budget", "population", "seed", "crossover_rate", "mutation_rate",
                                  "tournament", "merge_on_conflict", "dse_sigma", "weights", "sa", "enumeration",
                                  "two_step"});
      auto& opt = cfg.optimizer;
      read_opt(o, "algorithms", opt.algorithms);
      ga_from_json(o, opt.ga);
      opt.sa.budget = opt.ga.budget;
      opt.sa.seed = opt.ga.seed;
      opt.sa.weights = opt.ga.weights;
      opt.sa.dse_sigma = opt.ga.dse_sigma;
      if (o.contains("sa")) {
        const auto& s = o.at("sa");
        check_keys(s, "optimizer.sa", {"budget", "seed", "cooling", "calibration_samples", "initial_acceptance",
                                       "initial_temperature"});
        read_opt(s, "budget", opt.sa.budget);
        read_opt(s, "seed", opt.sa.seed);
        read_opt(s, "cooling", opt.sa.cooling);
        read_opt(s, "calibration_samples", opt.sa.calibration_samples);
        read_opt(s, "initial_acceptance", opt.sa.initial_acceptance);
        if (s.contains("initial_temperature")) opt.sa.initial_temperature = s.at("initial_temperature").get<double>();
      }
      if (o.contains("enumeration")) {
        const auto& e = o.at("enumeration");
        check_keys(e, "optimizer.enumeration", {"max_states", "time_limit_s", "max_subgraph_nodes"});
        read_opt(e, "max_states", opt.enumeration.max_states);
        read_opt(e, "time_limit_s", opt.enumeration.time_limit_s);
        read_opt(e, "max_subgraph_nodes", opt.enumeration.max_subgraph_nodes);
      }
      opt.two_step.seed = opt.ga.seed;
      if (o.contains("two_step")) {
        const auto& t = o.at("two_step");
        check_keys(t, "optimizer.two_step", {"candidates", "grid_stride", "per_capacity_budget", "seed"});
        read_opt(t, "candidates", opt.two_step.candidates);
        read_opt(t, "grid_stride", opt.two_step.grid_stride);
        read_opt(t, "per_capacity_budget", per_capacity);
        read_opt(t, "seed", opt.two_step.seed);
      }
      opt.ga.validate();
      opt.sa.validate();
      static const std::set<std::string> known{"greedy", "dp", "sa", "ga", "enumeration"};
      for (const auto& a : opt.algorithms)
        if (!known.count(a)) throw Error(ErrorKind::Config, fmt::format("unknown algorithm '{}'", a));
    }
    auto& ts = cfg.optimizer.two_step;
    if (ts.candidates == 0) throw Error(ErrorKind::Config, "two_step.candidates must be positive");
    ts.inner = cfg.optimizer.ga;
    // Same total budget as the joint search unless set explicitly.
    ts.inner.budget = per_capacity > 0
                          ? per_capacity
                          : std::max<std::int64_t>(1, cfg.optimizer.ga.budget / static_cast<std::int64_t>(ts.candidates));
    read_opt(doc, "alphas", cfg.alphas);
    read_opt(doc, "cores", cfg.cores);
    read_opt(doc, "batches", cfg.batches);
    read_opt(doc, "output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  for (double a : cfg.alphas)
    if (a < 0) throw Error(ErrorKind::Config, "alphas must be non-negative");
  for (int c : cfg.cores)
    if (!power_of_two(c)) throw Error(ErrorKind::Config, fmt::format("unsupported core count {}", c));
  for (int b : cfg.batches)
    if (b < 1) throw Error(ErrorKind::Config, "batch sizes must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  const json doc = read_json_file(path);
  return config_from_json(doc, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("MEMCOEX_OUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

ComputationGraph load_model(const ModelSpec& spec) {
  if (spec.family) return generate_benchmark(*spec.family, spec.params);
  return load_graph(spec.path);
}

std::string schedule_report(const ComputationGraph& g, const PartitionScheme& p, const HardwareConfig& hw) {
  const PartitionScheme q = canonicalize(p);
  std::string out;
  for (int i = 0; i < q.num_subgraphs(); ++i) {
    const SubgraphSchedule s = derive_schedule(g, q, i, hw);
    const AllocationResult a = allocate_regions(s, g, hw);
    out += fmt::format("subgraph {}: {} nodes, {}x{} elementary ops{}\n", i, s.nodes.size(), s.steps.h, s.steps.w,
                       s.tile_fallback ? " (tile fallback)" : "");
    out += fmt::format("  {:>6} {:>5} {:>11} {:>11} {:>9} {:>9} {:>8} {:>10} {:>10}\n", "node", "role", "delta(hxw)",
                       "x(hxw)", "lead", "upd", "upd_num", "main_B", "side_B");
    for (std::size_t k = 0; k < s.nodes.size(); ++k) {
      const auto& n = s.nodes[k];
      const auto& r = a.regions[k];
      const char* role = n.is_source ? "src" : (n.is_output ? "out" : "mid");
      out += fmt::format("  {:>6} {:>5} {:>11} {:>11} {:>9} {:>9} {:>8} {:>10} {:>10}\n", n.id, role,
                         fmt::format("{}x{}", n.delta.h, n.delta.w), fmt::format("{}x{}", n.tile.h, n.tile.w),
                         fmt::format("{}x{}", n.lead.h, n.lead.w), fmt::format("{}x{}", n.upd.h, n.upd.w), n.upd_num,
                         r.main_bytes, r.side_bytes);
    }
    out += fmt::format("  regions: {} B of {} B, {} entries, {}\n", a.total_bytes, a.capacity, a.entries_used,
                       a.feasible ? "fits" : fmt::format("does not fit ({})", to_string(a.reason)));
  }
  return out;
}

std::string cost_report_csv(const ComputationGraph& g, const PartitionScheme& p, const CostReport& r) {
  const PartitionScheme q = canonicalize(p);
  std::string out =
      "subgraph,nodes,weights_in,acts_in,acts_out,weight_bytes,act_bytes,energy_pj,latency_cycles,feasible,metric\n";
  for (const auto& c : r.per_subgraph) {
    std::string ids;
    for (NodeIndex v : q.members(c.index)) ids += fmt::format("{}{}", ids.empty() ? "" : " ", g.id(v));
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", c.index, ids, c.ema.weights_in, c.ema.acts_in,
                       c.ema.acts_out, c.weight_bytes, c.act_bytes, num(c.energy_pj), num(c.latency_cycles),
                       c.feasible ? 1 : 0, num(c.metric_value));
  }
  out += fmt::format("total,,{},{},{},,,{},{},{},{}\n", r.ema.weights_in, r.ema.acts_in, r.ema.acts_out,
                     num(r.energy_pj), num(r.latency_cycles), r.feasible ? 1 : 0, num(r.objective_partition));
  return out;
}

PartitionRun run_partitioner(const ComputationGraph& g, const std::string& algorithm, const HardwareConfig& hw,
                             Metric metric, const OptimizerConfig& opt) {
  PartitionRun run;
  run.algorithm = algorithm;
  HwSpace fixed;
  fixed.base = hw;
  if (algorithm == "greedy") {
    run.partition = run_greedy(g, hw, metric).partition;
  } else if (algorithm == "dp") {
    run.partition = run_dp(g, hw, metric).partition;
  } else if (algorithm == "enumeration") {
    const auto e = run_enumeration(g, hw, metric, opt.enumeration);
    run.samples = e.states;
    if (!e.complete) {
      run.status = "timeout";
      return run;
    }
    run.partition = e.result.partition;
  } else if (algorithm == "ga") {
    const auto r = run_ga(g, fixed, opt.ga, metric, SearchMode::PartitionOnly);
    run.partition = r.best.partition;
    run.samples = r.samples;
    run.trace = r.trace;
  } else if (algorithm == "sa") {
    const auto r = run_sa(g, fixed, opt.sa, metric, SearchMode::PartitionOnly);
    run.partition = r.best.partition;
    run.samples = r.samples;
    run.trace = r.trace;
  } else {
    throw Error(ErrorKind::Config, fmt::format("unknown algorithm '{}'", algorithm));
  }
  run.report = evaluate(g, run.partition, hw, metric);
  run.status = run.report.feasible ? "ok" : "infeasible";
  return run;
}

std::vector<CompareRow> compare_partitioners(const ExperimentConfig& cfg) {
  std::vector<CompareRow> rows;
  for (const auto& spec : cfg.models) {
    const ComputationGraph g = load_model(spec);
    const std::size_t first = rows.size();
    for (const auto& algo : cfg.optimizer.algorithms) {
      CompareRow row;
      row.model = spec.name;
      row.run = run_partitioner(g, algo, cfg.space.base, cfg.metric, cfg.optimizer);
      rows.push_back(std::move(row));
    }
    const CompareRow* base = nullptr;
    for (std::size_t i = first; i < rows.size(); ++i)
      if (rows[i].run.algorithm == "greedy") base = &rows[i];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = first; i < rows.size(); ++i) {
      auto& r = rows[i];
      if (!base || r.run.status == "timeout" || base->run.status != "ok") {
        r.norm_objective = r.norm_avg_bw = r.norm_peak_bw = nan;
        continue;
      }
      const auto& b = base->run.report;
      r.norm_objective = r.run.report.objective_partition / b.objective_partition;
      r.norm_avg_bw = r.run.report.avg_bandwidth / b.avg_bandwidth;
      r.norm_peak_bw = r.run.report.peak_bandwidth / b.peak_bandwidth;
    }
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out =
      "model,algorithm,status,subgraphs,objective,ema_bytes,weights_in,acts_in,acts_out,energy_pj,latency_cycles,"
      "avg_bw,peak_bw,norm_objective,norm_avg_bw,norm_peak_bw,samples\n";
  for (const auto& r : rows) {
    const auto& rep = r.run.report;
    if (r.run.status == "timeout") {
      out += fmt::format("{},{},timeout,,timeout,,,,,,,,,,,,{}\n", r.model, r.run.algorithm, r.run.samples);
      continue;
    }
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.model, r.run.algorithm, r.run.status,
                       r.run.partition.num_subgraphs(), num(rep.objective_partition), rep.ema.total(),
                       rep.ema.weights_in, rep.ema.acts_in, rep.ema.acts_out, num(rep.energy_pj),
                       num(rep.latency_cycles), num(rep.avg_bandwidth), num(rep.peak_bandwidth),
                       num(r.norm_objective), num(r.norm_avg_bw), num(r.norm_peak_bw), r.run.samples);
  }
  return out;
}

std::vector<std::pair<std::string, HardwareConfig>> fixed_presets(const HwSpace& space) {
  std::vector<std::pair<std::string, HardwareConfig>> out;
  const std::int64_t global[] = {512, 1024, 2048};
  const std::int64_t weight[] = {576, 1152, 2304};
  const char* names[] = {"Fixed-HW(S)", "Fixed-HW(M)", "Fixed-HW(L)"};
  for (int i = 0; i < 3; ++i) {
    HardwareConfig hw = space.base;
    hw.global_buf_bytes = global[i] * kKiB;
    hw.weight_buf_bytes = weight[i] * kKiB;
    hw.shared_buf_bytes = weight[i] * kKiB;
    out.emplace_back(names[i], hw);
  }
  return out;
}

namespace {

CoexploreRow finish_row(const ComputationGraph& g, const std::string& model, const std::string& method,
                        const HardwareConfig& hw, const PartitionScheme& p, Metric metric, std::int64_t samples,
                        std::vector<TracePoint> trace) {
  CoexploreRow row;
  row.model = model;
  row.method = method;
  row.hw = hw;
  row.partition = canonicalize(p);
  row.samples = samples;
  row.trace = std::move(trace);
  const CostReport r = evaluate(g, row.partition, hw, metric);
  if (r.feasible) {
    row.partition_objective = r.objective_partition;
    row.objective = r.objective_codesign;
  }
  return row;
}

}  // namespace

std::vector<CoexploreRow> coexplore(const ExperimentConfig& cfg) {
  std::vector<CoexploreRow> rows;
  const auto& opt = cfg.optimizer;
  for (const auto& spec : cfg.models) {
    const ComputationGraph g = load_model(spec);
    for (const auto& [name, hw] : fixed_presets(cfg.space)) {
      HwSpace fixed = cfg.space;
      fixed.base = hw;
      const auto r = run_ga(g, fixed, opt.ga, cfg.metric, SearchMode::PartitionOnly);
      rows.push_back(finish_row(g, spec.name, name, hw, r.best.partition, cfg.metric, r.samples,
                                to_codesign_units(r.trace, hw)));
    }
    for (const auto sampler : {CapacitySampler::Random, CapacitySampler::Grid}) {
      TwoStepParams tp = opt.two_step;
      tp.sampler = sampler;
      const auto r = run_two_step(g, cfg.space, tp, cfg.metric);
      rows.push_back(finish_row(g, spec.name, sampler == CapacitySampler::Random ? "RS+GA" : "GS+GA", r.search.hw,
                                r.search.best.partition, cfg.metric, r.search.samples, r.search.trace));
    }
    {
      const auto r = run_sa(g, cfg.space, opt.sa, cfg.metric, SearchMode::Codesign);
      rows.push_back(finish_row(g, spec.name, "SA", r.hw, r.best.partition, cfg.metric, r.samples, r.trace));
    }
    {
      const auto r = run_ga(g, cfg.space, opt.ga, cfg.metric, SearchMode::Codesign);
      rows.push_back(finish_row(g, spec.name, "Cocco", r.hw, r.best.partition, cfg.metric, r.samples, r.trace));
    }
  }
  return rows;
}

std::string coexplore_csv(const std::vector<CoexploreRow>& rows) {
  std::string out =
      "model,method,buffer_mode,global_kb,weight_kb,shared_kb,buf_size_bytes,subgraphs,partition_objective,"
      "objective,samples\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.model, r.method, to_string(r.hw.mode),
                       num(static_cast<double>(r.hw.global_buf_bytes) / kKiB),
                       num(static_cast<double>(r.hw.weight_buf_bytes) / kKiB),
                       num(static_cast<double>(r.hw.shared_buf_bytes) / kKiB), r.hw.buf_size(),
                       r.partition.num_subgraphs(), num(r.partition_objective), num(r.objective), r.samples);
  }
  return out;
}

std::vector<AlphaRow> alpha_sweep(const ExperimentConfig& cfg) {
  if (cfg.alphas.size() < 2) throw Error(ErrorKind::Config, "alpha sweep needs at least two alphas");
  std::vector<AlphaRow> rows;
  for (const auto& spec : cfg.models) {
    const ComputationGraph g = load_model(spec);
    const std::size_t first = rows.size();
    for (double a : cfg.alphas) {
      HwSpace space = cfg.space;
      space.base.alpha = a;
      const auto r = run_ga(g, space, cfg.optimizer.ga, cfg.metric, SearchMode::Codesign);
      AlphaRow row;
      row.model = spec.name;
      row.alpha = a;
      row.hw = r.hw;
      const CostReport rep = evaluate(g, r.best.partition, r.hw, cfg.metric);
      if (rep.feasible) {
        row.partition_objective = rep.objective_partition;
        row.objective = rep.objective_codesign;
      }
      if (rows.size() > first) row.capacity_drop = row.hw.buf_size() < rows.back().hw.buf_size();
      rows.push_back(row);
    }
    const double base = rows[first].partition_objective;
    for (std::size_t i = first; i < rows.size(); ++i) rows[i].normalized_metric = rows[i].partition_objective / base;
  }
  return rows;
}

std::string alpha_csv(const std::vector<AlphaRow>& rows) {
  std::string out = "model,alpha,buf_size_bytes,global_kb,weight_kb,shared_kb,metric,normalized_metric,objective,"
                    "capacity_drop\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.model, num(r.alpha), r.hw.buf_size(),
                       num(static_cast<double>(r.hw.global_buf_bytes) / kKiB),
                       num(static_cast<double>(r.hw.weight_buf_bytes) / kKiB),
                       num(static_cast<double>(r.hw.shared_buf_bytes) / kKiB), num(r.partition_objective),
                       num(r.normalized_metric), num(r.objective), r.capacity_drop ? 1 : 0);
  return out;
}

std::vector<MulticoreRow> multicore(const ExperimentConfig& cfg) {
  if (cfg.cores.empty() || cfg.batches.empty()) throw Error(ErrorKind::Config, "cores and batches must be non-empty");
  std::vector<MulticoreRow> rows;
  for (const auto& spec : cfg.models) {
    const ComputationGraph g = load_model(spec);
    for (int b : cfg.batches) {
      std::optional<std::int64_t> prev_size;
      for (int c : cfg.cores) {
        if (!power_of_two(c)) throw Error(ErrorKind::Config, fmt::format("unsupported core count {}", c));
        const ExecContext ctx{c, b};
        const auto r = run_ga(g, cfg.space, cfg.optimizer.ga, cfg.metric, SearchMode::Codesign, {}, ctx);
        MulticoreRow row;
        row.model = spec.name;
        row.cores = c;
        row.batch = b;
        row.hw = r.hw;
        const CostReport rep = multicore_evaluate(g, r.best.partition, r.hw, c, b, cfg.metric);
        if (rep.feasible) {
          row.energy_pj = rep.energy_pj;
          row.latency_cycles = rep.latency_cycles;
          row.objective = rep.objective_codesign;
        }
        if (prev_size) row.size_rise = row.hw.buf_size() > *prev_size;
        prev_size = row.hw.buf_size();
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string multicore_csv(const std::vector<MulticoreRow>& rows) {
  std::string out = "model,cores,batch,per_core_buf_bytes,energy_pj,latency_cycles,objective,size_rise\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.model, r.cores, r.batch, r.hw.buf_size(), num(r.energy_pj),
                       num(r.latency_cycles), num(r.objective), r.size_rise ? 1 : 0);
  return out;
}

std::vector<std::string> write_compare(const ExperimentConfig& cfg, const std::vector<CompareRow>& rows) {
  const fs::path dir = ensure_dir(cfg);
  std::vector<std::string> paths;
  paths.push_back(write_file(dir, "compare.csv", compare_csv(rows)));
  std::set<std::string> algos;
  for (const auto& a : cfg.optimizer.algorithms) algos.insert(a);
  std::string gp =
      "set datafile separator ','\nset style data histograms\nset style fill solid border -1\n"
      "set ylabel 'objective normalized to greedy'\nset key outside\nset terminal pngcairo size 900,500\n"
      "set output 'compare.png'\n";
  gp += "plot 'compare.csv' using (strcol(2) eq 'greedy' ? $14 : NaN):xtic(1) title 'greedy'";
  for (const auto& a : cfg.optimizer.algorithms)
    if (a != "greedy") gp += fmt::format(", '' using (strcol(2) eq '{0}' ? $14 : NaN) title '{0}'", a);
  paths.push_back(write_file(dir, "compare.gp", gp));
  return paths;
}

std::vector<std::string> write_coexplore(const ExperimentConfig& cfg, const std::vector<CoexploreRow>& rows) {
  const fs::path dir = ensure_dir(cfg);
  std::vector<std::string> paths;
  paths.push_back(write_file(dir, "coexplore.csv", coexplore_csv(rows)));
  fs::create_directories(dir / "traces");
  std::string gp =
      "set datafile separator ','\nset xlabel 'samples'\nset ylabel 'best co-design objective'\nset key outside\n"
      "set terminal pngcairo size 900,500\n";
  std::string current_model;
  std::vector<std::string> plots;
  auto flush = [&] {
    if (plots.empty()) return;
    gp += fmt::format("set output 'convergence_{}.png'\nplot ", slug(current_model));
    for (std::size_t i = 0; i < plots.size(); ++i) gp += (i ? ", " : "") + plots[i];
    gp += "\n";
    plots.clear();
  };
  for (const auto& r : rows) {
    if (r.model != current_model) {
      flush();
      current_model = r.model;
    }
    const std::string name = fmt::format("traces/{}_{}.csv", slug(r.model), slug(r.method));
    paths.push_back(write_file(dir, name, trace_to_csv(r.trace)));
    plots.push_back(fmt::format("'{}' using 1:2 every ::1 with lines title '{}'", name, r.method));
  }
  flush();
  paths.push_back(write_file(dir, "coexplore.gp", gp));
  return paths;
}

std::vector<std::string> write_alpha(const ExperimentConfig& cfg, const std::vector<AlphaRow>& rows) {
  const fs::path dir = ensure_dir(cfg);
  std::vector<std::string> paths;
  paths.push_back(write_file(dir, "alpha_sweep.csv", alpha_csv(rows)));
  const std::string gp =
      "set datafile separator ','\nset logscale x\nset xlabel 'alpha'\nset ylabel 'buffer bytes'\n"
      "set y2label 'normalized metric'\nset y2tics\nset terminal pngcairo size 900,500\nset output 'alpha_sweep.png'\n"
      "plot 'alpha_sweep.csv' using 2:3 every ::1 with linespoints title 'capacity', "
      "'' using 2:8 every ::1 axes x1y2 with linespoints title 'metric'\n";
  paths.push_back(write_file(dir, "alpha_sweep.gp", gp));
  return paths;
}

std::vector<std::string> write_multicore(const ExperimentConfig& cfg, const std::vector<MulticoreRow>& rows) {
  const fs::path dir = ensure_dir(cfg);
  std::vector<std::string> paths;
  paths.push_back(write_file(dir, "multicore.csv", multicore_csv(rows)));
  const std::string gp =
      "set datafile separator ','\nset xlabel 'batch'\nset ylabel 'latency cycles'\nset key outside\n"
      "set terminal pngcairo size 900,500\nset output 'multicore.png'\n"
      "plot 'multicore.csv' using 3:6 every ::1 with points title 'latency'\n";
  paths.push_back(write_file(dir, "multicore.gp", gp));
  return paths;
}

}  // namespace memcoex
