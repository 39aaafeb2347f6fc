// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "memcoex/experiment.hpp"
#include "memcoex/memory.hpp"
#include "memcoex/scheme.hpp"

using namespace memcoex;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotSchedulable:
    case ErrorKind::LcmOverflow:
    case ErrorKind::InconsistentRates:
    case ErrorKind::Infeasible:
      return 2;
    case ErrorKind::Internal:
      return 3;
    default:
      return 1;
  }
}

struct Common {
  std::string config;
  std::string hardware;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> budget;
  std::optional<std::size_t> population;
  std::optional<double> alpha;
  std::string metric;
  std::string mode;

  void attach(CLI::App* app, bool needs_config) {
    auto* c = app->add_option("-c,--config", config, "experiment config JSON");
    if (needs_config) c->required();
    app->add_option("--hardware", hardware, "hardware JSON block (overrides the config's)");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("--seed", seed, "optimizer seed");
    app->add_option("--budget", budget, "sample budget");
    app->add_option("--population", population, "GA population");
    app->add_option("--alpha", alpha, "capacity/metric trade-off");
    app->add_option("--metric", metric, "ema or energy");
    app->add_option("--mode", mode, "partition_only or codesign");
  }

  // Flags win over the file.
  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (!hardware.empty()) {
      const json doc = read_json_file(hardware);
      hardware_from_json(doc.contains("hardware") ? doc.at("hardware") : doc, cfg.space.base);
      if (doc.contains("grids")) grids_from_json(doc.at("grids"), cfg.space);
    }
    auto& opt = cfg.optimizer;
    if (seed) opt.ga.seed = opt.sa.seed = opt.two_step.seed = opt.two_step.inner.seed = *seed;
    if (budget) {
      opt.ga.budget = opt.sa.budget = *budget;
      opt.two_step.inner.budget =
          std::max<std::int64_t>(1, *budget / static_cast<std::int64_t>(opt.two_step.candidates));
    }
    if (population) opt.ga.population = opt.two_step.inner.population = *population;
    if (alpha) {
      if (*alpha < 0) throw Error(ErrorKind::Config, "alpha must be non-negative");
      cfg.space.base.alpha = *alpha;
    }
    if (!metric.empty()) cfg.metric = metric_from_string(metric);
    if (!mode.empty()) {
      if (mode == "partition_only")
        cfg.mode = SearchMode::PartitionOnly;
      else if (mode == "codesign")
        cfg.mode = SearchMode::Codesign;
      else
        throw Error(ErrorKind::Config, fmt::format("unknown mode '{}'", mode));
    }
    if (!out.empty()) setenv("MEMCOEX_OUT_DIR", out.c_str(), 1);
    opt.ga.validate();
    return cfg;
  }
};

void print_paths(const std::vector<std::string>& paths) {
  for (const auto& p : paths) fmt::print("wrote {}\n", p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory capacity and graph partition co-exploration"};
  app.require_subcommand(1);

  // derive-scheme
  Common ds_common;
  std::string ds_model, ds_partition, ds_trace;
  std::map<int, int> ds_tiles;
  std::optional<int> ds_uniform;
  int ds_trace_rows = 2;
  auto* ds = app.add_subcommand("derive-scheme", "print per-subgraph tiles, offsets, update counts and regions");
  ds_common.attach(ds, false);
  ds->add_option("-m,--model", ds_model, "graph JSON")->required();
  ds->add_option("-p,--partition", ds_partition, "partition JSON (default: whole graph)");
  ds->add_option("--tile", ds_tiles, "output tile override as ID SIDE pairs");
  ds->add_option("--uniform-tile", ds_uniform, "tile side for every output");
  ds->add_option("--trace", ds_trace, "write a JSONL replay trace of subgraph 0");
  ds->add_option("--trace-rows", ds_trace_rows, "row loops to replay");

  // partition
  Common pa_common;
  std::string pa_model, pa_algo = "ga";
  auto* pa = app.add_subcommand("partition", "partition one model at fixed hardware");
  pa_common.attach(pa, false);
  pa->add_option("-m,--model", pa_model, "graph JSON")->required();
  pa->add_option("-a,--algorithm", pa_algo, "greedy, dp, sa, ga or enumeration");

  Common cmp_common, co_common, al_common, mc_common;
  auto* cmp = app.add_subcommand("compare", "compare partitioners at fixed hardware");
  cmp_common.attach(cmp, true);
  auto* co = app.add_subcommand("coexplore", "fixed-HW, two-step, SA and GA co-exploration table");
  co_common.attach(co, true);
  std::vector<double> al_alphas;
  auto* al = app.add_subcommand("alpha-sweep", "capacity/metric trade-off over alpha");
  al_common.attach(al, true);
  al->add_option("--alphas", al_alphas, "alpha values");
  std::vector<int> mc_cores, mc_batches;
  auto* mc = app.add_subcommand("multicore", "core count and batch table");
  mc_common.attach(mc, true);
  mc->add_option("--cores", mc_cores, "core counts");
  mc->add_option("--batches", mc_batches, "batch sizes");

  // report
  Common rp_common;
  std::string rp_model, rp_partition;
  int rp_cores = 1, rp_batch = 1;
  auto* rp = app.add_subcommand("report", "cost breakdown of a given partition");
  rp_common.attach(rp, false);
  rp->add_option("-m,--model", rp_model, "graph JSON")->required();
  rp->add_option("-p,--partition", rp_partition, "partition JSON")->required();
  rp->add_option("--cores", rp_cores, "core count");
  rp->add_option("--batch", rp_batch, "batch size");

  // generate
  std::string gen_family, gen_out;
  BenchmarkParams gen_params;
  auto* gen = app.add_subcommand("generate", "write a synthetic benchmark graph");
  gen->add_option("-f,--family", gen_family, "plain_chain, diamond, inception_block, residual_block or randwire")->required();
  gen->add_option("--depth", gen_params.depth);
  gen->add_option("--nodes", gen_params.nodes);
  gen->add_option("--seed", gen_params.seed);
  gen->add_option("--channels", gen_params.channels);
  gen->add_option("--spatial", gen_params.spatial);
  gen->add_option("--ring-degree", gen_params.ring_degree);
  gen->add_option("--rewire", gen_params.rewire);
  gen->add_option("--pool-every", gen_params.pool_every);
  gen->add_option("-o,--out", gen_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ds) {
      const ExperimentConfig cfg = ds_common.resolve();
      const ComputationGraph g = load_graph(ds_model);
      const HardwareConfig& hw = cfg.space.base;
      PartitionScheme p = ds_partition.empty() ? PartitionScheme::whole(g) : load_partition(g, ds_partition);
      const auto verdict = validate_partition(g, p);
      if (!verdict.ok()) throw Error(ErrorKind::InvalidPartition, verdict.violations.front().describe());
      p = canonicalize(p);
      ScheduleOptions opts;
      for (const auto& [id, side] : ds_tiles) opts.tile_overrides[id] = {side, side};
      if (ds_uniform) opts.uniform_tile = Extent2{*ds_uniform, *ds_uniform};
      if (ds_partition.empty()) {
        ProfileCache cache(g, hw);
        if (!subgraph_fits(cache.get(p.members(0)), 0, hw))
          throw Error(ErrorKind::Infeasible,
                      "the whole graph does not fit as one subgraph; run `partition` first and pass --partition");
      }
      if (!opts.tile_overrides.empty() || opts.uniform_tile) {
        for (int i = 0; i < p.num_subgraphs(); ++i) {
          const auto s = derive_schedule(g, p, i, hw, opts);
          fmt::print("subgraph {}\n", i);
          for (const auto& n : s.nodes)
            fmt::print("  node {:>4}  delta {}x{}  x {}x{}  upd_num {}\n", n.id, n.delta.h, n.delta.w, n.tile.h,
                       n.tile.w, n.upd_num);
        }
      } else {
        fmt::print("{}", schedule_report(g, p, hw));
      }
      if (!ds_trace.empty()) {
        const auto s = derive_schedule(g, p, 0, hw, opts);
        write_text_file(ds_trace, trace_to_jsonl(replay_trace(s, g, hw, ds_trace_rows)));
        fmt::print("wrote {}\n", ds_trace);
      }
    } else if (*pa) {
      const ExperimentConfig cfg = pa_common.resolve();
      const ComputationGraph g = load_graph(pa_model);
      const PartitionRun run = run_partitioner(g, pa_algo, cfg.space.base, cfg.metric, cfg.optimizer);
      if (run.status == "timeout") {
        fmt::print("{}: timeout after {} states\n", pa_algo, run.samples);
        return 2;
      }
      const std::filesystem::path dir(resolve_output_dir(cfg));
      std::filesystem::create_directories(dir);
      const std::string stem = std::filesystem::path(pa_model).stem().string() + "_" + pa_algo;
      const auto part_path = (dir / (stem + "_partition.json")).string();
      const auto cost_path = (dir / (stem + "_cost.csv")).string();
      write_text_file(part_path, partition_to_json(g, run.partition).dump(1));
      write_text_file(cost_path, cost_report_csv(g, run.partition, run.report));
      fmt::print("{}: {} subgraphs, objective {:.10g} ({})\n", pa_algo, run.partition.num_subgraphs(),
                 run.report.objective_partition, run.status);
      print_paths({part_path, cost_path});
      if (!run.trace.empty()) {
        const auto trace_path = (dir / (stem + "_trace.csv")).string();
        write_text_file(trace_path, trace_to_csv(run.trace));
        print_paths({trace_path});
      }
      if (!run.report.feasible) return 2;
    } else if (*cmp) {
      const ExperimentConfig cfg = cmp_common.resolve();
      print_paths(write_compare(cfg, compare_partitioners(cfg)));
    } else if (*co) {
      ExperimentConfig cfg = co_common.resolve();
      cfg.mode = SearchMode::Codesign;
      print_paths(write_coexplore(cfg, coexplore(cfg)));
    } else if (*al) {
      ExperimentConfig cfg = al_common.resolve();
      if (!al_alphas.empty()) cfg.alphas = al_alphas;
      print_paths(write_alpha(cfg, alpha_sweep(cfg)));
    } else if (*mc) {
      ExperimentConfig cfg = mc_common.resolve();
      if (!mc_cores.empty()) cfg.cores = mc_cores;
      if (!mc_batches.empty()) cfg.batches = mc_batches;
      print_paths(write_multicore(cfg, multicore(cfg)));
    } else if (*rp) {
      const ExperimentConfig cfg = rp_common.resolve();
      const ComputationGraph g = load_graph(rp_model);
      const PartitionScheme p = load_partition(g, rp_partition);
      const CostReport r = multicore_evaluate(g, p, cfg.space.base, rp_cores, rp_batch, cfg.metric);
      fmt::print("{}", cost_report_csv(g, p, r));
      if (!r.feasible) {
        fmt::print(stderr, "infeasible: {}\n", r.reason);
        return 2;
      }
    } else if (*gen) {
      const ComputationGraph g = generate_benchmark(benchmark_family_from_string(gen_family), gen_params);
      const std::string text = graph_to_json(g).dump(1);
      if (gen_out.empty())
        fmt::print("{}\n", text);
      else
        write_text_file(gen_out, text);
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 3;
  }
  return 0;
}
