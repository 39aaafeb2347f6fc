// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "memcoex/optimizers.hpp"

namespace memcoex {

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::string out = "sample_index,best_objective,current_objective\n";
  for (const auto& t : trace) out += fmt::format("{},{:.17g},{:.17g}\n", t.sample, t.best, t.current);
  return out;
}

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class Recorder {
 public:
  explicit Recorder(std::vector<TracePoint>& trace) : trace_(trace) {}
  // Returns true when `g` becomes the new best.
  bool record(const Genome& g, std::int64_t sample) {
    const bool improved = !has_best_ || g.objective < best_.objective;
    if (improved) {
      best_ = g;
      has_best_ = true;
    }
    trace_.push_back({sample, best_.objective, g.objective});
    return improved;
  }
  const Genome& best() const { return best_; }

 private:
  std::vector<TracePoint>& trace_;
  Genome best_;
  bool has_best_ = false;
};

std::size_t tournament(const std::vector<Genome>& pool, std::size_t k, Rng& rng) {
  std::size_t win = static_cast<std::size_t>(rng() % pool.size());
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = static_cast<std::size_t>(rng() % pool.size());
    if (pool[c].objective < pool[win].objective || (pool[c].objective == pool[win].objective && c < win)) win = c;
  }
  return win;
}

}  // namespace

SearchResult run_ga(const ComputationGraph& g, const HwSpace& space, const GAParams& params, Metric metric,
                    SearchMode mode, const std::vector<Genome>& seeds, const ExecContext& ctx,
                    const GenerationObserver& observer) {
  params.validate();
  Rng rng(params.seed);
  GenomeEvaluator eval(g, space, mode, metric, ctx);
  SearchResult res;
  Recorder rec(res.trace);

  GAParams init = params;
  init.population = static_cast<std::size_t>(std::min<std::int64_t>(static_cast<std::int64_t>(params.population),
                                                                     params.budget));
  std::vector<Genome> pop = init_population(g, space, mode, init, rng, seeds);
  for (auto& x : pop) {
    eval.evaluate_and_repair(x);
    rec.record(x, eval.samples());
  }
  if (observer) observer(0, pop);

  for (int gen = 1; eval.samples() < params.budget; ++gen) {
    std::vector<Genome> pool = pop;
    for (std::size_t i = 0; i < params.population && eval.samples() < params.budget; ++i) {
      const Genome& mom = pop[tournament(pop, params.tournament, rng)];
      Genome child;
      const bool crossed = uniform01(rng) < params.crossover_rate;
      if (crossed) {
        const Genome& dad = pop[tournament(pop, params.tournament, rng)];
        child = crossover(g, space, mode, mom, dad, params, rng);
      } else {
        child = mom;
      }
      // A child that is neither crossed nor mutated would be a wasted sample.
      if (!crossed || uniform01(rng) < params.mutation_rate) child = mutate(g, space, mode, child, params, rng);
      eval.evaluate_and_repair(child);
      rec.record(child, eval.samples());
      pool.push_back(std::move(child));
    }
    std::vector<Genome> next;
    next.reserve(params.population);
    next.push_back(rec.best());
    while (next.size() < params.population) next.push_back(pool[tournament(pool, params.tournament, rng)]);
    pop = std::move(next);
    if (observer) observer(gen, pop);
  }

  res.best = rec.best();
  res.hw = eval.hardware(res.best.hw);
  res.samples = eval.samples();
  return res;
}

void SAParams::validate() const {
  if (budget <= 0) throw Error(ErrorKind::Config, "sample budget must be positive");
  if (!(cooling > 0 && cooling <= 1)) throw Error(ErrorKind::Config, "cooling factor must lie in (0,1]");
  if (!(initial_acceptance > 0 && initial_acceptance < 1))
    throw Error(ErrorKind::Config, "initial acceptance must lie in (0,1)");
  if (initial_temperature && *initial_temperature < 0)
    throw Error(ErrorKind::Config, "initial temperature must be non-negative");
}

SearchResult run_sa(const ComputationGraph& g, const HwSpace& space, const SAParams& params, Metric metric,
                    SearchMode mode, const std::optional<Genome>& start, const ExecContext& ctx) {
  params.validate();
  Rng rng(params.seed);
  GAParams ops;
  ops.weights = params.weights;
  ops.dse_sigma = params.dse_sigma;
  GenomeEvaluator eval(g, space, mode, metric, ctx);
  SearchResult res;
  Recorder rec(res.trace);

  Genome cur;
  if (start) {
    const auto verdict = validate_partition(g, start->partition);
    if (!verdict.ok())
      throw Error(ErrorKind::InvalidPartition,
                  fmt::format("start partition rejected: {}", verdict.violations.front().describe()));
    cur = *start;
  } else {
    cur.partition = random_partition(g, rng);
    cur.hw = mode == SearchMode::Codesign ? random_hw_choice(space, rng) : HwChoice{};
  }
  eval.evaluate_and_repair(cur);
  rec.record(cur, eval.samples());

  double temp = 0;
  if (params.initial_temperature) {
    temp = *params.initial_temperature;
  } else {
    double sum = 0;
    int count = 0;
    for (int i = 0; i < params.calibration_samples && eval.samples() < params.budget; ++i) {
      Genome probe = mutate(g, space, mode, cur, ops, rng);
      eval.evaluate_and_repair(probe);
      rec.record(probe, eval.samples());
      const double d = probe.objective - cur.objective;
      if (std::isfinite(d) && d > 0) {
        sum += d;
        ++count;
      }
    }
    // exp(-mean/T0) equals the target acceptance for an average uphill move.
    if (count > 0) temp = -(sum / count) / std::log(params.initial_acceptance);
    if (rec.best().objective < cur.objective) cur = rec.best();
  }

  while (eval.samples() < params.budget) {
    Genome cand = mutate(g, space, mode, cur, ops, rng);
    eval.evaluate_and_repair(cand);
    rec.record(cand, eval.samples());
    const bool cur_ok = std::isfinite(cur.objective);
    const bool cand_ok = std::isfinite(cand.objective);
    bool accept;
    if (!cand_ok) {
      accept = !cur_ok;  // wander while nothing feasible is known
    } else if (!cur_ok || cand.objective <= cur.objective) {
      accept = true;
    } else {
      accept = temp > 0 && uniform01(rng) < std::exp(-(cand.objective - cur.objective) / temp);
    }
    if (accept) cur = std::move(cand);
    temp *= params.cooling;
  }

  res.best = rec.best();
  res.hw = eval.hardware(res.best.hw);
  res.samples = eval.samples();
  return res;
}

const char* to_string(CapacitySampler s) { return s == CapacitySampler::Random ? "random" : "grid"; }

CapacitySampler capacity_sampler_from_string(const std::string& s) {
  if (s == "random" || s == "rs") return CapacitySampler::Random;
  if (s == "grid" || s == "gs") return CapacitySampler::Grid;
  throw Error(ErrorKind::Config, fmt::format("unknown capacity sampler '{}'", s));
}

std::vector<HwChoice> two_step_candidates(const HwSpace& space, const TwoStepParams& params) {
  std::vector<HwChoice> out;
  if (params.candidates == 0) return out;
  const bool separate = space.base.mode == BufferMode::Separate;
  if (params.sampler == CapacitySampler::Random) {
    Rng rng(params.seed);
    for (std::size_t i = 0; i < params.candidates; ++i) out.push_back(random_hw_choice(space, rng));
    return out;
  }
  const std::size_t stride = std::max<std::size_t>(1, params.grid_stride);
  auto descending = [&](const CapacityGrid& grid) {
    std::vector<std::size_t> idx;
    for (long long i = static_cast<long long>(grid.size()) - 1; i >= 0; i -= static_cast<long long>(stride))
      idx.push_back(static_cast<std::size_t>(i));
    return idx;
  };
  if (separate) {
    for (std::size_t gi : descending(space.global))
      for (std::size_t wi : descending(space.weight)) out.push_back({gi, wi, 0});
  } else {
    for (std::size_t si : descending(space.shared)) out.push_back({0, 0, si});
  }
  std::stable_sort(out.begin(), out.end(), [&](const HwChoice& a, const HwChoice& b) {
    return apply_choice(space, a).buf_size() > apply_choice(space, b).buf_size();
  });
  if (out.size() > params.candidates) out.resize(params.candidates);
  return out;
}

TwoStepResult run_two_step(const ComputationGraph& g, const HwSpace& space, const TwoStepParams& params,
                           Metric metric, const ExecContext& ctx) {
  const auto cands = two_step_candidates(space, params);
  if (cands.empty()) throw Error(ErrorKind::Config, "two-step search needs at least one capacity candidate");
  TwoStepResult out;
  out.visited = cands;
  auto& res = out.search;
  double best = kInfeasible;
  bool have = false;
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    HwSpace fixed = space;
    fixed.base = apply_choice(space, cands[k]);
    GAParams inner = params.inner;
    inner.seed = params.inner.seed + k;
    const SearchResult r = run_ga(g, fixed, inner, metric, SearchMode::PartitionOnly, {}, ctx);
    const auto buf = fixed.base.buf_size();
    const double alpha = fixed.base.alpha;
    for (const auto& t : r.trace) {
      const double cur = codesign_objective(buf, alpha, t.current);
      best = std::min(best, cur);
      res.trace.push_back({offset + t.sample, best, cur});
    }
    const double obj = codesign_objective(buf, alpha, r.best.objective);
    if (!have || obj < res.best.objective) {
      res.best = r.best;
      res.best.hw = cands[k];
      res.best.objective = obj;
      res.hw = fixed.base;
      have = true;
    }
    offset += r.samples;
  }
  res.samples = offset;
  return out;
}

}  // namespace memcoex
