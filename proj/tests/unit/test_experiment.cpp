// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "doctest.h"

#include <cmath>

#include "memcoex/experiment.hpp"
#include "support/fixtures.hpp"

using namespace memcoex;
using namespace memcoex::testing;

namespace {

ErrorKind config_error(const std::string& text) {
  try {
    config_from_json(json::parse(text), MEMCOEX_MODELS_DIR);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

ExperimentConfig small_config() {
  auto cfg = config_from_json(json::parse(R"({
    "models": ["witness_dp.json", {"name": "chain", "generator": {"family": "plain_chain", "depth": 4, "channels": 8, "spatial": 16}}],
    "hardware": {"global_bytes": 6144, "weight_bytes": 6912},
    "metric": "ema",
    "optimizer": {"algorithms": ["greedy", "dp", "enumeration", "ga", "sa"], "budget": 400, "population": 20,
                  "sa": {"budget": 400}}
  })"),
                              MEMCOEX_MODELS_DIR);
  return cfg;
}

}  // namespace

TEST_CASE("configuration errors are reported as config errors") {
  CHECK(config_error(R"({"modles": []})") == ErrorKind::Config);
  CHECK(config_error(R"({"optimizer": {"budgte": 3}})") == ErrorKind::Config);
  CHECK(config_error(R"({"models": ["does_not_exist.json"]})") == ErrorKind::Config);
  CHECK(config_error(R"({"mode": "both"})") == ErrorKind::Config);
  CHECK(config_error(R"({"alpha": -1})") == ErrorKind::Config);
  CHECK(config_error(R"({"cores": [3]})") == ErrorKind::Config);
  CHECK(config_error(R"({"optimizer": {"algorithms": ["halide"]}})") == ErrorKind::Config);
}

TEST_CASE("empty model list gives a header-only table") {
  const auto cfg = config_from_json(json::parse(R"({"models": []})"));
  const auto rows = compare_partitioners(cfg);
  CHECK(rows.empty());
  const auto csv = compare_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  CHECK(csv.rfind("model,algorithm,status", 0) == 0);
}

TEST_CASE("compare normalizes to the greedy row and finds the optimum") {
  const auto cfg = small_config();
  const auto rows = compare_partitioners(cfg);
  REQUIRE(rows.size() == 10);
  for (const auto& model : {"witness_dp", "chain"}) {
    double opt = 0;
    for (const auto& r : rows)
      if (r.model == model && r.run.algorithm == "enumeration") opt = r.run.report.objective_partition;
    for (const auto& r : rows) {
      if (r.model != model) continue;
      if (r.run.algorithm == "greedy") CHECK(r.norm_objective == 1.0);
      CHECK(r.run.report.objective_partition >= opt);
      CHECK(validate_partition(load_model(cfg.models[r.model == std::string("chain") ? 1 : 0]), r.run.partition).ok());
    }
  }
}

TEST_CASE("codesign with alpha zero picks the smallest capacity") {
  auto cfg = config_from_json(json::parse(R"({
    "models": [{"name": "chain", "generator": {"family": "plain_chain", "depth": 3, "channels": 8, "spatial": 8}}],
    "mode": "codesign", "alpha": 0, "metric": "ema",
    "optimizer": {"budget": 300, "population": 20, "sa": {"budget": 3000},
                  "two_step": {"candidates": 3, "per_capacity_budget": 100}}
  })"));
  const auto rows = coexplore(cfg);
  const std::int64_t smallest = cfg.space.global.min_bytes + cfg.space.weight.min_bytes;
  // Sampling-based two-step rows only see the capacities they draw.
  int joint = 0;
  for (const auto& r : rows) {
    if (r.method != "Cocco" && r.method != "SA") continue;
    ++joint;
    CHECK(r.hw.buf_size() == smallest);
    CHECK(r.objective == static_cast<double>(smallest));
  }
  CHECK(joint == 2);
}

TEST_CASE("fixed presets mirror the table sizes") {
  HwSpace space;
  const auto p = fixed_presets(space);
  REQUIRE(p.size() == 3);
  CHECK(p[0].second.global_buf_bytes == 512 * kKiB);
  CHECK(p[0].second.weight_buf_bytes == 576 * kKiB);
  CHECK(p[1].second.global_buf_bytes == 1024 * kKiB);
  CHECK(p[1].second.weight_buf_bytes == 1152 * kKiB);
  CHECK(p[2].second.global_buf_bytes == 2048 * kKiB);
  CHECK(p[2].second.weight_buf_bytes == 2304 * kKiB);
  space.base.mode = BufferMode::Shared;
  const auto s = fixed_presets(space);
  CHECK(s[0].second.shared_buf_bytes == 576 * kKiB);
  CHECK(s[2].second.shared_buf_bytes == 2304 * kKiB);
}

TEST_CASE("alpha sweep reports an affine objective") {
  auto cfg = config_from_json(json::parse(R"({
    "models": [{"name": "chain", "generator": {"family": "plain_chain", "depth": 3, "channels": 16, "spatial": 16}}],
    "mode": "codesign", "alphas": [0.0005, 0.002], "optimizer": {"budget": 300, "population": 20}
  })"));
  const auto rows = alpha_sweep(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].normalized_metric == 1.0);
  for (const auto& r : rows)
    CHECK(r.objective == codesign_objective(r.hw.buf_size(), r.alpha, r.partition_objective));
  cfg.alphas = {0.001};
  CHECK_THROWS_AS(alpha_sweep(cfg), Error);
}

TEST_CASE("single-core batch-one multicore row matches a plain evaluation") {
  auto cfg = config_from_json(json::parse(R"({
    "models": [{"name": "chain", "generator": {"family": "plain_chain", "depth": 3, "channels": 16, "spatial": 16}}],
    "mode": "codesign", "cores": [1], "batches": [1], "optimizer": {"budget": 300, "population": 20}
  })"));
  const auto rows = multicore(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(std::isfinite(rows[0].objective));
}

TEST_CASE("the same configuration produces identical tables") {
  const auto cfg = small_config();
  CHECK(compare_csv(compare_partitioners(cfg)) == compare_csv(compare_partitioners(cfg)));
}
