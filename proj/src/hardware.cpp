// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/hardware.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "memcoex/common.hpp"

namespace memcoex {

const char* to_string(BufferMode m) { return m == BufferMode::Separate ? "separate" : "shared"; }

BufferMode buffer_mode_from_string(const std::string& s) {
  if (s == "separate") return BufferMode::Separate;
  if (s == "shared") return BufferMode::Shared;
  throw Error(ErrorKind::Config, fmt::format("unknown buffer mode '{}'", s));
}

double EnergyTable::sram_read_pj_per_byte(std::int64_t capacity) const {
  const auto& c = sram_read_curve;
  if (c.empty()) return 0.0;
  if (capacity <= c.front().capacity_bytes) return c.front().pj_per_byte;
  if (capacity >= c.back().capacity_bytes) return c.back().pj_per_byte;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (capacity <= c[i].capacity_bytes) {
      const double t = static_cast<double>(capacity - c[i - 1].capacity_bytes) /
                       static_cast<double>(c[i].capacity_bytes - c[i - 1].capacity_bytes);
      return c[i - 1].pj_per_byte + t * (c[i].pj_per_byte - c[i - 1].pj_per_byte);
    }
  }
  return c.back().pj_per_byte;
}

EnergyTable EnergyTable::scaled(double k) const {
  EnergyTable t = *this;
  t.dram_pj_per_bit *= k;
  for (auto& p : t.sram_read_curve) p.pj_per_byte *= k;
  t.mac_pj *= k;
  t.hop_pj_per_byte *= k;
  return t;
}

std::size_t CapacityGrid::nearest_to_mean(std::int64_t a, std::int64_t b) const {
  // floor(((a+b)/2 - min)/step + 1/2) in integers.
  const std::int64_t num = a + b - 2 * min_bytes + step_bytes;
  const std::int64_t idx = num >= 0 ? num / (2 * step_bytes) : 0;
  return clamp_index(idx);
}

std::size_t CapacityGrid::clamp_index(long long i) const {
  if (i < 0) return 0;
  return std::min(static_cast<std::size_t>(i), size() - 1);
}

HardwareConfig apply_choice(const HwSpace& space, const HwChoice& c) {
  HardwareConfig hw = space.base;
  if (hw.mode == BufferMode::Separate) {
    hw.global_buf_bytes = space.global.at(c.global);
    hw.weight_buf_bytes = space.weight.at(c.weight);
  } else {
    hw.shared_buf_bytes = space.shared.at(c.shared);
  }
  return hw;
}

HwChoice choice_for(const HwSpace& space, const HardwareConfig& hw) {
  auto index = [](const CapacityGrid& grid, std::int64_t bytes, const char* what) {
    if (!grid.contains(bytes))
      throw Error(ErrorKind::Config, fmt::format("{} capacity {} B is not on the candidate grid", what, bytes));
    return static_cast<std::size_t>((bytes - grid.min_bytes) / grid.step_bytes);
  };
  HwChoice c;
  if (hw.mode == BufferMode::Separate) {
    c.global = index(space.global, hw.global_buf_bytes, "global");
    c.weight = index(space.weight, hw.weight_buf_bytes, "weight");
  } else {
    c.shared = index(space.shared, hw.shared_buf_bytes, "shared");
  }
  return c;
}

void hardware_from_json(const nlohmann::ordered_json& doc, HardwareConfig& hw) {
  try {
    if (doc.contains("buffer_mode")) hw.mode = buffer_mode_from_string(doc.at("buffer_mode").get<std::string>());
    if (doc.contains("global_kb")) hw.global_buf_bytes = doc.at("global_kb").get<std::int64_t>() * kKiB;
    if (doc.contains("weight_kb")) hw.weight_buf_bytes = doc.at("weight_kb").get<std::int64_t>() * kKiB;
    if (doc.contains("shared_kb")) hw.shared_buf_bytes = doc.at("shared_kb").get<std::int64_t>() * kKiB;
    if (doc.contains("global_bytes")) hw.global_buf_bytes = doc.at("global_bytes").get<std::int64_t>();
    if (doc.contains("weight_bytes")) hw.weight_buf_bytes = doc.at("weight_bytes").get<std::int64_t>();
    if (doc.contains("shared_bytes")) hw.shared_buf_bytes = doc.at("shared_bytes").get<std::int64_t>();
    hw.region_limit = doc.value("region_limit", hw.region_limit);
    if (doc.contains("pe_array")) {
      hw.pe_rows = doc.at("pe_array").at(0).get<int>();
      hw.pe_cols = doc.at("pe_array").at(1).get<int>();
    }
    hw.macs_per_pe = doc.value("macs_per_pe", hw.macs_per_pe);
    hw.freq_hz = doc.value("freq_hz", hw.freq_hz);
    hw.dram_bw_bytes_per_s = doc.value("dram_bw_bytes_per_s", hw.dram_bw_bytes_per_s);
    hw.hop_bw_bytes_per_s = doc.value("hop_bw_bytes_per_s", hw.hop_bw_bytes_per_s);
    hw.util_threshold = doc.value("util_threshold", hw.util_threshold);
    hw.lcm_cap = doc.value("lcm_cap", hw.lcm_cap);
    hw.alpha = doc.value("alpha", hw.alpha);
    if (doc.contains("energy")) {
      const auto& e = doc.at("energy");
      auto& t = hw.energy;
      t.dram_pj_per_bit = e.value("dram_pj_per_bit", t.dram_pj_per_bit);
      t.mac_pj = e.value("mac_pj", t.mac_pj);
      t.hop_pj_per_byte = e.value("hop_pj_per_byte", t.hop_pj_per_byte);
      t.sram_write_scale = e.value("sram_write_scale", t.sram_write_scale);
      if (e.contains("sram_read_curve")) {
        t.sram_read_curve.clear();
        for (const auto& pt : e.at("sram_read_curve"))
          t.sram_read_curve.push_back({pt.at(0).get<std::int64_t>() * kKiB, pt.at(1).get<double>()});
      }
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw Error(ErrorKind::Config, fmt::format("hardware block: {}", e.what()));
  }
  if (hw.region_limit < 1 || hw.pe_rows < 1 || hw.pe_cols < 1 || hw.macs_per_pe < 1 || hw.freq_hz <= 0 ||
      hw.dram_bw_bytes_per_s <= 0 || hw.lcm_cap < 1 || hw.alpha < 0)
    throw Error(ErrorKind::Config, "hardware block has out-of-range values");
  const auto& t = hw.energy;
  bool negative = t.dram_pj_per_bit < 0 || t.mac_pj < 0 || t.hop_pj_per_byte < 0 || t.sram_write_scale < 0;
  for (const auto& p : t.sram_read_curve) negative = negative || p.pj_per_byte < 0;
  if (negative) throw Error(ErrorKind::Config, "energy table entries must be non-negative");
}

nlohmann::ordered_json hardware_to_json(const HardwareConfig& hw) {
  nlohmann::ordered_json j;
  j["buffer_mode"] = to_string(hw.mode);
  j["global_bytes"] = hw.global_buf_bytes;
  j["weight_bytes"] = hw.weight_buf_bytes;
  j["shared_bytes"] = hw.shared_buf_bytes;
  j["region_limit"] = hw.region_limit;
  j["pe_array"] = {hw.pe_rows, hw.pe_cols};
  j["macs_per_pe"] = hw.macs_per_pe;
  j["util_threshold"] = hw.util_threshold;
  j["alpha"] = hw.alpha;
  return j;
}

void grids_from_json(const nlohmann::ordered_json& doc, HwSpace& space) {
  auto read = [&](const char* key, CapacityGrid& grid) {
    if (!doc.contains(key)) return;
    const auto& v = doc.at(key);
    if (!v.is_array() || v.size() != 3) throw Error(ErrorKind::Config, fmt::format("grid '{}' must be [min,max,step] KB", key));
    grid = {v[0].get<std::int64_t>() * kKiB, v[1].get<std::int64_t>() * kKiB, v[2].get<std::int64_t>() * kKiB};
    if (grid.step_bytes <= 0 || grid.max_bytes < grid.min_bytes || grid.min_bytes <= 0)
      throw Error(ErrorKind::Config, fmt::format("grid '{}' is malformed", key));
  };
  read("global_kb", space.global);
  read("weight_kb", space.weight);
  read("shared_kb", space.shared);
}

}  // namespace memcoex
