// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace memcoex {

inline constexpr std::int64_t kKiB = 1024;

enum class BufferMode { Separate, Shared };

const char* to_string(BufferMode m);
BufferMode buffer_mode_from_string(const std::string& s);

struct SramEnergyPoint {
  std::int64_t capacity_bytes;
  double pj_per_byte;
};

// Only dram_pj_per_bit is anchored to published methodology. The SRAM curve,
// MAC and hop energies are placeholders; see models/energy_default.json.
struct EnergyTable {
  double dram_pj_per_bit = 12.5;
  std::vector<SramEnergyPoint> sram_read_curve = {
      {32 * kKiB, 0.60}, {128 * kKiB, 0.90}, {512 * kKiB, 1.40}, {1024 * kKiB, 1.90}, {2048 * kKiB, 2.60},
      {4096 * kKiB, 3.60}};
  double sram_write_scale = 1.10;
  double mac_pj = 0.25;
  double hop_pj_per_byte = 4.0;

  double sram_read_pj_per_byte(std::int64_t capacity) const;
  double sram_write_pj_per_byte(std::int64_t capacity) const {
    return sram_read_pj_per_byte(capacity) * sram_write_scale;
  }
  EnergyTable scaled(double k) const;
};

struct HardwareConfig {
  BufferMode mode = BufferMode::Separate;
  std::int64_t global_buf_bytes = 1024 * kKiB;
  std::int64_t weight_buf_bytes = 1152 * kKiB;
  std::int64_t shared_buf_bytes = 2304 * kKiB;
  int region_limit = 64;
  int pe_rows = 4;
  int pe_cols = 4;
  int macs_per_pe = 64;
  double freq_hz = 1e9;
  double dram_bw_bytes_per_s = 16e9;
  double hop_bw_bytes_per_s = 64e9;
  double util_threshold = 0.75;
  std::int64_t lcm_cap = 4096;
  std::int64_t word_bytes = 8;
  double alpha = 0.002;
  EnergyTable energy;

  std::int64_t peak_macs_per_cycle() const { return std::int64_t{pe_rows} * pe_cols * macs_per_pe; }
  std::int64_t buf_size() const {
    return mode == BufferMode::Separate ? global_buf_bytes + weight_buf_bytes : shared_buf_bytes;
  }
  // Space left for activation regions given the weights held on chip.
  std::int64_t activation_capacity(std::int64_t resident_weight_bytes) const {
    return mode == BufferMode::Separate ? global_buf_bytes : shared_buf_bytes - resident_weight_bytes;
  }
  double dram_bytes_per_cycle() const { return dram_bw_bytes_per_s / freq_hz; }
  // Per-byte access energy of the buffers holding activations and weights.
  std::int64_t activation_sram_bytes() const {
    return mode == BufferMode::Separate ? global_buf_bytes : shared_buf_bytes;
  }
  std::int64_t weight_sram_bytes() const {
    return mode == BufferMode::Separate ? weight_buf_bytes : shared_buf_bytes;
  }
};

struct CapacityGrid {
  std::int64_t min_bytes = 0;
  std::int64_t max_bytes = 0;
  std::int64_t step_bytes = 1;

  std::size_t size() const { return static_cast<std::size_t>((max_bytes - min_bytes) / step_bytes) + 1; }
  std::int64_t at(std::size_t i) const { return min_bytes + static_cast<std::int64_t>(i) * step_bytes; }
  bool contains(std::int64_t bytes) const {
    return bytes >= min_bytes && bytes <= max_bytes && (bytes - min_bytes) % step_bytes == 0;
  }
  // Nearest grid index to the mean of two capacities; exact halves round up.
  std::size_t nearest_to_mean(std::int64_t a, std::int64_t b) const;
  std::size_t clamp_index(long long i) const;
};

struct HwSpace {
  HardwareConfig base;
  CapacityGrid global{128 * kKiB, 2048 * kKiB, 64 * kKiB};
  CapacityGrid weight{144 * kKiB, 2304 * kKiB, 72 * kKiB};
  CapacityGrid shared{128 * kKiB, 3072 * kKiB, 64 * kKiB};
};

struct HwChoice {
  std::size_t global = 0;
  std::size_t weight = 0;
  std::size_t shared = 0;
  friend bool operator==(const HwChoice&, const HwChoice&) = default;
};

HardwareConfig apply_choice(const HwSpace& space, const HwChoice& c);
// Grid indices for the capacities already set in `hw`; throws Config if off-grid.
HwChoice choice_for(const HwSpace& space, const HardwareConfig& hw);

void hardware_from_json(const nlohmann::ordered_json& doc, HardwareConfig& hw);
nlohmann::ordered_json hardware_to_json(const HardwareConfig& hw);
void grids_from_json(const nlohmann::ordered_json& doc, HwSpace& space);

}  // namespace memcoex
