// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace memcoex {

using NodeIndex = std::size_t;

enum class Axis { H, W };

inline constexpr Axis kAxes[] = {Axis::H, Axis::W};

struct Extent2 {
  std::int64_t h = 1;
  std::int64_t w = 1;

  std::int64_t along(Axis a) const { return a == Axis::H ? h : w; }
  std::int64_t& along(Axis a) { return a == Axis::H ? h : w; }
  std::int64_t area() const { return h * w; }
  friend bool operator==(const Extent2&, const Extent2&) = default;
};

// Failure categories map onto CLI exit codes.
enum class ErrorKind {
  Parse,
  Cycle,
  DanglingEdge,
  DimensionMismatch,
  InvalidGraph,
  InvalidParams,
  InvalidPartition,
  NotSchedulable,
  LcmOverflow,
  InconsistentRates,
  Config,
  Infeasible,
  Internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::vector<int> nodes = {})
      : std::runtime_error(message), kind_(kind), nodes_(std::move(nodes)) {}

  ErrorKind kind() const { return kind_; }
  // External node ids implicated in the failure, if any.
  const std::vector<int>& nodes() const { return nodes_; }

 private:
  ErrorKind kind_;
  std::vector<int> nodes_;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// lcm that reports overflow past `cap` instead of wrapping.
inline bool checked_lcm(std::int64_t a, std::int64_t b, std::int64_t cap, std::int64_t& out) {
  const std::int64_t g = std::gcd(a, b);
  const std::int64_t q = a / g;
  if (q > cap / b + 1) return false;
  out = q * b;
  return out <= cap;
}

}  // namespace memcoex
