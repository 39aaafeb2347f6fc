// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/benchmarks.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <fmt/format.h>

namespace memcoex {

BenchmarkFamily benchmark_family_from_string(const std::string& s) {
  if (s == "plain_chain") return BenchmarkFamily::PlainChain;
  if (s == "diamond") return BenchmarkFamily::Diamond;
  if (s == "inception_block") return BenchmarkFamily::InceptionBlock;
  if (s == "residual_block") return BenchmarkFamily::ResidualBlock;
  if (s == "randwire") return BenchmarkFamily::RandWire;
  throw Error(ErrorKind::InvalidParams, fmt::format("unknown benchmark family '{}'", s));
}

const char* to_string(BenchmarkFamily f) {
  switch (f) {
    case BenchmarkFamily::PlainChain: return "plain_chain";
    case BenchmarkFamily::Diamond: return "diamond";
    case BenchmarkFamily::InceptionBlock: return "inception_block";
    case BenchmarkFamily::ResidualBlock: return "residual_block";
    case BenchmarkFamily::RandWire: return "randwire";
  }
  return "plain_chain";
}

namespace {

class Builder {
 public:
  int input(std::int64_t c, std::int64_t hw) {
    LayerDescriptor d;
    d.id = next_++;
    d.kind = LayerKind::Input;
    d.in_channels = d.out_channels = c;
    d.out = {hw, hw};
    nodes_.push_back(d);
    return d.id;
  }

  int conv(const std::vector<int>& from, std::int64_t f, std::int64_t s, std::int64_t out_c) {
    const auto& src = get(from.front());
    std::int64_t in_c = 0;
    for (int u : from) in_c += get(u).out_channels;
    LayerDescriptor d;
    d.id = next_++;
    d.kind = LayerKind::Conv;
    d.kernel = {f, f};
    d.stride = {s, s};
    d.in_channels = in_c;
    d.out_channels = out_c;
    d.out = {ceil_div(src.out.h, s), ceil_div(src.out.w, s)};
    d.weight_bytes = f * f * in_c * out_c;
    return add(d, from);
  }

  int pool(int from, std::int64_t f, std::int64_t s) {
    const auto& src = get(from);
    LayerDescriptor d;
    d.id = next_++;
    d.kind = LayerKind::Pool;
    d.kernel = {f, f};
    d.stride = {s, s};
    d.in_channels = d.out_channels = src.out_channels;
    d.out = {ceil_div(src.out.h, s), ceil_div(src.out.w, s)};
    return add(d, {from});
  }

  int eltwise(const std::vector<int>& from) {
    const auto& src = get(from.front());
    LayerDescriptor d;
    d.id = next_++;
    d.kind = LayerKind::Eltwise;
    d.in_channels = d.out_channels = src.out_channels;
    d.out = src.out;
    return add(d, from);
  }

  void set_in_channels(int id, std::int64_t in_c, std::int64_t out_c) {
    auto& d = nodes_[static_cast<std::size_t>(id)];
    d.in_channels = in_c;
    d.weight_bytes = d.kernel.area() * in_c * out_c;
  }

  ComputationGraph build(std::vector<int> outputs = {}) {
    return ComputationGraph(nodes_, edges_, {}, std::move(outputs));
  }

 private:
  const LayerDescriptor& get(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  int add(const LayerDescriptor& d, const std::vector<int>& from) {
    nodes_.push_back(d);
    for (int u : from) edges_.emplace_back(u, d.id);
    return d.id;
  }

  int next_ = 0;
  std::vector<LayerDescriptor> nodes_;
  std::vector<std::pair<int, int>> edges_;
};

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorKind::InvalidParams, what);
}

ComputationGraph randwire(const BenchmarkParams& p) {
  require(p.nodes >= 2, "randwire needs at least 2 nodes");
  require(p.ring_degree >= 2 && p.ring_degree % 2 == 0 && p.ring_degree < p.nodes,
          "randwire ring degree must be even and below the node count");
  require(p.rewire >= 0.0 && p.rewire <= 1.0, "randwire rewire probability must be in [0,1]");
  const int n = p.nodes;
  std::mt19937_64 rng(p.seed);
  auto uniform01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto below = [&](int bound) { return static_cast<int>(rng() % static_cast<std::uint64_t>(bound)); };

  // Watts-Strogatz ring, then edges oriented from low to high index.
  std::set<std::pair<int, int>> und;
  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= p.ring_degree / 2; ++j) und.insert(key(i, (i + j) % n));
  for (int j = 1; j <= p.ring_degree / 2; ++j) {
    for (int i = 0; i < n; ++i) {
      auto e = key(i, (i + j) % n);
      if (!und.count(e) || uniform01() >= p.rewire) continue;
      for (int attempt = 0; attempt < 4 * n; ++attempt) {
        const int t = below(n);
        if (t == i || und.count(key(i, t))) continue;
        und.erase(e);
        und.insert(key(i, t));
        break;
      }
    }
  }

  Builder b;
  const int in = b.input(p.channels, p.spatial);
  std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
  for (const auto& [a, c] : und) preds[static_cast<std::size_t>(c)].push_back(a);
  std::vector<bool> has_succ(static_cast<std::size_t>(n), false);
  for (const auto& [a, c] : und) has_succ[static_cast<std::size_t>(a)] = true;
  std::vector<int> outputs;
  for (int i = 0; i < n; ++i) {
    std::vector<int> from;
    for (int a : preds[static_cast<std::size_t>(i)]) from.push_back(a + 1);  // ring node a has id a+1
    if (from.empty()) from.push_back(in);
    // Sum aggregation: every input carries the same channel count.
    const int id = b.conv(from, 3, 1, p.channels);
    b.set_in_channels(id, p.channels, p.channels);
    if (!has_succ[static_cast<std::size_t>(i)]) outputs.push_back(id);
  }
  return b.build(outputs);
}

}  // namespace

ComputationGraph generate_benchmark(BenchmarkFamily family, const BenchmarkParams& p) {
  require(p.channels >= 1 && p.spatial >= 1, "channels and spatial extent must be positive");
  Builder b;
  switch (family) {
    case BenchmarkFamily::PlainChain: {
      require(p.depth >= 1, "plain_chain depth must be positive");
      int cur = b.input(p.channels, p.spatial);
      for (int i = 0; i < p.depth; ++i) {
        cur = b.conv({cur}, 3, 1, p.channels);
        if (p.pool_every > 0 && (i + 1) % p.pool_every == 0 && i + 1 < p.depth) cur = b.pool(cur, 2, 2);
      }
      return b.build();
    }
    case BenchmarkFamily::Diamond: {
      const int a = b.input(p.channels, p.spatial);
      const int l = b.conv({a}, 3, 1, p.channels);
      const int r = b.conv({a}, 1, 1, p.channels);
      b.eltwise({l, r});
      return b.build();
    }
    case BenchmarkFamily::InceptionBlock: {
      const std::int64_t c = std::max(1, p.channels / 2);
      const int in = b.input(p.channels, p.spatial);
      const int b1 = b.conv({in}, 1, 1, c);
      const int b2 = b.conv({b.conv({in}, 1, 1, c)}, 3, 1, c);
      const int b3 = b.conv({b.conv({in}, 1, 1, c)}, 5, 1, c);
      const int b4 = b.conv({b.pool(in, 3, 1)}, 1, 1, c);
      b.conv({b1, b2, b3, b4}, 1, 1, p.channels);
      return b.build();
    }
    case BenchmarkFamily::ResidualBlock: {
      require(p.depth >= 1, "residual_block count must be positive");
      const std::int64_t mid = std::max(1, p.channels / 4);
      int cur = b.input(p.channels, p.spatial);
      for (int i = 0; i < p.depth; ++i) {
        const int x = b.conv({cur}, 1, 1, mid);
        const int y = b.conv({x}, 3, 1, mid);
        const int z = b.conv({y}, 1, 1, p.channels);
        cur = b.eltwise({cur, z});
      }
      return b.build();
    }
    case BenchmarkFamily::RandWire:
      return randwire(p);
  }
  throw Error(ErrorKind::InvalidParams, "unknown benchmark family");
}

}  // namespace memcoex
