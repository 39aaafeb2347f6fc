// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#include "memcoex/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace memcoex {

namespace {

Extent2 read_pair(const json& node, const char* key, Extent2 fallback) {
  if (!node.contains(key)) return fallback;
  const auto& v = node.at(key);
  if (v.is_number_integer()) return {v.get<std::int64_t>(), v.get<std::int64_t>()};
  if (!v.is_array() || v.size() != 2) throw Error(ErrorKind::Parse, fmt::format("'{}' must be [h, w]", key));
  return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

}  // namespace

ComputationGraph graph_from_json(const json& doc) {
  std::vector<LayerDescriptor> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> inputs, outputs;
  try {
    for (const auto& n : doc.at("nodes")) {
      LayerDescriptor d;
      d.id = n.at("id").get<int>();
      try {
        const std::string kind = n.at("kind").get<std::string>();
        d.kind = layer_kind_from_string(kind);
        d.kernel = read_pair(n, "kernel", {1, 1});
        d.stride = read_pair(n, "stride", {1, 1});
        d.out = read_pair(n, "out_hw", {1, 1});
        d.out_channels = n.at("out_ch").get<std::int64_t>();
        d.in_channels = n.value("in_ch", d.out_channels);
        d.weight_bytes = n.value("weight_bytes", std::int64_t{0});
        d.act_bytes_per_elem = n.value("act_bytes_per_elem", std::int64_t{1});
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, fmt::format("node {}: {}", d.id, e.what()), {d.id});
      }
      nodes.push_back(d);
    }
    for (const auto& e : doc.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    if (doc.contains("inputs")) inputs = doc.at("inputs").get<std::vector<int>>();
    if (doc.contains("outputs")) outputs = doc.at("outputs").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  return ComputationGraph(std::move(nodes), std::move(edges), std::move(inputs), std::move(outputs));
}

json graph_to_json(const ComputationGraph& g) {
  json doc;
  json nodes = json::array();
  for (const auto& d : g.nodes()) {
    json n;
    n["id"] = d.id;
    n["kind"] = to_string(d.kind);
    n["kernel"] = {d.kernel.h, d.kernel.w};
    n["stride"] = {d.stride.h, d.stride.w};
    n["in_ch"] = d.in_channels;
    n["out_ch"] = d.out_channels;
    n["out_hw"] = {d.out.h, d.out.w};
    n["weight_bytes"] = d.weight_bytes;
    if (d.act_bytes_per_elem != 1) n["act_bytes_per_elem"] = d.act_bytes_per_elem;
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({g.id(u), g.id(v)});
  doc["edges"] = std::move(edges);
  json ins = json::array(), outs = json::array();
  for (NodeIndex i : g.model_inputs()) ins.push_back(g.id(i));
  for (NodeIndex i : g.model_outputs()) outs.push_back(g.id(i));
  doc["inputs"] = std::move(ins);
  doc["outputs"] = std::move(outs);
  return doc;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, fmt::format("{}: {}", path, e.what()));
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, fmt::format("cannot write '{}'", path));
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

ComputationGraph load_graph(const std::string& path) { return graph_from_json(read_json_file(path)); }

void save_graph(const ComputationGraph& g, const std::string& path) {
  write_text_file(path, graph_to_json(g).dump(1));
}

PartitionScheme partition_from_json(const ComputationGraph& g, const json& doc) {
  std::vector<int> a(g.size(), -1);
  try {
    for (const auto& [key, value] : doc.at("assignment").items()) {
      const int id = std::stoi(key);
      if (!g.has_id(id))
        throw Error(ErrorKind::InvalidPartition, fmt::format("partition names unknown node {}", id), {id});
      a[g.index_of(id)] = value.get<int>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::Parse, "partition keys must be node ids");
  }
  for (NodeIndex i = 0; i < g.size(); ++i)
    if (a[i] < 0)
      throw Error(ErrorKind::InvalidPartition, fmt::format("node {} has no subgraph", g.id(i)), {g.id(i)});
  return PartitionScheme(std::move(a));
}

json partition_to_json(const ComputationGraph& g, const PartitionScheme& p) {
  json assignment = json::object();
  for (NodeIndex i = 0; i < g.size(); ++i) assignment[std::to_string(g.id(i))] = p.of(i);
  json doc;
  doc["assignment"] = std::move(assignment);
  return doc;
}

PartitionScheme load_partition(const ComputationGraph& g, const std::string& path) {
  return partition_from_json(g, read_json_file(path));
}

}  // namespace memcoex
