// SPDX-License-Identifier: Apache-2.0
// Copyright The memcoex Authors

#pragma once

#include <string>

#include "json.hpp"

#include "memcoex/graph.hpp"

namespace memcoex {

using json = nlohmann::ordered_json;

ComputationGraph graph_from_json(const json& doc);
json graph_to_json(const ComputationGraph& g);
ComputationGraph load_graph(const std::string& path);
void save_graph(const ComputationGraph& g, const std::string& path);

PartitionScheme partition_from_json(const ComputationGraph& g, const json& doc);
json partition_to_json(const ComputationGraph& g, const PartitionScheme& p);
PartitionScheme load_partition(const ComputationGraph& g, const std::string& path);

json read_json_file(const std::string& path);
// Writes with a trailing newline; throws Config on I/O failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace memcoex
