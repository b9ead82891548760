#pragma once

#include <string>

#include "graphflow/graph.hpp"

namespace graphflow {

/// Parses the graph-spec document. Unknown or missing fields and non-finite
/// numbers are rejected with Error(parse_error).
MetricGraph graph_from_json(const std::string& text);

/// Canonical serialization; stable field order, round-trips exactly.
std::string graph_to_json(const MetricGraph& g);

MetricGraph load_graph_file(const std::string& path);
void save_graph_file(const MetricGraph& g, const std::string& path);

}  // namespace graphflow
