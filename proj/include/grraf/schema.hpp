#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "grraf/graph.hpp"

namespace grraf {

enum class PropertyKind { integer, rational, text };

struct PropertySpec {
    std::string name;
    PropertyKind kind;

    friend bool operator==(const PropertySpec&, const PropertySpec&) = default;
};

/// Property names present on a graph's nodes and edges, sorted by name.
struct GraphSchema {
    bool directed = false;
    std::vector<PropertySpec> node_properties;
    std::vector<PropertySpec> edge_properties;

    friend bool operator==(const GraphSchema&, const GraphSchema&) = default;
};

std::string_view to_string(PropertyKind kind);

/// Lists exactly the properties witnessed somewhere in g.
GraphSchema extract_schema(const PropertyGraph& g);

/// Prompt-facing description. Depends only on the schema, never on graph size.
std::string render_schema(const GraphSchema& schema);

nlohmann::json schema_to_json(const GraphSchema& schema);

}  // namespace grraf
