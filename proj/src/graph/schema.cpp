#include "grraf/schema.hpp"

#include <algorithm>

namespace grraf {

std::string_view to_string(PropertyKind kind) {
    switch (kind) {
        case PropertyKind::integer: return "integer";
        case PropertyKind::rational: return "rational";
        case PropertyKind::text: return "text";
    }
    return "unknown";
}

GraphSchema extract_schema(const PropertyGraph& g) {
    GraphSchema s;
    s.directed = g.directed();
    if (g.has_node_weights()) s.node_properties.push_back({"weight", PropertyKind::rational});
    if (g.any_edge_capacity()) s.edge_properties.push_back({"capacity", PropertyKind::rational});
    if (g.any_edge_weight()) s.edge_properties.push_back({"weight", PropertyKind::rational});
    auto by_name = [](const PropertySpec& a, const PropertySpec& b) { return a.name < b.name; };
    std::sort(s.node_properties.begin(), s.node_properties.end(), by_name);
    std::sort(s.edge_properties.begin(), s.edge_properties.end(), by_name);
    return s;
}

std::string render_schema(const GraphSchema& schema) {
    auto list = [](const std::vector<PropertySpec>& props) {
        if (props.empty()) return std::string("(none)");
        std::string out;
        for (const auto& p : props) {
            if (!out.empty()) out += ", ";
            out += p.name + " (" + std::string(to_string(p.kind)) + ")";
        }
        return out;
    };
    std::string out = "Graph type: ";
    out += schema.directed ? "directed" : "undirected";
    out += "\nNode properties: " + list(schema.node_properties);
    out += "\nEdge properties: " + list(schema.edge_properties);
    return out;
}

nlohmann::json schema_to_json(const GraphSchema& schema) {
    auto list = [](const std::vector<PropertySpec>& props) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : props) arr.push_back({{"name", p.name}, {"kind", std::string(to_string(p.kind))}});
        return arr;
    };
    return {{"directed", schema.directed},
            {"node_properties", list(schema.node_properties)},
            {"edge_properties", list(schema.edge_properties)}};
}

}  // namespace grraf
