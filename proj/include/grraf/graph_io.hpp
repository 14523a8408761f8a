#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "grraf/graph.hpp"

namespace grraf {

/// Text encodings a graph can be read from and written to.
///
/// edge_list_prose:
///     (directed|undirected) ; nodes: N [; weights: v=w ...] ; edges: (u,v)[w=x][c=y] ...
/// canonical_json:
///     {"directed": bool, "nodes": [{"id": int, "weight": number?}...],
///      "edges": [{"u": int, "v": int, "weight": number?, "capacity": number?}...]}
///
/// Both are whitespace and newline insensitive.
enum class Dialect { edge_list_prose, canonical_json };

std::string_view to_string(Dialect d);
/// Accepts "text", "prose", "edge-list-prose", "json", "canonical-json".
Dialect parse_dialect(std::string_view name);

/// Throws ParseError (with line/column) on syntax errors, ValidationError on
/// invariant violations.
PropertyGraph parse_graph_text(std::string_view text, Dialect dialect);

std::string serialize(const PropertyGraph& g, Dialect dialect);

nlohmann::json graph_to_json(const PropertyGraph& g);
PropertyGraph graph_from_json(const nlohmann::json& j);

/// Rationals with a finite decimal expansion become JSON numbers; anything
/// else is written as the string "p/q".
nlohmann::json rational_to_json(const Rational& r);
/// Accepts integers, decimal numbers, and "p/q" / decimal strings.
std::optional<Rational> rational_from_json(const nlohmann::json& j);

/// Reads a graph file, sniffing the dialect from its first non-space byte.
PropertyGraph load_graph_file(const std::filesystem::path& path);
void save_graph_file(const PropertyGraph& g, const std::filesystem::path& path, Dialect dialect);

}  // namespace grraf
