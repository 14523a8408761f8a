#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grraf/rational.hpp"

namespace grraf {

using NodeId = std::int64_t;

struct EdgeRecord {
    NodeId u = 0;
    NodeId v = 0;
    std::optional<Rational> weight;
    std::optional<Rational> capacity;

    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

/// One adjacency entry: the neighbor and the index of the connecting edge.
struct Adjacent {
    NodeId node;
    std::size_t edge;
};

/// Immutable directed or undirected graph with optional node weights and
/// edge weights/capacities. Node ids are the contiguous range [0, node_count).
///
/// Built only through GraphBuilder, which enforces the invariants: valid
/// endpoints, no parallel edges ((u,v) and (v,u) coincide when undirected),
/// non-negative edge attributes. Self-loops are allowed and flagged.
class PropertyGraph {
public:
    PropertyGraph() = default;

    bool directed() const noexcept { return directed_; }
    std::size_t node_count() const noexcept { return node_weights_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const EdgeRecord> edges() const noexcept { return edges_; }
    const EdgeRecord& edge(std::size_t index) const { return edges_.at(index); }

    bool valid_node(NodeId v) const noexcept { return v >= 0 && static_cast<std::size_t>(v) < node_count(); }
    std::optional<Rational> node_weight(NodeId v) const;
    bool has_node_weights() const noexcept { return any_node_weight_; }
    bool all_nodes_weighted() const noexcept;

    /// Outgoing neighbors; for undirected graphs every incident neighbor.
    std::span<const Adjacent> out(NodeId v) const;
    /// Incoming neighbors; same as out() for undirected graphs.
    std::span<const Adjacent> in(NodeId v) const;

    /// Edge u->v (or u-v when undirected), or nullptr.
    const EdgeRecord* find_edge(NodeId u, NodeId v) const;
    bool has_edge(NodeId u, NodeId v) const { return find_edge(u, v) != nullptr; }

    bool has_self_loops() const noexcept { return self_loops_ > 0; }
    bool any_edge_weight() const noexcept;
    bool any_edge_capacity() const noexcept;

    /// Structural equality: directedness, node weights, and the edge set with
    /// attributes, independent of edge insertion order.
    friend bool operator==(const PropertyGraph& a, const PropertyGraph& b);

private:
    friend class GraphBuilder;

    static std::uint64_t key(NodeId u, NodeId v) noexcept {
        return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
    }
    std::uint64_t edge_key(NodeId u, NodeId v) const noexcept {
        if (!directed_ && u > v) std::swap(u, v);
        return key(u, v);
    }

    bool directed_ = false;
    bool any_node_weight_ = false;
    std::size_t self_loops_ = 0;
    std::vector<std::optional<Rational>> node_weights_;
    std::vector<EdgeRecord> edges_;
    std::vector<std::size_t> out_offsets_{0};
    std::vector<Adjacent> out_adj_;
    std::vector<std::size_t> in_offsets_{0};
    std::vector<Adjacent> in_adj_;
    std::unordered_map<std::uint64_t, std::size_t> edge_index_;
};

/// Accumulates nodes and edges, then validates everything in build().
class GraphBuilder {
public:
    GraphBuilder(bool directed, std::size_t node_count);

    GraphBuilder& node_weight(NodeId v, Rational weight);
    GraphBuilder& edge(NodeId u, NodeId v, std::optional<Rational> weight = std::nullopt,
                       std::optional<Rational> capacity = std::nullopt);
    GraphBuilder& edge(EdgeRecord record);

    /// Throws ValidationError on any invariant violation.
    PropertyGraph build() &&;
    /// Copying variant for builder chains, e.g. GraphBuilder(..).edge(0, 1).build().
    PropertyGraph build() const& { return GraphBuilder(*this).build(); }

private:
    bool directed_;
    std::size_t node_count_;
    std::vector<std::pair<NodeId, Rational>> weights_;
    std::vector<EdgeRecord> edges_;
};

}  // namespace grraf
