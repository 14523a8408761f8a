#include "grraf/graph.hpp"

#include <algorithm>
#include <tuple>

#include "grraf/errors.hpp"

namespace grraf {

namespace {

constexpr std::size_t kMaxNodes = std::size_t{1} << 31;

std::string edge_text(NodeId u, NodeId v) {
    return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
}

}  // namespace

std::optional<Rational> PropertyGraph::node_weight(NodeId v) const {
    if (!valid_node(v)) throw ContractError("invalid node id " + std::to_string(v));
    return node_weights_[static_cast<std::size_t>(v)];
}

bool PropertyGraph::all_nodes_weighted() const noexcept {
    return std::all_of(node_weights_.begin(), node_weights_.end(), [](const auto& w) { return w.has_value(); });
}

std::span<const Adjacent> PropertyGraph::out(NodeId v) const {
    if (!valid_node(v)) throw ContractError("invalid node id " + std::to_string(v));
    auto i = static_cast<std::size_t>(v);
    return std::span<const Adjacent>(out_adj_).subspan(out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]);
}

std::span<const Adjacent> PropertyGraph::in(NodeId v) const {
    if (!directed_) return out(v);
    if (!valid_node(v)) throw ContractError("invalid node id " + std::to_string(v));
    auto i = static_cast<std::size_t>(v);
    return std::span<const Adjacent>(in_adj_).subspan(in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]);
}

const EdgeRecord* PropertyGraph::find_edge(NodeId u, NodeId v) const {
    if (!valid_node(u) || !valid_node(v)) return nullptr;
    auto it = edge_index_.find(edge_key(u, v));
    return it == edge_index_.end() ? nullptr : &edges_[it->second];
}

bool PropertyGraph::any_edge_weight() const noexcept {
    return std::any_of(edges_.begin(), edges_.end(), [](const EdgeRecord& e) { return e.weight.has_value(); });
}

bool PropertyGraph::any_edge_capacity() const noexcept {
    return std::any_of(edges_.begin(), edges_.end(), [](const EdgeRecord& e) { return e.capacity.has_value(); });
}

bool operator==(const PropertyGraph& a, const PropertyGraph& b) {
    if (a.directed_ != b.directed_ || a.node_weights_ != b.node_weights_ || a.edges_.size() != b.edges_.size())
        return false;
    for (const auto& e : a.edges_) {
        const EdgeRecord* other = b.find_edge(e.u, e.v);
        if (other == nullptr || other->weight != e.weight || other->capacity != e.capacity) return false;
    }
    return true;
}

GraphBuilder::GraphBuilder(bool directed, std::size_t node_count) : directed_(directed), node_count_(node_count) {
    if (node_count > kMaxNodes) throw ValidationError("node count too large");
}

GraphBuilder& GraphBuilder::node_weight(NodeId v, Rational weight) {
    weights_.emplace_back(v, weight);
    return *this;
}

GraphBuilder& GraphBuilder::edge(NodeId u, NodeId v, std::optional<Rational> weight,
                                 std::optional<Rational> capacity) {
    edges_.push_back(EdgeRecord{u, v, weight, capacity});
    return *this;
}

GraphBuilder& GraphBuilder::edge(EdgeRecord record) {
    edges_.push_back(std::move(record));
    return *this;
}

PropertyGraph GraphBuilder::build() && {
    PropertyGraph g;
    g.directed_ = directed_;
    g.node_weights_.assign(node_count_, std::nullopt);

    for (const auto& [v, w] : weights_) {
        if (!g.valid_node(v)) throw ValidationError("node weight for invalid node id " + std::to_string(v));
        auto& slot = g.node_weights_[static_cast<std::size_t>(v)];
        if (slot) throw ValidationError("duplicate weight for node " + std::to_string(v));
        slot = w;
        g.any_node_weight_ = true;
    }

    g.edges_ = std::move(edges_);
    g.edge_index_.reserve(g.edges_.size() * 2);
    std::vector<std::size_t> out_degree(node_count_, 0);
    std::vector<std::size_t> in_degree(node_count_, 0);
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
        const auto& e = g.edges_[i];
        if (!g.valid_node(e.u) || !g.valid_node(e.v))
            throw ValidationError("edge " + edge_text(e.u, e.v) + " has an endpoint outside [0, " +
                                  std::to_string(node_count_) + ")");
        if ((e.weight && *e.weight < 0) || (e.capacity && *e.capacity < 0))
            throw ValidationError("edge " + edge_text(e.u, e.v) + " has a negative attribute");
        if (!g.edge_index_.emplace(g.edge_key(e.u, e.v), i).second)
            throw ValidationError("duplicate edge " + edge_text(e.u, e.v));
        if (e.u == e.v) ++g.self_loops_;
        ++out_degree[static_cast<std::size_t>(e.u)];
        if (directed_) {
            ++in_degree[static_cast<std::size_t>(e.v)];
        } else if (e.u != e.v) {
            ++out_degree[static_cast<std::size_t>(e.v)];
        }
    }

    auto fill = [&](std::vector<std::size_t>& offsets, std::vector<Adjacent>& adj,
                    const std::vector<std::size_t>& degree, auto&& emit) {
        offsets.assign(node_count_ + 1, 0);
        for (std::size_t v = 0; v < node_count_; ++v) offsets[v + 1] = offsets[v] + degree[v];
        adj.resize(offsets.back());
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < g.edges_.size(); ++i) emit(i, cursor, adj);
        for (std::size_t v = 0; v < node_count_; ++v)
            std::sort(adj.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
                      adj.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]),
                      [](const Adjacent& a, const Adjacent& b) { return a.node < b.node; });
    };

    fill(g.out_offsets_, g.out_adj_, out_degree, [&](std::size_t i, auto& cursor, auto& adj) {
        const auto& e = g.edges_[i];
        adj[cursor[static_cast<std::size_t>(e.u)]++] = Adjacent{e.v, i};
        if (!directed_ && e.u != e.v) adj[cursor[static_cast<std::size_t>(e.v)]++] = Adjacent{e.u, i};
    });
    if (directed_) {
        fill(g.in_offsets_, g.in_adj_, in_degree, [&](std::size_t i, auto& cursor, auto& adj) {
            const auto& e = g.edges_[i];
            adj[cursor[static_cast<std::size_t>(e.v)]++] = Adjacent{e.u, i};
        });
    }
    return g;
}

}  // namespace grraf
