#include "grraf/oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

#include "grraf/errors.hpp"

namespace grraf::oracles {

namespace {

void require_node(const PropertyGraph& g, NodeId v) {
    if (!g.valid_node(v)) throw ContractError("invalid node id " + std::to_string(v));
}

void require_directed(const PropertyGraph& g, const char* what) {
    if (!g.directed()) throw ContractError(std::string(what) + " requires a directed graph");
}

Rational edge_length(const EdgeRecord& e) {
    return e.weight.value_or(Rational(1));
}

std::size_t idx(NodeId v) {
    return static_cast<std::size_t>(v);
}

// Neighbors in either direction, deduplicated, self excluded.
std::vector<std::vector<NodeId>> undirected_adjacency(const PropertyGraph& g) {
    std::vector<std::vector<NodeId>> adj(g.node_count());
    for (const auto& e : g.edges()) {
        if (e.u == e.v) continue;
        adj[idx(e.u)].push_back(e.v);
        adj[idx(e.v)].push_back(e.u);
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

std::optional<NodeId> param(const std::optional<NodeId>& p, const char* name) {
    if (!p) throw ContractError(std::string("question is missing parameter '") + name + "'");
    return p;
}

}  // namespace

bool detect_cycle(const PropertyGraph& g) {
    const auto n = g.node_count();
    if (!g.directed()) {
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        for (const auto& e : g.edges()) {
            if (e.u == e.v) continue;
            auto a = find(idx(e.u));
            auto b = find(idx(e.v));
            if (a == b) return true;
            parent[a] = b;
        }
        return false;
    }

    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<std::uint8_t> state(n, 0);
    std::vector<std::pair<NodeId, std::size_t>> stack;
    for (std::size_t root = 0; root < n; ++root) {
        if (state[root] != 0) continue;
        stack.emplace_back(static_cast<NodeId>(root), 0);
        state[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            auto out = g.out(v);
            if (next < out.size()) {
                NodeId w = out[next++].node;
                if (state[idx(w)] == 1) return true;
                if (state[idx(w)] == 0) {
                    state[idx(w)] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                state[idx(v)] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

bool is_connected(const PropertyGraph& g, NodeId u, NodeId v) {
    require_node(g, u);
    require_node(g, v);
    if (u == v) return true;
    std::vector<bool> seen(g.node_count(), false);
    std::deque<NodeId> queue{u};
    seen[idx(u)] = true;
    while (!queue.empty()) {
        NodeId x = queue.front();
        queue.pop_front();
        for (const auto& a : g.out(x)) {
            if (a.node == v) return true;
            if (!seen[idx(a.node)]) {
                seen[idx(a.node)] = true;
                queue.push_back(a.node);
            }
        }
    }
    return false;
}

bool is_bipartite(const PropertyGraph& g) {
    if (g.has_self_loops()) return false;
    const auto adj = undirected_adjacency(g);
    std::vector<int> color(g.node_count(), -1);
    for (std::size_t root = 0; root < g.node_count(); ++root) {
        if (color[root] != -1) continue;
        color[root] = 0;
        std::deque<std::size_t> queue{root};
        while (!queue.empty()) {
            auto x = queue.front();
            queue.pop_front();
            for (NodeId w : adj[x]) {
                if (color[idx(w)] == -1) {
                    color[idx(w)] = 1 - color[x];
                    queue.push_back(idx(w));
                } else if (color[idx(w)] == color[x]) {
                    return false;
                }
            }
        }
    }
    return true;
}

std::optional<NodeSequence> topological_sort(const PropertyGraph& g) {
    require_directed(g, "topological sort");
    std::vector<std::size_t> indeg(g.node_count(), 0);
    for (const auto& e : g.edges()) ++indeg[idx(e.v)];
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (indeg[v] == 0) ready.push(static_cast<NodeId>(v));
    NodeSequence order;
    order.reserve(g.node_count());
    while (!ready.empty()) {
        NodeId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (const auto& a : g.out(v)) {
            if (--indeg[idx(a.node)] == 0) ready.push(a.node);
        }
    }
    if (order.size() != g.node_count()) return std::nullopt;
    return order;
}

std::optional<ShortestPath> shortest_path(const PropertyGraph& g, NodeId src, NodeId dst) {
    require_node(g, src);
    require_node(g, dst);
    const auto n = g.node_count();
    std::vector<std::optional<Rational>> dist(n);
    std::vector<NodeId> parent(n, -1);
    std::vector<bool> done(n, false);
    using Item = std::pair<Rational, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[idx(src)] = Rational(0);
    heap.emplace(Rational(0), src);
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (done[idx(v)]) continue;
        done[idx(v)] = true;
        if (v == dst) break;
        for (const auto& a : g.out(v)) {
            Rational nd = d + edge_length(g.edge(a.edge));
            auto& cur = dist[idx(a.node)];
            if (!done[idx(a.node)] && (!cur || nd < *cur)) {
                cur = nd;
                parent[idx(a.node)] = v;
                heap.emplace(nd, a.node);
            }
        }
    }
    if (!dist[idx(dst)]) return std::nullopt;
    ShortestPath result{{}, *dist[idx(dst)]};
    for (NodeId v = dst; v != -1; v = (v == src ? -1 : parent[idx(v)])) result.path.push_back(v);
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

std::optional<Rational> max_triangle_sum(const PropertyGraph& g) {
    if (!g.all_nodes_weighted()) throw ContractError("maximum triangle sum requires every node to have a weight");
    const auto adj = undirected_adjacency(g);
    std::optional<Rational> best;
    for (std::size_t a = 0; a < adj.size(); ++a) {
        for (NodeId b : adj[a]) {
            if (idx(b) <= a) continue;
            // intersect neighbor lists above b
            const auto& la = adj[a];
            const auto& lb = adj[idx(b)];
            auto ia = std::upper_bound(la.begin(), la.end(), b);
            auto ib = std::upper_bound(lb.begin(), lb.end(), b);
            while (ia != la.end() && ib != lb.end()) {
                if (*ia < *ib) {
                    ++ia;
                } else if (*ib < *ia) {
                    ++ib;
                } else {
                    Rational sum = *g.node_weight(static_cast<NodeId>(a)) + *g.node_weight(b) + *g.node_weight(*ia);
                    if (!best || sum > *best) best = sum;
                    ++ia;
                    ++ib;
                }
            }
        }
    }
    return best;
}

Rational flow_capacity(const EdgeRecord& e) {
    if (e.capacity) return *e.capacity;
    if (e.weight) return *e.weight;
    throw ContractError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") has no capacity");
}

Rational max_flow(const PropertyGraph& g, NodeId s, NodeId t) {
    require_directed(g, "maximum flow");
    require_node(g, s);
    require_node(g, t);
    if (s == t) throw ContractError("maximum flow requires distinct source and sink");

    struct Arc {
        std::size_t to;
        std::size_t rev;
        Rational residual;
    };
    std::vector<std::vector<Arc>> arcs(g.node_count());
    for (const auto& e : g.edges()) {
        if (e.u == e.v) continue;
        auto u = idx(e.u), v = idx(e.v);
        arcs[u].push_back(Arc{v, arcs[v].size(), flow_capacity(e)});
        arcs[v].push_back(Arc{u, arcs[u].size() - 1, Rational(0)});
    }

    Rational total(0);
    std::vector<std::pair<std::size_t, std::size_t>> via(g.node_count());  // (node, arc index)
    while (true) {
        std::vector<bool> seen(g.node_count(), false);
        std::deque<std::size_t> queue{idx(s)};
        seen[idx(s)] = true;
        while (!queue.empty() && !seen[idx(t)]) {
            auto x = queue.front();
            queue.pop_front();
            for (std::size_t i = 0; i < arcs[x].size(); ++i) {
                const auto& arc = arcs[x][i];
                if (arc.residual > 0 && !seen[arc.to]) {
                    seen[arc.to] = true;
                    via[arc.to] = {x, i};
                    queue.push_back(arc.to);
                }
            }
        }
        if (!seen[idx(t)]) break;
        std::optional<Rational> bottleneck;
        for (auto v = idx(t); v != idx(s); v = via[v].first) {
            const auto& arc = arcs[via[v].first][via[v].second];
            if (!bottleneck || arc.residual < *bottleneck) bottleneck = arc.residual;
        }
        for (auto v = idx(t); v != idx(s); v = via[v].first) {
            auto& arc = arcs[via[v].first][via[v].second];
            arc.residual -= *bottleneck;
            arcs[arc.to][arc.rev].residual += *bottleneck;
        }
        total += *bottleneck;
    }
    return total;
}

MatchVerdict subgraph_match(const PropertyGraph& g, const PropertyGraph& pattern, std::chrono::nanoseconds budget,
                            MatchOptions options, std::stop_token stop) {
    if (g.directed() != pattern.directed())
        throw ContractError("pattern and target graph must agree on directedness");
    const auto deadline = std::chrono::steady_clock::now() + budget;
    const std::size_t k = pattern.node_count();
    if (k == 0) return MatchVerdict::found;
    if (k > g.node_count()) return MatchVerdict::not_found;

    auto out_deg = [](const PropertyGraph& h, NodeId v) { return h.out(v).size(); };
    auto in_deg = [](const PropertyGraph& h, NodeId v) { return h.in(v).size(); };

    // Matching order: highest degree first, then most links into the prefix.
    std::vector<NodeId> order;
    std::vector<bool> placed(k, false);
    std::vector<std::size_t> links(k, 0);
    auto degree = [&](NodeId p) { return out_deg(pattern, p) + (pattern.directed() ? in_deg(pattern, p) : 0); };
    while (order.size() < k) {
        NodeId pick = -1;
        for (std::size_t p = 0; p < k; ++p) {
            if (placed[p]) continue;
            if (pick == -1 || links[p] > links[idx(pick)] ||
                (links[p] == links[idx(pick)] && degree(static_cast<NodeId>(p)) > degree(pick)))
                pick = static_cast<NodeId>(p);
        }
        placed[idx(pick)] = true;
        order.push_back(pick);
        for (const auto& a : pattern.out(pick)) ++links[idx(a.node)];
        if (pattern.directed())
            for (const auto& a : pattern.in(pick)) ++links[idx(a.node)];
    }
    std::vector<std::size_t> position(k);
    for (std::size_t i = 0; i < k; ++i) position[idx(order[i])] = i;

    // For each depth, the earlier pattern nodes it must be linked to.
    struct Link {
        std::size_t depth;
        bool forward;  // pattern edge order[d] -> order[depth]
    };
    std::vector<std::vector<Link>> anchors(k);
    for (std::size_t d = 0; d < k; ++d) {
        NodeId p = order[d];
        for (const auto& a : pattern.out(p))
            if (a.node != p && position[idx(a.node)] < d) anchors[d].push_back({position[idx(a.node)], false});
        if (pattern.directed())
            for (const auto& a : pattern.in(p))
                if (a.node != p && position[idx(a.node)] < d) anchors[d].push_back({position[idx(a.node)], true});
    }

    std::vector<NodeId> mapped(k, -1);
    std::vector<bool> used(g.node_count(), false);
    std::vector<std::vector<NodeId>> candidates(k);
    std::vector<std::size_t> cursor(k, 0);
    std::uint64_t steps = 0;

    auto feasible = [&](std::size_t depth, NodeId c) {
        NodeId p = order[depth];
        if (used[idx(c)]) return false;
        if (out_deg(g, c) < out_deg(pattern, p) || in_deg(g, c) < in_deg(pattern, p)) return false;
        if (pattern.has_edge(p, p) && !g.has_edge(c, c)) return false;
        if (options.induced && !pattern.has_edge(p, p) && g.has_edge(c, c)) return false;
        for (const auto& link : anchors[depth]) {
            NodeId m = mapped[link.depth];
            if (link.forward ? !g.has_edge(m, c) : !g.has_edge(c, m)) return false;
        }
        if (options.induced) {
            for (std::size_t d = 0; d < depth; ++d) {
                NodeId q = order[d];
                if (pattern.has_edge(p, q) != g.has_edge(c, mapped[d])) return false;
                if (pattern.has_edge(q, p) != g.has_edge(mapped[d], c)) return false;
            }
        }
        return true;
    };

    auto fill = [&](std::size_t depth) {
        auto& list = candidates[depth];
        list.clear();
        cursor[depth] = 0;
        if (anchors[depth].empty()) {
            list.resize(g.node_count());
            std::iota(list.begin(), list.end(), NodeId{0});
            return;
        }
        const auto& link = anchors[depth].front();
        NodeId m = mapped[link.depth];
        for (const auto& a : (link.forward ? g.out(m) : g.in(m))) list.push_back(a.node);
    };

    std::size_t depth = 0;
    fill(0);
    while (true) {
        if ((++steps & 0x3ff) == 0) {
            if (stop.stop_requested() || std::chrono::steady_clock::now() >= deadline) return MatchVerdict::timed_out;
        }
        auto& list = candidates[depth];
        bool advanced = false;
        while (cursor[depth] < list.size()) {
            NodeId c = list[cursor[depth]++];
            if (!feasible(depth, c)) continue;
            mapped[depth] = c;
            used[idx(c)] = true;
            if (depth + 1 == k) return MatchVerdict::found;
            ++depth;
            fill(depth);
            advanced = true;
            break;
        }
        if (advanced) continue;
        if (depth == 0) return MatchVerdict::not_found;
        --depth;
        used[idx(mapped[depth])] = false;
        mapped[depth] = -1;
    }
}

std::int64_t indegree(const PropertyGraph& g, NodeId v) {
    require_directed(g, "indegree");
    require_node(g, v);
    return static_cast<std::int64_t>(g.in(v).size());
}

std::int64_t outdegree(const PropertyGraph& g, NodeId v) {
    require_directed(g, "outdegree");
    require_node(g, v);
    return static_cast<std::int64_t>(g.out(v).size());
}

std::optional<TaskAnswer> solve(TaskKind task, const PropertyGraph& g, const QuestionParams& params,
                                std::chrono::nanoseconds budget) {
    switch (task) {
        case TaskKind::cycle_detection: return TaskAnswer{detect_cycle(g)};
        case TaskKind::connectivity:
            return TaskAnswer{is_connected(g, *param(params.source, "source"), *param(params.target, "target"))};
        case TaskKind::bipartite_check: return TaskAnswer{is_bipartite(g)};
        case TaskKind::topological_sort: {
            auto order = topological_sort(g);
            return order ? TaskAnswer{*order} : TaskAnswer{NoAnswer{}};
        }
        case TaskKind::shortest_path: {
            auto sp = shortest_path(g, *param(params.source, "source"), *param(params.target, "target"));
            return sp ? TaskAnswer{PathAnswer{sp->path, sp->length}} : TaskAnswer{NoAnswer{}};
        }
        case TaskKind::max_triangle_sum: {
            auto best = max_triangle_sum(g);
            return best ? TaskAnswer{*best} : TaskAnswer{NoAnswer{}};
        }
        case TaskKind::max_flow:
            return TaskAnswer{max_flow(g, *param(params.source, "source"), *param(params.target, "target"))};
        case TaskKind::subgraph_matching: {
            if (!params.pattern) throw ContractError("question is missing parameter 'pattern'");
            auto verdict = subgraph_match(g, *params.pattern, budget);
            if (verdict == MatchVerdict::timed_out) return std::nullopt;
            return TaskAnswer{verdict == MatchVerdict::found};
        }
        case TaskKind::indegree: return TaskAnswer{indegree(g, *param(params.node, "node"))};
        case TaskKind::outdegree: return TaskAnswer{outdegree(g, *param(params.node, "node"))};
    }
    throw ContractError("unknown task");
}

namespace {

bool valid_topological_order(const PropertyGraph& g, const NodeSequence& order) {
    if (order.size() != g.node_count()) return false;
    std::vector<std::size_t> pos(g.node_count(), g.node_count());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!g.valid_node(order[i]) || pos[idx(order[i])] != g.node_count()) return false;
        pos[idx(order[i])] = i;
    }
    return std::all_of(g.edges().begin(), g.edges().end(),
                       [&](const EdgeRecord& e) { return pos[idx(e.u)] < pos[idx(e.v)]; });
}

std::optional<Rational> path_weight(const PropertyGraph& g, const NodeSequence& path) {
    std::vector<bool> seen(g.node_count(), false);
    Rational total(0);
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!g.valid_node(path[i]) || seen[idx(path[i])]) return std::nullopt;
        seen[idx(path[i])] = true;
        if (i == 0) continue;
        const EdgeRecord* e = g.find_edge(path[i - 1], path[i]);
        if (e == nullptr) return std::nullopt;
        total += edge_length(*e);
    }
    return total;
}

std::optional<Rational> as_rational(const TaskAnswer& a) {
    if (auto r = std::get_if<Rational>(&a)) return *r;
    if (auto i = std::get_if<std::int64_t>(&a)) return Rational(*i);
    return std::nullopt;
}

}  // namespace

bool check_answer(TaskKind task, const PropertyGraph& g, const QuestionParams& params, const TaskAnswer& produced) {
    if (!shape_accepts(task, produced))
        throw ContractError("answer tag does not match task " + std::string(task_name(task)));
    auto expected = solve(task, g, params);
    if (!expected) throw ContractError("oracle timed out; cannot judge the answer");
    return check_answer(task, g, params, produced, *expected);
}

bool check_answer(TaskKind task, const PropertyGraph& g, const QuestionParams& params, const TaskAnswer& produced,
                  const TaskAnswer& expected) {
    if (!shape_accepts(task, produced))
        throw ContractError("answer tag does not match task " + std::string(task_name(task)));
    const bool expected_none = std::holds_alternative<NoAnswer>(expected);
    const bool produced_none = std::holds_alternative<NoAnswer>(produced);
    switch (answer_shape(task)) {
        case AnswerShape::boolean:
        case AnswerShape::integer: return produced == expected;
        case AnswerShape::rational:
            if (expected_none || produced_none) return expected_none == produced_none;
            return as_rational(produced) == as_rational(expected);
        case AnswerShape::order:
            if (expected_none || produced_none) return expected_none == produced_none;
            return valid_topological_order(g, std::get<NodeSequence>(produced));
        case AnswerShape::path: {
            if (expected_none || produced_none) return expected_none == produced_none;
            const auto& p = std::get<PathAnswer>(produced);
            const auto& optimum = *std::get<PathAnswer>(expected).weight;
            if (p.path.empty() || p.path.front() != *params.source || p.path.back() != *params.target) return false;
            auto w = path_weight(g, p.path);
            if (!w || *w != optimum) return false;
            return !p.weight || *p.weight == optimum;
        }
    }
    return false;
}

namespace flawed {

Rational max_flow_without_residuals(const PropertyGraph& g, NodeId s, NodeId t) {
    require_directed(g, "maximum flow");
    require_node(g, s);
    require_node(g, t);
    if (s == t) throw ContractError("maximum flow requires distinct source and sink");
    std::vector<Rational> remaining;
    remaining.reserve(g.edge_count());
    for (const auto& e : g.edges()) remaining.push_back(flow_capacity(e));

    Rational total(0);
    while (true) {
        // depth-first, smallest neighbor first, forward edges only
        std::vector<bool> seen(g.node_count(), false);
        std::vector<std::pair<NodeId, std::size_t>> stack{{s, 0}};
        std::vector<std::size_t> path_edges;
        seen[idx(s)] = true;
        bool reached = false;
        while (!stack.empty() && !reached) {
            auto& [v, next] = stack.back();
            auto out = g.out(v);
            if (next >= out.size()) {
                stack.pop_back();
                if (!path_edges.empty()) path_edges.pop_back();
                continue;
            }
            const auto& a = out[next++];
            if (seen[idx(a.node)] || remaining[a.edge] <= 0) continue;
            seen[idx(a.node)] = true;
            path_edges.push_back(a.edge);
            if (a.node == t) {
                reached = true;
            } else {
                stack.emplace_back(a.node, 0);
            }
        }
        if (!reached) break;
        Rational bottleneck = remaining[path_edges.front()];
        for (auto e : path_edges) bottleneck = std::min(bottleneck, remaining[e]);
        for (auto e : path_edges) remaining[e] -= bottleneck;
        total += bottleneck;
    }
    return total;
}

NodeSequence topological_sort_by_spanning_tree(const PropertyGraph& g) {
    require_directed(g, "topological sort");
    NodeSequence order;
    std::vector<bool> seen(g.node_count(), false);
    auto grow = [&](NodeId root) {
        std::deque<NodeId> queue{root};
        seen[idx(root)] = true;
        while (!queue.empty()) {
            NodeId v = queue.front();
            queue.pop_front();
            order.push_back(v);
            for (const auto& a : g.out(v)) {
                if (!seen[idx(a.node)]) {
                    seen[idx(a.node)] = true;
                    queue.push_back(a.node);
                }
            }
        }
    };
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (!seen[v] && g.in(static_cast<NodeId>(v)).empty()) grow(static_cast<NodeId>(v));
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (!seen[v]) grow(static_cast<NodeId>(v));
    return order;
}

}  // namespace flawed

}  // namespace grraf::oracles
