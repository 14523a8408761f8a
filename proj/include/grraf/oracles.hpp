#pragma once

#include <chrono>
#include <optional>
#include <stop_token>
#include <vector>

#include "grraf/graph.hpp"
#include "grraf/tasks.hpp"

/// Exact reference solvers and answer checkers for the ten benchmark tasks.
/// Every function is pure over an immutable graph.
namespace grraf::oracles {

/// Directed: any directed cycle (a self-loop counts). Undirected: any cycle of
/// length >= 3; a single edge or a self-loop is not a cycle.
bool detect_cycle(const PropertyGraph& g);

/// Reachability u ~> v following edge direction. Throws ContractError on bad ids.
bool is_connected(const PropertyGraph& g, NodeId u, NodeId v);

/// 2-colorable with no monochromatic edge, ignoring edge direction.
bool is_bipartite(const PropertyGraph& g);

/// Kahn's algorithm, smallest ready node first. nullopt iff g has a directed cycle.
/// Throws ContractError for undirected input.
std::optional<NodeSequence> topological_sort(const PropertyGraph& g);

struct ShortestPath {
    NodeSequence path;
    Rational length;
};

/// Dijkstra; a missing edge weight counts as 1. nullopt iff dst is unreachable.
std::optional<ShortestPath> shortest_path(const PropertyGraph& g, NodeId src, NodeId dst);

/// Max over mutually adjacent triples of the summed node weights, edge direction
/// ignored. Throws ContractError if any node lacks a weight.
std::optional<Rational> max_triangle_sum(const PropertyGraph& g);

/// Capacity of an edge for flow problems: capacity, else weight. Throws if neither.
Rational flow_capacity(const EdgeRecord& e);

/// Edmonds-Karp over the full residual graph (backward arcs included).
Rational max_flow(const PropertyGraph& g, NodeId s, NodeId t);

enum class MatchVerdict { found, not_found, timed_out };

struct MatchOptions {
    /// Non-induced by default: pattern edges must map onto edges; extra target
    /// edges between mapped nodes are allowed.
    bool induced = false;
};

/// Backtracking subgraph isomorphism with degree pruning. Checks the budget and
/// the stop token cooperatively.
MatchVerdict subgraph_match(const PropertyGraph& g, const PropertyGraph& pattern,
                            std::chrono::nanoseconds budget, MatchOptions options = {},
                            std::stop_token stop = {});

/// Self-loops count once toward each. Throws ContractError for undirected input.
std::int64_t indegree(const PropertyGraph& g, NodeId v);
std::int64_t outdegree(const PropertyGraph& g, NodeId v);

/// Dispatches to the task's oracle. Subgraph matching returns nullopt on time-out.
std::optional<TaskAnswer> solve(TaskKind task, const PropertyGraph& g, const QuestionParams& params,
                                std::chrono::nanoseconds budget = std::chrono::seconds(60));

/// Task-aware verdict: topological orders are validated rather than compared,
/// shortest paths must be valid and optimal, numbers compare exactly.
/// Throws ContractError when the answer's tag does not fit the task.
bool check_answer(TaskKind task, const PropertyGraph& g, const QuestionParams& params, const TaskAnswer& produced);

/// Same verdict, using a precomputed oracle answer instead of re-solving.
bool check_answer(TaskKind task, const PropertyGraph& g, const QuestionParams& params, const TaskAnswer& produced,
                  const TaskAnswer& expected);

/// Known-wrong strategies kept as regression references.
namespace flawed {

/// Ford-Fulkerson without backward residual arcs: depth-first augmenting paths
/// (smallest neighbor first) over forward edges only, so earlier flow can never
/// be rerouted.
Rational max_flow_without_residuals(const PropertyGraph& g, NodeId s, NodeId t);

/// Orders nodes by breadth-first spanning trees grown from zero-indegree roots.
NodeSequence topological_sort_by_spanning_tree(const PropertyGraph& g);

}  // namespace flawed

}  // namespace grraf::oracles
