#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "brute_force.hpp"
#include "grraf/errors.hpp"
#include "grraf/oracles.hpp"
#include "grraf/tasks.hpp"

using namespace grraf;
namespace o = grraf::oracles;

namespace {

PropertyGraph undirected(std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
    GraphBuilder b(false, n);
    for (auto [u, v] : edges) b.edge(u, v);
    return std::move(b).build();
}

PropertyGraph directed(std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
    GraphBuilder b(true, n);
    for (auto [u, v] : edges) b.edge(u, v);
    return std::move(b).build();
}

PropertyGraph flow_graph(std::size_t n, std::initializer_list<std::tuple<NodeId, NodeId, std::int64_t>> edges) {
    GraphBuilder b(true, n);
    for (auto [u, v, c] : edges) b.edge(u, v, std::nullopt, Rational(c));
    return std::move(b).build();
}

PropertyGraph relabel(const PropertyGraph& g, const std::vector<NodeId>& perm) {
    GraphBuilder b(g.directed(), g.node_count());
    for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
        if (auto w = g.node_weight(v)) b.node_weight(perm[static_cast<std::size_t>(v)], *w);
    for (const auto& e : g.edges())
        b.edge(perm[static_cast<std::size_t>(e.u)], perm[static_cast<std::size_t>(e.v)], e.weight, e.capacity);
    return std::move(b).build();
}

}  // namespace

TEST_SUITE("oracle examples") {
    TEST_CASE("cycle detection") {
        CHECK(o::detect_cycle(undirected(3, {{0, 1}, {1, 2}, {2, 0}})));
        CHECK_FALSE(o::detect_cycle(undirected(3, {{0, 1}, {1, 2}})));
        CHECK(o::detect_cycle(directed(3, {{0, 1}, {1, 2}, {2, 0}})));
        CHECK_FALSE(o::detect_cycle(directed(3, {{0, 1}, {0, 2}})));
        CHECK_FALSE(o::detect_cycle(undirected(2, {{0, 1}})));
        CHECK(o::detect_cycle(directed(1, {{0, 0}})));
        CHECK_FALSE(o::detect_cycle(undirected(1, {{0, 0}})));
        CHECK(o::detect_cycle(directed(2, {{0, 1}, {1, 0}})));
    }

    TEST_CASE("connectivity") {
        auto path = undirected(3, {{0, 1}, {1, 2}});
        CHECK(o::is_connected(path, 0, 2));
        CHECK_FALSE(o::is_connected(undirected(4, {{0, 1}, {2, 3}}), 0, 3));
        CHECK(o::is_connected(path, 1, 1));
        CHECK_THROWS_AS(o::is_connected(path, 0, 7), ContractError);
        auto d = directed(2, {{0, 1}});
        CHECK(o::is_connected(d, 0, 1));
        CHECK_FALSE(o::is_connected(d, 1, 0));
    }

    TEST_CASE("bipartite") {
        CHECK(o::is_bipartite(undirected(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}})));
        CHECK_FALSE(o::is_bipartite(undirected(3, {{0, 1}, {1, 2}, {2, 0}})));
        CHECK(o::is_bipartite(undirected(5, {})));
    }

    TEST_CASE("topological sort") {
        auto diamond = directed(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
        auto order = o::topological_sort(diamond);
        REQUIRE(order);
        CHECK(brute::is_topological_order(diamond, *order));
        CHECK_FALSE(o::topological_sort(directed(2, {{0, 1}, {1, 0}})));
        auto edgeless = o::topological_sort(directed(3, {}));
        REQUIRE(edgeless);
        CHECK(edgeless->size() == 3);
        CHECK_THROWS_AS(o::topological_sort(undirected(2, {{0, 1}})), ContractError);
    }

    TEST_CASE("shortest path") {
        auto sp = o::shortest_path(undirected(3, {{0, 1}, {1, 2}}), 0, 2);
        REQUIRE(sp);
        CHECK(sp->path == NodeSequence{0, 1, 2});
        CHECK(sp->length == Rational(2));

        auto weighted = GraphBuilder(false, 3).edge(0, 1, Rational(5)).edge(0, 2, Rational(1)).edge(2, 1, Rational(1)).build();
        // Every simple 0-1 path: [0,1] = 5 and [0,2,1] = 2.
        CHECK(brute::shortest_distance(weighted, 0, 1) == Rational(2));
        sp = o::shortest_path(weighted, 0, 1);
        REQUIRE(sp);
        CHECK(sp->path == NodeSequence{0, 2, 1});
        CHECK(sp->length == Rational(2));

        sp = o::shortest_path(weighted, 2, 2);
        REQUIRE(sp);
        CHECK(sp->path == NodeSequence{2});
        CHECK(sp->length == Rational(0));
        CHECK_FALSE(o::shortest_path(undirected(3, {{0, 1}}), 0, 2));
    }

    TEST_CASE("max triangle sum") {
        auto k3 = GraphBuilder(false, 3).node_weight(0, 1).node_weight(1, 1).node_weight(2, 1).edge(0, 1).edge(1, 2).edge(2, 0).build();
        CHECK(o::max_triangle_sum(k3) == Rational(3));

        auto g = GraphBuilder(false, 4)
                     .node_weight(0, 1).node_weight(1, 2).node_weight(2, 3).node_weight(3, 10)
                     .edge(0, 1).edge(1, 2).edge(2, 0).edge(2, 3)
                     .build();
        CHECK(brute::max_triangle(g) == Rational(6));
        CHECK(o::max_triangle_sum(g) == Rational(6));

        auto path = GraphBuilder(false, 3).node_weight(0, 1).node_weight(1, 1).node_weight(2, 1).edge(0, 1).edge(1, 2).build();
        CHECK_FALSE(o::max_triangle_sum(path));
        CHECK_THROWS_AS(o::max_triangle_sum(undirected(3, {{0, 1}, {1, 2}, {2, 0}})), ContractError);
    }

    TEST_CASE("max flow") {
        CHECK(o::max_flow(flow_graph(2, {{0, 1, 5}}), 0, 1) == Rational(5));
        CHECK(o::max_flow(flow_graph(4, {{0, 1, 5}, {2, 3, 5}}), 0, 3) == Rational(0));
        CHECK_THROWS_AS(o::max_flow(flow_graph(2, {{0, 1, 5}}), 1, 1), ContractError);
        CHECK_THROWS_AS(o::max_flow(flow_graph(2, {{0, 1, 5}}), 0, 9), ContractError);
    }

    TEST_CASE("max flow residual regression") {
        auto g = flow_graph(4, {{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}, {1, 2, 1}});
        CHECK(brute::min_cut(g, 0, 3) == Rational(2));
        CHECK(o::max_flow(g, 0, 3) == Rational(2));
        CHECK(o::flawed::max_flow_without_residuals(g, 0, 3) == Rational(1));
    }

    TEST_CASE("subgraph matching") {
        auto edge = directed(2, {{0, 1}});
        auto g = directed(4, {{2, 3}});
        CHECK(o::subgraph_match(g, edge, std::chrono::seconds(5)) == o::MatchVerdict::found);

        auto triangle = undirected(3, {{0, 1}, {1, 2}, {2, 0}});
        auto c4 = undirected(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
        CHECK_FALSE(brute::embeds(c4, triangle));
        CHECK(o::subgraph_match(c4, triangle, std::chrono::seconds(5)) == o::MatchVerdict::not_found);
        CHECK(o::subgraph_match(c4, c4, std::chrono::seconds(5)) == o::MatchVerdict::found);

        // Non-induced by default; induced on request.
        auto path3 = undirected(3, {{0, 1}, {1, 2}});
        CHECK(o::subgraph_match(triangle, path3, std::chrono::seconds(5)) == o::MatchVerdict::found);
        CHECK(o::subgraph_match(triangle, path3, std::chrono::seconds(5), {.induced = true}) ==
              o::MatchVerdict::not_found);
        CHECK_THROWS_AS(o::subgraph_match(c4, edge, std::chrono::seconds(5)), ContractError);
    }

    TEST_CASE("subgraph matching honours its budget") {
        // Dense 60-node target with no 12-clique embedding found quickly.
        std::mt19937_64 rng(3);
        auto g = brute::random_graph(rng, 60, 0.5, {});
        GraphBuilder pb(false, 12);
        for (NodeId a = 0; a < 12; ++a)
            for (NodeId b = a + 1; b < 12; ++b) pb.edge(a, b);
        auto clique = std::move(pb).build();
        auto start = std::chrono::steady_clock::now();
        auto verdict = o::subgraph_match(g, clique, std::chrono::milliseconds(100));
        CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(2));
        CHECK(verdict != o::MatchVerdict::found);
    }

    TEST_CASE("degrees") {
        auto g = directed(3, {{0, 1}, {2, 1}});
        CHECK(o::indegree(g, 1) == 2);
        CHECK(o::outdegree(g, 1) == 0);
        auto isolated = directed(2, {});
        CHECK(o::indegree(isolated, 0) == 0);
        CHECK(o::outdegree(isolated, 0) == 0);
        auto loop = directed(1, {{0, 0}});
        CHECK(o::indegree(loop, 0) == 1);
        CHECK(o::outdegree(loop, 0) == 1);
        CHECK_THROWS_AS(o::indegree(undirected(2, {{0, 1}}), 0), ContractError);
    }
}

TEST_SUITE("check_answer") {
    TEST_CASE("topological orders are validated, not compared") {
        auto diamond = directed(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
        QuestionParams p;
        CHECK(o::check_answer(TaskKind::topological_sort, diamond, p, NodeSequence{0, 2, 1, 3}));
        CHECK(o::check_answer(TaskKind::topological_sort, diamond, p, NodeSequence{0, 1, 2, 3}));
        CHECK_FALSE(o::check_answer(TaskKind::topological_sort, diamond, p, NodeSequence{1, 0, 2, 3}));
        CHECK_FALSE(o::check_answer(TaskKind::topological_sort, diamond, p, NodeSequence{0, 1, 2}));
    }

    TEST_CASE("shortest path must be valid and optimal") {
        auto g = GraphBuilder(false, 3).edge(0, 1, Rational(5)).edge(0, 2, Rational(1)).edge(2, 1, Rational(1)).build();
        QuestionParams p;
        p.source = 0;
        p.target = 1;
        CHECK_FALSE(o::check_answer(TaskKind::shortest_path, g, p, PathAnswer{{0, 1}, Rational(5)}));
        CHECK(o::check_answer(TaskKind::shortest_path, g, p, PathAnswer{{0, 2, 1}, Rational(2)}));
        CHECK(o::check_answer(TaskKind::shortest_path, g, p, PathAnswer{{0, 2, 1}, std::nullopt}));
        CHECK_FALSE(o::check_answer(TaskKind::shortest_path, g, p, PathAnswer{{0, 2, 1}, Rational(3)}));
        CHECK_FALSE(o::check_answer(TaskKind::shortest_path, g, p, NoAnswer{}));
    }

    TEST_CASE("booleans and numbers compare exactly; tag mismatch is a contract error") {
        auto tree = undirected(3, {{0, 1}, {1, 2}});
        QuestionParams p;
        CHECK_FALSE(o::check_answer(TaskKind::cycle_detection, tree, p, true));
        CHECK(o::check_answer(TaskKind::cycle_detection, tree, p, false));
        CHECK_THROWS_AS(o::check_answer(TaskKind::cycle_detection, tree, p, std::int64_t{1}), ContractError);
        auto g = flow_graph(2, {{0, 1, 5}});
        p.source = 0;
        p.target = 1;
        CHECK(o::check_answer(TaskKind::max_flow, g, p, std::int64_t{5}));
        CHECK(o::check_answer(TaskKind::max_flow, g, p, Rational(5)));
        CHECK_FALSE(o::check_answer(TaskKind::max_flow, g, p, Rational(9, 2)));
    }
}

TEST_SUITE("answers") {
    TEST_CASE("program values convert by task shape") {
        CHECK(answer_from_json(TaskKind::cycle_detection, true) == TaskAnswer{true});
        CHECK_FALSE(answer_from_json(TaskKind::cycle_detection, 1));
        CHECK(answer_from_json(TaskKind::max_flow, "7/2") == TaskAnswer{Rational(7, 2)});
        CHECK(answer_from_json(TaskKind::indegree, 3) == TaskAnswer{std::int64_t{3}});
        auto path = answer_from_json(TaskKind::shortest_path, nlohmann::json::parse("[[0,2,1],2]"));
        REQUIRE(path);
        CHECK(std::get<PathAnswer>(*path).path == NodeSequence{0, 2, 1});
        CHECK(answer_from_json(TaskKind::shortest_path, nullptr) == TaskAnswer{NoAnswer{}});
        CHECK(answer_from_json(TaskKind::topological_sort, nlohmann::json::parse("[2,0,1]")) ==
              TaskAnswer{NodeSequence{2, 0, 1}});
    }

    TEST_CASE("free text parsing for fallback answers") {
        CHECK(parse_answer_text(TaskKind::connectivity, "Yes, node 2 connects to node 5.") == TaskAnswer{true});
        CHECK(parse_answer_text(TaskKind::bipartite_check, "No. The graph has an odd cycle.") == TaskAnswer{false});
        CHECK(parse_answer_text(TaskKind::max_flow, "The maximum flow is 7.") == TaskAnswer{Rational(7)});
        CHECK_FALSE(parse_answer_text(TaskKind::max_flow, "I cannot determine the answer."));
    }

    TEST_CASE("json round trip") {
        for (const TaskAnswer& a : {TaskAnswer{true}, TaskAnswer{std::int64_t{4}}, TaskAnswer{Rational(1, 3)},
                                    TaskAnswer{NodeSequence{1, 2}}, TaskAnswer{PathAnswer{{0, 1}, Rational(3)}}}) {
            auto j = answer_to_json(a);
            CHECK_FALSE(j.is_discarded());
        }
        CHECK(render_answer(TaskAnswer{true}) == "yes");
    }

    TEST_CASE("task names") {
        for (TaskKind t : kAllTasks) CHECK(parse_task(task_name(t)) == t);
        CHECK_FALSE(parse_task("hamilton_path"));
        CHECK(is_polynomial(TaskKind::max_flow));
        CHECK_FALSE(is_polynomial(TaskKind::subgraph_matching));
    }
}

TEST_SUITE("oracle properties") {
    TEST_CASE("oracles agree with brute force on small random graphs") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 400; ++trial) {
            const std::size_t n = 1 + rng() % 7;
            const double p = std::array{0.2, 0.4, 0.7}[trial % 3];
            const bool dir = rng() % 2;
            auto g = brute::random_graph(rng, n, p, {.directed = dir, .self_loops = trial % 5 == 0,
                                                     .edge_weights = true, .capacities = true, .node_weights = true});
            const NodeId s = static_cast<NodeId>(rng() % n), t = static_cast<NodeId>(rng() % n);
            CHECK(o::detect_cycle(g) == brute::has_cycle(g));
            CHECK(o::is_bipartite(g) == brute::bipartite(g));
            CHECK(o::is_connected(g, s, t) == brute::reachable(g, s, t));
            CHECK(o::max_triangle_sum(g) == brute::max_triangle(g));
            auto sp = o::shortest_path(g, s, t);
            auto best = brute::shortest_distance(g, s, t);
            REQUIRE(sp.has_value() == best.has_value());
            if (sp) {
                CHECK(sp->length == *best);
                CHECK(brute::path_length(g, sp->path) == best);
                CHECK(sp->path.front() == s);
                CHECK(sp->path.back() == t);
            }
            if (dir) {
                auto order = o::topological_sort(g);
                CHECK(order.has_value() == !brute::has_cycle(g));
                if (order) CHECK(brute::is_topological_order(g, *order));
                if (s != t) CHECK(o::max_flow(g, s, t) == brute::min_cut(g, s, t));
                CHECK(o::indegree(g, s) == brute::in_degree(g, s));
                CHECK(o::outdegree(g, s) == brute::out_degree(g, s));
            }
            auto pattern = brute::random_graph(rng, 1 + rng() % 4, 0.5, {.directed = dir});
            auto verdict = o::subgraph_match(g, pattern, std::chrono::seconds(10));
            CHECK((verdict == o::MatchVerdict::found) == brute::embeds(g, pattern));
        }
    }

    TEST_CASE("adding an edge never disconnects; removing one never creates a cycle") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng() % 8;
            const bool dir = trial % 2;
            auto g = brute::random_graph(rng, n, 0.3, {.directed = dir});
            const auto u = static_cast<NodeId>(rng() % n), v = static_cast<NodeId>(rng() % n);
            const auto a = static_cast<NodeId>(rng() % n), b = static_cast<NodeId>(rng() % n);
            GraphBuilder more(dir, n);
            for (const auto& e : g.edges()) more.edge(e);
            if (a != b && !g.has_edge(a, b)) more.edge(a, b);
            auto bigger = std::move(more).build();
            if (o::is_connected(g, u, v)) CHECK(o::is_connected(bigger, u, v));

            if (g.edge_count() == 0) continue;
            const std::size_t drop = rng() % g.edge_count();
            GraphBuilder fewer(dir, n);
            for (std::size_t i = 0; i < g.edge_count(); ++i)
                if (i != drop) fewer.edge(g.edge(i));
            auto smaller = std::move(fewer).build();
            if (!o::detect_cycle(g)) CHECK_FALSE(o::detect_cycle(smaller));
        }
    }

    TEST_CASE("swapping an unconstrained adjacent pair keeps a topological order valid") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng() % 9;
            std::vector<NodeId> rank(n);
            std::iota(rank.begin(), rank.end(), 0);
            std::shuffle(rank.begin(), rank.end(), rng);
            GraphBuilder b(true, n);
            for (std::size_t u = 0; u < n; ++u)
                for (std::size_t v = 0; v < n; ++v)
                    if (rank[u] < rank[v] && rng() % 3 == 0) b.edge(static_cast<NodeId>(u), static_cast<NodeId>(v));
            auto g = std::move(b).build();
            auto order = o::topological_sort(g);
            REQUIRE(order);
            QuestionParams p;
            CHECK(o::check_answer(TaskKind::topological_sort, g, p, *order));
            for (std::size_t i = 0; i + 1 < order->size(); ++i) {
                if (g.has_edge((*order)[i], (*order)[i + 1])) continue;
                auto swapped = *order;
                std::swap(swapped[i], swapped[i + 1]);
                CHECK(o::check_answer(TaskKind::topological_sort, g, p, swapped));
            }
        }
    }

    TEST_CASE("subgraph matching is invariant under relabeling the target") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 150; ++trial) {
            const std::size_t n = 2 + rng() % 7;
            const bool dir = trial % 2;
            auto g = brute::random_graph(rng, n, 0.4, {.directed = dir});
            auto pattern = brute::random_graph(rng, 2 + rng() % 3, 0.6, {.directed = dir});
            std::vector<NodeId> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            auto h = relabel(g, perm);
            CHECK(o::subgraph_match(g, pattern, std::chrono::seconds(10)) ==
                  o::subgraph_match(h, pattern, std::chrono::seconds(10)));
        }
    }

    TEST_CASE("the flawed topological sort is caught by the checker") {
        // Two roots feeding a shared node: a spanning-tree order from one root
        // emits the shared node before the other root.
        auto g = directed(3, {{0, 2}, {1, 2}});
        auto order = o::flawed::topological_sort_by_spanning_tree(g);
        QuestionParams p;
        CHECK_FALSE(o::check_answer(TaskKind::topological_sort, g, p, order));
    }
}
