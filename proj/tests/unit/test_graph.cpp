#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "brute_force.hpp"
#include "grraf/errors.hpp"
#include "grraf/graph.hpp"
#include "grraf/graph_io.hpp"
#include "grraf/rational.hpp"
#include "grraf/schema.hpp"

using namespace grraf;

TEST_SUITE("rational") {
    TEST_CASE("normalizes sign and common factors") {
        CHECK(Rational(4, 8) == Rational(1, 2));
        CHECK(Rational(3, -6) == Rational(-1, 2));
        CHECK(Rational(0, 5) == Rational(0));
        CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
    }

    TEST_CASE("arithmetic is exact") {
        CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
        CHECK(Rational(1, 3) * Rational(3) == Rational(1));
        CHECK(Rational(1) / Rational(3) == Rational(1, 3));
        CHECK(Rational(-7, 2).floor() == -4);
        CHECK_THROWS_AS(Rational(1) / Rational(0), std::domain_error);
        CHECK(Rational(1, 3) < Rational(1, 2));
    }

    TEST_CASE("parses integers, decimals, fractions and exponents") {
        CHECK(Rational::parse("12") == Rational(12));
        CHECK(Rational::parse("-0.125") == Rational(-1, 8));
        CHECK(Rational::parse("1/3") == Rational(1, 3));
        CHECK(Rational::parse("2.5E-1") == Rational(1, 4));
        CHECK_FALSE(Rational::parse("abc"));
        CHECK_FALSE(Rational::parse("1/0"));
    }

    TEST_CASE("prints and reports finite decimals") {
        CHECK(Rational(-3, 2).to_string() == "-3/2");
        CHECK(Rational(7).to_string() == "7");
        CHECK(Rational(1, 4).has_finite_decimal());
        CHECK_FALSE(Rational(1, 3).has_finite_decimal());
    }

    TEST_CASE("json form: numbers when finite, p/q strings otherwise") {
        CHECK(rational_to_json(Rational(5)) == nlohmann::json(5));
        CHECK(rational_to_json(Rational(1, 4)) == nlohmann::json(0.25));
        CHECK(rational_to_json(Rational(1, 3)) == nlohmann::json("1/3"));
        CHECK(rational_from_json(nlohmann::json("1/3")) == Rational(1, 3));
        CHECK(rational_from_json(nlohmann::json(0.5)) == Rational(1, 2));
        CHECK_FALSE(rational_from_json(nlohmann::json::array()));
    }
}

TEST_SUITE("graph") {
    TEST_CASE("builder enforces invariants") {
        CHECK_THROWS_AS(GraphBuilder(false, 2).edge(0, 5).build(), ValidationError);
        CHECK_THROWS_AS(GraphBuilder(false, 2).edge(0, 1).edge(1, 0).build(), ValidationError);
        CHECK_NOTHROW(GraphBuilder(true, 2).edge(0, 1).edge(1, 0).build());
        CHECK_THROWS_AS(GraphBuilder(true, 2).edge(0, 1, Rational(-1)).build(), ValidationError);
        auto g = GraphBuilder(true, 2).edge(1, 1).build();
        CHECK(g.has_self_loops());
    }

    TEST_CASE("undirected adjacency is symmetric (property)") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 200; ++trial) {
            auto g = brute::random_graph(rng, 1 + trial % 9, 0.4, {.self_loops = true});
            for (NodeId u = 0; u < static_cast<NodeId>(g.node_count()); ++u) {
                for (const auto& a : g.out(u)) {
                    bool back = false;
                    for (const auto& b : g.out(a.node)) back = back || b.node == u;
                    CHECK(back);
                    CHECK(g.has_edge(a.node, u));
                }
            }
        }
    }

    TEST_CASE("directed adjacency lists match edge directions") {
        auto g = GraphBuilder(true, 3).edge(0, 1).edge(2, 1).build();
        CHECK(g.out(0).size() == 1);
        CHECK(g.in(1).size() == 2);
        CHECK(g.has_edge(0, 1));
        CHECK_FALSE(g.has_edge(1, 0));
    }
}

TEST_SUITE("graph_io") {
    TEST_CASE("edge-list examples") {
        auto g = parse_graph_text("undirected; nodes: 3; edges: (0,1) (1,2)", Dialect::edge_list_prose);
        CHECK(g.node_count() == 3);
        CHECK(g.edge_count() == 2);
        CHECK_FALSE(g.directed());

        auto d = parse_graph_text("directed; nodes: 2; edges: (0,1)[w=4]", Dialect::edge_list_prose);
        CHECK(d.directed());
        REQUIRE(d.find_edge(0, 1));
        CHECK(d.find_edge(0, 1)->weight == Rational(4));

        CHECK_THROWS_AS(parse_graph_text("undirected; nodes: 2; edges: (0,5)", Dialect::edge_list_prose),
                        ValidationError);
    }

    TEST_CASE("edge-list accepts weights, capacities, decimals and newlines") {
        auto g = parse_graph_text("directed;\nnodes: 3;\nweights: 0=1 1=2.5;\nedges: (0,1)[w=1/2][c=3]\n(1,2)[c=0.75]",
                                  Dialect::edge_list_prose);
        CHECK(g.node_weight(1) == Rational(5, 2));
        CHECK_FALSE(g.node_weight(2));
        CHECK(g.find_edge(0, 1)->weight == Rational(1, 2));
        CHECK(g.find_edge(0, 1)->capacity == Rational(3));
        CHECK(g.find_edge(1, 2)->capacity == Rational(3, 4));
    }

    TEST_CASE("syntax errors carry a location") {
        try {
            parse_graph_text("undirected; nodes: 3;\nedges: (0,1 (1,2)", Dialect::edge_list_prose);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK(e.column() > 0);
        }
        CHECK_THROWS_AS(parse_graph_text("{\"directed\": true, \"nodes\": [", Dialect::canonical_json), ParseError);
    }

    TEST_CASE("empty graph serializes to the documented form") {
        auto g = GraphBuilder(false, 0).build();
        CHECK(serialize(g, Dialect::edge_list_prose) == "undirected; nodes: 0; edges:");
        CHECK(parse_graph_text(serialize(g, Dialect::edge_list_prose), Dialect::edge_list_prose) == g);
    }

    TEST_CASE("canonical json shape") {
        auto g = GraphBuilder(true, 2).node_weight(0, Rational(3)).edge(0, 1, Rational(1, 2), Rational(7)).build();
        auto j = graph_to_json(g);
        CHECK(j["directed"] == true);
        CHECK(j["nodes"][0]["id"] == 0);
        CHECK(j["nodes"][0]["weight"] == 3);
        CHECK_FALSE(j["nodes"][1].contains("weight"));
        CHECK(j["edges"][0]["u"] == 0);
        CHECK(j["edges"][0]["weight"] == 0.5);
        CHECK(j["edges"][0]["capacity"] == 7);
        CHECK(graph_from_json(j) == g);
    }

    TEST_CASE("canonical json rejects non-contiguous ids") {
        auto j = nlohmann::json::parse(R"({"directed": false, "nodes": [{"id": 0}, {"id": 2}], "edges": []})");
        CHECK_THROWS_AS(graph_from_json(j), ValidationError);
    }

    TEST_CASE("round trip in both dialects (property)") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 300; ++trial) {
            brute::GraphOptions opt;
            opt.directed = trial % 2 == 0;
            opt.self_loops = trial % 3 == 0;
            opt.edge_weights = trial % 4 < 2;
            opt.capacities = trial % 5 < 2;
            opt.node_weights = trial % 7 < 3;
            auto g = brute::random_graph(rng, static_cast<std::size_t>(trial % 12), 0.35, opt);
            for (auto d : {Dialect::edge_list_prose, Dialect::canonical_json}) {
                auto back = parse_graph_text(serialize(g, d), d);
                CHECK(back == g);
                CHECK(back.edge_count() == g.edge_count());
            }
        }
    }

    TEST_CASE("non-integer rationals survive both dialects") {
        auto g = GraphBuilder(false, 3).node_weight(0, Rational(1, 3)).edge(0, 1, Rational(2, 7)).build();
        for (auto d : {Dialect::edge_list_prose, Dialect::canonical_json})
            CHECK(parse_graph_text(serialize(g, d), d) == g);
    }

    TEST_CASE("files are sniffed by content") {
        auto dir = std::filesystem::temp_directory_path() / "grraf-graph-io-test";
        std::filesystem::create_directories(dir);
        auto g = GraphBuilder(true, 3).edge(0, 1, Rational(2)).edge(1, 2).build();
        save_graph_file(g, dir / "a.txt", Dialect::edge_list_prose);
        save_graph_file(g, dir / "b.json", Dialect::canonical_json);
        CHECK(load_graph_file(dir / "a.txt") == g);
        CHECK(load_graph_file(dir / "b.json") == g);
        CHECK_THROWS_AS(load_graph_file(dir / "missing.json"), ConfigurationError);
        std::filesystem::remove_all(dir);
    }
}

TEST_SUITE("schema") {
    TEST_CASE("examples") {
        auto plain = GraphBuilder(false, 3).edge(0, 1).build();
        auto s = extract_schema(plain);
        CHECK(s.node_properties.empty());
        CHECK(s.edge_properties.empty());

        auto weighted = GraphBuilder(false, 3).edge(0, 1, Rational(2)).build();
        s = extract_schema(weighted);
        CHECK(s.node_properties.empty());
        REQUIRE(s.edge_properties.size() == 1);
        CHECK(s.edge_properties[0] == PropertySpec{"weight", PropertyKind::rational});

        auto both = GraphBuilder(true, 2).node_weight(0, Rational(1)).edge(0, 1, std::nullopt, Rational(4)).build();
        s = extract_schema(both);
        CHECK(s.directed);
        REQUIRE(s.node_properties.size() == 1);
        CHECK(s.node_properties[0].name == "weight");
        REQUIRE(s.edge_properties.size() == 1);
        CHECK(s.edge_properties[0].name == "capacity");
        CHECK(render_schema(s).find("capacity") != std::string::npos);
    }

    TEST_CASE("soundness: every listed property is witnessed and every witness is listed (property)") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 300; ++trial) {
            brute::GraphOptions opt;
            opt.directed = trial % 2;
            opt.edge_weights = rng() % 2;
            opt.capacities = rng() % 2;
            opt.node_weights = rng() % 2;
            auto g = brute::random_graph(rng, rng() % 6, 0.3, opt);
            auto s = extract_schema(g);
            auto listed = [](const std::vector<PropertySpec>& props, const std::string& name) {
                for (const auto& p : props)
                    if (p.name == name) return true;
                return false;
            };
            bool any_w = false, any_c = false, any_nw = false;
            for (const auto& e : g.edges()) {
                any_w = any_w || e.weight.has_value();
                any_c = any_c || e.capacity.has_value();
            }
            for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v) any_nw = any_nw || g.node_weight(v);
            CHECK(listed(s.edge_properties, "weight") == any_w);
            CHECK(listed(s.edge_properties, "capacity") == any_c);
            CHECK(listed(s.node_properties, "weight") == any_nw);
            CHECK(s.directed == g.directed());
            CHECK(std::is_sorted(s.edge_properties.begin(), s.edge_properties.end(),
                                 [](const auto& a, const auto& b) { return a.name < b.name; }));
        }
    }

    TEST_CASE("rendering does not depend on graph size") {
        auto small = GraphBuilder(false, 3).edge(0, 1, Rational(1)).build();
        GraphBuilder big_builder(false, 5000);
        for (NodeId v = 0; v + 1 < 5000; ++v) big_builder.edge(v, v + 1, Rational(v % 7));
        auto big = std::move(big_builder).build();
        CHECK(render_schema(extract_schema(small)) == render_schema(extract_schema(big)));
    }
}
