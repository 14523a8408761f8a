#include "grraf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "grraf/golden.hpp"
#include "grraf/graph_io.hpp"
#include "grraf/oracles.hpp"

namespace grraf::bench {

// ---------------------------------------------------------------------------
// Specs

DatasetSpec DatasetSpec::defaults(TaskKind task) {
    DatasetSpec spec;
    spec.task = task;
    switch (task) {
        case TaskKind::cycle_detection:
        case TaskKind::connectivity:
        case TaskKind::bipartite_check:
        case TaskKind::shortest_path: spec.max_nodes = 100; break;
        case TaskKind::topological_sort:
        case TaskKind::max_flow:
        case TaskKind::indegree:
        case TaskKind::outdegree: spec.max_nodes = 50; break;
        case TaskKind::max_triangle_sum: spec.max_nodes = 25; break;
        case TaskKind::subgraph_matching: spec.max_nodes = 30; break;
    }
    return spec;
}

namespace {

std::size_t smallest_size(TaskKind task) {
    switch (task) {
        case TaskKind::max_triangle_sum: return 3;
        case TaskKind::connectivity:
        case TaskKind::shortest_path:
        case TaskKind::max_flow:
        case TaskKind::subgraph_matching: return 2;
        default: return 1;
    }
}

}  // namespace

void DatasetSpec::validate() const {
    const std::string name(task_name(task));
    if (min_nodes > max_nodes) throw GenerationError(name + ": min_nodes exceeds max_nodes");
    if (max_nodes < smallest_size(task))
        throw GenerationError(name + " needs graphs of at least " + std::to_string(smallest_size(task)) +
                              " nodes, but max_nodes is " + std::to_string(max_nodes));
    if (max_nodes > 1'000'000) throw GenerationError(name + ": max_nodes above 1,000,000 is not supported");
    if (!(min_density >= 0 && max_density <= 1 && min_density <= max_density))
        throw GenerationError(name + ": densities must satisfy 0 <= min <= max <= 1");
}

nlohmann::json spec_to_json(const DatasetSpec& spec) {
    return {{"task", std::string(task_name(spec.task))},
            {"min_nodes", spec.min_nodes},
            {"max_nodes", spec.max_nodes},
            {"count", spec.count},
            {"min_density", spec.min_density},
            {"max_density", spec.max_density},
            {"seed", spec.seed}};
}

DatasetSpec spec_from_json(const nlohmann::json& j) {
    auto name = j.at("task").get<std::string>();
    auto task = parse_task(name);
    if (!task) throw ConfigurationError("unknown task '" + name + "'");
    DatasetSpec spec = DatasetSpec::defaults(*task);
    spec.min_nodes = j.value("min_nodes", spec.min_nodes);
    spec.max_nodes = j.value("max_nodes", spec.max_nodes);
    spec.count = j.value("count", spec.count);
    spec.min_density = j.value("min_density", spec.min_density);
    spec.max_density = j.value("max_density", spec.max_density);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

// ---------------------------------------------------------------------------
// Random generation

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Bounded draws written out so results do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 gen_;
};

struct EdgeSet {
    std::size_t n;
    bool directed;
    std::set<std::pair<NodeId, NodeId>> edges;

    std::pair<NodeId, NodeId> norm(NodeId u, NodeId v) const {
        if (!directed && u > v) std::swap(u, v);
        return {u, v};
    }
    void add(NodeId u, NodeId v) { edges.insert(norm(u, v)); }
    bool has(NodeId u, NodeId v) const { return edges.count(norm(u, v)) > 0; }
};

/// Uniform sample of round(p * pairs) distinct non-loop node pairs.
EdgeSet sample_edges(Rng& rng, std::size_t n, bool directed, double p) {
    EdgeSet set{n, directed, {}};
    if (n < 2) return set;
    const double pairs = directed ? double(n) * double(n - 1) : double(n) * double(n - 1) / 2;
    const auto m = static_cast<std::size_t>(std::llround(p * pairs));
    if (m == 0) return set;
    if (4.0 * double(m) <= pairs) {
        std::unordered_set<std::uint64_t> seen;
        while (seen.size() < m) {
            auto u = static_cast<NodeId>(rng.below(n));
            auto v = static_cast<NodeId>(rng.below(n));
            if (u == v) continue;
            auto [a, b] = set.norm(u, v);
            if (seen.insert(static_cast<std::uint64_t>(a) * n + static_cast<std::uint64_t>(b)).second) set.edges.emplace(a, b);
        }
        return set;
    }
    std::vector<std::pair<NodeId, NodeId>> all;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = directed ? 0 : u + 1; v < n; ++v)
            if (u != v) all.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    for (std::size_t i = 0; i < m && i < all.size(); ++i) {
        std::swap(all[i], all[i + rng.below(all.size() - i)]);
        set.edges.insert(all[i]);
    }
    return set;
}

std::vector<NodeId> distinct_nodes(Rng& rng, std::size_t n, std::size_t k) {
    std::vector<NodeId> picked;
    while (picked.size() < k) {
        auto v = static_cast<NodeId>(rng.below(n));
        if (std::find(picked.begin(), picked.end(), v) == picked.end()) picked.push_back(v);
    }
    return picked;
}

/// Links s to t through up to three random intermediate nodes.
void add_random_path(Rng& rng, EdgeSet& set, NodeId s, NodeId t) {
    std::vector<NodeId> path{s};
    const std::size_t hops = set.n > 2 ? rng.below(std::min<std::size_t>(3, set.n - 2) + 1) : 0;
    while (path.size() < hops + 1) {
        auto v = static_cast<NodeId>(rng.below(set.n));
        if (v != t && std::find(path.begin(), path.end(), v) == path.end()) path.push_back(v);
    }
    path.push_back(t);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) set.add(path[i], path[i + 1]);
}

void add_triangle(Rng& rng, EdgeSet& set) {
    auto tri = distinct_nodes(rng, set.n, 3);
    set.add(tri[0], tri[1]);
    set.add(tri[1], tri[2]);
    set.add(tri[2], tri[0]);
}

enum class Attr { none, weight, capacity };

std::shared_ptr<const PropertyGraph> build(Rng& rng, const EdgeSet& set, Attr attr, bool node_weights = false) {
    GraphBuilder b(set.directed, set.n);
    if (node_weights)
        for (std::size_t v = 0; v < set.n; ++v) b.node_weight(static_cast<NodeId>(v), Rational(rng.between(1, 10)));
    for (const auto& [u, v] : set.edges) {
        switch (attr) {
            case Attr::none: b.edge(u, v); break;
            case Attr::weight: b.edge(u, v, Rational(rng.between(1, 10))); break;
            case Attr::capacity: b.edge(u, v, std::nullopt, Rational(rng.between(1, 10))); break;
        }
    }
    return std::make_shared<const PropertyGraph>(std::move(b).build());
}

std::string node_list(const std::vector<std::pair<NodeId, NodeId>>& edges, bool directed) {
    std::string out;
    for (const auto& [u, v] : edges) {
        if (!out.empty()) out += ", ";
        out += std::to_string(u) + (directed ? "->" : "-") + std::to_string(v);
    }
    return out.empty() ? "no edges" : out;
}

}  // namespace

Instance gen_instance(TaskKind task, std::size_t n, double density, std::uint64_t seed, const std::string& id) {
    if (n < smallest_size(task))
        throw GenerationError(std::string(task_name(task)) + " cannot use a graph with " + std::to_string(n) +
                              " nodes");
    Rng rng(seed);
    Instance inst;
    inst.seed = seed;
    inst.question.id = id;
    inst.question.graph_ref = id;
    inst.question.task_hint = task;
    auto s = [](NodeId v) { return std::to_string(v); };

    switch (task) {
        case TaskKind::cycle_detection: {
            const bool want_cycle = n >= 3 && rng.chance(0.5);
            EdgeSet set{n, false, {}};
            if (want_cycle) {
                set = sample_edges(rng, n, false, density);
                auto g = build(rng, set, Attr::none);
                if (!oracles::detect_cycle(*g)) add_triangle(rng, set);
            } else {
                std::vector<NodeId> order(n);
                std::iota(order.begin(), order.end(), 0);
                rng.shuffle(order);
                const double attach = 0.5 + 0.5 * rng.unit();
                for (std::size_t i = 1; i < n; ++i)
                    if (rng.chance(attach)) set.add(order[i], order[rng.below(i)]);
            }
            inst.graph = build(rng, set, Attr::none);
            inst.question.prompt = "Is there a cycle in this undirected graph?";
            break;
        }
        case TaskKind::connectivity: {
            auto ends = distinct_nodes(rng, n, 2);
            const bool want_connected = rng.chance(0.5);
            EdgeSet set = sample_edges(rng, n, false, density);
            if (want_connected) {
                auto g = build(rng, set, Attr::none);
                if (!oracles::is_connected(*g, ends[0], ends[1])) add_random_path(rng, set, ends[0], ends[1]);
            } else {
                std::vector<bool> side(n);
                for (auto&& b : side) b = rng.chance(0.5);
                side[static_cast<std::size_t>(ends[0])] = false;
                side[static_cast<std::size_t>(ends[1])] = true;
                std::erase_if(set.edges, [&](const auto& e) {
                    return side[static_cast<std::size_t>(e.first)] != side[static_cast<std::size_t>(e.second)];
                });
            }
            inst.graph = build(rng, set, Attr::none);
            inst.params.source = ends[0];
            inst.params.target = ends[1];
            inst.question.prompt = "Does node " + s(ends[0]) + " connect to node " + s(ends[1]) + "?";
            break;
        }
        case TaskKind::bipartite_check: {
            const bool want_bipartite = n < 3 || rng.chance(0.5);
            EdgeSet set = sample_edges(rng, n, false, density);
            if (want_bipartite) {
                std::vector<bool> side(n);
                for (auto&& b : side) b = rng.chance(0.5);
                std::erase_if(set.edges, [&](const auto& e) {
                    return side[static_cast<std::size_t>(e.first)] == side[static_cast<std::size_t>(e.second)];
                });
            } else {
                auto g = build(rng, set, Attr::none);
                if (oracles::is_bipartite(*g)) add_triangle(rng, set);
            }
            inst.graph = build(rng, set, Attr::none);
            inst.question.prompt = "Is this graph bipartite?";
            break;
        }
        case TaskKind::topological_sort: {
            std::vector<NodeId> rank(n);
            std::iota(rank.begin(), rank.end(), 0);
            rng.shuffle(rank);
            EdgeSet undirected = sample_edges(rng, n, false, density);
            EdgeSet set{n, true, {}};
            for (const auto& [u, v] : undirected.edges) {
                if (rank[static_cast<std::size_t>(u)] < rank[static_cast<std::size_t>(v)]) {
                    set.add(u, v);
                } else {
                    set.add(v, u);
                }
            }
            inst.graph = build(rng, set, Attr::none);
            inst.question.prompt = "Give a topological ordering of the nodes of this directed graph.";
            break;
        }
        case TaskKind::shortest_path: {
            auto ends = distinct_nodes(rng, n, 2);
            EdgeSet set = sample_edges(rng, n, false, density);
            auto g = build(rng, set, Attr::none);
            if (!oracles::is_connected(*g, ends[0], ends[1])) add_random_path(rng, set, ends[0], ends[1]);
            inst.graph = build(rng, set, Attr::weight);
            inst.params.source = ends[0];
            inst.params.target = ends[1];
            inst.question.prompt =
                "What is the shortest path from node " + s(ends[0]) + " to node " + s(ends[1]) + "?";
            break;
        }
        case TaskKind::max_triangle_sum: {
            EdgeSet set = sample_edges(rng, n, false, density);
            bool has_triangle = false;
            for (const auto& [u, v] : set.edges) {
                for (std::size_t w = 0; w < n && !has_triangle; ++w)
                    has_triangle = set.has(u, static_cast<NodeId>(w)) && set.has(v, static_cast<NodeId>(w));
                if (has_triangle) break;
            }
            if (!has_triangle) add_triangle(rng, set);
            inst.graph = build(rng, set, Attr::none, true);
            inst.question.prompt =
                "What is the maximum sum of node weights over all triangles (three mutually adjacent nodes) in "
                "this graph?";
            break;
        }
        case TaskKind::max_flow: {
            auto ends = distinct_nodes(rng, n, 2);
            EdgeSet set = sample_edges(rng, n, true, density);
            auto g = build(rng, set, Attr::none);
            if (!oracles::is_connected(*g, ends[0], ends[1])) add_random_path(rng, set, ends[0], ends[1]);
            inst.graph = build(rng, set, Attr::capacity);
            inst.params.source = ends[0];
            inst.params.target = ends[1];
            inst.question.prompt =
                "What is the maximum flow from node " + s(ends[0]) + " to node " + s(ends[1]) + "?";
            break;
        }
        case TaskKind::subgraph_matching: {
            EdgeSet set = sample_edges(rng, n, true, density);
            inst.graph = build(rng, set, Attr::none);
            const std::size_t k = std::min<std::size_t>(n, 2 + rng.below(3));
            std::vector<std::pair<NodeId, NodeId>> pattern_edges;
            if (rng.chance(0.5)) {
                // Grow a weakly connected node set inside the target and copy its edges.
                std::vector<NodeId> chosen{static_cast<NodeId>(rng.below(n))};
                while (chosen.size() < k) {
                    std::vector<NodeId> frontier;
                    for (NodeId c : chosen) {
                        for (const auto& a : inst.graph->out(c)) frontier.push_back(a.node);
                        for (const auto& a : inst.graph->in(c)) frontier.push_back(a.node);
                    }
                    std::erase_if(frontier, [&](NodeId v) {
                        return std::find(chosen.begin(), chosen.end(), v) != chosen.end();
                    });
                    std::sort(frontier.begin(), frontier.end());
                    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
                    if (frontier.empty()) {
                        NodeId v;
                        do {
                            v = static_cast<NodeId>(rng.below(n));
                        } while (std::find(chosen.begin(), chosen.end(), v) != chosen.end());
                        chosen.push_back(v);
                    } else {
                        chosen.push_back(frontier[rng.below(frontier.size())]);
                    }
                }
                rng.shuffle(chosen);
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < k; ++j)
                        if (i != j && inst.graph->has_edge(chosen[i], chosen[j]))
                            pattern_edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
            }
            if (pattern_edges.empty()) {
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < k; ++j)
                        if (i != j && rng.chance(0.4))
                            pattern_edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
                if (pattern_edges.empty()) pattern_edges.emplace_back(0, 1);
            }
            GraphBuilder pb(true, k);
            for (const auto& [u, v] : pattern_edges) pb.edge(u, v);
            inst.params.pattern = std::make_shared<const PropertyGraph>(std::move(pb).build());
            inst.question.prompt = "Is there a subgraph of this directed graph that is isomorphic to the pattern "
                                   "graph with " +
                                   std::to_string(k) + " nodes and edges " + node_list(pattern_edges, true) + "?";
            break;
        }
        case TaskKind::indegree:
        case TaskKind::outdegree: {
            EdgeSet set = sample_edges(rng, n, true, density);
            inst.graph = build(rng, set, Attr::none);
            auto v = static_cast<NodeId>(rng.below(n));
            inst.params.node = v;
            inst.question.prompt = std::string("What is the ") +
                                   (task == TaskKind::indegree ? "indegree" : "outdegree") + " of node " + s(v) +
                                   " in this directed graph?";
            break;
        }
    }
    inst.truth = oracles::solve(task, *inst.graph, inst.params, std::chrono::seconds(60));
    return inst;
}

Dataset gen_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset dataset{spec, {}};
    const std::size_t lo = std::max(spec.min_nodes, smallest_size(spec.task));
    const auto task_index = static_cast<std::uint64_t>(spec.task);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::uint64_t seed = splitmix64(splitmix64(spec.seed) ^ (task_index << 48) ^ i);
        Rng pick(seed);
        const auto n = static_cast<std::size_t>(pick.between(static_cast<std::int64_t>(lo),
                                                              static_cast<std::int64_t>(spec.max_nodes)));
        const double density = spec.min_density + (spec.max_density - spec.min_density) * pick.unit();
        char id[64];
        std::snprintf(id, sizeof id, "%s-%04zu", std::string(task_name(spec.task)).c_str(), i);
        dataset.instances.push_back(gen_instance(spec.task, n, density, splitmix64(seed), id));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Dataset files

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "graphs");
    nlohmann::json manifest;
    manifest["spec"] = spec_to_json(dataset.spec);
    manifest["instances"] = nlohmann::json::array();
    for (const auto& inst : dataset.instances) {
        const std::string graph_file = "graphs/" + inst.question.id + ".json";
        save_graph_file(*inst.graph, dir / graph_file, Dialect::canonical_json);
        manifest["instances"].push_back({{"id", inst.question.id},
                                         {"prompt", inst.question.prompt},
                                         {"task", std::string(task_name(*inst.question.task_hint))},
                                         {"graph", graph_file},
                                         {"nodes", inst.graph->node_count()},
                                         {"params", params_to_json(inst.params)},
                                         {"truth_known", inst.truth.has_value()},
                                         {"truth", inst.truth ? answer_to_json(*inst.truth) : nlohmann::json()},
                                         {"seed", inst.seed}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigurationError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(1) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ConfigurationError("no dataset manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("malformed manifest in " + dir.string() + ": " + e.what());
    }
    Dataset dataset{spec_from_json(manifest.at("spec")), {}};
    for (const auto& item : manifest.at("instances")) {
        Instance inst;
        inst.question.id = item.at("id").get<std::string>();
        inst.question.prompt = item.at("prompt").get<std::string>();
        inst.question.graph_ref = inst.question.id;
        const auto task = parse_task(item.at("task").get<std::string>());
        if (!task) throw ConfigurationError("unknown task in manifest: " + item.at("task").dump());
        inst.question.task_hint = task;
        const auto path = dir / item.at("graph").get<std::string>();
        inst.graph = std::make_shared<const PropertyGraph>(load_graph_file(path));
        inst.graph_file = std::filesystem::absolute(path);
        inst.params = params_from_json(item.value("params", nlohmann::json::object()));
        if (item.value("truth_known", true)) {
            inst.truth = answer_from_json(*task, item.at("truth"));
            if (!inst.truth) throw ConfigurationError("unreadable ground truth for " + inst.question.id);
        }
        inst.seed = item.value("seed", std::uint64_t{0});
        dataset.instances.push_back(std::move(inst));
    }
    return dataset;
}

std::shared_ptr<GraphStore> make_store(const std::vector<Dataset>& datasets) {
    auto store = std::make_shared<GraphStore>();
    for (const auto& d : datasets)
        for (const auto& inst : d.instances) store->add(inst.question.graph_ref, inst.graph, inst.graph_file);
    return store;
}

// ---------------------------------------------------------------------------
// Golden backend

GoldenLlm::GoldenLlm(llm::TokenCounter counter) : counter_(std::move(counter)) {}

void GoldenLlm::add(const std::string& question_id, TaskKind task, QuestionParams params, std::string prompt) {
    entries_[question_id] = Entry{task, std::move(params), std::move(prompt)};
}

std::shared_ptr<GoldenLlm> GoldenLlm::for_datasets(const std::vector<Dataset>& datasets) {
    auto llm = std::make_shared<GoldenLlm>();
    for (const auto& d : datasets)
        for (const auto& inst : d.instances)
            llm->add(inst.question.id, *inst.question.task_hint, inst.params, inst.question.prompt);
    return llm;
}

llm::ChatResponse GoldenLlm::complete(const llm::ChatRequest& request) {
    if (request.messages.empty()) throw ContractError("complete() needs at least one message");
    auto it = entries_.find(request.question_id);
    if (it == entries_.end())
        throw llm::ScriptExhausted("golden backend has no program for question '" + request.question_id + "'");
    const Entry& entry = it->second;
    std::string text;
    switch (request.stage) {
        case llm::Stage::refine: text = entry.prompt; break;
        case llm::Stage::code_template: text = "```\n" + golden_template(entry.task) + "```"; break;
        case llm::Stage::final_code:
        case llm::Stage::repair_error:
        case llm::Stage::repair_timeout: {
            auto code = golden_program(entry.task, entry.params);
            if (busy_iterations_ > 0) code = with_busy_loop(code, busy_iterations_);
            text = "```\n" + code + "```";
            break;
        }
        case llm::Stage::fallback: text = "I cannot determine the answer."; break;
        case llm::Stage::naturalize:
        case llm::Stage::other: {
            const std::string& last = request.messages.back().text;
            const std::string marker = "Computed answer: ";
            auto pos = last.find(marker);
            if (pos == std::string::npos) {
                text = "The answer has been computed.";
            } else {
                auto end = last.find('\n', pos);
                text = "The answer is " + last.substr(pos + marker.size(), end - pos - marker.size()) + ".";
            }
            break;
        }
    }
    llm::ChatResponse response;
    response.text = std::move(text);
    for (const auto& m : request.messages) response.usage.input_tokens += counter_(m.text);
    response.usage.output_tokens = counter_(response.text);
    return response;
}

// ---------------------------------------------------------------------------
// Benchmark runs

std::vector<TaskSummary> summarize(const std::vector<BenchRow>& rows) {
    std::vector<TaskSummary> out;
    for (TaskKind task : kAllTasks) {
        TaskSummary s;
        s.task = task;
        std::size_t exec = 0, timeout = 0, fallback = 0;
        double in_tokens = 0, out_tokens = 0;
        for (const auto& r : rows) {
            if (r.task != task) continue;
            ++s.total;
            s.correct += r.correct ? 1 : 0;
            exec += r.err_kind == "execution_error" ? 1 : 0;
            timeout += r.err_kind == "timed_out" ? 1 : 0;
            fallback += r.fallback ? 1 : 0;
            in_tokens += static_cast<double>(r.usage.input_tokens);
            out_tokens += static_cast<double>(r.usage.output_tokens);
        }
        if (s.total == 0) continue;
        const double total = static_cast<double>(s.total);
        s.accuracy = static_cast<double>(s.correct) / total;
        s.execution_error_fraction = static_cast<double>(exec) / total;
        s.timeout_fraction = static_cast<double>(timeout) / total;
        s.clean_fraction = static_cast<double>(s.total - exec - timeout) / total;
        s.fallback_fraction = static_cast<double>(fallback) / total;
        s.mean_input_tokens = in_tokens / total;
        s.mean_output_tokens = out_tokens / total;
        out.push_back(s);
    }
    return out;
}

namespace {

struct Slot {
    BenchRow row;
    nlohmann::json record;
    std::string error;
};

Slot evaluate(const Pipeline& pipeline, const Instance& inst, bool keep_record) {
    Slot slot;
    BenchRow& row = slot.row;
    row.id = inst.question.id;
    row.task = *inst.question.task_hint;
    row.size = inst.graph->node_count();
    try {
        AnswerRecord record = pipeline.run(inst.question);
        row.attempts = record.attempts;
        row.fallback = record.fallback_used;
        row.usage = record.usage;
        row.wall_ms = std::chrono::duration<double, std::milli>(record.wall_time).count();
        if (!record.loop_events.empty()) {
            row.err_kind = std::string(to_string(record.loop_events.front().kind));
        } else if (!record.error.empty()) {
            row.err_kind = "llm_error";
        }
        if (record.answer && inst.truth) {
            try {
                row.correct = oracles::check_answer(row.task, *inst.graph, inst.params, *record.answer, *inst.truth);
            } catch (const ContractError&) {
                row.correct = false;
            }
        }
        if (keep_record) slot.record = record_to_json(record);
    } catch (const std::exception& e) {
        row.err_kind = "harness_error";
        slot.error = inst.question.id + ": " + e.what();
    }
    return slot;
}

}  // namespace

BenchReport run_benchmark(const std::vector<Dataset>& datasets, const PipelineConfig& config,
                          std::shared_ptr<llm::LlmClient> llm, const BenchOptions& options) {
    BenchReport report;
    report.config = config_to_json(config);
    report.config["llm"] = llm ? llm->label() : "none";
    report.config["datasets"] = nlohmann::json::array();
    for (const auto& d : datasets) report.config["datasets"].push_back(spec_to_json(d.spec));

    std::vector<const Instance*> work;
    for (const auto& d : datasets)
        for (const auto& inst : d.instances) work.push_back(&inst);
    if (work.empty()) return report;

    const Pipeline pipeline(std::move(llm), config, make_store(datasets));
    std::vector<Slot> slots(work.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) slots[i] = evaluate(pipeline, *work[i], options.keep_records);
    };
    const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, work.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (auto& slot : slots) {
        report.rows.push_back(std::move(slot.row));
        if (options.keep_records) report.records.push_back(std::move(slot.record));
        if (!slot.error.empty()) report.errors.push_back(std::move(slot.error));
    }
    report.tasks = summarize(report.rows);
    return report;
}

namespace {

nlohmann::json row_to_json(const BenchRow& r) {
    return {{"id", r.id},
            {"task", std::string(task_name(r.task))},
            {"size", r.size},
            {"correct", r.correct},
            {"attempts", r.attempts},
            {"fallback", r.fallback},
            {"err_kind", r.err_kind},
            {"in_tokens", r.usage.input_tokens},
            {"out_tokens", r.usage.output_tokens},
            {"wall_ms", r.wall_ms}};
}

BenchRow row_from_json(const nlohmann::json& j) {
    BenchRow r;
    r.id = j.value("id", std::string());
    auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw ConfigurationError("unknown task in report row: " + j.at("task").dump());
    r.task = *task;
    r.size = j.value("size", std::size_t{0});
    r.correct = j.value("correct", false);
    r.attempts = j.value("attempts", 0);
    r.fallback = j.value("fallback", false);
    r.err_kind = j.value("err_kind", std::string("none"));
    r.usage.input_tokens = j.value("in_tokens", std::int64_t{0});
    r.usage.output_tokens = j.value("out_tokens", std::int64_t{0});
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
}

}  // namespace

nlohmann::json report_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["config"] = report.config;
    j["summary"] = nlohmann::json::array();
    for (const auto& s : report.tasks)
        j["summary"].push_back({{"task", std::string(task_name(s.task))},
                                {"total", s.total},
                                {"correct", s.correct},
                                {"accuracy", s.accuracy},
                                {"execution_error_fraction", s.execution_error_fraction},
                                {"timeout_fraction", s.timeout_fraction},
                                {"clean_fraction", s.clean_fraction},
                                {"fallback_fraction", s.fallback_fraction},
                                {"mean_input_tokens", s.mean_input_tokens},
                                {"mean_output_tokens", s.mean_output_tokens}});
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) j["rows"].push_back(row_to_json(r));
    j["records"] = report.records;
    j["errors"] = report.errors;
    return j;
}

BenchReport report_from_json(const nlohmann::json& j) {
    BenchReport report;
    report.config = j.value("config", nlohmann::json::object());
    for (const auto& r : j.at("rows")) report.rows.push_back(row_from_json(r));
    if (j.contains("records"))
        for (const auto& r : j["records"]) report.records.push_back(r);
    if (j.contains("errors")) report.errors = j["errors"].get<std::vector<std::string>>();
    report.tasks = summarize(report.rows);
    return report;
}

std::string report_to_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "task,size,correct,attempts,fallback,err_kind,in_tokens,out_tokens,wall_ms\n";
    char wall[32];
    for (const auto& r : report.rows) {
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
        out << task_name(r.task) << ',' << r.size << ',' << (r.correct ? 1 : 0) << ',' << r.attempts << ','
            << (r.fallback ? 1 : 0) << ',' << r.err_kind << ',' << r.usage.input_tokens << ','
            << r.usage.output_tokens << ',' << wall << '\n';
    }
    return out.str();
}

std::string summary_table(const BenchReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %5s %9s %9s %8s %7s %9s %8s %8s\n", "task", "n", "accuracy", "exec_err",
                  "timeout", "clean", "fallback", "in_tok", "out_tok");
    out << line;
    for (const auto& s : report.tasks) {
        std::snprintf(line, sizeof line, "%-18s %5zu %8.1f%% %8.1f%% %7.1f%% %6.1f%% %8.1f%% %8.1f %8.1f\n",
                      std::string(task_name(s.task)).c_str(), s.total, 100 * s.accuracy,
                      100 * s.execution_error_fraction, 100 * s.timeout_fraction, 100 * s.clean_fraction,
                      100 * s.fallback_fraction, s.mean_input_tokens, s.mean_output_tokens);
        out << line;
    }
    if (!report.errors.empty()) out << report.errors.size() << " question(s) failed in the harness\n";
    return out.str();
}

std::vector<TokenRow> token_curve(const std::vector<BenchReport>& reports) {
    std::optional<nlohmann::json> reference;
    std::map<std::size_t, TokenRow> rows;
    for (const auto& report : reports) {
        auto config = report.config;
        if (config.is_object()) config.erase("datasets");
        if (!reference) {
            reference = config;
        } else if (*reference != config) {
            throw ContractError("token curve needs reports with identical configurations; got " + reference->dump() +
                                " and " + config.dump());
        }
        for (const auto& r : report.rows) {
            auto& row = rows[r.size];
            row.size = r.size;
            ++row.questions;
            row.mean_input_tokens += static_cast<double>(r.usage.input_tokens);
            row.mean_output_tokens += static_cast<double>(r.usage.output_tokens);
        }
    }
    std::vector<TokenRow> out;
    for (auto& [size, row] : rows) {
        row.mean_input_tokens /= static_cast<double>(row.questions);
        row.mean_output_tokens /= static_cast<double>(row.questions);
        out.push_back(row);
    }
    return out;
}

std::string_view to_string(SweepParam param) {
    switch (param) {
        case SweepParam::time_limit: return "t";
        case SweepParam::max_iterations: return "n";
        case SweepParam::backbone: return "backbone";
    }
    return "t";
}

SweepParam parse_sweep_param(std::string_view name) {
    if (name == "t" || name == "time_limit") return SweepParam::time_limit;
    if (name == "n" || name == "max_iterations") return SweepParam::max_iterations;
    if (name == "backbone" || name == "llm") return SweepParam::backbone;
    throw ConfigurationError("unknown sweep parameter '" + std::string(name) + "' (expected t, n or backbone)");
}

std::vector<SweepPoint> sweep(SweepParam param, const std::vector<std::string>& values,
                              const std::vector<Dataset>& datasets, const PipelineConfig& base,
                              const LlmFactory& make_llm, const BenchOptions& options) {
    if (values.empty()) throw ContractError("sweep needs at least one value");
    std::vector<SweepPoint> points;
    for (const auto& value : values) {
        PipelineConfig config = base;
        try {
            std::size_t used = 0;
            if (param == SweepParam::time_limit) {
                const double seconds = std::stod(value, &used);
                if (used != value.size() || !(seconds > 0)) throw std::invalid_argument(value);
                config.time_limit = std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::duration<double>(seconds));
            } else if (param == SweepParam::max_iterations) {
                const int n = std::stoi(value, &used);
                if (used != value.size() || n < 0) throw std::invalid_argument(value);
                config.max_iterations = n;
            }
        } catch (const std::logic_error&) {
            throw ContractError("bad value '" + value + "' for sweep parameter " + std::string(to_string(param)));
        }
        BenchOptions run_options = options;
        run_options.keep_records = false;
        auto report = run_benchmark(datasets, config, make_llm(param == SweepParam::backbone ? value : ""),
                                    run_options);
        SweepPoint point;
        point.value = value;
        double wall = 0;
        std::size_t fallback = 0;
        for (const auto& r : report.rows) {
            ++point.total;
            point.correct += r.correct ? 1 : 0;
            fallback += r.fallback ? 1 : 0;
            wall += r.wall_ms;
        }
        if (point.total > 0) {
            point.accuracy = static_cast<double>(point.correct) / static_cast<double>(point.total);
            point.fallback_fraction = static_cast<double>(fallback) / static_cast<double>(point.total);
            point.mean_wall_ms = wall / static_cast<double>(point.total);
        }
        points.push_back(point);
    }
    return points;
}

nlohmann::json sweep_to_json(SweepParam param, const std::vector<SweepPoint>& points) {
    nlohmann::json j = {{"param", std::string(to_string(param))}, {"points", nlohmann::json::array()}};
    for (const auto& p : points)
        j["points"].push_back({{"value", p.value},
                               {"total", p.total},
                               {"correct", p.correct},
                               {"accuracy", p.accuracy},
                               {"fallback_fraction", p.fallback_fraction},
                               {"mean_wall_ms", p.mean_wall_ms}});
    return j;
}

}  // namespace grraf::bench
