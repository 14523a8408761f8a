#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "grraf/bench.hpp"
#include "grraf/graph_io.hpp"
#include "grraf/oracles.hpp"

using namespace grraf;
using namespace grraf::bench;

namespace {

DatasetSpec small_spec(TaskKind task, std::size_t count = 10, std::uint64_t seed = 7) {
    auto spec = DatasetSpec::defaults(task);
    spec.max_nodes = std::min<std::size_t>(spec.max_nodes, 20);
    spec.count = count;
    spec.seed = seed;
    return spec;
}

PipelineConfig quick_config(int n = 3) {
    PipelineConfig c;
    c.time_limit = std::chrono::seconds(5);
    c.max_iterations = n;
    return c;
}

std::string dump_dataset(const Dataset& d) {
    std::ostringstream out;
    for (const auto& inst : d.instances)
        out << question_to_json(inst.question).dump() << graph_to_json(*inst.graph).dump()
            << (inst.truth ? answer_to_json(*inst.truth).dump() : "?") << "\n";
    return out.str();
}

// Golden programs, except that the first final code always divides by zero.
class FailsFirst final : public llm::LlmClient {
public:
    explicit FailsFirst(std::shared_ptr<GoldenLlm> golden) : golden_(std::move(golden)) {}
    llm::ChatResponse complete(const llm::ChatRequest& request) override {
        if (request.stage == llm::Stage::final_code) return {"return 1 / 0;", {10, 3}};
        return golden_->complete(request);
    }
    std::string label() const override { return "fails-first"; }

private:
    std::shared_ptr<GoldenLlm> golden_;
};

// Every generated program fails.
class AlwaysFails final : public llm::LlmClient {
public:
    llm::ChatResponse complete(const llm::ChatRequest& request) override {
        switch (request.stage) {
            case llm::Stage::final_code:
            case llm::Stage::repair_error:
            case llm::Stage::repair_timeout: return {"return undefined_name;", {5, 5}};
            case llm::Stage::fallback: return {"Yes.", {5, 1}};
            default: return {"ok", {5, 1}};
        }
    }
    std::string label() const override { return "always-fails"; }
};

}  // namespace

TEST_SUITE("dataset generation") {
    TEST_CASE("seeded generation is reproducible") {
        auto spec = DatasetSpec::defaults(TaskKind::connectivity);
        spec.seed = 7;
        spec.count = 40;
        CHECK(dump_dataset(gen_dataset(spec)) == dump_dataset(gen_dataset(spec)));
        auto other = spec;
        other.seed = 8;
        CHECK(dump_dataset(gen_dataset(spec)) != dump_dataset(gen_dataset(other)));
    }

    TEST_CASE("instances respect the dataset spec and are well posed (property)") {
        for (TaskKind task : kAllTasks) {
            CAPTURE(task_name(task));
            auto spec = small_spec(task, 30, 3);
            auto d = gen_dataset(spec);
            REQUIRE(d.instances.size() == 30);
            std::set<std::string> ids;
            for (const auto& inst : d.instances) {
                const auto& g = *inst.graph;
                ids.insert(inst.question.id);
                CHECK(g.node_count() >= spec.min_nodes);
                CHECK(g.node_count() <= spec.max_nodes);
                CHECK(inst.question.task_hint == task);
                CHECK(inst.question.graph_ref == inst.question.id);
                REQUIRE(inst.truth);
                CHECK(*inst.truth == *oracles::solve(task, g, inst.params));
                switch (task) {
                    case TaskKind::topological_sort:
                    case TaskKind::indegree:
                    case TaskKind::outdegree:
                    case TaskKind::max_flow: CHECK(g.directed()); break;
                    case TaskKind::connectivity:
                    case TaskKind::shortest_path:
                    case TaskKind::bipartite_check: CHECK_FALSE(g.directed()); break;
                    default: break;
                }
                if (task == TaskKind::topological_sort) CHECK_FALSE(std::holds_alternative<NoAnswer>(*inst.truth));
                if (task == TaskKind::shortest_path) {
                    CHECK_FALSE(std::holds_alternative<NoAnswer>(*inst.truth));
                    for (const auto& e : g.edges()) CHECK(e.weight);
                }
                if (task == TaskKind::max_flow)
                    for (const auto& e : g.edges()) CHECK(e.capacity);
                if (task == TaskKind::max_triangle_sum) {
                    CHECK_FALSE(std::holds_alternative<NoAnswer>(*inst.truth));
                    for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v) CHECK(g.node_weight(v));
                }
                if (task == TaskKind::subgraph_matching) CHECK(inst.params.pattern);
                if (inst.params.source) CHECK(inst.question.prompt.find(std::to_string(*inst.params.source)) !=
                                              std::string::npos);
            }
            CHECK(ids.size() == 30);
        }
    }

    TEST_CASE("boolean tasks see both answers") {
        for (TaskKind task : {TaskKind::cycle_detection, TaskKind::connectivity, TaskKind::bipartite_check}) {
            auto d = gen_dataset(small_spec(task, 40, 5));
            int yes = 0;
            for (const auto& inst : d.instances) yes += std::get<bool>(*inst.truth);
            CHECK(yes > 0);
            CHECK(yes < 40);
        }
    }

    TEST_CASE("large sizes are exact") {
        auto spec = DatasetSpec::defaults(TaskKind::shortest_path);
        spec.min_nodes = spec.max_nodes = 2000;
        spec.count = 2;
        for (const auto& inst : gen_dataset(spec).instances) CHECK(inst.graph->node_count() == 2000);
    }

    TEST_CASE("infeasible specs are rejected") {
        auto spec = DatasetSpec::defaults(TaskKind::max_triangle_sum);
        spec.min_nodes = 2;
        spec.max_nodes = 2;
        CHECK_THROWS_AS(gen_dataset(spec), GenerationError);
        spec = DatasetSpec::defaults(TaskKind::connectivity);
        spec.min_nodes = 10;
        spec.max_nodes = 5;
        CHECK_THROWS_AS(gen_dataset(spec), GenerationError);
        spec = DatasetSpec::defaults(TaskKind::connectivity);
        spec.max_density = 2;
        CHECK_THROWS_AS(gen_dataset(spec), GenerationError);
    }

    TEST_CASE("save and load round trip") {
        auto dir = std::filesystem::temp_directory_path() / "grraf-dataset-test";
        std::filesystem::remove_all(dir);
        auto d = gen_dataset(small_spec(TaskKind::subgraph_matching, 5));
        save_dataset(d, dir);
        auto back = load_dataset(dir);
        CHECK(spec_to_json(back.spec) == spec_to_json(d.spec));
        CHECK(dump_dataset(back) == dump_dataset(d));
        for (const auto& inst : back.instances) {
            REQUIRE(inst.graph_file);
            CHECK(load_graph_file(*inst.graph_file) == *inst.graph);
        }
        std::filesystem::remove_all(dir);
        CHECK_THROWS(load_dataset(dir));
    }
}

TEST_SUITE("benchmark runs") {
    TEST_CASE("golden mode answers every polynomial task correctly") {
        std::vector<Dataset> data;
        for (TaskKind task : kAllTasks)
            if (is_polynomial(task)) data.push_back(gen_dataset(small_spec(task, 8)));
        auto report = run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data), {2, true});
        CHECK(report.errors.empty());
        REQUIRE(report.tasks.size() == 9);
        for (const auto& t : report.tasks) {
            CAPTURE(task_name(t.task));
            CHECK(t.accuracy == 1.0);
            CHECK(t.clean_fraction == 1.0);
        }
        CHECK(report.records.size() == 72);
    }

    TEST_CASE("an always-failing model ends every question in the fallback") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::connectivity, 12))};
        auto report = run_benchmark(data, quick_config(3), std::make_shared<AlwaysFails>());
        std::size_t yes = 0;
        for (const auto& inst : data[0].instances) yes += std::get<bool>(*inst.truth);
        for (const auto& row : report.rows) {
            CHECK(row.fallback);
            CHECK(row.attempts == 4);
            CHECK(row.err_kind == "execution_error");
        }
        REQUIRE(report.tasks.size() == 1);
        CHECK(report.tasks[0].correct == yes);
        CHECK(report.tasks[0].fallback_fraction == 1.0);
        CHECK(report.tasks[0].execution_error_fraction == 1.0);
    }

    TEST_CASE("an empty dataset gives an empty report") {
        auto spec = small_spec(TaskKind::indegree, 0);
        std::vector<Dataset> data{gen_dataset(spec)};
        auto report = run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data));
        CHECK(report.rows.empty());
        CHECK(report.tasks.empty());
        CHECK(summarize({}).empty());
        CHECK(summary_table(report).size() > 0);
        CHECK(report_to_csv(report) == "task,size,correct,attempts,fallback,err_kind,in_tokens,out_tokens,wall_ms\n");
    }

    TEST_CASE("feedback fractions sum to one and rows are ordered (property)") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::outdegree, 6)),
                                  gen_dataset(small_spec(TaskKind::cycle_detection, 6))};
        auto golden = GoldenLlm::for_datasets(data);
        auto report = run_benchmark(data, quick_config(), std::make_shared<FailsFirst>(golden), {3, false});
        CHECK(report.records.empty());
        for (const auto& t : report.tasks) {
            double sum = t.execution_error_fraction + t.timeout_fraction + t.clean_fraction;
            CHECK(sum == doctest::Approx(1.0));
            CHECK(t.accuracy == 1.0);
            CHECK(t.execution_error_fraction == 1.0);
            CHECK(t.accuracy == doctest::Approx(static_cast<double>(t.correct) / static_cast<double>(t.total)));
        }
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            const auto& expected = i < 6 ? data[0].instances[i] : data[1].instances[i - 6];
            CHECK(report.rows[i].id == expected.question.id);
            CHECK(report.rows[i].attempts == 2);
        }
    }

    TEST_CASE("reports are reproducible apart from timing") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::max_flow, 5))};
        auto strip = [](nlohmann::json j) {
            for (auto& r : j["rows"]) r.erase("wall_ms");
            for (auto& r : j["records"]) {
                r.erase("wall_ms");
                for (auto& e : r["executions"]) e.erase("wall_ms");
            }
            return j.dump();
        };
        auto a = report_to_json(run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data), {1, true}));
        auto b = report_to_json(run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data), {4, true}));
        CHECK(strip(a) == strip(b));
        auto back = report_to_json(report_from_json(a));
        CHECK(back == a);
    }

    TEST_CASE("csv has the documented columns") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::indegree, 3))};
        auto csv = report_to_csv(run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data)));
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        CHECK(line == "task,size,correct,attempts,fallback,err_kind,in_tokens,out_tokens,wall_ms");
        int rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            CHECK(std::count(line.begin(), line.end(), ',') == 8);
            CHECK(line.rfind("indegree,", 0) == 0);
        }
        CHECK(rows == 3);
    }
}

TEST_SUITE("token curve and sweeps") {
    TEST_CASE("token usage does not grow with graph size") {
        std::vector<BenchReport> reports;
        for (std::size_t n : {100u, 1000u, 10000u}) {
            Dataset d;
            d.spec = DatasetSpec::defaults(TaskKind::shortest_path);
            d.instances.push_back(gen_instance(TaskKind::shortest_path, n, 2.0 / static_cast<double>(n), 11, "sp"));
            // Same wording at every size so only the graph differs.
            d.instances[0].question.prompt = "What is the shortest path from node 0 to node 1?";
            d.instances[0].params.source = 0;
            d.instances[0].params.target = 1;
            auto llm = std::make_shared<llm::ScriptedLlm>();
            llm->push("Find it.").push("C").push("return none;").push("No path.");
            reports.push_back(run_benchmark({d}, quick_config(), llm));
        }
        auto curve = token_curve(reports);
        REQUIRE(curve.size() == 3);
        CHECK(curve[0].size == 100);
        CHECK(curve[2].size == 10000);
        for (const auto& row : curve) {
            CHECK(row.mean_input_tokens == curve[0].mean_input_tokens);
            CHECK(row.mean_output_tokens == curve[0].mean_output_tokens);
        }
        CHECK(token_curve({reports[0]}).size() == 1);
    }

    TEST_CASE("mixed configurations are refused") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::indegree, 2))};
        auto a = run_benchmark(data, quick_config(), GoldenLlm::for_datasets(data));
        auto changed = quick_config();
        changed.templates.refine = "Restate: {{question}}";
        auto b = run_benchmark(data, changed, GoldenLlm::for_datasets(data));
        CHECK_THROWS_AS(token_curve({a, b}), ContractError);
    }

    TEST_CASE("more repairs help a model that needs two attempts") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::shortest_path, 6))};
        auto factory = [&](const std::string&) {
            return std::make_shared<FailsFirst>(GoldenLlm::for_datasets(data));
        };
        auto points = sweep(SweepParam::max_iterations, {"0", "3"}, data, quick_config(), factory);
        REQUIRE(points.size() == 2);
        CHECK(points[1].accuracy > points[0].accuracy);
        CHECK(points[1].accuracy == 1.0);
        CHECK(points[0].fallback_fraction == 1.0);

        auto single = sweep(SweepParam::max_iterations, {"3"}, data, quick_config(), factory);
        CHECK(single.size() == 1);
        CHECK_THROWS_AS(sweep(SweepParam::max_iterations, {}, data, quick_config(), factory), ContractError);
        CHECK_THROWS_AS(sweep(SweepParam::time_limit, {"soon"}, data, quick_config(), factory), ContractError);
        CHECK(sweep_to_json(SweepParam::max_iterations, points)["points"].size() == 2);
    }

    TEST_CASE("longer time limits never hurt a slow golden program") {
        std::vector<Dataset> data{gen_dataset(small_spec(TaskKind::indegree, 3))};
        auto factory = [&](const std::string&) {
            auto golden = GoldenLlm::for_datasets(data);
            golden->set_busy_iterations(200000);
            return golden;
        };
        auto points = sweep(SweepParam::time_limit, {"0.001", "0.01", "10"}, data, quick_config(0), factory);
        for (std::size_t i = 1; i < points.size(); ++i) CHECK(points[i].accuracy >= points[i - 1].accuracy);
        CHECK(points.back().accuracy == 1.0);
        CHECK(points.front().accuracy < 1.0);
    }

    TEST_CASE("sweep parameter names") {
        CHECK(parse_sweep_param("t") == SweepParam::time_limit);
        CHECK(parse_sweep_param("n") == SweepParam::max_iterations);
        CHECK(parse_sweep_param("backbone") == SweepParam::backbone);
        CHECK_THROWS(parse_sweep_param("temperature"));
    }
}
