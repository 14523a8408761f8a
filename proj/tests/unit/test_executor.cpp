#include <doctest.h>

#include <signal.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "grraf/errors.hpp"
#include "grraf/executor.hpp"
#include "grraf/graph_io.hpp"

using namespace grraf;
using namespace std::chrono_literals;

namespace {

PropertyGraph seven_nodes() {
    return GraphBuilder(false, 7).edge(0, 1, Rational(2)).edge(5, 6, std::nullopt, Rational(1, 3)).build();
}

ExternalRuntime fixture() { return ExternalRuntime{{GRRAF_FAKE_SHIM}}; }

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("grraf-exec-test-" + std::to_string(::getpid()) + "-" + name);
}

// A zombie awaiting its reaper is not running, so read the state letter.
bool process_alive(pid_t pid) {
    std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
    std::string line;
    if (!std::getline(stat, line)) return false;
    auto close = line.rfind(')');
    return close != std::string::npos && close + 2 < line.size() && line[close + 2] != 'Z' && line[close + 2] != 'X';
}

ExecutionResult external(const std::string& code, const PropertyGraph& g = seven_nodes(),
                         std::chrono::nanoseconds t = 5s) {
    ExecutorConfig config{Backend::external, fixture()};
    return execute(CodeArtifact{ArtifactKind::final_code, code, 0, 0, Backend::external}, g, t, config);
}

}  // namespace

TEST_SUITE("embedded executor") {
    TEST_CASE("returns the program value") {
        auto r = execute_embedded("return node_count;", seven_nodes(), 1s);
        CHECK(r.status == ExecStatus::ok);
        CHECK(r.answer == 7);
        CHECK(r.error_message.empty());
    }

    TEST_CASE("division by zero is an execution error") {
        auto r = execute_embedded("return 1 / 0;", seven_nodes(), 1s);
        CHECK(r.status == ExecStatus::execution_error);
        CHECK(r.error_message.find("division") != std::string::npos);
        CHECK(r.answer.is_null());
    }

    TEST_CASE("an endless loop times out near the limit") {
        auto r = execute_embedded("while true { }", seven_nodes(), 100ms);
        CHECK(r.status == ExecStatus::timed_out);
        CHECK(r.wall_time >= 100ms);
        CHECK(r.wall_time < 600ms);
        CHECK(r.error_message.find("time limit") != std::string::npos);
    }

    TEST_CASE("parse errors are execution errors") {
        auto r = execute_embedded("return (;", seven_nodes(), 1s);
        CHECK(r.status == ExecStatus::execution_error);
        CHECK(r.error_message.find("parse error") != std::string::npos);
    }

    TEST_CASE("concurrent executions are independent") {
        std::vector<ExecutionResult> results(4);
        {
            std::vector<std::jthread> threads;
            for (int i = 0; i < 4; ++i)
                threads.emplace_back([&, i] {
                    results[static_cast<std::size_t>(i)] =
                        i % 2 ? execute_embedded("while true { }", seven_nodes(), 200ms)
                              : execute_embedded("s = 0; for i in range(1000) { s += i; } return s;", seven_nodes(), 5s);
                });
        }
        CHECK(results[0].status == ExecStatus::ok);
        CHECK(results[0].answer == 499500);
        CHECK(results[1].status == ExecStatus::timed_out);
        CHECK(results[2].status == ExecStatus::ok);
        CHECK(results[3].status == ExecStatus::timed_out);
    }

    TEST_CASE("result json has exactly one of answer and error") {
        auto ok = result_to_json(execute_embedded("return 1;", seven_nodes(), 1s));
        CHECK(ok["status"] == "ok");
        CHECK(ok.contains("answer"));
        CHECK_FALSE(ok.contains("error"));
        auto bad = result_to_json(execute_embedded("return y;", seven_nodes(), 1s));
        CHECK(bad["status"] == "execution_error");
        CHECK(bad.contains("error"));
        CHECK_FALSE(bad.contains("answer"));
    }

    TEST_CASE("backend names") {
        CHECK(parse_backend("embedded") == Backend::embedded);
        CHECK(parse_backend("external") == Backend::external);
        CHECK_THROWS_AS(parse_backend("neo4j"), ConfigurationError);
    }
}

TEST_SUITE("external executor") {
    TEST_CASE("ok response carries the answer") {
        auto r = external("node_count");
        CHECK(r.status == ExecStatus::ok);
        CHECK(r.answer == 7);
    }

    TEST_CASE("the graph file given to the runtime is faithful") {
        auto g = seven_nodes();
        auto r = external("graph", g);
        REQUIRE(r.status == ExecStatus::ok);
        CHECK(graph_from_json(r.answer) == g);
    }

    TEST_CASE("an explicit canonical graph path is passed through") {
        auto path = temp_file("g.json");
        save_graph_file(seven_nodes(), path, Dialect::canonical_json);
        auto r = execute_external("node_count", path, 5s, fixture());
        CHECK(r.status == ExecStatus::ok);
        CHECK(r.answer == 7);
        std::filesystem::remove(path);
    }

    TEST_CASE("script errors carry the runtime's error field") {
        auto r = external("raise ZeroDivisionError: division by zero");
        CHECK(r.status == ExecStatus::execution_error);
        CHECK(r.error_message == "ZeroDivisionError: division by zero");
    }

    TEST_CASE("malformed responses keep the raw output") {
        auto r = external("garbage");
        CHECK(r.status == ExecStatus::execution_error);
        CHECK(r.error_message.find("malformed") != std::string::npos);
        CHECK(r.error_message.find("this is not json") != std::string::npos);

        r = external("stderr Traceback: boom");
        CHECK(r.status == ExecStatus::execution_error);
        CHECK(r.error_message.find("Traceback: boom") != std::string::npos);

        r = external("silent");
        CHECK(r.status == ExecStatus::execution_error);
    }

    TEST_CASE("large outputs are drained") {
        auto r = external("flood 1000000");
        CHECK(r.status == ExecStatus::ok);
        CHECK(r.answer == "done");
    }

    TEST_CASE("a runtime that ignores stdin still answers") {
        ExternalRuntime rt{{GRRAF_FAKE_SHIM, "--ignore-stdin"}};
        auto path = temp_file("ignore.json");
        save_graph_file(seven_nodes(), path, Dialect::canonical_json);
        auto r = execute_external(std::string(1 << 20, 'x'), path, 5s, rt);
        CHECK(r.status == ExecStatus::ok);
        std::filesystem::remove(path);
    }

    TEST_CASE("sleeping past the limit times out and the process is gone") {
        auto start = std::chrono::steady_clock::now();
        auto r = external("sleep", seven_nodes(), 300ms);
        CHECK(r.status == ExecStatus::timed_out);
        CHECK(std::chrono::steady_clock::now() - start < 2300ms);
    }

    TEST_CASE("the whole process tree is killed") {
        auto pidfile = temp_file("pid");
        std::filesystem::remove(pidfile);
        auto r = external("spawn " + pidfile.string(), seven_nodes(), 500ms);
        CHECK(r.status == ExecStatus::timed_out);
        std::ifstream in(pidfile);
        pid_t grandchild = 0;
        in >> grandchild;
        REQUIRE(grandchild > 0);
        // The grandchild was reparented; give init a moment to reap it.
        bool alive = true;
        for (int i = 0; i < 100 && alive; ++i) {
            alive = process_alive(grandchild);
            if (alive) std::this_thread::sleep_for(10ms);
        }
        CHECK_FALSE(alive);
        std::filesystem::remove(pidfile);
    }

    TEST_CASE("missing or unusable runtimes are configuration errors") {
        ExecutorConfig none{Backend::external, {}};
        CodeArtifact code{ArtifactKind::final_code, "node_count", 0, 0, Backend::external};
        CHECK_THROWS_AS(execute(code, seven_nodes(), 1s, none), ConfigurationError);
        ExecutorConfig missing{Backend::external, {{"/nonexistent/grraf-shim"}}};
        CHECK_THROWS_AS(execute(code, seven_nodes(), 1s, missing), ConfigurationError);
        ExecutorConfig not_on_path{Backend::external, {{"grraf-no-such-runtime-xyz"}}};
        CHECK_THROWS_AS(execute(code, seven_nodes(), 1s, not_on_path), ConfigurationError);
    }

    TEST_CASE("runtime command comes from the environment") {
        ::setenv("GRRAF_SHIM", "python3  /opt/shim.py --flag", 1);
        auto rt = ExternalRuntime::from_environment();
        CHECK(rt.command == std::vector<std::string>{"python3", "/opt/shim.py", "--flag"});
        ::unsetenv("GRRAF_SHIM");
        CHECK(ExternalRuntime::from_environment().command.empty());
    }
}
