#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "grraf/errors.hpp"
#include "grraf/llm.hpp"

using namespace grraf;
using namespace grraf::llm;
using nlohmann::json;

namespace {

ChatRequest ask(std::string text, std::string qid = "") {
    return ChatRequest{{Message{Role::user, std::move(text)}}, std::move(qid), Stage::other};
}

// Local chat endpoint. Fails the first `failures` calls with `fail_status`.
class FakeEndpoint {
public:
    explicit FakeEndpoint(int failures = 0, int fail_status = 503, std::string body = "")
        : failures_(failures), fail_status_(fail_status), body_(std::move(body)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            last_auth_ = req.get_header_value("Authorization");
            last_request_ = req.body;
            if (calls_ <= failures_) {
                res.status = fail_status_;
                res.set_content("busy", "text/plain");
                return;
            }
            if (!body_.empty()) {
                res.set_content(body_, "application/json");
                return;
            }
            auto in = json::parse(req.body);
            json out = {{"choices", {{{"message", {{"role", "assistant"},
                                                   {"content", "echo: " + in["messages"].back()["content"].get<std::string>()}}}}}},
                        {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4}}}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    HttpLlmConfig config() const {
        HttpLlmConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
        c.api_key = "sk-test";
        c.model = "test-model";
        c.initial_backoff = std::chrono::milliseconds(1);
        c.timeout = std::chrono::seconds(5);
        return c;
    }

    int calls() const { return calls_; }
    std::string last_auth() const { return last_auth_; }
    std::string last_request() const { return last_request_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int failures_;
    int fail_status_;
    std::string body_;
    std::atomic<int> calls_{0};
    std::string last_auth_;
    std::string last_request_;
};

}  // namespace

TEST_SUITE("code extraction") {
    TEST_CASE("first fenced block wins") {
        CHECK(extract_code("Here:\n```python\nreturn 1;\n```\nand ```\nx\n```") == "return 1;");
        CHECK(extract_code("```\na\nb\n```") == "a\nb");
    }
    TEST_CASE("unfenced responses are trimmed") {
        CHECK(extract_code("  return 2;\n\n") == "return 2;");
        CHECK(extract_code("   ").empty());
        CHECK(extract_code("```never closed\nreturn 3;") == "```never closed\nreturn 3;");
    }
    TEST_CASE("token approximation rounds up") {
        CHECK(approximate_tokens("") == 0);
        CHECK(approximate_tokens("abcd") == 1);
        CHECK(approximate_tokens("abcde") == 2);
    }
}

TEST_SUITE("scripted backend") {
    TEST_CASE("replays per question then falls back to the shared queue") {
        ScriptedLlm llm;
        llm.push("shared").push("for q1", "q1");
        CHECK(llm.complete(ask("hi", "q1")).text == "for q1");
        CHECK(llm.complete(ask("hi", "q1")).text == "shared");
        CHECK_THROWS_AS(llm.complete(ask("hi", "q2")), ScriptExhausted);
    }

    TEST_CASE("usage comes from the token counter") {
        ScriptedLlm llm([](std::string_view s) { return static_cast<std::int64_t>(s.size()); });
        llm.push("abc");
        auto r = llm.complete(ChatRequest{{{Role::system, "12"}, {Role::user, "3456"}}, "", Stage::other});
        CHECK(r.usage == TokenUsage{6, 3});
    }

    TEST_CASE("transport failures are scripted") {
        auto llm = ScriptedLlm::from_json(json::parse(R"({"q": ["a", {"transport_error": "down"}]})"));
        CHECK(llm->remaining("q") == 2);
        CHECK(llm->complete(ask("x", "q")).text == "a");
        CHECK_THROWS_AS(llm->complete(ask("x", "q")), TransportError);
        CHECK(llm->remaining("q") == 0);
    }

    TEST_CASE("bad scripts and empty requests are rejected") {
        CHECK_THROWS_AS(ScriptedLlm::from_json(json(5)), ConfigurationError);
        CHECK_THROWS_AS(ScriptedLlm::from_json(json::parse("[1]")), ConfigurationError);
        ScriptedLlm llm;
        llm.push("a");
        CHECK_THROWS_AS(llm.complete(ChatRequest{}), ContractError);
    }
}

TEST_SUITE("http backend") {
    TEST_CASE("posts messages and reads content and usage") {
        FakeEndpoint endpoint;
        HttpLlm llm(endpoint.config());
        auto r = llm.complete(ChatRequest{{{Role::system, "be brief"}, {Role::user, "ping"}}, "", Stage::other});
        CHECK(r.text == "echo: ping");
        CHECK(r.usage == TokenUsage{11, 4});
        CHECK(endpoint.last_auth() == "Bearer sk-test");
        auto sent = json::parse(endpoint.last_request());
        CHECK(sent["model"] == "test-model");
        CHECK(sent["temperature"] == 0.0);
        CHECK(sent["messages"][0]["role"] == "system");
        CHECK(llm.label() == "live:test-model");
    }

    TEST_CASE("retries 429 and 5xx") {
        FakeEndpoint endpoint(2, 429);
        HttpLlm llm(endpoint.config());
        CHECK(llm.complete(ask("x")).text == "echo: x");
        CHECK(endpoint.calls() == 3);
    }

    TEST_CASE("gives up after the retry budget") {
        FakeEndpoint endpoint(100, 502);
        auto config = endpoint.config();
        config.max_retries = 2;
        HttpLlm llm(config);
        CHECK_THROWS_AS(llm.complete(ask("x")), TransportError);
        CHECK(endpoint.calls() == 3);
    }

    TEST_CASE("client errors are not retried") {
        FakeEndpoint endpoint(100, 401);
        HttpLlm llm(endpoint.config());
        CHECK_THROWS_AS(llm.complete(ask("x")), TransportError);
        CHECK(endpoint.calls() == 1);
    }

    TEST_CASE("malformed bodies are transport errors") {
        FakeEndpoint endpoint(0, 0, R"({"choices": []})");
        HttpLlm llm(endpoint.config());
        CHECK_THROWS_AS(llm.complete(ask("x")), TransportError);
    }

    TEST_CASE("unreachable endpoints are transport errors") {
        HttpLlmConfig config;
        config.endpoint = "http://127.0.0.1:1/v1/chat/completions";
        config.max_retries = 1;
        config.initial_backoff = std::chrono::milliseconds(1);
        config.timeout = std::chrono::seconds(1);
        HttpLlm llm(config);
        CHECK_THROWS_AS(llm.complete(ask("x")), TransportError);
    }

    TEST_CASE("configuration") {
        CHECK_THROWS_AS(HttpLlm(HttpLlmConfig{"not a url"}), ConfigurationError);
        ::unsetenv("GRRAF_LLM_ENDPOINT");
        CHECK_THROWS_AS(HttpLlmConfig::from_environment(), ConfigurationError);
        ::setenv("GRRAF_LLM_ENDPOINT", "http://localhost:9/v1/chat/completions", 1);
        ::setenv("GRRAF_LLM_MODEL", "m1", 1);
        auto c = HttpLlmConfig::from_environment();
        CHECK(c.model == "m1");
        ::unsetenv("GRRAF_LLM_ENDPOINT");
        ::unsetenv("GRRAF_LLM_MODEL");
        CHECK_THROWS_AS(HttpLlmConfig::from_file("/nonexistent/llm.json"), ConfigurationError);
    }
}
