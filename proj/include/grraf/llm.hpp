#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace grraf::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct Message {
    Role role;
    std::string text;

    friend bool operator==(const Message&, const Message&) = default;
};

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& rhs) {
        input_tokens += rhs.input_tokens;
        output_tokens += rhs.output_tokens;
        return *this;
    }
    friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

/// Which pipeline step issued a request. Backends may ignore it; the scripted
/// and golden backends use it for routing.
enum class Stage { refine, code_template, final_code, repair_error, repair_timeout, fallback, naturalize, other };

std::string_view to_string(Stage stage);

struct ChatRequest {
    std::vector<Message> messages;
    /// Routes scripted responses; empty for unkeyed scripts.
    std::string question_id;
    Stage stage = Stage::other;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
};

/// One recorded request/response pair.
struct ChatExchange {
    Stage stage = Stage::other;
    std::vector<Message> messages;
    std::string response;
    TokenUsage usage;
};

nlohmann::json exchange_to_json(const ChatExchange& exchange);

/// Network or endpoint failure. Retryable at the transport layer.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scripted backend ran out of responses. Signals a broken test, never retried.
class ScriptExhausted : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Chat-completion backend. Implementations must tolerate concurrent calls.
class LlmClient {
public:
    virtual ~LlmClient() = default;

    /// Throws ContractError on an empty message list.
    virtual ChatResponse complete(const ChatRequest& request) = 0;

    /// Short identifier echoed into benchmark reports.
    virtual std::string label() const = 0;
};

using TokenCounter = std::function<std::int64_t(std::string_view)>;

/// ceil(characters / 4).
std::int64_t approximate_tokens(std::string_view text);

/// First fenced code block (language tag dropped), else the trimmed response.
std::string extract_code(std::string_view response);

/// Deterministic backend that replays queued responses per question id.
///
/// Responses queued under the empty key serve any question that has no queue
/// of its own. Usage is measured with the token counter over the request
/// messages (input) and the response (output).
class ScriptedLlm final : public LlmClient {
public:
    explicit ScriptedLlm(TokenCounter counter = approximate_tokens);

    ScriptedLlm& push(std::string text, const std::string& question_id = "");
    /// The next call for this question fails with TransportError.
    ScriptedLlm& push_transport_failure(std::string message, const std::string& question_id = "");

    /// Accepts either an array of responses (unkeyed) or an object mapping
    /// question ids to arrays. Entries are strings or {"transport_error": msg}.
    static std::shared_ptr<ScriptedLlm> from_json(const nlohmann::json& script);

    ChatResponse complete(const ChatRequest& request) override;
    std::string label() const override { return "scripted"; }

    std::size_t remaining(const std::string& question_id = "") const;

private:
    struct Step {
        std::string text;
        bool transport_failure = false;
    };

    TokenCounter counter_;
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<Step>> queues_;
};

struct HttpLlmConfig {
    /// Full URL of the chat-completions endpoint, e.g. https://host/v1/chat/completions.
    std::string endpoint;
    std::string api_key;
    std::string model = "gpt-4o";
    double temperature = 0.0;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};

    /// GRRAF_LLM_ENDPOINT, GRRAF_LLM_API_KEY, GRRAF_LLM_MODEL. Throws
    /// ConfigurationError when the endpoint is unset.
    static HttpLlmConfig from_environment();
    /// {"endpoint": ..., "api_key": ..., "model": ..., "temperature": ...};
    /// unset fields fall back to the environment.
    static HttpLlmConfig from_file(const std::string& path);
};

/// Chat-completions over HTTP(S): POSTs {model, messages, temperature} and
/// reads choices[0].message.content plus usage.prompt_tokens/completion_tokens.
/// Connection failures, 429 and 5xx are retried with exponential backoff.
class HttpLlm final : public LlmClient {
public:
    explicit HttpLlm(HttpLlmConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    std::string label() const override { return "live:" + config_.model; }

private:
    HttpLlmConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace grraf::llm
