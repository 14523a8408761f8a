#include "grraf/llm.hpp"

#include <cctype>

#include "grraf/errors.hpp"

namespace grraf::llm {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::refine: return "refine";
        case Stage::code_template: return "template";
        case Stage::final_code: return "final_code";
        case Stage::repair_error: return "repair_error";
        case Stage::repair_timeout: return "repair_timeout";
        case Stage::fallback: return "fallback";
        case Stage::naturalize: return "naturalize";
        case Stage::other: return "other";
    }
    return "other";
}

nlohmann::json exchange_to_json(const ChatExchange& exchange) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : exchange.messages)
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
    return {{"stage", std::string(to_string(exchange.stage))},
            {"messages", std::move(messages)},
            {"response", exchange.response},
            {"input_tokens", exchange.usage.input_tokens},
            {"output_tokens", exchange.usage.output_tokens}};
}

std::int64_t approximate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string extract_code(std::string_view response) {
    auto open = response.find("```");
    if (open != std::string_view::npos) {
        auto body = response.find('\n', open);
        if (body != std::string_view::npos) {
            auto close = response.find("```", body + 1);
            if (close != std::string_view::npos) {
                auto code = response.substr(body + 1, close - body - 1);
                if (!code.empty() && code.back() == '\n') code.remove_suffix(1);
                if (!code.empty() && code.back() == '\r') code.remove_suffix(1);
                return std::string(code);
            }
        }
    }
    auto first = response.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = response.find_last_not_of(" \t\r\n");
    return std::string(response.substr(first, last - first + 1));
}

ScriptedLlm::ScriptedLlm(TokenCounter counter) : counter_(std::move(counter)) {}

ScriptedLlm& ScriptedLlm::push(std::string text, const std::string& question_id) {
    std::lock_guard lock(mutex_);
    queues_[question_id].push_back(Step{std::move(text), false});
    return *this;
}

ScriptedLlm& ScriptedLlm::push_transport_failure(std::string message, const std::string& question_id) {
    std::lock_guard lock(mutex_);
    queues_[question_id].push_back(Step{std::move(message), true});
    return *this;
}

std::shared_ptr<ScriptedLlm> ScriptedLlm::from_json(const nlohmann::json& script) {
    auto llm = std::make_shared<ScriptedLlm>();
    auto load = [&](const nlohmann::json& steps, const std::string& key) {
        if (!steps.is_array()) throw ConfigurationError("script entries must be arrays of responses");
        for (const auto& step : steps) {
            if (step.is_string()) {
                llm->push(step.get<std::string>(), key);
            } else if (step.is_object() && step.contains("transport_error")) {
                llm->push_transport_failure(step.at("transport_error").get<std::string>(), key);
            } else {
                throw ConfigurationError("script response must be a string or {\"transport_error\": ...}");
            }
        }
    };
    if (script.is_array()) {
        load(script, "");
    } else if (script.is_object()) {
        for (const auto& [key, steps] : script.items()) load(steps, key);
    } else {
        throw ConfigurationError("script must be a JSON array or object");
    }
    return llm;
}

ChatResponse ScriptedLlm::complete(const ChatRequest& request) {
    if (request.messages.empty()) throw ContractError("complete() needs at least one message");
    Step step;
    {
        std::lock_guard lock(mutex_);
        auto it = queues_.find(request.question_id);
        if (it == queues_.end() || it->second.empty()) it = queues_.find("");
        if (it == queues_.end() || it->second.empty())
            throw ScriptExhausted("script exhausted for question '" + request.question_id + "' at stage " +
                                  std::string(to_string(request.stage)));
        step = std::move(it->second.front());
        it->second.pop_front();
    }
    if (step.transport_failure) throw TransportError(step.text);
    ChatResponse response;
    response.text = std::move(step.text);
    for (const auto& m : request.messages) response.usage.input_tokens += counter_(m.text);
    response.usage.output_tokens = counter_(response.text);
    return response;
}

std::size_t ScriptedLlm::remaining(const std::string& question_id) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(question_id);
    return it == queues_.end() ? 0 : it->second.size();
}

}  // namespace grraf::llm
