#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "grraf/errors.hpp"
#include "grraf/llm.hpp"

namespace grraf::llm {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* value = std::getenv(name);
    return (value != nullptr && *value != '\0') ? std::string(value) : std::move(fallback);
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

HttpLlmConfig HttpLlmConfig::from_environment() {
    HttpLlmConfig config;
    config.endpoint = env_or("GRRAF_LLM_ENDPOINT", "");
    config.api_key = env_or("GRRAF_LLM_API_KEY", "");
    config.model = env_or("GRRAF_LLM_MODEL", config.model);
    if (config.endpoint.empty()) throw ConfigurationError("GRRAF_LLM_ENDPOINT is not set");
    return config;
}

HttpLlmConfig HttpLlmConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open LLM config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("malformed LLM config " + path + ": " + e.what());
    }
    HttpLlmConfig config;
    config.endpoint = j.value("endpoint", env_or("GRRAF_LLM_ENDPOINT", ""));
    config.api_key = j.value("api_key", env_or("GRRAF_LLM_API_KEY", ""));
    config.model = j.value("model", env_or("GRRAF_LLM_MODEL", config.model));
    config.temperature = j.value("temperature", config.temperature);
    config.max_retries = j.value("max_retries", config.max_retries);
    if (config.endpoint.empty()) throw ConfigurationError("LLM endpoint is not configured");
    return config;
}

HttpLlm::HttpLlm(HttpLlmConfig config) : config_(std::move(config)) {
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigurationError("LLM endpoint must be a URL: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = config_.endpoint;
        path_ = "/v1/chat/completions";
    } else {
        scheme_host_port_ = config_.endpoint.substr(0, path_start);
        path_ = config_.endpoint.substr(path_start);
    }
}

ChatResponse HttpLlm::complete(const ChatRequest& request) {
    if (request.messages.empty()) throw ContractError("complete() needs at least one message");

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count());
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count());
        auto result = client.Post(path_, headers, payload, "application/json");
        if (!result) {
            last_error = "transport failure: " + httplib::to_string(result.error());
            continue;
        }
        if (retryable_status(result->status)) {
            last_error = "endpoint returned HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw TransportError("endpoint returned HTTP " + std::to_string(result->status) + ": " + result->body);

        try {
            auto j = nlohmann::json::parse(result->body);
            ChatResponse response;
            response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                response.usage.input_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                response.usage.output_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
            }
            return response;
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what());
        }
    }
    throw TransportError(last_error + " (after " + std::to_string(config_.max_retries) + " retries)");
}

}  // namespace grraf::llm
