#include "grraf/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "grraf/graph_io.hpp"

namespace grraf {

using Clock = std::chrono::steady_clock;

nlohmann::json question_to_json(const QuestionSpec& q) {
    nlohmann::json j = {{"id", q.id}, {"prompt", q.prompt}, {"graph", q.graph_ref}};
    j["task"] = q.task_hint ? nlohmann::json(std::string(task_name(*q.task_hint))) : nlohmann::json();
    return j;
}

QuestionSpec question_from_json(const nlohmann::json& j) {
    QuestionSpec q;
    q.id = j.value("id", std::string());
    q.prompt = j.at("prompt").get<std::string>();
    q.graph_ref = j.at("graph").get<std::string>();
    if (j.contains("task") && !j["task"].is_null()) {
        auto name = j["task"].get<std::string>();
        q.task_hint = parse_task(name);
        if (!q.task_hint) throw ConfigurationError("unknown task '" + name + "'");
    }
    return q;
}

// ---------------------------------------------------------------------------

void GraphStore::add(const std::string& name, PropertyGraph g, std::optional<std::filesystem::path> canonical_path) {
    add(name, std::make_shared<const PropertyGraph>(std::move(g)), std::move(canonical_path));
}

void GraphStore::add(const std::string& name, std::shared_ptr<const PropertyGraph> g,
                     std::optional<std::filesystem::path> canonical_path) {
    std::lock_guard lock(mutex_);
    entries_[name] = Entry{std::move(g), std::move(canonical_path)};
}

namespace {

bool is_canonical_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    char c;
    while (in.get(c)) {
        if (!std::isspace(static_cast<unsigned char>(c))) return c == '{';
    }
    return false;
}

}  // namespace

void GraphStore::add_file(const std::string& name, const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw GraphNotFound("graph file not found: " + path.string());
    auto g = load_graph_file(path);
    std::optional<std::filesystem::path> canonical;
    if (is_canonical_json_file(path)) canonical = std::filesystem::absolute(path);
    add(name, std::move(g), canonical);
}

GraphStore::Entry GraphStore::resolve(const std::string& ref) const {
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(ref);
        if (it != entries_.end()) return it->second;
    }
    if (!std::filesystem::is_regular_file(ref)) throw GraphNotFound("graph not found: " + ref);
    Entry entry{std::make_shared<const PropertyGraph>(load_graph_file(ref)), std::nullopt};
    if (is_canonical_json_file(ref)) entry.canonical_path = std::filesystem::absolute(ref);
    std::lock_guard lock(mutex_);
    return entries_.emplace(ref, std::move(entry)).first->second;
}

bool GraphStore::contains(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return entries_.count(name) > 0;
}

// ---------------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (max_iterations < 0) throw ContractError("max_iterations must be >= 0");
    if (time_limit <= std::chrono::nanoseconds::zero()) throw ContractError("time limit must be positive");
}

nlohmann::json config_to_json(const PipelineConfig& config) {
    nlohmann::json j = {{"time_limit_s", std::chrono::duration<double>(config.time_limit).count()},
                        {"max_iterations", config.max_iterations},
                        {"backend", std::string(to_string(config.executor.backend))},
                        {"templates_fingerprint", config.templates.fingerprint()}};
    if (config.executor.backend == Backend::external) j["runtime"] = config.executor.runtime.command;
    return j;
}

std::string_view to_string(LoopEventKind kind) {
    return kind == LoopEventKind::execution_error ? "execution_error" : "timed_out";
}

nlohmann::json record_to_json(const AnswerRecord& r, bool with_timing) {
    nlohmann::json j;
    j["question"] = question_to_json(r.question);
    j["refined_prompt"] = r.refined_prompt;
    j["template"] = r.code_template ? artifact_to_json(*r.code_template) : nlohmann::json();
    j["final_codes"] = nlohmann::json::array();
    for (const auto& c : r.final_codes) j["final_codes"].push_back(artifact_to_json(c));
    j["executions"] = nlohmann::json::array();
    for (const auto& e : r.executions) {
        auto ej = result_to_json(e);
        if (!with_timing) ej.erase("wall_ms");
        j["executions"].push_back(std::move(ej));
    }
    j["answer"] = r.answer ? answer_to_json(*r.answer) : nlohmann::json();
    j["answer_typed"] = r.answer.has_value();
    j["raw_answer"] = r.raw_answer;
    j["naturalized"] = r.naturalized;
    j["naturalized_by_rendering"] = r.naturalized_by_rendering;
    j["attempts"] = r.attempts;
    j["fallback_used"] = r.fallback_used;
    j["loop_events"] = nlohmann::json::array();
    for (const auto& e : r.loop_events)
        j["loop_events"].push_back(
            {{"kind", std::string(to_string(e.kind))}, {"message", e.message}, {"attempt", e.attempt}});
    j["usage"] = {{"input_tokens", r.usage.input_tokens}, {"output_tokens", r.usage.output_tokens}};
    j["exchanges"] = nlohmann::json::array();
    for (const auto& x : r.exchanges) j["exchanges"].push_back(llm::exchange_to_json(x));
    if (with_timing) j["wall_ms"] = std::chrono::duration<double, std::milli>(r.wall_time).count();
    j["error"] = r.error.empty() ? nlohmann::json() : nlohmann::json(r.error);
    return j;
}

bool mentions_graph_edges(std::string_view text, const PropertyGraph& g) {
    if (g.edge_count() == 0) return false;
    static const std::regex patterns[] = {
        std::regex(R"(\(\s*(\d+)\s*,\s*(\d+)\s*\))"),
        std::regex(R"(\[\s*(\d+)\s*,\s*(\d+)\s*\])"),
        std::regex(R"((\d+)\s*-+>?\s*(\d+))"),
        std::regex(R"re("u"\s*:\s*(\d+)\s*,\s*"v"\s*:\s*(\d+))re"),
    };
    const std::size_t needed = std::min<std::size_t>(3, g.edge_count());
    std::set<std::pair<NodeId, NodeId>> hits;
    const std::string s(text);
    for (const auto& re : patterns) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
            if ((*it)[1].length() > 9 || (*it)[2].length() > 9) continue;
            NodeId u = std::stoll((*it)[1].str());
            NodeId v = std::stoll((*it)[2].str());
            if (!g.valid_node(u) || !g.valid_node(v) || !g.has_edge(u, v)) continue;
            if (!g.directed() && u > v) std::swap(u, v);
            hits.emplace(u, v);
            if (hits.size() >= needed) return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::shared_ptr<llm::LlmClient> llm, PipelineConfig config, std::shared_ptr<const GraphStore> graphs)
    : llm_(std::move(llm)), config_(std::move(config)), graphs_(std::move(graphs)) {
    if (!llm_) throw ContractError("pipeline needs an LLM client");
    if (!graphs_) throw ContractError("pipeline needs a graph store");
    config_.validate();
}

std::string Pipeline::ask(const QuestionSpec& q, llm::Stage stage, std::string user, AnswerRecord& record) const {
    llm::ChatRequest request;
    request.messages = {{llm::Role::system, config_.templates.system}, {llm::Role::user, std::move(user)}};
    request.question_id = q.id;
    request.stage = stage;
    auto response = llm_->complete(request);
    record.usage += response.usage;
    record.exchanges.push_back(llm::ChatExchange{stage, std::move(request.messages), response.text, response.usage});
    return response.text;
}

std::map<std::string, std::string> Pipeline::code_context(const std::string& refined, const GraphSchema& schema) const {
    return {{"refined", refined},
            {"schema", render_schema(schema)},
            {"graph", config_.graph_handle},
            {"language", config_.templates.language}};
}

namespace {

std::string trim(const std::string& text) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::string seconds_text(std::chrono::nanoseconds t) {
    std::ostringstream out;
    out << std::chrono::duration<double>(t).count() << " s";
    return out.str();
}

std::string_view shape_name(AnswerShape shape) {
    switch (shape) {
        case AnswerShape::boolean: return "a boolean";
        case AnswerShape::integer: return "an integer";
        case AnswerShape::rational: return "a number (or none)";
        case AnswerShape::order: return "a list of node ids (or none)";
        case AnswerShape::path: return "[path, total_weight] (or none)";
    }
    return "a value";
}

}  // namespace

std::string Pipeline::refine_prompt(const QuestionSpec& q, AnswerRecord& record) const {
    if (trim(q.prompt).empty()) throw ContractError("question prompt is empty");
    auto text = ask(q, llm::Stage::refine, render_template(config_.templates.refine, {{"question", q.prompt}}), record);
    record.refined_prompt = trim(text);
    return record.refined_prompt;
}

CodeArtifact Pipeline::generate_template(const QuestionSpec& q, const std::string& refined,
                                         AnswerRecord& record) const {
    if (trim(refined).empty()) throw ContractError("refined prompt is empty");
    auto text = ask(q, llm::Stage::code_template,
                    render_template(config_.templates.code_template,
                                    {{"refined", refined}, {"language", config_.templates.language}}),
                    record);
    CodeArtifact c{ArtifactKind::code_template, llm::extract_code(text), 0, record.exchanges.size() - 1,
                   config_.executor.backend};
    record.code_template = c;
    return c;
}

CodeArtifact Pipeline::generate_final_code(const QuestionSpec& q, const std::string& refined,
                                           const CodeArtifact& tmpl, const GraphSchema& schema,
                                           AnswerRecord& record) const {
    auto values = code_context(refined, schema);
    values["template"] = tmpl.source;
    auto text = ask(q, llm::Stage::final_code, render_template(config_.templates.final_code, values), record);
    return CodeArtifact{ArtifactKind::final_code, llm::extract_code(text), 0, record.exchanges.size() - 1,
                        config_.executor.backend};
}

std::string Pipeline::naturalize_answer(const QuestionSpec& q, const std::string& rendered_answer,
                                        AnswerRecord& record) const {
    auto text = ask(q, llm::Stage::naturalize,
                    render_template(config_.templates.naturalize, {{"question", q.prompt}, {"answer", rendered_answer}}),
                    record);
    return trim(text);
}

AnswerRecord Pipeline::run(const QuestionSpec& q, std::stop_token stop) const {
    const auto start = Clock::now();
    if (trim(q.prompt).empty()) throw ContractError("question prompt is empty");
    const auto entry = graphs_->resolve(q.graph_ref);
    const PropertyGraph& g = *entry.graph;
    const GraphSchema schema = extract_schema(g);

    AnswerRecord record;
    record.question = q;
    try {
        const std::string refined = refine_prompt(q, record);
        const CodeArtifact tmpl = generate_template(q, refined, record);
        CodeArtifact code = generate_final_code(q, refined, tmpl, schema, record);

        bool solved = false;
        for (int attempt = 1;; ++attempt) {
            record.attempts = attempt;
            record.final_codes.push_back(code);
            auto result = execute(code, g, config_.time_limit, config_.executor, entry.canonical_path, stop);
            record.executions.push_back(result);

            std::optional<LoopEvent> event;
            if (result.status == ExecStatus::ok) {
                if (q.task_hint) {
                    auto typed = answer_from_json(*q.task_hint, result.answer);
                    if (typed) {
                        record.answer = std::move(typed);
                    } else {
                        event = LoopEvent{LoopEventKind::execution_error,
                                          "returned value " + result.answer.dump() + " is not " +
                                              std::string(shape_name(answer_shape(*q.task_hint))),
                                          attempt};
                    }
                }
                if (!event) {
                    record.raw_answer = result.answer;
                    solved = true;
                    break;
                }
            } else {
                event = LoopEvent{result.status == ExecStatus::timed_out ? LoopEventKind::timed_out
                                                                         : LoopEventKind::execution_error,
                                  result.error_message, attempt};
            }
            record.loop_events.push_back(*event);
            if (attempt > config_.max_iterations) break;

            auto values = code_context(refined, schema);
            values["code"] = code.source;
            llm::Stage stage;
            std::string prompt;
            if (event->kind == LoopEventKind::timed_out) {
                stage = llm::Stage::repair_timeout;
                values["time_limit"] = seconds_text(config_.time_limit);
                prompt = render_template(config_.templates.repair_timeout, values);
            } else {
                stage = llm::Stage::repair_error;
                values["error"] = event->message;
                prompt = render_template(config_.templates.repair_error, values);
            }
            auto text = ask(q, stage, std::move(prompt), record);
            code = CodeArtifact{ArtifactKind::final_code, llm::extract_code(text), attempt,
                                record.exchanges.size() - 1, config_.executor.backend};
        }

        if (!solved) {
            record.fallback_used = true;
            auto text = ask(q, llm::Stage::fallback,
                            render_template(config_.templates.fallback,
                                            {{"question", q.prompt}, {"schema", render_schema(schema)}}),
                            record);
            record.raw_answer = text;
            if (q.task_hint) record.answer = parse_answer_text(*q.task_hint, text);
        }

        std::string rendered;
        if (record.answer) {
            rendered = render_answer(*record.answer);
        } else if (record.raw_answer.is_string()) {
            rendered = trim(record.raw_answer.get<std::string>());
        } else {
            rendered = record.raw_answer.dump();
        }
        try {
            record.naturalized = naturalize_answer(q, rendered, record);
        } catch (const llm::TransportError&) {
            record.naturalized = rendered;
            record.naturalized_by_rendering = true;
        }
    } catch (const llm::TransportError& e) {
        record.error = std::string("LLM transport failure: ") + e.what();
    }
    record.wall_time = Clock::now() - start;
    return record;
}

}  // namespace grraf
