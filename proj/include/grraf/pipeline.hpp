#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "grraf/errors.hpp"
#include "grraf/executor.hpp"
#include "grraf/graph.hpp"
#include "grraf/llm.hpp"
#include "grraf/prompts.hpp"
#include "grraf/schema.hpp"
#include "grraf/tasks.hpp"

namespace grraf {

/// A question P about the stored graph named by graph_ref.
struct QuestionSpec {
    std::string id;
    std::string prompt;
    std::string graph_ref;
    /// When set, returned values must have the task's answer shape; a value of
    /// the wrong shape is treated as an execution error.
    std::optional<TaskKind> task_hint;

    friend bool operator==(const QuestionSpec&, const QuestionSpec&) = default;
};

nlohmann::json question_to_json(const QuestionSpec& q);
QuestionSpec question_from_json(const nlohmann::json& j);

class GraphNotFound : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

/// Named graphs available to the pipeline. Safe for concurrent use.
class GraphStore {
public:
    struct Entry {
        std::shared_ptr<const PropertyGraph> graph;
        /// Set when the graph exists on disk in canonical JSON.
        std::optional<std::filesystem::path> canonical_path;
    };

    void add(const std::string& name, PropertyGraph g, std::optional<std::filesystem::path> canonical_path = {});
    void add(const std::string& name, std::shared_ptr<const PropertyGraph> g,
             std::optional<std::filesystem::path> canonical_path = {});
    /// Loads either dialect; text files are converted in memory.
    void add_file(const std::string& name, const std::filesystem::path& path);

    /// Registered name, else a readable file path (loaded and cached). Throws
    /// GraphNotFound naming the reference.
    Entry resolve(const std::string& ref) const;

    bool contains(const std::string& name) const;

private:
    mutable std::mutex mutex_;
    mutable std::map<std::string, Entry> entries_;
};

struct PipelineConfig {
    std::chrono::nanoseconds time_limit = std::chrono::minutes(5);
    /// Repairs allowed after the first attempt.
    int max_iterations = 3;
    ExecutorConfig executor;
    PromptTemplates templates = PromptTemplates::defaults();
    /// How prompts refer to the stored graph.
    std::string graph_handle = "the stored graph G";

    /// Throws ContractError on negative n or a non-positive time limit.
    void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& config);

enum class LoopEventKind { execution_error, timed_out };

std::string_view to_string(LoopEventKind kind);

struct LoopEvent {
    LoopEventKind kind;
    std::string message;
    /// The attempt (1-based) whose execution failed.
    int attempt;

    friend bool operator==(const LoopEvent&, const LoopEvent&) = default;
};

/// Full trace of one question.
struct AnswerRecord {
    QuestionSpec question;
    std::string refined_prompt;
    std::optional<CodeArtifact> code_template;
    std::vector<CodeArtifact> final_codes;
    std::vector<ExecutionResult> executions;
    /// A, typed when the task is known and the value has its shape.
    std::optional<TaskAnswer> answer;
    /// A as returned: the program's value, or the fallback reply text.
    nlohmann::json raw_answer;
    /// A0.
    std::string naturalized;
    /// A0 is the deterministic rendering because the naturalize call failed.
    bool naturalized_by_rendering = false;
    int attempts = 0;
    bool fallback_used = false;
    std::vector<LoopEvent> loop_events;
    std::vector<llm::ChatExchange> exchanges;
    llm::TokenUsage usage;
    std::chrono::nanoseconds wall_time{0};
    /// Transport failure that ended the run early; empty otherwise.
    std::string error;
};

/// Stable field names. Timing fields are omitted when `with_timing` is false,
/// which makes records from identical scripted runs byte-identical.
nlohmann::json record_to_json(const AnswerRecord& record, bool with_timing = true);

/// True when `text` lists edges of g: at least min(3, edge_count) distinct
/// edges written as (u,v), [u,v], u->v, u-v or {"u":..,"v":..}.
bool mentions_graph_edges(std::string_view text, const PropertyGraph& g);

/// The workflow: refine P into P', draft a template C, write the final code
/// C' from P', C and the schema S, execute it under the time limit, feed
/// errors and time-outs back for up to n repairs, then fall back to a direct
/// answer, and finally phrase the answer A as A0.
class Pipeline {
public:
    Pipeline(std::shared_ptr<llm::LlmClient> llm, PipelineConfig config, std::shared_ptr<const GraphStore> graphs);

    /// Never throws for LLM transport or execution failures; those land in the
    /// record. Throws ContractError for an empty prompt, GraphNotFound for an
    /// unknown graph, and lets llm::ScriptExhausted through.
    AnswerRecord run(const QuestionSpec& q, std::stop_token stop = {}) const;

    // Single stages; each appends its exchange to `record`.
    std::string refine_prompt(const QuestionSpec& q, AnswerRecord& record) const;
    CodeArtifact generate_template(const QuestionSpec& q, const std::string& refined, AnswerRecord& record) const;
    CodeArtifact generate_final_code(const QuestionSpec& q, const std::string& refined, const CodeArtifact& tmpl,
                                     const GraphSchema& schema, AnswerRecord& record) const;
    std::string naturalize_answer(const QuestionSpec& q, const std::string& rendered_answer,
                                  AnswerRecord& record) const;

    const PipelineConfig& config() const { return config_; }

private:
    std::string ask(const QuestionSpec& q, llm::Stage stage, std::string user, AnswerRecord& record) const;
    std::map<std::string, std::string> code_context(const std::string& refined, const GraphSchema& schema) const;

    std::shared_ptr<llm::LlmClient> llm_;
    PipelineConfig config_;
    std::shared_ptr<const GraphStore> graphs_;
};

}  // namespace grraf
