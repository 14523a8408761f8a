#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grraf/llm.hpp"
#include "grraf/pipeline.hpp"
#include "grraf/tasks.hpp"

namespace grraf::bench {

/// The dataset spec cannot produce a well-posed instance (e.g. triangles on 2 nodes).
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    TaskKind task = TaskKind::shortest_path;
    std::size_t min_nodes = 2;
    std::size_t max_nodes = 100;
    std::size_t count = 50;
    /// Per-instance edge probability is drawn uniformly from this range.
    double min_density = 0.05;
    double max_density = 0.3;
    std::uint64_t seed = 1;

    /// Node ranges of the reference benchmark, 50 instances, seed 1.
    static DatasetSpec defaults(TaskKind task);

    /// Throws GenerationError when no instance can satisfy the spec.
    void validate() const;
};

nlohmann::json spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const nlohmann::json& j);

struct Instance {
    QuestionSpec question;
    QuestionParams params;
    std::shared_ptr<const PropertyGraph> graph;
    /// Oracle answer; absent only if the matcher ran out of budget.
    std::optional<TaskAnswer> truth;
    std::uint64_t seed = 0;
    /// Canonical-JSON copy on disk, set for datasets read with load_dataset.
    std::optional<std::filesystem::path> graph_file;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Instance> instances;
};

/// Seeded and reproducible: the same dataset spec always yields the same dataset.
Dataset gen_dataset(const DatasetSpec& spec);

/// Generates one instance of exactly `nodes` nodes with the given density.
Instance gen_instance(TaskKind task, std::size_t nodes, double density, std::uint64_t seed, const std::string& id);

/// Writes manifest.json plus graphs/<id>.json into `dir`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Registers every instance graph under its question's graph_ref.
std::shared_ptr<GraphStore> make_store(const std::vector<Dataset>& datasets);

/// LLM stand-in that answers every code-generation stage with the shipped
/// golden program for the question, so a run exercises the pipeline and the
/// executor without a model.
class GoldenLlm final : public llm::LlmClient {
public:
    explicit GoldenLlm(llm::TokenCounter counter = llm::approximate_tokens);

    void add(const std::string& question_id, TaskKind task, QuestionParams params, std::string prompt);
    static std::shared_ptr<GoldenLlm> for_datasets(const std::vector<Dataset>& datasets);

    /// Prepends a loop of this many interpreter steps to every final program.
    void set_busy_iterations(std::int64_t iterations) { busy_iterations_ = iterations; }

    llm::ChatResponse complete(const llm::ChatRequest& request) override;
    std::string label() const override { return "golden"; }

private:
    struct Entry {
        TaskKind task;
        QuestionParams params;
        std::string prompt;
    };
    llm::TokenCounter counter_;
    std::map<std::string, Entry> entries_;
    std::int64_t busy_iterations_ = 0;
};

struct BenchOptions {
    std::size_t parallelism = 1;
    /// Keep full AnswerRecords in the report.
    bool keep_records = true;
};

/// One CSV row: task, size, correct, attempts, fallback, err_kind, in_tokens,
/// out_tokens, wall_ms.
struct BenchRow {
    std::string id;
    TaskKind task = TaskKind::shortest_path;
    std::size_t size = 0;
    bool correct = false;
    int attempts = 0;
    bool fallback = false;
    /// First loop event ("execution_error", "timed_out"), else "llm_error" or
    /// "harness_error" for runs that stopped early, else "none".
    std::string err_kind = "none";
    llm::TokenUsage usage;
    double wall_ms = 0;
};

struct TaskSummary {
    TaskKind task = TaskKind::shortest_path;
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0;
    double execution_error_fraction = 0;
    double timeout_fraction = 0;
    double clean_fraction = 0;
    double fallback_fraction = 0;
    double mean_input_tokens = 0;
    double mean_output_tokens = 0;
};

struct BenchReport {
    nlohmann::json config;
    std::vector<BenchRow> rows;
    std::vector<nlohmann::json> records;
    std::vector<TaskSummary> tasks;
    /// Harness-level failures (one line per question that raised).
    std::vector<std::string> errors;
};

/// Per task, in kAllTasks order, only for tasks present in rows.
std::vector<TaskSummary> summarize(const std::vector<BenchRow>& rows);

BenchReport run_benchmark(const std::vector<Dataset>& datasets, const PipelineConfig& config,
                          std::shared_ptr<llm::LlmClient> llm, const BenchOptions& options = {});

nlohmann::json report_to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const BenchReport& report);
/// Human-readable per-task table.
std::string summary_table(const BenchReport& report);

struct TokenRow {
    std::size_t size = 0;
    std::size_t questions = 0;
    double mean_input_tokens = 0;
    double mean_output_tokens = 0;
};

/// Mean token usage per graph size across reports. Throws ContractError when
/// the reports were produced with different configurations.
std::vector<TokenRow> token_curve(const std::vector<BenchReport>& reports);

enum class SweepParam { time_limit, max_iterations, backbone };

std::string_view to_string(SweepParam param);
SweepParam parse_sweep_param(std::string_view name);

struct SweepPoint {
    std::string value;
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0;
    double fallback_fraction = 0;
    double mean_wall_ms = 0;
};

/// Builds the LLM for one sweep point. Receives the value for backbone
/// sweeps and an empty string otherwise.
using LlmFactory = std::function<std::shared_ptr<llm::LlmClient>(const std::string& backbone)>;

/// One benchmark per value with everything else fixed. Time limits are in
/// seconds. Throws ContractError on an empty value list or an unparsable value.
std::vector<SweepPoint> sweep(SweepParam param, const std::vector<std::string>& values,
                              const std::vector<Dataset>& datasets, const PipelineConfig& base,
                              const LlmFactory& make_llm, const BenchOptions& options = {});

nlohmann::json sweep_to_json(SweepParam param, const std::vector<SweepPoint>& points);

}  // namespace grraf::bench
