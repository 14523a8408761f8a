#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grraf/graph.hpp"

namespace grraf {

enum class Backend { embedded, external };

std::string_view to_string(Backend backend);
/// "embedded" or "external"; throws ConfigurationError otherwise.
Backend parse_backend(std::string_view name);

enum class ArtifactKind { code_template, final_code };

std::string_view to_string(ArtifactKind kind);

/// A generated program. `iteration` is 0 for the template and the first final
/// code, k for the k-th repair. `exchange` indexes the chat exchange that
/// produced it.
struct CodeArtifact {
    ArtifactKind kind = ArtifactKind::final_code;
    std::string source;
    int iteration = 0;
    std::size_t exchange = 0;
    Backend target = Backend::embedded;

    friend bool operator==(const CodeArtifact&, const CodeArtifact&) = default;
};

nlohmann::json artifact_to_json(const CodeArtifact& artifact);

enum class ExecStatus { ok, execution_error, timed_out };

std::string_view to_string(ExecStatus status);

struct ExecutionResult {
    ExecStatus status = ExecStatus::ok;
    /// The program's returned value; null unless status is ok.
    nlohmann::json answer;
    /// Empty when status is ok.
    std::string error_message;
    std::chrono::nanoseconds wall_time{0};
};

nlohmann::json result_to_json(const ExecutionResult& result);

/// Command line of the external script runner. It receives one JSON request on
/// stdin ({"code", "graph_path", "time_limit_s"}) and prints one JSON response
/// ({"status": "ok"|"error", "answer", "error", "wall_time_ms"}).
struct ExternalRuntime {
    std::vector<std::string> command;

    /// GRRAF_SHIM, split on whitespace. Empty command when unset.
    static ExternalRuntime from_environment();
};

struct ExecutorConfig {
    Backend backend = Backend::embedded;
    ExternalRuntime runtime;
};

/// Runs the graph script on the calling thread. The interpreter checks the
/// wall clock and the stop token cooperatively and halts at the deadline.
ExecutionResult execute_embedded(std::string_view code, const PropertyGraph& g, std::chrono::nanoseconds t,
                                 std::stop_token stop = {});

/// Spawns the runtime in its own process group and kills the whole group at
/// the deadline. Throws ConfigurationError if the runtime cannot be started.
ExecutionResult execute_external(std::string_view code, const std::filesystem::path& graph_path,
                                 std::chrono::nanoseconds t, const ExternalRuntime& runtime);

/// Dispatches on the configured backend. The external backend uses
/// `graph_path` when given, otherwise a temporary canonical-JSON copy of g.
ExecutionResult execute(const CodeArtifact& code, const PropertyGraph& g, std::chrono::nanoseconds t,
                        const ExecutorConfig& config, const std::optional<std::filesystem::path>& graph_path = {},
                        std::stop_token stop = {});

}  // namespace grraf
