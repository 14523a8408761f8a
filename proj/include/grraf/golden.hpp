#pragma once

#include <cstdint>
#include <string>

#include "grraf/tasks.hpp"

namespace grraf {

/// Verified graph script answering one question of `task`. Question inputs
/// are bound as constants at the top: `source`, `target`, `query_node`, and
/// for subgraph matching `pattern_nodes` and `pattern_edges`.
std::string golden_program(TaskKind task, const QuestionParams& params);

/// The same program without the constant bindings (a generic template).
std::string golden_template(TaskKind task);

/// Prefixes `code` with a loop that burns `iterations` interpreter steps.
std::string with_busy_loop(const std::string& code, std::int64_t iterations);

}  // namespace grraf
