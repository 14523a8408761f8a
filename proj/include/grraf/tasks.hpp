#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "grraf/graph.hpp"

namespace grraf {

enum class TaskKind {
    cycle_detection,
    connectivity,
    bipartite_check,
    topological_sort,
    shortest_path,
    max_triangle_sum,
    max_flow,
    subgraph_matching,
    indegree,
    outdegree,
};

inline constexpr std::array<TaskKind, 10> kAllTasks = {
    TaskKind::cycle_detection,  TaskKind::connectivity,     TaskKind::bipartite_check, TaskKind::topological_sort,
    TaskKind::shortest_path,    TaskKind::max_triangle_sum, TaskKind::max_flow,        TaskKind::subgraph_matching,
    TaskKind::indegree,         TaskKind::outdegree,
};

/// snake_case identifier, e.g. "shortest_path".
std::string_view task_name(TaskKind task);
std::optional<TaskKind> parse_task(std::string_view name);

/// True for every task except subgraph matching.
bool is_polynomial(TaskKind task);

/// "no such object": no topological order, unreachable target, no triangle.
struct NoAnswer {
    friend bool operator==(NoAnswer, NoAnswer) { return true; }
};

using NodeSequence = std::vector<NodeId>;

struct PathAnswer {
    NodeSequence path;
    std::optional<Rational> weight;

    friend bool operator==(const PathAnswer&, const PathAnswer&) = default;
};

using TaskAnswer = std::variant<NoAnswer, bool, std::int64_t, Rational, NodeSequence, PathAnswer>;

enum class AnswerShape { boolean, integer, rational, order, path };

AnswerShape answer_shape(TaskKind task);

/// Whether `answer` is an acceptable tag for `task` (integers count as rationals;
/// NoAnswer is legal where the task can have no solution).
bool shape_accepts(TaskKind task, const TaskAnswer& answer);

/// Per-question inputs beyond the graph.
struct QuestionParams {
    std::optional<NodeId> source;
    std::optional<NodeId> target;
    std::optional<NodeId> node;
    std::shared_ptr<const PropertyGraph> pattern;
};

nlohmann::json answer_to_json(const TaskAnswer& answer);

/// Task-aware conversion of a program's returned value. nullopt when the value
/// does not have the task's answer shape.
std::optional<TaskAnswer> answer_from_json(TaskKind task, const nlohmann::json& value);

/// Lenient extraction from free text (the fallback direct answer). nullopt when
/// nothing of the right shape is found.
std::optional<TaskAnswer> parse_answer_text(TaskKind task, std::string_view text);

/// Plain deterministic rendering, used when the naturalization call fails.
std::string render_answer(const TaskAnswer& answer);

nlohmann::json params_to_json(const QuestionParams& params);
QuestionParams params_from_json(const nlohmann::json& j);

}  // namespace grraf
