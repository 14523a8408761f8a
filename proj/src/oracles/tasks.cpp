#include "grraf/tasks.hpp"

#include <algorithm>
#include <regex>

#include "grraf/errors.hpp"
#include "grraf/graph_io.hpp"

namespace grraf {

namespace {

constexpr std::array<std::string_view, 10> kTaskNames = {
    "cycle_detection",  "connectivity", "bipartite_check",   "topological_sort", "shortest_path",
    "max_triangle_sum", "max_flow",     "subgraph_matching", "indegree",         "outdegree",
};

std::optional<std::int64_t> json_integer(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
        auto r = Rational::parse(j.dump());
        if (r && r->is_integer()) return r->num();
    }
    return std::nullopt;
}

std::optional<NodeSequence> json_sequence(const nlohmann::json& j) {
    if (!j.is_array()) return std::nullopt;
    NodeSequence seq;
    seq.reserve(j.size());
    for (const auto& item : j) {
        auto v = json_integer(item);
        if (!v) return std::nullopt;
        seq.push_back(*v);
    }
    return seq;
}

// Numbers as they appear in prose: "12", "-3", "2.5", "7/2".
const std::regex& number_regex() {
    static const std::regex re(R"((-?\d+(?:\.\d+)?(?:/\d+)?))");
    return re;
}

std::vector<Rational> numbers_in(std::string_view text) {
    std::vector<Rational> out;
    std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), number_regex()); it != std::sregex_iterator(); ++it) {
        if (auto r = Rational::parse((*it)[1].str())) out.push_back(*r);
    }
    return out;
}

std::string lower(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool mentions_nothing(const std::string& lowered) {
    static const std::regex re(R"(\b(none|no path|no triangle|not possible|impossible|does not exist|no valid)\b)");
    return std::regex_search(lowered, re);
}

}  // namespace

std::string_view task_name(TaskKind task) {
    return kTaskNames[static_cast<std::size_t>(task)];
}

std::optional<TaskKind> parse_task(std::string_view name) {
    std::string normalized(name);
    std::replace(normalized.begin(), normalized.end(), '-', '_');
    for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
        if (kTaskNames[i] == normalized) return static_cast<TaskKind>(i);
    }
    return std::nullopt;
}

bool is_polynomial(TaskKind task) {
    return task != TaskKind::subgraph_matching;
}

AnswerShape answer_shape(TaskKind task) {
    switch (task) {
        case TaskKind::cycle_detection:
        case TaskKind::connectivity:
        case TaskKind::bipartite_check:
        case TaskKind::subgraph_matching: return AnswerShape::boolean;
        case TaskKind::topological_sort: return AnswerShape::order;
        case TaskKind::shortest_path: return AnswerShape::path;
        case TaskKind::max_triangle_sum:
        case TaskKind::max_flow: return AnswerShape::rational;
        case TaskKind::indegree:
        case TaskKind::outdegree: return AnswerShape::integer;
    }
    return AnswerShape::boolean;
}

bool shape_accepts(TaskKind task, const TaskAnswer& answer) {
    switch (answer_shape(task)) {
        case AnswerShape::boolean: return std::holds_alternative<bool>(answer);
        case AnswerShape::integer: return std::holds_alternative<std::int64_t>(answer);
        case AnswerShape::rational:
            if (task == TaskKind::max_triangle_sum && std::holds_alternative<NoAnswer>(answer)) return true;
            return std::holds_alternative<Rational>(answer) || std::holds_alternative<std::int64_t>(answer);
        case AnswerShape::order:
            return std::holds_alternative<NodeSequence>(answer) || std::holds_alternative<NoAnswer>(answer);
        case AnswerShape::path:
            return std::holds_alternative<PathAnswer>(answer) || std::holds_alternative<NoAnswer>(answer);
    }
    return false;
}

nlohmann::json answer_to_json(const TaskAnswer& answer) {
    return std::visit(
        [](const auto& a) -> nlohmann::json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, NoAnswer>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::int64_t>) {
                return a;
            } else if constexpr (std::is_same_v<T, Rational>) {
                return rational_to_json(a);
            } else if constexpr (std::is_same_v<T, NodeSequence>) {
                return a;
            } else {
                return nlohmann::json::array({a.path, a.weight ? rational_to_json(*a.weight) : nlohmann::json()});
            }
        },
        answer);
}

std::optional<TaskAnswer> answer_from_json(TaskKind task, const nlohmann::json& value) {
    switch (answer_shape(task)) {
        case AnswerShape::boolean:
            if (value.is_boolean()) return TaskAnswer{value.get<bool>()};
            return std::nullopt;
        case AnswerShape::integer:
            if (auto v = json_integer(value)) return TaskAnswer{*v};
            return std::nullopt;
        case AnswerShape::rational:
            if (value.is_null() && task == TaskKind::max_triangle_sum) return TaskAnswer{NoAnswer{}};
            if (value.is_boolean()) return std::nullopt;
            if (auto r = rational_from_json(value)) return TaskAnswer{*r};
            return std::nullopt;
        case AnswerShape::order:
            if (value.is_null()) return TaskAnswer{NoAnswer{}};
            if (auto seq = json_sequence(value)) return TaskAnswer{*seq};
            return std::nullopt;
        case AnswerShape::path: {
            if (value.is_null()) return TaskAnswer{NoAnswer{}};
            nlohmann::json path_part;
            nlohmann::json weight_part;
            if (value.is_array() && value.size() == 2 && value[0].is_array()) {
                path_part = value[0];
                weight_part = value[1];
            } else if (value.is_object() && value.contains("path")) {
                path_part = value.at("path");
                weight_part = value.contains("weight") ? value.at("weight") : value.value("length", nlohmann::json());
            } else {
                return std::nullopt;
            }
            auto seq = json_sequence(path_part);
            if (!seq) return std::nullopt;
            PathAnswer p{*seq, std::nullopt};
            if (!weight_part.is_null()) {
                p.weight = rational_from_json(weight_part);
                if (!p.weight) return std::nullopt;
            }
            return TaskAnswer{p};
        }
    }
    return std::nullopt;
}

std::optional<TaskAnswer> parse_answer_text(TaskKind task, std::string_view text) {
    const std::string lowered = lower(text);
    switch (answer_shape(task)) {
        case AnswerShape::boolean: {
            static const std::regex yes(R"(\b(yes|true)\b)");
            static const std::regex no(R"(\b(no|false)\b)");
            std::smatch my, mn;
            bool has_yes = std::regex_search(lowered, my, yes);
            bool has_no = std::regex_search(lowered, mn, no);
            if (has_yes && (!has_no || my.position(0) < mn.position(0))) return TaskAnswer{true};
            if (has_no) return TaskAnswer{false};
            return std::nullopt;
        }
        case AnswerShape::integer: {
            auto nums = numbers_in(text);
            if (nums.empty() || !nums.back().is_integer()) return std::nullopt;
            return TaskAnswer{nums.back().num()};
        }
        case AnswerShape::rational: {
            auto nums = numbers_in(text);
            if (nums.empty()) {
                if (task == TaskKind::max_triangle_sum && mentions_nothing(lowered)) return TaskAnswer{NoAnswer{}};
                return std::nullopt;
            }
            return TaskAnswer{nums.back()};
        }
        case AnswerShape::order:
        case AnswerShape::path: {
            static const std::regex list(R"(\[([^\]]*)\])");
            std::smatch m;
            if (!std::regex_search(lowered, m, list)) {
                if (mentions_nothing(lowered)) return TaskAnswer{NoAnswer{}};
                return std::nullopt;
            }
            NodeSequence seq;
            for (const auto& r : numbers_in(m[1].str())) {
                if (!r.is_integer()) return std::nullopt;
                seq.push_back(r.num());
            }
            if (answer_shape(task) == AnswerShape::order) return TaskAnswer{seq};
            PathAnswer p{seq, std::nullopt};
            auto tail = numbers_in(m.suffix().str());
            if (!tail.empty()) p.weight = tail.front();
            return TaskAnswer{p};
        }
    }
    return std::nullopt;
}

std::string render_answer(const TaskAnswer& answer) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            auto seq = [](const NodeSequence& s) {
                std::string out = "[";
                for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
                return out + "]";
            };
            if constexpr (std::is_same_v<T, NoAnswer>) {
                return "none";
            } else if constexpr (std::is_same_v<T, bool>) {
                return a ? "yes" : "no";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(a);
            } else if constexpr (std::is_same_v<T, Rational>) {
                return a.to_string();
            } else if constexpr (std::is_same_v<T, NodeSequence>) {
                return seq(a);
            } else {
                return seq(a.path) + (a.weight ? " with total weight " + a.weight->to_string() : "");
            }
        },
        answer);
}

nlohmann::json params_to_json(const QuestionParams& params) {
    nlohmann::json j = nlohmann::json::object();
    if (params.source) j["source"] = *params.source;
    if (params.target) j["target"] = *params.target;
    if (params.node) j["node"] = *params.node;
    if (params.pattern) j["pattern"] = graph_to_json(*params.pattern);
    return j;
}

QuestionParams params_from_json(const nlohmann::json& j) {
    QuestionParams p;
    if (j.contains("source")) p.source = j.at("source").get<NodeId>();
    if (j.contains("target")) p.target = j.at("target").get<NodeId>();
    if (j.contains("node")) p.node = j.at("node").get<NodeId>();
    if (j.contains("pattern")) p.pattern = std::make_shared<const PropertyGraph>(graph_from_json(j.at("pattern")));
    return p;
}

}  // namespace grraf
