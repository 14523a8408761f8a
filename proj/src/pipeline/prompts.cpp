#include "grraf/prompts.hpp"

#include <cstdio>
#include <fstream>

#include "grraf/errors.hpp"

namespace grraf {

namespace {

constexpr const char* kSystem =
    "You are a graph reasoning assistant. You answer questions about a graph that is stored "
    "locally and never shown to you. You work by writing programs that run against the stored graph.";

constexpr const char* kRefine =
    "Rewrite the following graph question so that it is precise and unambiguous. State exactly what "
    "must be computed, name every node identifier it mentions, and say what form the answer takes "
    "(yes/no, a number, a list of nodes, or a path with its total weight). Reply with the rewritten "
    "question only.\n\nQuestion: {{question}}";

constexpr const char* kCodeTemplate =
    "Write a generic program template that solves this kind of problem on any graph. Do not use "
    "the specific node identifiers from the question; use placeholder variables instead.\n\n"
    "Problem: {{refined}}\n\n{{language}}\n\nReply with one fenced code block.";

constexpr const char* kFinalCode =
    "Turn the template into the final program for this exact question. Bind the concrete node "
    "identifiers, use the property names from the schema, and return the answer.\n\n"
    "Question: {{refined}}\n\nTemplate:\n```\n{{template}}\n```\n\nThe graph is stored as {{graph}}.\n"
    "{{schema}}\n\n{{language}}\n\nReply with one fenced code block.";

constexpr const char* kRepairError =
    "The program below failed while running against {{graph}}.\n\nQuestion: {{refined}}\n{{schema}}\n\n"
    "Program:\n```\n{{code}}\n```\n\nError:\n{{error}}\n\n{{language}}\n\n"
    "Fix the program. Reply with one fenced code block.";

constexpr const char* kRepairTimeout =
    "The program below did not finish within the time limit of {{time_limit}} while running "
    "against {{graph}}.\n\nQuestion: {{refined}}\n{{schema}}\n\nProgram:\n```\n{{code}}\n```\n\n"
    "{{language}}\n\nRewrite it so that it runs faster, for example with a better algorithm or "
    "fewer repeated scans. Reply with one fenced code block.";

constexpr const char* kFallback =
    "Answer the following graph question directly, without writing code. Give the final answer "
    "on the last line.\n\n{{schema}}\n\nQuestion: {{question}}";

constexpr const char* kNaturalize =
    "Question: {{question}}\nComputed answer: {{answer}}\n\n"
    "Write one or two sentences that give this answer to the person who asked.";

constexpr const char* kEmbeddedLanguage =
    "Write the program in graph-script. Statements end with ';' and blocks use braces:\n"
    "  x = expr;   if cond { ... } else { ... }   while cond { ... }   for v in expr { ... }\n"
    "  return expr;   break;   continue;   # comment\n"
    "Values: true false none, exact integers and fractions ('/' is exact, '//' floors), strings, "
    "lists [a, b], maps {k: v}, set(), heap(). Operators: + - * / // % == != < <= > >= and or not in.\n"
    "Graph functions: node_count() edge_count() is_directed() nodes() edges() neighbors(v) "
    "successors(v) predecessors(v) has_edge(u, v) edge_weight(u, v) edge_capacity(u, v) "
    "node_weight(v) indegree(v) outdegree(v) degree(v).\n"
    "Other functions: len range list set map heap min max abs sum sorted reversed int str error.\n"
    "Methods: list append appendleft pop popleft extend contains index reverse sort copy; "
    "map get has keys values items remove; set add remove discard has; "
    "heap push(priority, item) pop() -> [priority, item] peek.\n"
    "There is no I/O and no function definitions. Return the answer with 'return': a boolean, a "
    "number, a list of node ids, none when no answer exists, or [path, total_weight] for paths.";

constexpr const char* kExternalLanguage =
    "Write the program in Python. The stored graph is already loaded as the networkx graph `G` "
    "(a DiGraph when directed). Node weights are the node attribute 'weight'; edge weights and "
    "capacities are the edge attributes 'weight' and 'capacity'. Store the answer in a variable "
    "named `result`: a boolean, a number, a list of node ids, None when no answer exists, or "
    "[path, total_weight] for paths. Do not read files or print.";

}  // namespace

PromptTemplates PromptTemplates::defaults(Backend backend) {
    PromptTemplates t;
    t.system = kSystem;
    t.refine = kRefine;
    t.code_template = kCodeTemplate;
    t.final_code = kFinalCode;
    t.repair_error = kRepairError;
    t.repair_timeout = kRepairTimeout;
    t.fallback = kFallback;
    t.naturalize = kNaturalize;
    t.language = backend == Backend::embedded ? kEmbeddedLanguage : kExternalLanguage;
    return t;
}

namespace {

std::map<std::string, std::string PromptTemplates::*> fields() {
    return {{"system", &PromptTemplates::system},
            {"refine", &PromptTemplates::refine},
            {"code_template", &PromptTemplates::code_template},
            {"final_code", &PromptTemplates::final_code},
            {"repair_error", &PromptTemplates::repair_error},
            {"repair_timeout", &PromptTemplates::repair_timeout},
            {"fallback", &PromptTemplates::fallback},
            {"naturalize", &PromptTemplates::naturalize},
            {"language", &PromptTemplates::language}};
}

}  // namespace

PromptTemplates PromptTemplates::from_json(const nlohmann::json& j, const PromptTemplates& base) {
    if (!j.is_object()) throw ConfigurationError("prompt templates must be a JSON object");
    PromptTemplates out = base;
    const auto table = fields();
    for (const auto& [key, value] : j.items()) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigurationError("unknown prompt template '" + key + "'");
        if (!value.is_string()) throw ConfigurationError("prompt template '" + key + "' must be a string");
        out.*(it->second) = value.get<std::string>();
    }
    return out;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path, const PromptTemplates& base) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open prompt templates " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("malformed prompt templates " + path.string() + ": " + e.what());
    }
}

nlohmann::json PromptTemplates::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, member] : fields()) j[key] = this->*member;
    return j;
}

std::string PromptTemplates::fingerprint() const {
    std::uint64_t hash = 1469598103934665603ull;
    for (const auto& [key, member] : fields()) {
        for (std::string_view part : {std::string_view(key), std::string_view(this->*member)}) {
            for (unsigned char c : part) {
                hash ^= c;
                hash *= 1099511628211ull;
            }
            hash ^= 0xff;
            hash *= 1099511628211ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto open = text.find("{{", i);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        auto it = values.find(std::string(text.substr(open + 2, close - open - 2)));
        if (it == values.end()) {
            out.append(text.substr(i, open + 2 - i));
            i = open + 2;
            continue;
        }
        out.append(text.substr(i, open - i));
        out.append(it->second);
        i = close + 2;
    }
    out.append(text.substr(i));
    return out;
}

}  // namespace grraf
