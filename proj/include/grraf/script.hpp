#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>

#include <json.hpp>

#include "grraf/graph.hpp"

/// A small, pure, loop-only scripting language for querying one graph.
///
/// Grammar (statements end with ';', blocks use braces, '#' starts a comment):
///
///     stmt   := ['let'] target ('=' | '+=' | '-=' | '*=') expr ';'
///             | 'if' expr block ('else' 'if' expr block)* ['else' block]
///             | 'while' expr block
///             | 'for' name 'in' expr block
///             | 'return' [expr] ';' | 'break' ';' | 'continue' ';'
///             | expr ';'
///     target := name ('[' expr ']')*
///     expr   := or-chains of 'and' / 'not' / comparisons ('==' '!=' '<' '<=' '>' '>=' 'in' 'not in')
///               over '+' '-' '*' '/' '//' '%' and unary '-'
///     atom   := number | string | 'true' | 'false' | 'none' | name | builtin '(' args ')'
///             | '[' exprs ']' | '{' key ':' value, ... '}' | '(' expr ')'
///             | atom '[' expr ']' | atom '.' method '(' args ')'
///
/// Values: none, booleans, exact integers and rationals ('/' is exact, '//'
/// floors), strings, lists (deque-backed), maps, sets, and min-heaps. Lists,
/// maps, sets, and heaps are shared by reference.
///
/// Graph primitives: node_count() edge_count() is_directed() nodes() edges()
/// neighbors(v) successors(v) predecessors(v) has_edge(u,v) edge_weight(u,v)
/// edge_capacity(u,v) node_weight(v) indegree(v) outdegree(v) degree(v).
///
/// General builtins: len range list set map dict deque heap min max abs sum
/// sorted reversed int str error.
///
/// Methods: list append appendleft pop popleft extend contains index reverse
/// sort copy; map get has contains keys values items remove copy; set add
/// remove discard has contains copy; heap push pop peek.
///
/// The ';' may be omitted before '}' and at the end of the program. The
/// zero-argument primitives node_count, edge_count, is_directed, nodes and
/// edges may be written without parentheses unless the name is bound as a
/// variable earlier in the program.
///
/// There is no I/O, no user-defined functions and no recursion.
namespace grraf::script {

enum class ErrorKind { parse, type, undefined_variable, primitive, runtime };

std::string_view to_string(ErrorKind kind);

class ScriptError : public std::runtime_error {
public:
    ScriptError(ErrorKind kind, const std::string& message, int line, int column);

    ErrorKind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    ErrorKind kind_;
    int line_;
    int column_;
};

/// Raised when the deadline passes or a stop is requested mid-run.
class Interrupted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunLimits {
    std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
    std::stop_token stop;
    /// Statements and loop iterations between clock checks.
    unsigned check_interval = 1024;
};

class Program {
public:
    /// Throws ScriptError(kind = parse) with the offending location.
    static Program parse(std::string_view source);

    /// Value of the first executed 'return' (null if the program falls off the
    /// end), as JSON: rationals that are not integers become numbers when they
    /// have a finite decimal form, otherwise "p/q" strings.
    nlohmann::json run(const PropertyGraph& g, const RunLimits& limits = {}) const;

    /// Number of statements and loop iterations the last run() performed on this thread.
    static std::uint64_t last_step_count();

private:
    struct Compiled;
    explicit Program(std::shared_ptr<const Compiled> compiled) : compiled_(std::move(compiled)) {}
    std::shared_ptr<const Compiled> compiled_;
};

/// Parse and run in one step.
nlohmann::json eval_graph_script(std::string_view source, const PropertyGraph& g, const RunLimits& limits = {});

}  // namespace grraf::script
