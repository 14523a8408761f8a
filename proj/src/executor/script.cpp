#include "grraf/script.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <variant>
#include <vector>

#include "grraf/graph_io.hpp"

namespace grraf::script {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parse: return "parse error";
        case ErrorKind::type: return "type error";
        case ErrorKind::undefined_variable: return "undefined variable";
        case ErrorKind::primitive: return "primitive misuse";
        case ErrorKind::runtime: return "runtime error";
    }
    return "error";
}

ScriptError::ScriptError(ErrorKind kind, const std::string& message, int line, int column)
    : std::runtime_error(std::string(to_string(kind)) + " at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

constexpr std::size_t kMaxItems = 5'000'000;
constexpr std::size_t kMaxString = 64u << 20;
constexpr int kMaxNesting = 200;

thread_local std::uint64_t t_last_steps = 0;

// ---------------------------------------------------------------------------
// Values

struct ListObj;
struct MapObj;
struct SetObj;
struct HeapObj;
struct Unset {};

using Value = std::variant<Unset, std::monostate, bool, std::int64_t, Rational, std::string, std::shared_ptr<ListObj>,
                           std::shared_ptr<MapObj>, std::shared_ptr<SetObj>, std::shared_ptr<HeapObj>>;
using ListRef = std::shared_ptr<ListObj>;
using MapRef = std::shared_ptr<MapObj>;
using SetRef = std::shared_ptr<SetObj>;
using HeapRef = std::shared_ptr<HeapObj>;

bool is_number(const Value& v) {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<Rational>(v);
}

Rational as_rational(const Value& v) {
    if (auto i = std::get_if<std::int64_t>(&v)) return Rational(*i);
    return std::get<Rational>(v);
}

Value number(const Rational& r) {
    if (r.is_integer()) return r.num();
    return r;
}

// none < bool < number < string; only these may be map keys or set members.
int key_rank(const Value& v) {
    if (std::holds_alternative<std::monostate>(v)) return 0;
    if (std::holds_alternative<bool>(v)) return 1;
    if (is_number(v)) return 2;
    if (std::holds_alternative<std::string>(v)) return 3;
    return -1;
}

struct KeyLess {
    bool operator()(const Value& a, const Value& b) const {
        int ra = key_rank(a), rb = key_rank(b);
        if (ra != rb) return ra < rb;
        switch (ra) {
            case 1: return std::get<bool>(a) < std::get<bool>(b);
            case 2: {
                auto ia = std::get_if<std::int64_t>(&a);
                auto ib = std::get_if<std::int64_t>(&b);
                if (ia && ib) return *ia < *ib;
                return as_rational(a) < as_rational(b);
            }
            case 3: return std::get<std::string>(a) < std::get<std::string>(b);
            default: return false;
        }
    }
};

struct ListObj {
    std::deque<Value> items;
};
struct MapObj {
    std::map<Value, Value, KeyLess> items;
};
struct SetObj {
    std::set<Value, KeyLess> items;
};
struct HeapObj {
    struct Entry {
        Value priority;
        std::uint64_t seq;
        Value item;
    };
    std::vector<Entry> data;
    std::uint64_t next_seq = 0;
};

std::string type_name(const Value& v) {
    switch (v.index()) {
        case 0: return "unset";
        case 1: return "none";
        case 2: return "bool";
        case 3: return "int";
        case 4: return "rational";
        case 5: return "string";
        case 6: return "list";
        case 7: return "map";
        case 8: return "set";
        case 9: return "heap";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Syntax tree

enum class K : std::uint8_t {
    Block, ExprStmt, Assign, If, While, For, Return, Break, Continue,
    Const, Var, ListLit, MapLit, Index, Call, Method, Binary, And, Or, Not, Neg, In, NotIn,
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, FloorDiv, Mod, Eq, Ne, Lt, Le, Gt, Ge };

enum class Builtin : std::uint8_t {
    NodeCount, EdgeCount, IsDirected, Nodes, Edges, Neighbors, Successors, Predecessors, HasEdge, EdgeWeight,
    EdgeCapacity, NodeWeight, Indegree, Outdegree, Degree, Len, Range, List, Set, Map, Heap, Min, Max, Abs, Sum,
    Sorted, Reversed, Int, Str, Error,
};

enum class Method : std::uint8_t {
    Append, AppendLeft, Pop, PopLeft, Extend, Contains, Index, Reverse, Sort, Copy, Get, Has, Keys, Values, Items,
    Remove, Add, Discard, Push, Peek,
};

const std::unordered_map<std::string_view, Builtin>& builtin_table() {
    static const std::unordered_map<std::string_view, Builtin> table = {
        {"node_count", Builtin::NodeCount}, {"edge_count", Builtin::EdgeCount},
        {"is_directed", Builtin::IsDirected}, {"nodes", Builtin::Nodes},
        {"edges", Builtin::Edges},          {"neighbors", Builtin::Neighbors},
        {"successors", Builtin::Successors}, {"predecessors", Builtin::Predecessors},
        {"has_edge", Builtin::HasEdge},     {"edge_weight", Builtin::EdgeWeight},
        {"edge_capacity", Builtin::EdgeCapacity}, {"node_weight", Builtin::NodeWeight},
        {"indegree", Builtin::Indegree},    {"outdegree", Builtin::Outdegree},
        {"degree", Builtin::Degree},        {"len", Builtin::Len},
        {"range", Builtin::Range},          {"list", Builtin::List},
        {"deque", Builtin::List},           {"set", Builtin::Set},
        {"map", Builtin::Map},              {"dict", Builtin::Map},
        {"heap", Builtin::Heap},            {"min", Builtin::Min},
        {"max", Builtin::Max},              {"abs", Builtin::Abs},
        {"sum", Builtin::Sum},              {"sorted", Builtin::Sorted},
        {"reversed", Builtin::Reversed},    {"int", Builtin::Int},
        {"str", Builtin::Str},              {"error", Builtin::Error},
    };
    return table;
}

const std::unordered_map<std::string_view, Method>& method_table() {
    static const std::unordered_map<std::string_view, Method> table = {
        {"append", Method::Append}, {"appendleft", Method::AppendLeft}, {"pop", Method::Pop},
        {"popleft", Method::PopLeft}, {"extend", Method::Extend},       {"contains", Method::Contains},
        {"index", Method::Index},   {"reverse", Method::Reverse},       {"sort", Method::Sort},
        {"copy", Method::Copy},     {"get", Method::Get},               {"has", Method::Has},
        {"keys", Method::Keys},     {"values", Method::Values},         {"items", Method::Items},
        {"remove", Method::Remove}, {"add", Method::Add},               {"discard", Method::Discard},
        {"push", Method::Push},     {"peek", Method::Peek},
    };
    return table;
}

struct Node {
    K kind;
    int line = 0;
    int col = 0;
    Value value;
    std::size_t slot = 0;
    BinOp op = BinOp::Add;
    bool compound = false;
    Builtin builtin = Builtin::Len;
    Method method = Method::Append;
    std::string name;
    std::vector<std::unique_ptr<Node>> kids;
};

using NodePtr = std::unique_ptr<Node>;

// ---------------------------------------------------------------------------
// Lexer

enum class T { End, Ident, Int, Decimal, String, Punct };

struct Token {
    T type = T::End;
    std::string text;
    int line = 1;
    int col = 1;
};

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto bump = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            bump();
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') bump();
            continue;
        }
        Token tok;
        tok.line = line;
        tok.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) bump();
            tok.type = T::Ident;
            tok.text = std::string(src.substr(start, i - start));
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) bump();
            tok.type = T::Int;
            if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
                bump();
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) bump();
                tok.type = T::Decimal;
            }
            tok.text = std::string(src.substr(start, i - start));
        } else if (c == '"' || c == '\'') {
            char quote = c;
            bump();
            std::string text;
            while (true) {
                if (i >= src.size() || src[i] == '\n')
                    throw ScriptError(ErrorKind::parse, "unterminated string", tok.line, tok.col);
                char d = src[i];
                if (d == quote) {
                    bump();
                    break;
                }
                if (d == '\\' && i + 1 < src.size()) {
                    char e = src[i + 1];
                    text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                    bump(2);
                    continue;
                }
                text += d;
                bump();
            }
            tok.type = T::String;
            tok.text = std::move(text);
        } else {
            static const std::string_view two[] = {"==", "!=", "<=", ">=", "//", "+=", "-=", "*=", "&&", "||"};
            tok.type = T::Punct;
            std::string_view rest = src.substr(i);
            bool matched = false;
            for (auto op : two) {
                if (rest.substr(0, 2) == op) {
                    tok.text = std::string(op);
                    bump(2);
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                if (std::string_view("+-*/%<>=()[]{},;:.!").find(c) == std::string_view::npos)
                    throw ScriptError(ErrorKind::parse, std::string("unexpected character '") + c + "'", line, col);
                tok.text = std::string(1, c);
                bump();
            }
        }
        out.push_back(std::move(tok));
    }
    Token end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

bool is_keyword(std::string_view word) {
    static const std::set<std::string_view> words = {"let",  "if",    "else",  "while", "for",  "in",  "return",
                                                     "break", "continue", "true", "false", "none", "and", "or",
                                                     "not"};
    return words.count(word) > 0;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    NodePtr program() {
        auto block = make(K::Block, peek());
        while (peek().type != T::End) block->kids.push_back(statement());
        return block;
    }

    std::vector<std::string> slot_names() const {
        std::vector<std::string> names(slots_.size());
        for (const auto& [name, slot] : slots_) names[slot] = name;
        return names;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    Token next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    bool is_punct(std::string_view p, std::size_t ahead = 0) const {
        return peek(ahead).type == T::Punct && peek(ahead).text == p;
    }
    bool is_word(std::string_view w, std::size_t ahead = 0) const {
        return peek(ahead).type == T::Ident && peek(ahead).text == w;
    }

    [[noreturn]] void fail(const std::string& message, const Token& at) const {
        throw ScriptError(ErrorKind::parse, message, at.line, at.col);
    }

    std::string describe(const Token& t) const {
        switch (t.type) {
            case T::End: return "end of input";
            case T::String: return "string literal";
            default: return "'" + t.text + "'";
        }
    }

    void expect_punct(std::string_view p) {
        if (!is_punct(p)) fail("expected '" + std::string(p) + "' but found " + describe(peek()), peek());
        ++pos_;
    }

    // ';' may be left out before '}' and at the end of the program.
    void end_statement() {
        if (is_punct(";")) {
            ++pos_;
        } else if (!is_punct("}") && peek().type != T::End) {
            fail("expected ';' but found " + describe(peek()), peek());
        }
    }

    static NodePtr make(K kind, const Token& at) {
        auto n = std::make_unique<Node>();
        n->kind = kind;
        n->line = at.line;
        n->col = at.col;
        return n;
    }

    std::size_t slot_for(const std::string& name) {
        auto [it, inserted] = slots_.emplace(name, slots_.size());
        return it->second;
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxNesting) p.fail("nesting too deep", p.peek());
        }
        ~DepthGuard() { --p.depth_; }
    };

    NodePtr block() {
        DepthGuard guard(*this);
        auto b = make(K::Block, peek());
        expect_punct("{");
        while (!is_punct("}")) {
            if (peek().type == T::End) fail("unterminated block", peek());
            b->kids.push_back(statement());
        }
        ++pos_;
        return b;
    }

    NodePtr statement() {
        const Token& at = peek();
        if (is_word("if")) return if_statement();
        if (is_word("while")) {
            ++pos_;
            auto n = make(K::While, at);
            n->kids.push_back(expression());
            n->kids.push_back(block());
            return n;
        }
        if (is_word("for")) {
            ++pos_;
            auto n = make(K::For, at);
            Token var = next();
            if (var.type != T::Ident || is_keyword(var.text)) fail("expected loop variable name", var);
            n->slot = slot_for(var.text);
            n->name = var.text;
            if (!is_word("in")) fail("expected 'in'", peek());
            ++pos_;
            n->kids.push_back(expression());
            n->kids.push_back(block());
            return n;
        }
        if (is_word("return")) {
            ++pos_;
            auto n = make(K::Return, at);
            if (!is_punct(";") && !is_punct("}") && peek().type != T::End) n->kids.push_back(expression());
            end_statement();
            return n;
        }
        if (is_word("break") || is_word("continue")) {
            auto n = make(is_word("break") ? K::Break : K::Continue, at);
            ++pos_;
            end_statement();
            return n;
        }
        bool declared = false;
        if (is_word("let")) {
            ++pos_;
            declared = true;
        }
        auto expr = expression();
        static const std::string_view assign_ops[] = {"=", "+=", "-=", "*="};
        for (auto op : assign_ops) {
            if (!is_punct(op)) continue;
            if (expr->kind != K::Var && expr->kind != K::Index) fail("cannot assign to this expression", at);
            if (declared && expr->kind != K::Var) fail("'let' needs a plain variable name", at);
            auto n = make(K::Assign, peek());
            ++pos_;
            if (op != "=") {
                n->compound = true;
                n->op = op == "+=" ? BinOp::Add : op == "-=" ? BinOp::Sub : BinOp::Mul;
            }
            n->kids.push_back(std::move(expr));
            n->kids.push_back(expression());
            end_statement();
            return n;
        }
        if (declared) fail("expected '=' after 'let' target", peek());
        auto n = make(K::ExprStmt, at);
        n->kids.push_back(std::move(expr));
        end_statement();
        return n;
    }

    NodePtr if_statement() {
        DepthGuard guard(*this);
        auto n = make(K::If, peek());
        ++pos_;  // 'if' or 'elif'
        n->kids.push_back(expression());
        n->kids.push_back(block());
        if (is_word("elif") || (is_word("else") && is_word("if", 1))) {
            if (is_word("else")) ++pos_;
            n->kids.push_back(if_statement());
        } else if (is_word("else")) {
            ++pos_;
            n->kids.push_back(block());
        }
        return n;
    }

    NodePtr expression() {
        DepthGuard guard(*this);
        return or_expr();
    }

    NodePtr or_expr() {
        auto lhs = and_expr();
        while (is_word("or") || is_punct("||")) {
            auto n = make(K::Or, next());
            n->kids.push_back(std::move(lhs));
            n->kids.push_back(and_expr());
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr and_expr() {
        auto lhs = not_expr();
        while (is_word("and") || is_punct("&&")) {
            auto n = make(K::And, next());
            n->kids.push_back(std::move(lhs));
            n->kids.push_back(not_expr());
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr not_expr() {
        if (is_word("not") || is_punct("!")) {
            DepthGuard guard(*this);
            auto n = make(K::Not, next());
            n->kids.push_back(not_expr());
            return n;
        }
        return comparison();
    }

    NodePtr comparison() {
        auto lhs = additive();
        static const std::pair<std::string_view, BinOp> ops[] = {{"==", BinOp::Eq}, {"!=", BinOp::Ne},
                                                                 {"<=", BinOp::Le}, {">=", BinOp::Ge},
                                                                 {"<", BinOp::Lt},  {">", BinOp::Gt}};
        for (const auto& [text, op] : ops) {
            if (is_punct(text)) {
                auto n = make(K::Binary, next());
                n->op = op;
                n->kids.push_back(std::move(lhs));
                n->kids.push_back(additive());
                return n;
            }
        }
        if (is_word("in") || (is_word("not") && is_word("in", 1))) {
            bool negated = is_word("not");
            auto n = make(negated ? K::NotIn : K::In, next());
            if (negated) ++pos_;
            n->kids.push_back(std::move(lhs));
            n->kids.push_back(additive());
            return n;
        }
        return lhs;
    }

    NodePtr additive() {
        auto lhs = multiplicative();
        while (is_punct("+") || is_punct("-")) {
            auto n = make(K::Binary, peek());
            n->op = next().text == "+" ? BinOp::Add : BinOp::Sub;
            n->kids.push_back(std::move(lhs));
            n->kids.push_back(multiplicative());
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr multiplicative() {
        auto lhs = unary();
        while (is_punct("*") || is_punct("/") || is_punct("//") || is_punct("%")) {
            auto n = make(K::Binary, peek());
            auto text = next().text;
            n->op = text == "*" ? BinOp::Mul : text == "/" ? BinOp::Div : text == "//" ? BinOp::FloorDiv : BinOp::Mod;
            n->kids.push_back(std::move(lhs));
            n->kids.push_back(unary());
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr unary() {
        if (is_punct("-")) {
            DepthGuard guard(*this);
            auto n = make(K::Neg, next());
            n->kids.push_back(unary());
            return n;
        }
        return postfix();
    }

    std::vector<NodePtr> arguments(std::string_view close) {
        std::vector<NodePtr> args;
        while (!is_punct(close)) {
            args.push_back(expression());
            if (!is_punct(",")) break;
            ++pos_;
        }
        expect_punct(close);
        return args;
    }

    NodePtr postfix() {
        auto base = primary();
        while (true) {
            if (is_punct("[")) {
                auto n = make(K::Index, next());
                n->kids.push_back(std::move(base));
                n->kids.push_back(expression());
                expect_punct("]");
                base = std::move(n);
            } else if (is_punct(".")) {
                ++pos_;
                Token name = next();
                if (name.type != T::Ident) fail("expected method name after '.'", name);
                auto it = method_table().find(name.text);
                if (it == method_table().end()) fail("unknown method '" + name.text + "'", name);
                auto n = make(K::Method, name);
                n->method = it->second;
                n->name = name.text;
                expect_punct("(");
                n->kids.push_back(std::move(base));
                for (auto& a : arguments(")")) n->kids.push_back(std::move(a));
                base = std::move(n);
            } else {
                return base;
            }
        }
    }

    NodePtr primary() {
        Token t = next();
        switch (t.type) {
            case T::Int:
            case T::Decimal: {
                auto r = Rational::parse(t.text);
                if (!r) fail("number literal out of range", t);
                auto n = make(K::Const, t);
                n->value = number(*r);
                return n;
            }
            case T::String: {
                auto n = make(K::Const, t);
                n->value = t.text;
                return n;
            }
            case T::Ident: {
                if (t.text == "true" || t.text == "false") {
                    auto n = make(K::Const, t);
                    n->value = t.text == "true";
                    return n;
                }
                if (t.text == "none" || t.text == "None" || t.text == "null") {
                    auto n = make(K::Const, t);
                    n->value = std::monostate{};
                    return n;
                }
                if (t.text == "True" || t.text == "False") {
                    auto n = make(K::Const, t);
                    n->value = t.text == "True";
                    return n;
                }
                if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'", t);
                if (is_punct("(")) {
                    auto it = builtin_table().find(t.text);
                    if (it == builtin_table().end()) fail("unknown function '" + t.text + "'", t);
                    ++pos_;
                    auto n = make(K::Call, t);
                    n->builtin = it->second;
                    n->name = t.text;
                    n->kids = arguments(")");
                    return n;
                }
                // Zero-argument graph primitives may be named without parentheses
                // until the program binds a variable of the same name.
                static const std::set<std::string> bare = {"node_count", "edge_count", "is_directed", "nodes",
                                                           "edges"};
                if (bare.count(t.text) && !slots_.count(t.text) && !is_punct("=")) {
                    auto n = make(K::Call, t);
                    n->builtin = builtin_table().at(t.text);
                    n->name = t.text;
                    return n;
                }
                auto n = make(K::Var, t);
                n->slot = slot_for(t.text);
                n->name = t.text;
                return n;
            }
            case T::Punct: {
                if (t.text == "(") {
                    auto inner = expression();
                    expect_punct(")");
                    return inner;
                }
                if (t.text == "[") {
                    auto n = make(K::ListLit, t);
                    n->kids = arguments("]");
                    return n;
                }
                if (t.text == "{") {
                    auto n = make(K::MapLit, t);
                    while (!is_punct("}")) {
                        n->kids.push_back(expression());
                        expect_punct(":");
                        n->kids.push_back(expression());
                        if (!is_punct(",")) break;
                        ++pos_;
                    }
                    expect_punct("}");
                    return n;
                }
                break;
            }
            case T::End: fail("unexpected end of input", t);
        }
        fail("unexpected " + describe(t), t);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    std::map<std::string, std::size_t> slots_;
};

// ---------------------------------------------------------------------------
// Evaluator

enum class Flow { Normal, Break, Continue, Return };

class Interpreter {
public:
    Interpreter(const PropertyGraph& g, const RunLimits& limits, std::size_t slot_count,
                const std::vector<std::string>& names)
        : g_(g), limits_(limits), slots_(slot_count), names_(names) {}

    Value run(const Node& root) {
        check_clock();
        Flow f = exec(root);
        t_last_steps = steps_;
        if (f == Flow::Return) return std::move(result_);
        return std::monostate{};
    }

    std::uint64_t steps() const { return steps_; }

private:
    [[noreturn]] void fail(ErrorKind kind, const std::string& message, const Node& at) const {
        t_last_steps = steps_;
        throw ScriptError(kind, message, at.line, at.col);
    }

    void check_clock() {
        if (limits_.stop.stop_requested()) throw Interrupted("execution cancelled");
        if (std::chrono::steady_clock::now() >= limits_.deadline) throw Interrupted("time limit exceeded");
    }

    void tick() {
        if (++steps_ % limits_.check_interval == 0) {
            t_last_steps = steps_;
            check_clock();
        }
    }

    // -- statements ---------------------------------------------------------

    Flow exec(const Node& n) {
        tick();
        switch (n.kind) {
            case K::Block:
                for (const auto& s : n.kids) {
                    Flow f = exec(*s);
                    if (f != Flow::Normal) return f;
                }
                return Flow::Normal;
            case K::ExprStmt: eval(*n.kids[0]); return Flow::Normal;
            case K::Assign: assign(n); return Flow::Normal;
            case K::If:
                if (truthy(eval(*n.kids[0]), *n.kids[0])) return exec(*n.kids[1]);
                if (n.kids.size() > 2) return exec(*n.kids[2]);
                return Flow::Normal;
            case K::While:
                while (truthy(eval(*n.kids[0]), *n.kids[0])) {
                    tick();
                    Flow f = exec(*n.kids[1]);
                    if (f == Flow::Break) break;
                    if (f == Flow::Return) return f;
                }
                return Flow::Normal;
            case K::For: return for_loop(n);
            case K::Return:
                result_ = n.kids.empty() ? Value(std::monostate{}) : eval(*n.kids[0]);
                return Flow::Return;
            case K::Break: return Flow::Break;
            case K::Continue: return Flow::Continue;
            default: eval(n); return Flow::Normal;
        }
    }

    Flow loop_body(const Node& n, Value item, bool& stop) {
        tick();
        slots_[n.slot] = std::move(item);
        Flow f = exec(*n.kids[1]);
        if (f == Flow::Break) {
            stop = true;
            return Flow::Normal;
        }
        if (f == Flow::Return) {
            stop = true;
            return f;
        }
        return Flow::Normal;
    }

    Flow for_loop(const Node& n) {
        const Node& source = *n.kids[0];
        bool stop = false;
        if (source.kind == K::Call && source.builtin == Builtin::Range) {
            auto [lo, hi, step] = range_bounds(source);
            for (std::int64_t i = lo; !stop && (step > 0 ? i < hi : i > hi); i += step) {
                Flow f = loop_body(n, i, stop);
                if (f == Flow::Return) return f;
            }
            return Flow::Normal;
        }
        Value iterable = eval(source);
        if (auto list = std::get_if<ListRef>(&iterable)) {
            ListRef keep = *list;
            for (std::size_t i = 0; !stop && i < keep->items.size(); ++i) {
                Flow f = loop_body(n, keep->items[i], stop);
                if (f == Flow::Return) return f;
            }
            return Flow::Normal;
        }
        std::vector<Value> snapshot;
        if (auto set = std::get_if<SetRef>(&iterable)) {
            snapshot.assign((*set)->items.begin(), (*set)->items.end());
        } else if (auto map = std::get_if<MapRef>(&iterable)) {
            for (const auto& kv : (*map)->items) snapshot.push_back(kv.first);
        } else {
            fail(ErrorKind::type, "cannot iterate over " + type_name(iterable), source);
        }
        for (auto& item : snapshot) {
            if (stop) break;
            Flow f = loop_body(n, std::move(item), stop);
            if (f == Flow::Return) return f;
        }
        return Flow::Normal;
    }

    void assign(const Node& n) {
        const Node& target = *n.kids[0];
        Value value = eval(*n.kids[1]);
        if (target.kind == K::Var) {
            if (n.compound) value = binary(n.op, read_var(target), value, n);
            slots_[target.slot] = std::move(value);
            return;
        }
        Value container = eval(*target.kids[0]);
        Value key = eval(*target.kids[1]);
        if (auto list = std::get_if<ListRef>(&container)) {
            auto i = list_index(**list, key, *target.kids[1]);
            auto& slot = (*list)->items[i];
            slot = n.compound ? binary(n.op, slot, value, n) : std::move(value);
        } else if (auto map = std::get_if<MapRef>(&container)) {
            require_key(key, *target.kids[1]);
            if (n.compound) {
                auto it = (*map)->items.find(key);
                if (it == (*map)->items.end()) fail(ErrorKind::runtime, "key not found: " + render(key), target);
                it->second = binary(n.op, it->second, value, n);
            } else {
                (*map)->items.insert_or_assign(std::move(key), std::move(value));
                guard_size((*map)->items.size(), n);
            }
        } else {
            fail(ErrorKind::type, "cannot index-assign into " + type_name(container), target);
        }
    }

    // -- expressions --------------------------------------------------------

    const Value& read_var(const Node& n) const {
        const Value& v = slots_[n.slot];
        if (std::holds_alternative<Unset>(v))
            fail(ErrorKind::undefined_variable, "'" + n.name + "' is not defined", n);
        return v;
    }

    Value eval(const Node& n) {
        switch (n.kind) {
            case K::Const: return n.value;
            case K::Var: return read_var(n);
            case K::ListLit: {
                auto list = std::make_shared<ListObj>();
                for (const auto& k : n.kids) list->items.push_back(eval(*k));
                return list;
            }
            case K::MapLit: {
                auto map = std::make_shared<MapObj>();
                for (std::size_t i = 0; i + 1 < n.kids.size(); i += 2) {
                    Value key = eval(*n.kids[i]);
                    require_key(key, *n.kids[i]);
                    map->items.insert_or_assign(std::move(key), eval(*n.kids[i + 1]));
                }
                return map;
            }
            case K::Index: return index(n);
            case K::Call: return call(n);
            case K::Method: return method(n);
            case K::Binary: return binary(n.op, eval(*n.kids[0]), eval(*n.kids[1]), n);
            case K::And: {
                Value lhs = eval(*n.kids[0]);
                if (!truthy(lhs, n)) return lhs;
                return eval(*n.kids[1]);
            }
            case K::Or: {
                Value lhs = eval(*n.kids[0]);
                if (truthy(lhs, n)) return lhs;
                return eval(*n.kids[1]);
            }
            case K::Not: return !truthy(eval(*n.kids[0]), n);
            case K::Neg: {
                Value v = eval(*n.kids[0]);
                if (!is_number(v)) fail(ErrorKind::type, "cannot negate " + type_name(v), n);
                return arith([&] { return number(-as_rational(v)); }, n);
            }
            case K::In:
            case K::NotIn: {
                bool found = contains(eval(*n.kids[1]), eval(*n.kids[0]), n);
                return n.kind == K::In ? found : !found;
            }
            default: fail(ErrorKind::runtime, "statement used as expression", n);
        }
    }

    bool truthy(const Value& v, const Node& at) const {
        switch (v.index()) {
            case 1: return false;
            case 2: return std::get<bool>(v);
            case 3: return std::get<std::int64_t>(v) != 0;
            case 4: return std::get<Rational>(v) != 0;
            case 5: return !std::get<std::string>(v).empty();
            case 6: return !std::get<ListRef>(v)->items.empty();
            case 7: return !std::get<MapRef>(v)->items.empty();
            case 8: return !std::get<SetRef>(v)->items.empty();
            case 9: return !std::get<HeapRef>(v)->data.empty();
        }
        fail(ErrorKind::type, "value has no truth value", at);
    }

    template <typename F>
    Value arith(F&& f, const Node& at) const {
        try {
            return f();
        } catch (const std::domain_error&) {
            fail(ErrorKind::runtime, "division by zero", at);
        } catch (const std::overflow_error&) {
            fail(ErrorKind::runtime, "arithmetic overflow", at);
        }
    }

    void require_key(const Value& key, const Node& at) const {
        if (key_rank(key) < 0)
            fail(ErrorKind::type, "map keys and set members must be none, bool, number or string, not " +
                                      type_name(key), at);
    }

    void guard_size(std::size_t size, const Node& at) const {
        if (size > kMaxItems) fail(ErrorKind::runtime, "collection size limit exceeded", at);
    }

    bool equal(const Value& a, const Value& b) const {
        if (is_number(a) && is_number(b)) {
            auto ia = std::get_if<std::int64_t>(&a);
            auto ib = std::get_if<std::int64_t>(&b);
            if (ia && ib) return *ia == *ib;
            return as_rational(a) == as_rational(b);
        }
        if (a.index() != b.index()) return false;
        switch (a.index()) {
            case 1: return true;
            case 2: return std::get<bool>(a) == std::get<bool>(b);
            case 5: return std::get<std::string>(a) == std::get<std::string>(b);
            case 6: {
                const auto& x = std::get<ListRef>(a)->items;
                const auto& y = std::get<ListRef>(b)->items;
                if (x.size() != y.size()) return false;
                for (std::size_t i = 0; i < x.size(); ++i)
                    if (!equal(x[i], y[i])) return false;
                return true;
            }
            case 7: {
                const auto& x = std::get<MapRef>(a)->items;
                const auto& y = std::get<MapRef>(b)->items;
                if (x.size() != y.size()) return false;
                for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy)
                    if (!equal(ix->first, iy->first) || !equal(ix->second, iy->second)) return false;
                return true;
            }
            case 8: {
                const auto& x = std::get<SetRef>(a)->items;
                const auto& y = std::get<SetRef>(b)->items;
                if (x.size() != y.size()) return false;
                for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy)
                    if (!equal(*ix, *iy)) return false;
                return true;
            }
            case 9: return std::get<HeapRef>(a) == std::get<HeapRef>(b);
        }
        return false;
    }

    // <0, 0, >0; type error when the values are not ordered.
    int compare(const Value& a, const Value& b, const Node& at) const {
        if (is_number(a) && is_number(b)) {
            auto ia = std::get_if<std::int64_t>(&a);
            auto ib = std::get_if<std::int64_t>(&b);
            if (ia && ib) return *ia < *ib ? -1 : (*ia > *ib ? 1 : 0);
            auto c = as_rational(a) <=> as_rational(b);
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        if (a.index() == b.index()) {
            if (auto sa = std::get_if<std::string>(&a)) return sa->compare(std::get<std::string>(b));
            if (auto ba = std::get_if<bool>(&a)) return static_cast<int>(*ba) - static_cast<int>(std::get<bool>(b));
            if (auto la = std::get_if<ListRef>(&a)) {
                const auto& x = (*la)->items;
                const auto& y = std::get<ListRef>(b)->items;
                for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
                    int c = compare(x[i], y[i], at);
                    if (c != 0) return c;
                }
                return x.size() < y.size() ? -1 : (x.size() > y.size() ? 1 : 0);
            }
        }
        fail(ErrorKind::type, "cannot order " + type_name(a) + " and " + type_name(b), at);
    }

    Value binary(BinOp op, const Value& a, const Value& b, const Node& at) {
        switch (op) {
            case BinOp::Eq: return equal(a, b);
            case BinOp::Ne: return !equal(a, b);
            case BinOp::Lt: return compare(a, b, at) < 0;
            case BinOp::Le: return compare(a, b, at) <= 0;
            case BinOp::Gt: return compare(a, b, at) > 0;
            case BinOp::Ge: return compare(a, b, at) >= 0;
            default: break;
        }
        if (is_number(a) && is_number(b)) {
            auto ia = std::get_if<std::int64_t>(&a);
            auto ib = std::get_if<std::int64_t>(&b);
            if (ia && ib) {
                std::int64_t r;
                switch (op) {
                    case BinOp::Add:
                        if (!__builtin_add_overflow(*ia, *ib, &r)) return r;
                        break;
                    case BinOp::Sub:
                        if (!__builtin_sub_overflow(*ia, *ib, &r)) return r;
                        break;
                    case BinOp::Mul:
                        if (!__builtin_mul_overflow(*ia, *ib, &r)) return r;
                        break;
                    default: break;
                }
            }
            return arith(
                [&]() -> Value {
                    Rational x = as_rational(a), y = as_rational(b);
                    switch (op) {
                        case BinOp::Add: return number(x + y);
                        case BinOp::Sub: return number(x - y);
                        case BinOp::Mul: return number(x * y);
                        case BinOp::Div: return number(x / y);
                        case BinOp::FloorDiv: return (x / y).floor();
                        case BinOp::Mod: {
                            Rational q((x / y).floor());
                            return number(x - y * q);
                        }
                        default: return std::monostate{};
                    }
                },
                at);
        }
        if (op == BinOp::Add) {
            if (auto sa = std::get_if<std::string>(&a)) {
                if (auto sb = std::get_if<std::string>(&b)) {
                    if (sa->size() + sb->size() > kMaxString) fail(ErrorKind::runtime, "string too long", at);
                    return *sa + *sb;
                }
            }
            if (auto la = std::get_if<ListRef>(&a)) {
                if (auto lb = std::get_if<ListRef>(&b)) {
                    guard_size((*la)->items.size() + (*lb)->items.size(), at);
                    auto out = std::make_shared<ListObj>(**la);
                    out->items.insert(out->items.end(), (*lb)->items.begin(), (*lb)->items.end());
                    return out;
                }
            }
        }
        static const char* names[] = {"+", "-", "*", "/", "//", "%"};
        fail(ErrorKind::type,
             std::string("unsupported operand types for ") + names[static_cast<int>(op)] + ": " + type_name(a) +
                 " and " + type_name(b),
             at);
    }

    bool contains(const Value& container, const Value& item, const Node& at) const {
        if (auto list = std::get_if<ListRef>(&container)) {
            return std::any_of((*list)->items.begin(), (*list)->items.end(),
                               [&](const Value& v) { return equal(v, item); });
        }
        if (auto set = std::get_if<SetRef>(&container)) {
            if (key_rank(item) < 0) return false;
            return (*set)->items.count(item) > 0;
        }
        if (auto map = std::get_if<MapRef>(&container)) {
            if (key_rank(item) < 0) return false;
            return (*map)->items.count(item) > 0;
        }
        if (auto str = std::get_if<std::string>(&container)) {
            if (auto sub = std::get_if<std::string>(&item)) return str->find(*sub) != std::string::npos;
        }
        fail(ErrorKind::type, "'in' needs a list, set, map or string, not " + type_name(container), at);
    }

    std::size_t list_index(const ListObj& list, const Value& key, const Node& at) const {
        auto i = std::get_if<std::int64_t>(&key);
        if (!i) fail(ErrorKind::type, "list index must be an integer, not " + type_name(key), at);
        auto size = static_cast<std::int64_t>(list.items.size());
        std::int64_t k = *i < 0 ? *i + size : *i;
        if (k < 0 || k >= size)
            fail(ErrorKind::runtime, "list index " + std::to_string(*i) + " out of range", at);
        return static_cast<std::size_t>(k);
    }

    Value index(const Node& n) {
        Value container = eval(*n.kids[0]);
        Value key = eval(*n.kids[1]);
        if (auto list = std::get_if<ListRef>(&container)) return (*list)->items[list_index(**list, key, n)];
        if (auto map = std::get_if<MapRef>(&container)) {
            require_key(key, *n.kids[1]);
            auto it = (*map)->items.find(key);
            if (it == (*map)->items.end()) fail(ErrorKind::runtime, "key not found: " + render(key), n);
            return it->second;
        }
        if (auto str = std::get_if<std::string>(&container)) {
            auto i = std::get_if<std::int64_t>(&key);
            if (!i || *i < 0 || static_cast<std::size_t>(*i) >= str->size())
                fail(ErrorKind::runtime, "string index out of range", n);
            return std::string(1, (*str)[static_cast<std::size_t>(*i)]);
        }
        fail(ErrorKind::type, "cannot index into " + type_name(container), n);
    }

    // -- builtins -----------------------------------------------------------

    void arity(const Node& n, std::size_t lo, std::size_t hi) const {
        if (n.kids.size() < lo || n.kids.size() > hi) {
            std::string expected = lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
            fail(ErrorKind::type, n.name + "() takes " + expected + " argument(s), got " + std::to_string(n.kids.size()),
                 n);
        }
    }

    std::int64_t as_int(const Value& v, const Node& at, const char* what) const {
        if (auto i = std::get_if<std::int64_t>(&v)) return *i;
        fail(ErrorKind::type, std::string(what) + " must be an integer, not " + type_name(v), at);
    }

    NodeId node_arg(const Node& n, std::size_t i) {
        Value v = eval(*n.kids[i]);
        auto id = std::get_if<std::int64_t>(&v);
        if (!id) fail(ErrorKind::type, n.name + "(): node id must be an integer, not " + type_name(v), n);
        if (!g_.valid_node(*id)) fail(ErrorKind::primitive, n.name + "(): invalid node id " + std::to_string(*id), n);
        return *id;
    }

    const EdgeRecord& edge_arg(const Node& n) {
        NodeId u = node_arg(n, 0);
        NodeId v = node_arg(n, 1);
        const EdgeRecord* e = g_.find_edge(u, v);
        if (e == nullptr)
            fail(ErrorKind::primitive,
                 n.name + "(): no edge (" + std::to_string(u) + "," + std::to_string(v) + ")", n);
        return *e;
    }

    static ListRef adjacency_list(std::span<const Adjacent> adj) {
        auto list = std::make_shared<ListObj>();
        for (const auto& a : adj) list->items.emplace_back(a.node);
        return list;
    }

    std::tuple<std::int64_t, std::int64_t, std::int64_t> range_bounds(const Node& n) {
        arity(n, 1, 3);
        std::int64_t lo = 0, hi = 0, step = 1;
        if (n.kids.size() == 1) {
            hi = as_int(eval(*n.kids[0]), n, "range bound");
        } else {
            lo = as_int(eval(*n.kids[0]), n, "range bound");
            hi = as_int(eval(*n.kids[1]), n, "range bound");
            if (n.kids.size() == 3) step = as_int(eval(*n.kids[2]), n, "range step");
        }
        if (step == 0) fail(ErrorKind::runtime, "range() step must not be zero", n);
        return {lo, hi, step};
    }

    std::vector<Value> items_of(const Value& v, const Node& at) const {
        if (auto list = std::get_if<ListRef>(&v)) return {(*list)->items.begin(), (*list)->items.end()};
        if (auto set = std::get_if<SetRef>(&v)) return {(*set)->items.begin(), (*set)->items.end()};
        if (auto map = std::get_if<MapRef>(&v)) {
            std::vector<Value> keys;
            for (const auto& kv : (*map)->items) keys.push_back(kv.first);
            return keys;
        }
        fail(ErrorKind::type, "expected a list, set or map, not " + type_name(v), at);
    }

    Value call(const Node& n) {
        switch (n.builtin) {
            case Builtin::NodeCount: arity(n, 0, 0); return static_cast<std::int64_t>(g_.node_count());
            case Builtin::EdgeCount: arity(n, 0, 0); return static_cast<std::int64_t>(g_.edge_count());
            case Builtin::IsDirected: arity(n, 0, 0); return g_.directed();
            case Builtin::Nodes: {
                arity(n, 0, 0);
                auto list = std::make_shared<ListObj>();
                for (std::size_t v = 0; v < g_.node_count(); ++v) list->items.emplace_back(static_cast<std::int64_t>(v));
                return list;
            }
            case Builtin::Edges: {
                arity(n, 0, 0);
                auto list = std::make_shared<ListObj>();
                for (const auto& e : g_.edges()) {
                    auto pair = std::make_shared<ListObj>();
                    pair->items.emplace_back(e.u);
                    pair->items.emplace_back(e.v);
                    list->items.emplace_back(std::move(pair));
                }
                return list;
            }
            case Builtin::Neighbors:
            case Builtin::Successors: arity(n, 1, 1); return adjacency_list(g_.out(node_arg(n, 0)));
            case Builtin::Predecessors: arity(n, 1, 1); return adjacency_list(g_.in(node_arg(n, 0)));
            case Builtin::HasEdge: {
                arity(n, 2, 2);
                NodeId u = node_arg(n, 0);
                NodeId v = node_arg(n, 1);
                return g_.has_edge(u, v);
            }
            case Builtin::EdgeWeight: {
                arity(n, 2, 2);
                const auto& e = edge_arg(n);
                return number(e.weight.value_or(Rational(1)));
            }
            case Builtin::EdgeCapacity: {
                arity(n, 2, 2);
                const auto& e = edge_arg(n);
                if (e.capacity) return number(*e.capacity);
                if (e.weight) return number(*e.weight);
                fail(ErrorKind::primitive, "edge_capacity(): edge has no capacity", n);
            }
            case Builtin::NodeWeight: {
                arity(n, 1, 1);
                NodeId v = node_arg(n, 0);
                auto w = g_.node_weight(v);
                if (!w) fail(ErrorKind::primitive, "node_weight(): node " + std::to_string(v) + " has no weight", n);
                return number(*w);
            }
            case Builtin::Indegree: arity(n, 1, 1); return static_cast<std::int64_t>(g_.in(node_arg(n, 0)).size());
            case Builtin::Outdegree: arity(n, 1, 1); return static_cast<std::int64_t>(g_.out(node_arg(n, 0)).size());
            case Builtin::Degree: {
                arity(n, 1, 1);
                NodeId v = node_arg(n, 0);
                auto d = g_.out(v).size() + (g_.directed() ? g_.in(v).size() : 0);
                return static_cast<std::int64_t>(d);
            }
            case Builtin::Len: {
                arity(n, 1, 1);
                Value v = eval(*n.kids[0]);
                switch (v.index()) {
                    case 5: return static_cast<std::int64_t>(std::get<std::string>(v).size());
                    case 6: return static_cast<std::int64_t>(std::get<ListRef>(v)->items.size());
                    case 7: return static_cast<std::int64_t>(std::get<MapRef>(v)->items.size());
                    case 8: return static_cast<std::int64_t>(std::get<SetRef>(v)->items.size());
                    case 9: return static_cast<std::int64_t>(std::get<HeapRef>(v)->data.size());
                }
                fail(ErrorKind::type, "len() of " + type_name(v), n);
            }
            case Builtin::Range: {
                auto [lo, hi, step] = range_bounds(n);
                auto list = std::make_shared<ListObj>();
                for (std::int64_t i = lo; step > 0 ? i < hi : i > hi; i += step) {
                    list->items.emplace_back(i);
                    guard_size(list->items.size(), n);
                    tick();
                }
                return list;
            }
            case Builtin::List: {
                arity(n, 0, 1);
                auto list = std::make_shared<ListObj>();
                if (n.kids.size() == 1) {
                    auto items = items_of(eval(*n.kids[0]), n);
                    list->items.assign(items.begin(), items.end());
                }
                return list;
            }
            case Builtin::Set: {
                arity(n, 0, 1);
                auto set = std::make_shared<SetObj>();
                if (n.kids.size() == 1) {
                    for (auto& item : items_of(eval(*n.kids[0]), n)) {
                        require_key(item, n);
                        set->items.insert(std::move(item));
                    }
                }
                return set;
            }
            case Builtin::Map: arity(n, 0, 0); return std::make_shared<MapObj>();
            case Builtin::Heap: arity(n, 0, 0); return std::make_shared<HeapObj>();
            case Builtin::Min:
            case Builtin::Max: {
                if (n.kids.empty()) fail(ErrorKind::type, n.name + "() needs arguments", n);
                std::vector<Value> values;
                if (n.kids.size() == 1) {
                    values = items_of(eval(*n.kids[0]), n);
                } else {
                    for (const auto& k : n.kids) values.push_back(eval(*k));
                }
                if (values.empty()) fail(ErrorKind::runtime, n.name + "() of an empty collection", n);
                std::size_t best = 0;
                for (std::size_t i = 1; i < values.size(); ++i) {
                    int c = compare(values[i], values[best], n);
                    if (n.builtin == Builtin::Min ? c < 0 : c > 0) best = i;
                }
                return values[best];
            }
            case Builtin::Abs: {
                arity(n, 1, 1);
                Value v = eval(*n.kids[0]);
                if (!is_number(v)) fail(ErrorKind::type, "abs() of " + type_name(v), n);
                Rational r = as_rational(v);
                return arith([&] { return number(r < 0 ? -r : r); }, n);
            }
            case Builtin::Sum: {
                arity(n, 1, 1);
                Value total = std::int64_t{0};
                for (const auto& item : items_of(eval(*n.kids[0]), n)) total = binary(BinOp::Add, total, item, n);
                return total;
            }
            case Builtin::Sorted:
            case Builtin::Reversed: {
                arity(n, 1, 1);
                auto items = items_of(eval(*n.kids[0]), n);
                if (n.builtin == Builtin::Sorted) {
                    std::stable_sort(items.begin(), items.end(),
                                     [&](const Value& a, const Value& b) { return compare(a, b, n) < 0; });
                } else {
                    std::reverse(items.begin(), items.end());
                }
                auto list = std::make_shared<ListObj>();
                list->items.assign(items.begin(), items.end());
                return list;
            }
            case Builtin::Int: {
                arity(n, 1, 1);
                Value v = eval(*n.kids[0]);
                if (is_number(v)) return as_rational(v).floor();
                if (auto b = std::get_if<bool>(&v)) return std::int64_t{*b ? 1 : 0};
                if (auto s = std::get_if<std::string>(&v)) {
                    auto r = Rational::parse(*s);
                    if (r && r->is_integer()) return r->num();
                }
                fail(ErrorKind::type, "int() cannot convert " + type_name(v), n);
            }
            case Builtin::Str: arity(n, 1, 1); return render(eval(*n.kids[0]));
            case Builtin::Error: {
                arity(n, 0, 1);
                std::string message = n.kids.empty() ? "error() called" : render(eval(*n.kids[0]));
                fail(ErrorKind::runtime, message, n);
            }
        }
        fail(ErrorKind::runtime, "unknown builtin", n);
    }

    // -- methods ------------------------------------------------------------

    void method_arity(const Node& n, std::size_t lo, std::size_t hi, const std::string& type) const {
        std::size_t args = n.kids.size() - 1;
        if (args < lo || args > hi)
            fail(ErrorKind::type, type + "." + n.name + "() takes " + std::to_string(lo) +
                                      (lo == hi ? "" : "-" + std::to_string(hi)) + " argument(s)", n);
    }

    [[noreturn]] void no_method(const Node& n, const Value& self) const {
        fail(ErrorKind::type, type_name(self) + " has no method '" + n.name + "'", n);
    }

    Value method(const Node& n) {
        Value self = eval(*n.kids[0]);
        std::vector<Value> args;
        for (std::size_t i = 1; i < n.kids.size(); ++i) args.push_back(eval(*n.kids[i]));
        if (auto list = std::get_if<ListRef>(&self)) return list_method(n, **list, args);
        if (auto map = std::get_if<MapRef>(&self)) return map_method(n, **map, args);
        if (auto set = std::get_if<SetRef>(&self)) return set_method(n, **set, args);
        if (auto heap = std::get_if<HeapRef>(&self)) return heap_method(n, **heap, args);
        no_method(n, self);
    }

    Value list_method(const Node& n, ListObj& list, std::vector<Value>& args) {
        auto& items = list.items;
        switch (n.method) {
            case Method::Append:
                method_arity(n, 1, 1, "list");
                items.push_back(std::move(args[0]));
                guard_size(items.size(), n);
                return std::monostate{};
            case Method::AppendLeft:
                method_arity(n, 1, 1, "list");
                items.push_front(std::move(args[0]));
                guard_size(items.size(), n);
                return std::monostate{};
            case Method::Pop: {
                method_arity(n, 0, 1, "list");
                if (items.empty()) fail(ErrorKind::runtime, "pop from empty list", n);
                if (args.empty()) {
                    Value v = std::move(items.back());
                    items.pop_back();
                    return v;
                }
                auto i = list_index(list, args[0], n);
                Value v = std::move(items[i]);
                items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
                return v;
            }
            case Method::PopLeft: {
                method_arity(n, 0, 0, "list");
                if (items.empty()) fail(ErrorKind::runtime, "popleft from empty list", n);
                Value v = std::move(items.front());
                items.pop_front();
                return v;
            }
            case Method::Extend: {
                method_arity(n, 1, 1, "list");
                for (auto& item : items_of(args[0], n)) items.push_back(std::move(item));
                guard_size(items.size(), n);
                return std::monostate{};
            }
            case Method::Contains:
                method_arity(n, 1, 1, "list");
                return std::any_of(items.begin(), items.end(), [&](const Value& v) { return equal(v, args[0]); });
            case Method::Index: {
                method_arity(n, 1, 1, "list");
                for (std::size_t i = 0; i < items.size(); ++i)
                    if (equal(items[i], args[0])) return static_cast<std::int64_t>(i);
                fail(ErrorKind::runtime, render(args[0]) + " is not in list", n);
            }
            case Method::Reverse:
                method_arity(n, 0, 0, "list");
                std::reverse(items.begin(), items.end());
                return std::monostate{};
            case Method::Sort:
                method_arity(n, 0, 0, "list");
                std::stable_sort(items.begin(), items.end(),
                                 [&](const Value& a, const Value& b) { return compare(a, b, n) < 0; });
                return std::monostate{};
            case Method::Copy:
                method_arity(n, 0, 0, "list");
                return std::make_shared<ListObj>(list);
            default: break;
        }
        no_method(n, Value(std::make_shared<ListObj>()));
    }

    Value map_method(const Node& n, MapObj& map, std::vector<Value>& args) {
        auto& items = map.items;
        switch (n.method) {
            case Method::Get: {
                method_arity(n, 1, 2, "map");
                if (key_rank(args[0]) < 0) require_key(args[0], n);
                auto it = items.find(args[0]);
                if (it != items.end()) return it->second;
                return args.size() == 2 ? args[1] : Value(std::monostate{});
            }
            case Method::Has:
            case Method::Contains:
                method_arity(n, 1, 1, "map");
                return key_rank(args[0]) >= 0 && items.count(args[0]) > 0;
            case Method::Keys:
            case Method::Values:
            case Method::Items: {
                method_arity(n, 0, 0, "map");
                auto list = std::make_shared<ListObj>();
                for (const auto& [k, v] : items) {
                    if (n.method == Method::Keys) {
                        list->items.push_back(k);
                    } else if (n.method == Method::Values) {
                        list->items.push_back(v);
                    } else {
                        auto pair = std::make_shared<ListObj>();
                        pair->items.push_back(k);
                        pair->items.push_back(v);
                        list->items.emplace_back(std::move(pair));
                    }
                }
                return list;
            }
            case Method::Remove:
            case Method::Pop: {
                method_arity(n, 1, 2, "map");
                require_key(args[0], n);
                auto it = items.find(args[0]);
                if (it == items.end()) {
                    if (args.size() == 2) return args[1];
                    fail(ErrorKind::runtime, "key not found: " + render(args[0]), n);
                }
                Value v = std::move(it->second);
                items.erase(it);
                return v;
            }
            case Method::Copy:
                method_arity(n, 0, 0, "map");
                return std::make_shared<MapObj>(map);
            default: break;
        }
        no_method(n, Value(std::make_shared<MapObj>()));
    }

    Value set_method(const Node& n, SetObj& set, std::vector<Value>& args) {
        auto& items = set.items;
        switch (n.method) {
            case Method::Add:
                method_arity(n, 1, 1, "set");
                require_key(args[0], n);
                items.insert(std::move(args[0]));
                guard_size(items.size(), n);
                return std::monostate{};
            case Method::Remove:
                method_arity(n, 1, 1, "set");
                require_key(args[0], n);
                if (items.erase(args[0]) == 0) fail(ErrorKind::runtime, render(args[0]) + " is not in set", n);
                return std::monostate{};
            case Method::Discard:
                method_arity(n, 1, 1, "set");
                if (key_rank(args[0]) >= 0) items.erase(args[0]);
                return std::monostate{};
            case Method::Has:
            case Method::Contains:
                method_arity(n, 1, 1, "set");
                return key_rank(args[0]) >= 0 && items.count(args[0]) > 0;
            case Method::Copy:
                method_arity(n, 0, 0, "set");
                return std::make_shared<SetObj>(set);
            default: break;
        }
        no_method(n, Value(std::make_shared<SetObj>()));
    }

    Value heap_method(const Node& n, HeapObj& heap, std::vector<Value>& args) {
        auto later = [&](const HeapObj::Entry& a, const HeapObj::Entry& b) {
            int c = compare(a.priority, b.priority, n);
            return c != 0 ? c > 0 : a.seq > b.seq;
        };
        auto pair = [](const HeapObj::Entry& e) {
            auto list = std::make_shared<ListObj>();
            list->items.push_back(e.priority);
            list->items.push_back(e.item);
            return list;
        };
        switch (n.method) {
            case Method::Push:
                method_arity(n, 1, 2, "heap");
                heap.data.push_back(HeapObj::Entry{args[0], heap.next_seq++,
                                                   args.size() == 2 ? args[1] : args[0]});
                std::push_heap(heap.data.begin(), heap.data.end(), later);
                guard_size(heap.data.size(), n);
                return std::monostate{};
            case Method::Pop: {
                method_arity(n, 0, 0, "heap");
                if (heap.data.empty()) fail(ErrorKind::runtime, "pop from empty heap", n);
                std::pop_heap(heap.data.begin(), heap.data.end(), later);
                auto out = pair(heap.data.back());
                heap.data.pop_back();
                return out;
            }
            case Method::Peek:
                method_arity(n, 0, 0, "heap");
                if (heap.data.empty()) fail(ErrorKind::runtime, "peek at empty heap", n);
                return pair(heap.data.front());
            default: break;
        }
        no_method(n, Value(std::make_shared<HeapObj>()));
    }

public:
    static std::string render(const Value& v) {
        switch (v.index()) {
            case 1: return "none";
            case 2: return std::get<bool>(v) ? "true" : "false";
            case 3: return std::to_string(std::get<std::int64_t>(v));
            case 4: return std::get<Rational>(v).to_string();
            case 5: return std::get<std::string>(v);
            case 6: {
                std::string out = "[";
                bool first = true;
                for (const auto& item : std::get<ListRef>(v)->items) {
                    if (!first) out += ", ";
                    first = false;
                    out += render(item);
                    if (out.size() > 4096) return out + ", ...]";
                }
                return out + "]";
            }
            case 7: return "map(" + std::to_string(std::get<MapRef>(v)->items.size()) + " entries)";
            case 8: return "set(" + std::to_string(std::get<SetRef>(v)->items.size()) + " items)";
            case 9: return "heap(" + std::to_string(std::get<HeapRef>(v)->data.size()) + " items)";
        }
        return "?";
    }

private:
    const PropertyGraph& g_;
    const RunLimits& limits_;
    std::vector<Value> slots_;
    const std::vector<std::string>& names_;
    Value result_;
    std::uint64_t steps_ = 0;
};

nlohmann::json to_json(const Value& v) {
    switch (v.index()) {
        case 2: return std::get<bool>(v);
        case 3: return std::get<std::int64_t>(v);
        case 4: return rational_to_json(std::get<Rational>(v));
        case 5: return std::get<std::string>(v);
        case 6: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& item : std::get<ListRef>(v)->items) arr.push_back(to_json(item));
            return arr;
        }
        case 7: {
            const auto& items = std::get<MapRef>(v)->items;
            bool string_keys = std::all_of(items.begin(), items.end(),
                                           [](const auto& kv) { return std::holds_alternative<std::string>(kv.first); });
            if (string_keys) {
                nlohmann::json obj = nlohmann::json::object();
                for (const auto& [k, val] : items) obj[std::get<std::string>(k)] = to_json(val);
                return obj;
            }
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [k, val] : items) arr.push_back({to_json(k), to_json(val)});
            return arr;
        }
        case 8: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& item : std::get<SetRef>(v)->items) arr.push_back(to_json(item));
            return arr;
        }
        case 9: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& e : std::get<HeapRef>(v)->data) arr.push_back(to_json(e.item));
            return arr;
        }
        default: return nullptr;
    }
}

}  // namespace

struct Program::Compiled {
    NodePtr root;
    std::vector<std::string> slot_names;
};

Program Program::parse(std::string_view source) {
    Parser parser(lex(source));
    auto compiled = std::make_shared<Compiled>();
    compiled->root = parser.program();
    compiled->slot_names = parser.slot_names();
    return Program(std::move(compiled));
}

nlohmann::json Program::run(const PropertyGraph& g, const RunLimits& limits) const {
    RunLimits effective = limits;
    if (effective.check_interval == 0) effective.check_interval = 1;
    Interpreter interp(g, effective, compiled_->slot_names.size(), compiled_->slot_names);
    return to_json(interp.run(*compiled_->root));
}

std::uint64_t Program::last_step_count() {
    return t_last_steps;
}

nlohmann::json eval_graph_script(std::string_view source, const PropertyGraph& g, const RunLimits& limits) {
    return Program::parse(source).run(g, limits);
}

}  // namespace grraf::script
