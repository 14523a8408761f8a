#include "grraf/graph_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "grraf/errors.hpp"

namespace grraf {

std::string_view to_string(Dialect d) {
    return d == Dialect::canonical_json ? "canonical-json" : "edge-list-prose";
}

Dialect parse_dialect(std::string_view name) {
    if (name == "json" || name == "canonical-json" || name == "canonical_json") return Dialect::canonical_json;
    if (name == "text" || name == "prose" || name == "edge-list-prose" || name == "edge_list_prose")
        return Dialect::edge_list_prose;
    throw ContractError("unknown graph dialect '" + std::string(name) + "'");
}

namespace {

// Hand-rolled scanner for the plain-text dialect; tracks line/column for errors.
class ProseScanner {
public:
    explicit ProseScanner(std::string_view text) : text_(text) {}

    PropertyGraph parse() {
        skip_ws();
        bool directed = false;
        if (try_word("directed")) {
            directed = true;
        } else if (!try_word("undirected")) {
            fail("expected 'directed' or 'undirected'");
        }
        expect(';');
        expect_word("nodes");
        expect(':');
        auto count = integer("node count");
        if (count < 0) fail("node count must be non-negative");
        expect(';');

        GraphBuilder builder(directed, static_cast<std::size_t>(count));
        skip_ws();
        if (try_word("weights")) {
            expect(':');
            while (true) {
                skip_ws();
                if (at_end() || peek() == ';') break;
                auto v = integer("node id");
                expect('=');
                builder.node_weight(v, number("node weight"));
            }
            expect(';');
        }
        expect_word("edges");
        expect(':');
        while (true) {
            skip_ws();
            if (at_end()) break;
            if (peek() == ';') {
                advance();
                skip_ws();
                if (!at_end()) fail("unexpected text after edge list");
                break;
            }
            if (peek() != '(') fail("expected '(' to start an edge");
            advance();
            auto u = integer("edge source");
            expect(',');
            auto v = integer("edge target");
            expect(')');
            EdgeRecord e{u, v, std::nullopt, std::nullopt};
            while (true) {
                skip_ws();
                if (at_end() || peek() != '[') break;
                advance();
                while (true) {
                    skip_ws();
                    char key = peek();
                    if (key != 'w' && key != 'c') fail("expected attribute 'w' or 'c'");
                    advance();
                    expect('=');
                    auto value = number("edge attribute");
                    auto& slot = key == 'w' ? e.weight : e.capacity;
                    if (slot) fail(std::string("attribute '") + key + "' given twice");
                    slot = value;
                    skip_ws();
                    if (peek() == ',') {
                        advance();
                        continue;
                    }
                    break;
                }
                expect(']');
            }
            builder.edge(e);
        }
        return std::move(builder).build();
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, column_); }

    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    bool try_word(std::string_view word) {
        skip_ws();
        if (text_.substr(pos_, word.size()) != word) return false;
        auto end = pos_ + word.size();
        if (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) return false;
        for (std::size_t i = 0; i < word.size(); ++i) advance();
        return true;
    }

    void expect_word(std::string_view word) {
        if (!try_word(word)) fail("expected '" + std::string(word) + "'");
    }

    std::string_view token(std::string_view allowed) {
        skip_ws();
        auto start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) ||
                             allowed.find(peek()) != std::string_view::npos))
            advance();
        return text_.substr(start, pos_ - start);
    }

    NodeId integer(const char* what) {
        auto tok = token("-+");
        auto r = Rational::parse(tok);
        if (tok.empty() || !r || !r->is_integer()) fail(std::string("expected integer ") + what);
        return r->num();
    }

    Rational number(const char* what) {
        auto tok = token("-+./eE");
        auto r = Rational::parse(tok);
        if (!r) fail(std::string("expected number for ") + what);
        return *r;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

std::string prose_number(const Rational& r) {
    return r.to_string();
}

NodeId json_id(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_number_integer())
        throw ValidationError(std::string("field '") + field + "' must be an integer");
    return j.at(field).get<NodeId>();
}

std::optional<Rational> json_attr(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    auto r = rational_from_json(j.at(field));
    if (!r) throw ValidationError(std::string("field '") + field + "' is not a number");
    return r;
}

}  // namespace

nlohmann::json rational_to_json(const Rational& r) {
    if (r.is_integer()) return r.num();
    if (r.has_finite_decimal()) {
        double d = r.to_double();
        if (auto back = Rational::parse(nlohmann::json(d).dump()); back && *back == r) return d;
    }
    return r.to_string();
}

std::optional<Rational> rational_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number_unsigned()) return std::nullopt;
    if (j.is_number_float()) return Rational::parse(j.dump());
    if (j.is_string()) return Rational::parse(j.get<std::string>());
    return std::nullopt;
}

PropertyGraph parse_graph_text(std::string_view text, Dialect dialect) {
    if (dialect == Dialect::edge_list_prose) return ProseScanner(text).parse();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line/column
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError("malformed JSON: " + std::string(e.what()), line, column);
    }
    return graph_from_json(j);
}

PropertyGraph graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("graph JSON must be an object");
    if (!j.contains("directed") || !j.at("directed").is_boolean())
        throw ValidationError("field 'directed' must be a boolean");
    const auto nodes = j.value("nodes", nlohmann::json::array());
    const auto edges = j.value("edges", nlohmann::json::array());
    if (!nodes.is_array() || !edges.is_array()) throw ValidationError("'nodes' and 'edges' must be arrays");

    std::vector<bool> seen(nodes.size(), false);
    GraphBuilder builder(j.at("directed").get<bool>(), nodes.size());
    for (const auto& n : nodes) {
        if (!n.is_object()) throw ValidationError("node entries must be objects");
        auto id = json_id(n, "id");
        if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
            throw ValidationError("node id " + std::to_string(id) + " outside the contiguous range [0, " +
                                  std::to_string(nodes.size()) + ")");
        if (seen[static_cast<std::size_t>(id)]) throw ValidationError("duplicate node id " + std::to_string(id));
        seen[static_cast<std::size_t>(id)] = true;
        if (auto w = json_attr(n, "weight")) builder.node_weight(id, *w);
    }
    for (const auto& e : edges) {
        if (!e.is_object()) throw ValidationError("edge entries must be objects");
        builder.edge(json_id(e, "u"), json_id(e, "v"), json_attr(e, "weight"), json_attr(e, "capacity"));
    }
    return std::move(builder).build();
}

nlohmann::json graph_to_json(const PropertyGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        nlohmann::json n = {{"id", v}};
        if (auto w = g.node_weight(static_cast<NodeId>(v))) n["weight"] = rational_to_json(*w);
        nodes.push_back(std::move(n));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        nlohmann::json o = {{"u", e.u}, {"v", e.v}};
        if (e.weight) o["weight"] = rational_to_json(*e.weight);
        if (e.capacity) o["capacity"] = rational_to_json(*e.capacity);
        edges.push_back(std::move(o));
    }
    nlohmann::json out;
    out["directed"] = g.directed();
    out["nodes"] = std::move(nodes);
    out["edges"] = std::move(edges);
    return out;
}

std::string serialize(const PropertyGraph& g, Dialect dialect) {
    if (dialect == Dialect::canonical_json) return graph_to_json(g).dump();

    std::ostringstream os;
    os << (g.directed() ? "directed" : "undirected") << "; nodes: " << g.node_count() << ";";
    if (g.has_node_weights()) {
        os << " weights:";
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            if (auto w = g.node_weight(static_cast<NodeId>(v))) os << ' ' << v << '=' << prose_number(*w);
        }
        os << ";";
    }
    os << " edges:";
    for (const auto& e : g.edges()) {
        os << " (" << e.u << ',' << e.v << ')';
        if (e.weight) os << "[w=" << prose_number(*e.weight) << ']';
        if (e.capacity) os << "[c=" << prose_number(*e.capacity) << ']';
    }
    return os.str();
}

PropertyGraph load_graph_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open graph file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    auto first = text.find_first_not_of(" \t\r\n");
    Dialect d = (first != std::string::npos && text[first] == '{') ? Dialect::canonical_json
                                                                     : Dialect::edge_list_prose;
    return parse_graph_text(text, d);
}

void save_graph_file(const PropertyGraph& g, const std::filesystem::path& path, Dialect dialect) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write graph file " + path.string());
    out << serialize(g, dialect) << '\n';
    if (!out) throw ConfigurationError("failed writing graph file " + path.string());
}

}  // namespace grraf
