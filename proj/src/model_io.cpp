#include "psjs/model_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace psjs {

namespace {

bool is_reserved_char(char c) {
    switch (c) {
    case ' ': case '\t': case '\r': case '\n':
    case '<': case '>': case ':': case '"': case '#': case '(': case ')': case ',':
        return true;
    default:
        return false;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// "keyword:" at the start of a statement line; returns the remainder.
std::optional<std::string_view> keyword_statement(std::string_view line, std::string_view kw) {
    auto t = trim(line);
    if (t.size() > kw.size() && t.substr(0, kw.size()) == kw && t[kw.size()] == ':') return t.substr(kw.size() + 1);
    return std::nullopt;
}

struct RawSym {
    bool is_join = false;
    std::string name;
    std::string left, right;
    int column = 0;
};

struct RawRhs {
    std::vector<RawSym> items;
    bool bracketed = false;
};

class LineParser {
public:
    LineParser(std::vector<Token> toks, int line) : toks_(std::move(toks)), line_(line) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == Token::End; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, peek().column, msg); }

    std::string name() {
        const Token& t = peek();
        if (t.kind != Token::Name && t.kind != Token::Quoted) fail("expected a symbol name");
        ++pos_;
        return t.text;
    }

    void expect(Token::Kind k, const char* what) {
        if (peek().kind != k) fail(std::string("expected ") + what);
        ++pos_;
    }

    RawSym symbol() {
        RawSym s;
        s.column = peek().column;
        if (peek().kind == Token::LAngle) {
            ++pos_;
            s.is_join = true;
            s.left = name();
            s.right = name();
            if (peek().kind != Token::RAngle) fail("a nested '<...>' must be a join of two sync states");
            ++pos_;
            return s;
        }
        s.name = name();
        return s;
    }

    RawRhs rhs() {
        RawRhs r;
        if (peek().kind == Token::LAngle) {
            ++pos_;
            r.bracketed = true;
            while (peek().kind != Token::RAngle) {
                if (at_end()) fail("unterminated '<'");
                r.items.push_back(symbol());
            }
            ++pos_;
            if (r.items.size() < 2 || r.items.size() > 3) fail("a bracketed rhs needs two or three symbols");
        } else {
            r.items.push_back(symbol());
        }
        return r;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int line_;
};

struct RawRule {
    int line;
    RawSym lhs;
    RawRhs rhs;
    std::string prob;
    int prob_column;
};

} // namespace

bool is_bare_name(std::string_view name) {
    if (name.empty()) return false;
    for (std::size_t i = 0; i < name.size(); ++i) {
        if (is_reserved_char(name[i])) return false;
        if (name[i] == '-' && i + 1 < name.size() && name[i + 1] == '>') return false;
    }
    return name != "->";
}

std::string quote_name(std::string_view name) {
    if (is_bare_name(name)) return std::string(name);
    std::string out = "\"";
    for (char c : name) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<Token> tokenize_line(std::string_view line, int line_no) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        int col = static_cast<int>(i) + 1;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        if (c == '#') break;
        if (c == '<') { out.push_back({Token::LAngle, "<", col}); ++i; continue; }
        if (c == '>') { out.push_back({Token::RAngle, ">", col}); ++i; continue; }
        if (c == ':') { out.push_back({Token::Colon, ":", col}); ++i; continue; }
        if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
            out.push_back({Token::Arrow, "->", col});
            i += 2;
            continue;
        }
        if (c == '"') {
            std::string text;
            ++i;
            bool closed = false;
            while (i < line.size()) {
                if (line[i] == '\\' && i + 1 < line.size()) {
                    text += line[i + 1];
                    i += 2;
                    continue;
                }
                if (line[i] == '"') {
                    closed = true;
                    ++i;
                    break;
                }
                text += line[i++];
            }
            if (!closed) throw ParseError(line_no, col, "unterminated quoted name");
            if (text.empty()) throw ParseError(line_no, col, "empty quoted name");
            out.push_back({Token::Quoted, text, col});
            continue;
        }
        if (c == '(' || c == ')' || c == ',') throw ParseError(line_no, col, std::string("'") + c + "' is only allowed inside a quoted name");
        std::size_t j = i;
        while (j < line.size() && !is_reserved_char(line[j]) && !(line[j] == '-' && j + 1 < line.size() && line[j + 1] == '>')) ++j;
        out.push_back({Token::Name, std::string(line.substr(i, j - i)), col});
        i = j;
    }
    out.push_back({Token::End, "", static_cast<int>(line.size()) + 1});
    return out;
}

Model parse_model(std::string_view text) {
    std::vector<std::pair<std::string, int>> states;
    std::optional<std::pair<RawSym, int>> start;
    ModelFlags flags;
    std::vector<RawRule> raw;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        int offset = static_cast<int>(line.find_first_not_of(" \t"));
        if (auto rest = keyword_statement(line, "states")) {
            int rest_offset = static_cast<int>(line.size() - rest->size());
            auto toks = tokenize_line(*rest, line_no);
            for (auto& t : toks) {
                if (t.kind == Token::End) break;
                if (t.kind != Token::Name && t.kind != Token::Quoted)
                    throw ParseError(line_no, t.column + rest_offset, "expected a sync state name");
                states.emplace_back(t.text, line_no);
            }
            continue;
        }
        if (auto rest = keyword_statement(line, "flags")) {
            auto toks = tokenize_line(*rest, line_no);
            int rest_offset = static_cast<int>(line.size() - rest->size());
            for (auto& t : toks) {
                if (t.kind == Token::End) break;
                if (t.text == "branching") flags.branching = true;
                else if (t.text == "degree3") flags.degree3 = true;
                else if (t.text == "normalised") flags.normalised = true;
                else throw ParseError(line_no, t.column + rest_offset, "unknown flag '" + t.text + "'");
            }
            continue;
        }
        if (auto rest = keyword_statement(line, "start")) {
            int rest_offset = static_cast<int>(line.size() - rest->size());
            auto toks = tokenize_line(*rest, line_no);
            for (auto& t : toks) t.column += rest_offset;
            LineParser lp(std::move(toks), line_no);
            RawSym s = lp.symbol();
            if (!lp.at_end()) lp.fail("unexpected text after start symbol");
            start = std::make_pair(s, line_no);
            continue;
        }
        (void)offset;
        LineParser lp(tokenize_line(line, line_no), line_no);
        RawRule r;
        r.line = line_no;
        r.lhs = lp.symbol();
        lp.expect(Token::Arrow, "'->'");
        r.rhs = lp.rhs();
        lp.expect(Token::Colon, "':' before the probability");
        r.prob_column = lp.peek().column;
        if (lp.peek().kind != Token::Name) lp.fail("expected a probability");
        r.prob = lp.next().text;
        if (!lp.at_end()) lp.fail("unexpected text after the probability");
        raw.push_back(std::move(r));
    }

    ModelBuilder b;
    std::set<std::string> state_names;
    for (auto& [n, l] : states) {
        state_names.insert(n);
        b.sync(n);
    }
    std::set<std::string> basic_lhs;
    for (auto& r : raw)
        if (!r.lhs.is_join) basic_lhs.insert(r.lhs.name);

    auto resolve_sync = [&](const std::string& n, int line, int col) {
        if (!state_names.count(n)) throw ParseError(line, col, "join of undeclared sync state '" + n + "'");
        return *b.find_sync(n);
    };
    auto resolve = [&](const RawSym& s, int line) -> SymbolId {
        if (s.is_join) return b.join(resolve_sync(s.left, line, s.column), resolve_sync(s.right, line, s.column));
        if (state_names.count(s.name)) return *b.find_sync(s.name);
        if (basic_lhs.count(s.name)) return b.basic(s.name);
        throw ParseError(line, s.column, "unknown symbol '" + s.name + "'");
    };

    for (auto& r : raw) {
        if (!r.lhs.is_join && state_names.count(r.lhs.name))
            throw ParseError(r.line, r.lhs.column, "lhs must be a process symbol, '" + r.lhs.name + "' is a sync state");
        SymbolId lhs = resolve(r.lhs, r.line);
        std::vector<SymbolId> kids;
        for (auto& s : r.rhs.items) kids.push_back(resolve(s, r.line));
        Rhs rhs;
        if (kids.size() == 1) rhs = Rhs::single(kids[0]);
        else if (kids.size() == 2) rhs = Rhs::pair(kids[0], kids[1]);
        else rhs = Rhs::triple(kids[0], kids[1], kids[2]);
        Rational p;
        try {
            p = parse_rational(r.prob);
        } catch (const std::invalid_argument& e) {
            throw ParseError(r.line, r.prob_column, e.what());
        }
        b.add_rule(lhs, rhs, p);
    }
    b.flags() = flags;
    if (start) b.set_start(resolve(start->first, start->second));

    Model m = b.build();
    for (SymbolId id = 0; id < m.symbol_count(); ++id) {
        if (!m.is_join(id) || m.is_process(id)) continue;
        for (std::size_t i = 0; i < raw.size(); ++i)
            for (SymbolId c : m.rules()[i].rhs.children())
                if (c == id)
                    throw ParseError(raw[i].line, 1, "join symbol " + m.display(id) + " used on a rhs has no rules");
    }
    require_valid(m);
    return m;
}

std::string render_model(const Model& m) {
    std::ostringstream os;
    os << "states:";
    for (SymbolId q : m.sync_states()) os << ' ' << m.display(q);
    os << '\n';
    const auto& f = m.flags();
    if (f.branching || f.degree3 || f.normalised) {
        os << "flags:";
        if (f.branching) os << " branching";
        if (f.degree3) os << " degree3";
        if (f.normalised) os << " normalised";
        os << '\n';
    }
    if (m.start()) os << "start: " << m.display(*m.start()) << '\n';
    for (const Rule& r : m.rules()) {
        os << m.display(r.lhs) << " -> ";
        if (r.rhs.arity == 1) {
            os << m.display(r.rhs.items[0]);
        } else {
            os << '<';
            for (std::size_t i = 0; i < r.rhs.arity; ++i) os << (i ? " " : "") << m.display(r.rhs.items[i]);
            os << '>';
        }
        os << " : " << to_fraction_string(r.prob) << '\n';
    }
    return os.str();
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

void save_model_file(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    out << render_model(m);
}

} // namespace psjs
