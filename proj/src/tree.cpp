#include "psjs/tree.hpp"
#include "psjs/model_io.hpp"

#include <functional>

namespace psjs {

namespace {

void emit_symbol(const Model& m, SymbolId s, std::vector<std::int32_t>& out) {
    if (m.is_join(s)) {
        const Symbol& j = m.symbol(s);
        out.push_back(ConfigTree::kNode2);
        out.push_back(static_cast<std::int32_t>(j.left));
        out.push_back(static_cast<std::int32_t>(j.right));
    } else {
        out.push_back(static_cast<std::int32_t>(s));
    }
}

// Join symbol at a node position, or kNoSymbol if the node is not a rewritable join.
SymbolId join_at_node(const Model& m, const std::vector<std::int32_t>& t, std::size_t i) {
    if (t[i] != ConfigTree::kNode2 || i + 2 >= t.size()) return kNoSymbol;
    std::int32_t a = t[i + 1], b = t[i + 2];
    if (a < 0 || b < 0) return kNoSymbol;
    int ia = m.sync_index(static_cast<SymbolId>(a)), ib = m.sync_index(static_cast<SymbolId>(b));
    if (ia < 0 || ib < 0) return kNoSymbol;
    return m.join_at(ia, ib);
}

} // namespace

ConfigTree ConfigTree::leaf(const Model& m, SymbolId s) {
    std::vector<std::int32_t> t;
    emit_symbol(m, s, t);
    return ConfigTree(std::move(t));
}

ConfigTree ConfigTree::node(const std::vector<ConfigTree>& children) {
    if (children.size() != 2 && children.size() != 3) throw std::invalid_argument("nodes have two or three children");
    std::vector<std::int32_t> t{children.size() == 2 ? kNode2 : kNode3};
    for (const auto& c : children) t.insert(t.end(), c.tokens_.begin(), c.tokens_.end());
    return ConfigTree(std::move(t));
}

ConfigTree ConfigTree::parse(const Model& m, std::string_view text) {
    auto toks = tokenize_line(text, 1);
    std::size_t pos = 0;
    std::function<ConfigTree()> rec = [&]() -> ConfigTree {
        const Token& t = toks.at(pos);
        if (t.kind == Token::LAngle) {
            ++pos;
            std::vector<ConfigTree> kids;
            while (toks.at(pos).kind != Token::RAngle) {
                if (toks[pos].kind == Token::End) throw ParseError(1, toks[pos].column, "unterminated '<'");
                kids.push_back(rec());
            }
            ++pos;
            if (kids.size() < 2 || kids.size() > 3) throw ParseError(1, t.column, "tree nodes need two or three children");
            return node(kids);
        }
        if (t.kind != Token::Name && t.kind != Token::Quoted) throw ParseError(1, t.column, "expected a symbol");
        ++pos;
        auto s = m.find_sync(t.text);
        if (!s) s = m.find_basic(t.text);
        if (!s) throw ParseError(1, t.column, "unknown symbol '" + t.text + "'");
        return leaf(m, *s);
    };
    ConfigTree out = rec();
    if (toks.at(pos).kind != Token::End) throw ParseError(1, toks[pos].column, "unexpected text after tree");
    return out;
}

std::size_t ConfigTree::leaf_count() const {
    std::size_t n = 0;
    for (auto t : tokens_) n += t >= 0;
    return n;
}

std::string ConfigTree::render(const Model& m) const {
    std::string out;
    std::size_t pos = 0;
    std::function<void()> rec = [&]() {
        std::int32_t t = tokens_.at(pos++);
        if (t >= 0) {
            out += m.display(static_cast<SymbolId>(t));
            return;
        }
        int k = t == kNode2 ? 2 : 3;
        out += '<';
        for (int i = 0; i < k; ++i) {
            if (i) out += ' ';
            rec();
        }
        out += '>';
    };
    if (!tokens_.empty()) rec();
    return out;
}

std::vector<FrontItem> front(const Model& m, const ConfigTree& tree) {
    std::vector<FrontItem> out;
    const auto& t = tree.tokens();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= 0) {
            auto s = static_cast<SymbolId>(t[i]);
            if (m.is_process(s)) out.push_back({i, s});
        } else if (SymbolId j = join_at_node(m, t, i); j != kNoSymbol) {
            out.push_back({i, j});
            i += 2;
        }
    }
    return out;
}

bool is_terminal(const Model& m, const ConfigTree& t) { return front(m, t).empty(); }

std::uint32_t ScriptedChooser::choose(const Model& m, SymbolId lhs) {
    if (next_ >= script_.size()) throw std::out_of_range("rule script exhausted");
    std::uint32_t r = script_[next_++];
    if (r >= m.rules().size() || m.rules()[r].lhs != lhs)
        throw std::invalid_argument("scripted rule " + std::to_string(r) + " does not rewrite " + m.display(lhs));
    return r;
}

RhsTokens::RhsTokens(const Model& m) {
    per_rule.reserve(m.rules().size());
    for (const Rule& r : m.rules()) {
        std::vector<std::int32_t> t;
        if (r.rhs.arity == 2) t.push_back(ConfigTree::kNode2);
        if (r.rhs.arity == 3) t.push_back(ConfigTree::kNode3);
        for (SymbolId c : r.rhs.children()) emit_symbol(m, c, t);
        per_rule.push_back(std::move(t));
    }
}

std::size_t rewrite_front(const Model& m, const RhsTokens& rhs, const std::vector<std::int32_t>& in,
                          std::vector<std::int32_t>& out, RuleChooser& chooser, double* prob,
                          std::vector<std::uint32_t>* applied) {
    out.clear();
    std::size_t rewritten = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        std::int32_t tok = in[i];
        SymbolId s = kNoSymbol;
        if (tok >= 0) {
            if (m.is_process(static_cast<SymbolId>(tok))) s = static_cast<SymbolId>(tok);
        } else if (SymbolId j = join_at_node(m, in, i); j != kNoSymbol) {
            s = j;
            i += 2;
        }
        if (s == kNoSymbol) {
            out.push_back(tok);
            continue;
        }
        std::uint32_t r = chooser.choose(m, s);
        const auto& seq = rhs.per_rule[r];
        out.insert(out.end(), seq.begin(), seq.end());
        if (prob) *prob *= m.rules()[r].p;
        if (applied) applied->push_back(r);
        ++rewritten;
    }
    return rewritten;
}

Transition step(const Model& m, const ConfigTree& t, RuleChooser& chooser) {
    RhsTokens rhs(m);
    Transition tr;
    std::vector<std::int32_t> out;
    rewrite_front(m, rhs, t.tokens(), out, chooser, &tr.probability, &tr.applied);
    tr.next = ConfigTree(std::move(out));
    return tr;
}

Rational path_probability(const Model& m, const std::vector<std::uint32_t>& rules) {
    Rational p = 1;
    for (auto r : rules) p *= m.rules().at(r).prob;
    return p;
}

} // namespace psjs
