#include "psjs/model.hpp"
#include "psjs/model_io.hpp"

#include <map>
#include <set>

namespace psjs {

namespace {

std::uint64_t pair_key(SymbolId a, SymbolId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

} // namespace

std::string Model::display(SymbolId id) const {
    const Symbol& s = symbols_.at(id);
    if (s.kind == SymbolKind::Join) return "<" + display(s.left) + " " + display(s.right) + ">";
    return quote_name(s.name);
}

std::optional<SymbolId> Model::find_sync(std::string_view name) const {
    auto it = sync_by_name_.find(std::string(name));
    if (it == sync_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<SymbolId> Model::find_basic(std::string_view name) const {
    auto it = basic_by_name_.find(std::string(name));
    if (it == basic_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<SymbolId> Model::find_join(SymbolId q1, SymbolId q2) const {
    int i = sync_index(q1), j = sync_index(q2);
    if (i < 0 || j < 0) return std::nullopt;
    SymbolId s = join_at(i, j);
    if (s == kNoSymbol) return std::nullopt;
    return s;
}

SymbolId Model::resolve(std::string_view text) const {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    auto toks = tokenize_line(text, 0);
    auto name_of = [&](const Token& t) -> std::string {
        if (t.kind != Token::Name && t.kind != Token::Quoted)
            throw AnalysisError("cannot resolve symbol '" + std::string(text) + "'");
        return t.text;
    };
    if (toks.size() == 2) {
        std::string n = name_of(toks[0]);
        if (auto s = find_sync(n)) return *s;
        if (auto b = find_basic(n)) return *b;
        throw AnalysisError("unknown symbol '" + n + "'");
    }
    if (toks.size() == 5 && toks[0].kind == Token::LAngle && toks[3].kind == Token::RAngle) {
        auto a = find_sync(name_of(toks[1]));
        auto b = find_sync(name_of(toks[2]));
        if (!a || !b) throw AnalysisError("join of undeclared sync states in '" + std::string(text) + "'");
        if (auto j = find_join(*a, *b)) return *j;
        throw AnalysisError("join symbol " + std::string(text) + " has no rules");
    }
    throw AnalysisError("cannot resolve symbol '" + std::string(text) + "'");
}

ModelBuilder::ModelBuilder(const Model& base)
    : symbols_(base.symbols_), rules_(base.rules_), basic_by_name_(base.basic_by_name_),
      sync_by_name_(base.sync_by_name_), flags_(base.flags_), start_(base.start_) {
    for (SymbolId i = 0; i < symbols_.size(); ++i)
        if (symbols_[i].kind == SymbolKind::Join) join_by_pair_[pair_key(symbols_[i].left, symbols_[i].right)] = i;
}

SymbolId ModelBuilder::sync(std::string_view name) {
    std::string n(name);
    if (auto it = sync_by_name_.find(n); it != sync_by_name_.end()) return it->second;
    SymbolId id = static_cast<SymbolId>(symbols_.size());
    symbols_.push_back(Symbol{SymbolKind::Sync, n, kNoSymbol, kNoSymbol});
    sync_by_name_.emplace(n, id);
    return id;
}

SymbolId ModelBuilder::basic(std::string_view name) {
    std::string n(name);
    if (auto it = basic_by_name_.find(n); it != basic_by_name_.end()) return it->second;
    SymbolId id = static_cast<SymbolId>(symbols_.size());
    symbols_.push_back(Symbol{SymbolKind::Basic, n, kNoSymbol, kNoSymbol});
    basic_by_name_.emplace(n, id);
    return id;
}

SymbolId ModelBuilder::join(SymbolId q1, SymbolId q2) {
    if (symbols_.at(q1).kind != SymbolKind::Sync || symbols_.at(q2).kind != SymbolKind::Sync)
        throw std::invalid_argument("join components must be sync states");
    auto key = pair_key(q1, q2);
    if (auto it = join_by_pair_.find(key); it != join_by_pair_.end()) return it->second;
    SymbolId id = static_cast<SymbolId>(symbols_.size());
    symbols_.push_back(Symbol{SymbolKind::Join, {}, q1, q2});
    join_by_pair_.emplace(key, id);
    return id;
}

void ModelBuilder::add_rule(SymbolId lhs, Rhs rhs, const Rational& prob) {
    if (rhs.arity == 1 && symbols_.at(rhs.items[0]).kind == SymbolKind::Join) {
        const Symbol& j = symbols_[rhs.items[0]];
        rhs = Rhs::pair(j.left, j.right);
    }
    Rational p = prob;
    p.canonicalize();
    rules_.push_back(Rule{lhs, rhs, p, p.get_d()});
}

void ModelBuilder::drop_rules(SymbolId lhs) {
    std::erase_if(rules_, [&](const Rule& r) { return r.lhs == lhs; });
}

bool ModelBuilder::has_rules(SymbolId lhs) const {
    for (const auto& r : rules_)
        if (r.lhs == lhs) return true;
    return false;
}

std::optional<SymbolId> ModelBuilder::find_sync(std::string_view name) const {
    auto it = sync_by_name_.find(std::string(name));
    if (it == sync_by_name_.end()) return std::nullopt;
    return it->second;
}

bool ModelBuilder::name_taken(std::string_view name) const {
    std::string n(name);
    return basic_by_name_.count(n) || sync_by_name_.count(n);
}

std::string ModelBuilder::fresh_name(std::string_view stem) const {
    std::string n(stem);
    while (name_taken(n)) n += '\'';
    return n;
}

Model ModelBuilder::build() const {
    Model m;
    m.symbols_ = symbols_;
    m.basic_by_name_ = basic_by_name_;
    m.sync_by_name_ = sync_by_name_;
    m.flags_ = flags_;
    m.start_ = start_;
    m.rules_ = rules_;
    const std::size_t n = symbols_.size();
    m.sync_index_.assign(n, -1);
    m.process_index_.assign(n, -1);
    m.rules_of_.assign(n, {});
    for (std::uint32_t i = 0; i < rules_.size(); ++i) m.rules_of_.at(rules_[i].lhs).push_back(i);
    for (SymbolId id = 0; id < n; ++id) {
        const Symbol& s = symbols_[id];
        if (s.kind == SymbolKind::Sync) {
            m.sync_index_[id] = static_cast<int>(m.sync_.size());
            m.sync_.push_back(id);
        }
    }
    for (SymbolId id = 0; id < n; ++id) {
        const Symbol& s = symbols_[id];
        bool process = s.kind == SymbolKind::Basic || (s.kind == SymbolKind::Join && !m.rules_of_[id].empty());
        if (process) {
            m.process_index_[id] = static_cast<int>(m.process_.size());
            m.process_.push_back(id);
        }
    }
    const std::size_t q = m.sync_.size();
    m.join_table_.assign(q * q, kNoSymbol);
    for (SymbolId id = 0; id < n; ++id) {
        const Symbol& s = symbols_[id];
        if (s.kind == SymbolKind::Join && !m.rules_of_[id].empty())
            m.join_table_[m.sync_index_[s.left] * q + m.sync_index_[s.right]] = id;
    }
    return m;
}

std::vector<Diagnostic> validate(const Model& m) {
    std::vector<Diagnostic> out;
    auto add = [&](std::string inv, std::string msg) { out.push_back({std::move(inv), std::move(msg)}); };
    const auto& flags = m.flags();

    std::set<std::string> basic_names, sync_names;
    for (SymbolId id = 0; id < m.symbol_count(); ++id) {
        const Symbol& s = m.symbol(id);
        if (s.kind == SymbolKind::Join) {
            if (s.left >= m.symbol_count() || !m.is_sync(s.left) || s.right >= m.symbol_count() || !m.is_sync(s.right))
                add("join components are declared sync states", "join symbol " + std::to_string(id) + " has a component that is not a sync state");
            continue;
        }
        if (s.name.empty()) add("names are nonempty identifiers", "symbol " + std::to_string(id) + " has an empty name");
        (s.kind == SymbolKind::Basic ? basic_names : sync_names).insert(s.name);
    }
    for (const auto& n : basic_names)
        if (sync_names.count(n)) add("Basic and Sync namespaces are disjoint", "name " + quote_name(n) + " is both a basic symbol and a sync state");

    if (flags.degree3 && !flags.branching)
        add("degree3 implies branching", "degree3 flag requires the branching flag");
    if (flags.branching) {
        for (SymbolId a : m.process_symbols())
            if (m.is_join(a)) add("branching process has no join symbols", "branching process contains join symbol " + m.display(a));
        if (m.sync_states().size() != 1)
            add("branching process has one sync state", "branching process must declare exactly one sync state, found " + std::to_string(m.sync_states().size()));
    }

    for (std::size_t i = 0; i < m.rules().size(); ++i) {
        const Rule& r = m.rules()[i];
        std::string where = "rule " + std::to_string(i + 1);
        if (r.lhs >= m.symbol_count()) {
            add("lhs is a process symbol", where + ": lhs refers to an unknown symbol");
            continue;
        }
        where += " (" + m.display(r.lhs) + ")";
        if (m.is_sync(r.lhs)) add("lhs must be a process symbol", where + ": lhs must be a process symbol, " + m.display(r.lhs) + " is a sync state");
        if (r.prob <= 0 || r.prob > 1) add("probability lies in (0,1]", where + ": probability " + to_fraction_string(r.prob) + " outside (0,1]");
        if (r.rhs.arity < 1 || r.rhs.arity > 3) {
            add("rhs has one to three symbols", where + ": malformed rhs");
            continue;
        }
        if (r.rhs.arity == 3 && !flags.degree3)
            add("Triple rhs requires degree-3 branching process", where + ": Triple rhs requires degree-3 branching process");
        for (SymbolId c : r.rhs.children()) {
            if (c >= m.symbol_count()) {
                add("rhs symbols lie in Σ", where + ": rhs refers to an unknown symbol");
                continue;
            }
            if (!m.in_sigma(c)) add("rhs symbols lie in Σ", where + ": rhs symbol " + m.display(c) + " is not in Σ (join without rules)");
        }
        if (r.rhs.arity == 1 && m.is_join(r.rhs.items[0]))
            add("rhs canonical form", where + ": single join rhs must be stored as a pair");
    }

    for (SymbolId a : m.process_symbols()) {
        Rational sum = 0;
        for (auto ri : m.rules_of(a)) sum += m.rules()[ri].prob;
        if (sum != 1)
            add("rule probabilities per lhs sum to 1", "probabilities for " + m.display(a) + " sum to " + to_fraction_string(sum) + " ≠ 1");
    }

    if (auto s = m.start(); s && (*s >= m.symbol_count() || !m.in_sigma(*s)))
        add("start symbol lies in Σ", "start symbol is not in Σ");
    return out;
}

void require_valid(const Model& m) {
    auto d = validate(m);
    if (!d.empty()) throw ModelError(std::move(d));
}

} // namespace psjs
