#include "psjs/model_io.hpp"
#include "psjs/transforms.hpp"

#include <map>
#include <set>
#include <sstream>

namespace psjs {

std::optional<std::uint32_t> Ppds::control(const std::string& name) const {
    for (std::uint32_t i = 0; i < control_states.size(); ++i)
        if (control_states[i] == name) return i;
    return std::nullopt;
}

std::optional<std::uint32_t> Ppds::stack(const std::string& name) const {
    for (std::uint32_t i = 0; i < stack_alphabet.size(); ++i)
        if (stack_alphabet[i] == name) return i;
    return std::nullopt;
}

std::vector<Diagnostic> validate(const Ppds& p) {
    std::vector<Diagnostic> out;
    std::map<std::pair<std::uint32_t, std::uint32_t>, Rational> sums;
    for (const auto& r : p.rules) {
        if (r.from >= p.control_states.size() || r.to >= p.control_states.size() ||
            r.top >= p.stack_alphabet.size()) {
            out.push_back({"rule symbols declared", "rule refers to an undeclared control state or stack symbol"});
            continue;
        }
        if (r.push.size() > 2) out.push_back({"push length at most 2", "rule pushes more than two symbols"});
        for (auto s : r.push)
            if (s >= p.stack_alphabet.size())
                out.push_back({"rule symbols declared", "rule pushes an undeclared stack symbol"});
        if (r.prob <= 0 || r.prob > 1)
            out.push_back({"probability in (0,1]", "probability " + to_fraction_string(r.prob) + " outside (0,1]"});
        sums[{r.from, r.top}] += r.prob;
    }
    for (const auto& [k, s] : sums)
        if (s != 1 && k.first < p.control_states.size() && k.second < p.stack_alphabet.size())
            out.push_back({"probabilities sum to 1",
                           "probabilities for " + p.control_states[k.first] + " " + p.stack_alphabet[k.second] +
                               " sum to " + to_fraction_string(s) + " ≠ 1"});
    return out;
}

Ppds parse_ppds(std::string_view text) {
    Ppds p;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    struct Pending {
        std::vector<Token> toks;
        int line;
    };
    std::vector<Pending> rules;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = tokenize_line(line, line_no);
        if (toks.empty() || toks.front().kind == Token::End) continue;
        if (toks.size() >= 2 && toks[0].kind == Token::Name && toks[1].kind == Token::Colon &&
            (toks[0].text == "control" || toks[0].text == "stack")) {
            auto& dst = toks[0].text == "control" ? p.control_states : p.stack_alphabet;
            for (std::size_t i = 2; i < toks.size() && toks[i].kind != Token::End; ++i) {
                if (toks[i].kind != Token::Name && toks[i].kind != Token::Quoted)
                    throw ParseError(line_no, toks[i].column, "expected a name");
                dst.push_back(toks[i].text);
            }
            continue;
        }
        rules.push_back({std::move(toks), line_no});
    }
    std::set<std::string> seen;
    for (const auto& q : p.control_states)
        if (!seen.insert("c:" + q).second) throw ParseError(0, 0, "duplicate control state " + q);
    for (const auto& a : p.stack_alphabet)
        if (!seen.insert("s:" + a).second) throw ParseError(0, 0, "duplicate stack symbol " + a);

    for (const auto& [toks, ln] : rules) {
        std::size_t i = 0;
        auto name_at = [&](std::size_t k) {
            if (k >= toks.size() || (toks[k].kind != Token::Name && toks[k].kind != Token::Quoted))
                throw ParseError(ln, k < toks.size() ? toks[k].column : 1, "expected a name");
            return toks[k].text;
        };
        auto control = [&](std::size_t k) {
            auto c = p.control(name_at(k));
            if (!c) throw ParseError(ln, toks[k].column, "unknown control state " + toks[k].text);
            return *c;
        };
        auto stack = [&](std::size_t k) {
            auto s = p.stack(name_at(k));
            if (!s) throw ParseError(ln, toks[k].column, "unknown stack symbol " + toks[k].text);
            return *s;
        };
        PpdsRule r;
        r.from = control(i++);
        r.top = stack(i++);
        if (i >= toks.size() || toks[i].kind != Token::Arrow) throw ParseError(ln, toks[i].column, "expected '->'");
        ++i;
        r.to = control(i++);
        while (i < toks.size() && toks[i].kind != Token::Colon && toks[i].kind != Token::End) r.push.push_back(stack(i++));
        if (r.push.size() > 2) throw ParseError(ln, toks[i - 1].column, "at most two stack symbols may be pushed");
        if (i >= toks.size() || toks[i].kind != Token::Colon) throw ParseError(ln, toks[i].column, "expected ':'");
        ++i;
        if (i >= toks.size() || toks[i].kind != Token::Name) throw ParseError(ln, toks[i].column, "expected a probability");
        try {
            r.prob = parse_rational(toks[i].text);
        } catch (const std::exception& e) {
            throw ParseError(ln, toks[i].column, e.what());
        }
        ++i;
        if (i < toks.size() && toks[i].kind != Token::End) throw ParseError(ln, toks[i].column, "unexpected text");
        p.rules.push_back(std::move(r));
    }
    auto diags = validate(p);
    if (!diags.empty()) throw ModelError(diags);
    return p;
}

std::string render_ppds(const Ppds& p) {
    std::ostringstream os;
    os << "control:";
    for (const auto& q : p.control_states) os << ' ' << quote_name(q);
    os << "\nstack:";
    for (const auto& a : p.stack_alphabet) os << ' ' << quote_name(a);
    os << '\n';
    for (const auto& r : p.rules) {
        os << quote_name(p.control_states[r.from]) << ' ' << quote_name(p.stack_alphabet[r.top]) << " -> "
           << quote_name(p.control_states[r.to]);
        for (auto s : r.push) os << ' ' << quote_name(p.stack_alphabet[s]);
        os << " : " << to_fraction_string(r.prob) << '\n';
    }
    return os.str();
}

nlohmann::ordered_json SerializationMap::to_json(const Model& m, const Ppds& p) const {
    nlohmann::ordered_json j;
    j["box"] = p.control_states[box];
    nlohmann::ordered_json ret = nlohmann::ordered_json::object(), pend = nlohmann::ordered_json::object(),
                           st = nlohmann::ordered_json::object();
    for (auto [q, c] : this->ret) ret[m.display(q)] = p.control_states[c];
    for (auto [q, s] : pending) pend[m.display(q)] = p.stack_alphabet[s];
    for (auto [s, a] : stack_of) st[m.display(s)] = p.stack_alphabet[a];
    j["return_states"] = ret;
    j["pending_markers"] = pend;
    j["stack_symbols"] = st;
    return j;
}

Serialised serialise(const Model& m) {
    Serialised out;
    Ppds& p = out.ppds;
    SerializationMap& map = out.map;
    std::set<std::string> stack_names;
    auto add_stack = [&](std::string name) {
        while (stack_names.count(name)) name += '\'';
        stack_names.insert(name);
        p.stack_alphabet.push_back(name);
        return static_cast<std::uint32_t>(p.stack_alphabet.size() - 1);
    };
    std::vector<SymbolId> sigma;
    for (SymbolId s = 0; s < m.symbol_count(); ++s)
        if (m.in_sigma(s)) sigma.push_back(s);
    for (SymbolId s : sigma) map.stack_of[s] = add_stack(m.display(s));

    p.control_states.push_back("_box");
    map.box = 0;
    for (SymbolId q : m.sync_states()) {
        std::string n = "_ret_" + m.display(q);
        while (p.control(n)) n += '\'';
        p.control_states.push_back(n);
        map.ret[q] = static_cast<std::uint32_t>(p.control_states.size() - 1);
    }
    for (SymbolId q : m.sync_states()) map.pending[q] = add_stack("_pend_" + m.display(q));

    for (const Rule& r : m.rules()) {
        PpdsRule pr;
        pr.from = map.box;
        pr.top = map.stack_of.at(r.lhs);
        pr.to = map.box;
        pr.prob = r.prob;
        if (r.rhs.arity == 3) throw AnalysisError("serialise: ternary rules have no pushdown encoding");
        for (SymbolId c : r.rhs.children()) pr.push.push_back(map.stack_of.at(c));
        p.rules.push_back(std::move(pr));
    }
    for (SymbolId q : m.sync_states()) p.rules.push_back({map.box, map.stack_of.at(q), map.ret.at(q), {}, Rational(1)});
    for (SymbolId q : m.sync_states())
        for (SymbolId s : sigma)
            p.rules.push_back({map.ret.at(q), map.stack_of.at(s), map.box, {map.stack_of.at(s), map.pending.at(q)}, Rational(1)});
    for (SymbolId q : m.sync_states())
        for (SymbolId r : m.sync_states()) {
            auto j = m.find_join(q, r);
            if (!j) continue;
            p.rules.push_back({map.ret.at(r), map.pending.at(q), map.box, {map.stack_of.at(*j)}, Rational(1)});
        }
    return out;
}

Model from_ppds(const Ppds& p) {
    auto diags = validate(p);
    if (!diags.empty()) throw ModelError(diags);
    ModelBuilder b;
    std::vector<SymbolId> ctl, stk;
    for (const auto& q : p.control_states) ctl.push_back(b.sync(q));
    for (const auto& a : p.stack_alphabet) stk.push_back(b.sync(b.fresh_name(a)));
    std::set<std::pair<std::uint32_t, std::uint32_t>> has;
    for (const auto& r : p.rules) has.insert({r.from, r.top});
    std::set<std::pair<std::uint32_t, std::uint32_t>> stuck;
    auto target = [&](std::uint32_t q, std::uint32_t a) {
        if (!has.count({q, a})) stuck.insert({q, a});
        return b.join(ctl[q], stk[a]);
    };
    for (const auto& r : p.rules) {
        SymbolId lhs = b.join(ctl[r.from], stk[r.top]);
        Rhs rhs;
        if (r.push.empty()) rhs = Rhs::single(ctl[r.to]);
        else if (r.push.size() == 1) rhs = Rhs::single(target(r.to, r.push[0]));
        else rhs = Rhs::pair(target(r.to, r.push[0]), stk[r.push[1]]);
        b.add_rule(lhs, rhs, r.prob);
    }
    for (auto [q, a] : stuck) {
        SymbolId j = b.join(ctl[q], stk[a]);
        b.add_rule(j, Rhs::single(j), Rational(1));
    }
    b.flags().normalised = false;
    Model m = b.build();
    require_valid(m);
    return m;
}

} // namespace psjs
