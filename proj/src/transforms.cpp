#include "psjs/transforms.hpp"

#include "psjs/equations.hpp"

#include <algorithm>
#include <cstdint>

namespace psjs {

namespace {

bool structurally_complete(const Model& m) {
    const auto n = static_cast<int>(m.sync_states().size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m.join_at(i, j) == kNoSymbol) return false;
    return true;
}

} // namespace

Normalised normalise(const Model& m) {
    if (m.flags().degree3) throw AnalysisError("normalise: degree-3 branching processes are not supported");
    ModelBuilder b(m);
    Normalised out;
    if (!m.flags().branching && !structurally_complete(m)) {
        SymbolId fresh = b.sync(b.fresh_name("_fail"));
        out.fresh = fresh;
        std::vector<SymbolId> Q = m.sync_states();
        Q.push_back(fresh);
        for (SymbolId r : Q)
            for (SymbolId s : Q) {
                bool has = r != fresh && s != fresh && m.join_at(m.sync_index(r), m.sync_index(s)) != kNoSymbol;
                if (!has) b.add_rule(b.join(r, s), Rhs::single(fresh), Rational(1));
            }
    }
    b.flags().normalised = true;
    out.model = b.build();
    return out;
}

bool is_normalised(const Model& m) {
    if (m.flags().branching) return true;
    const auto pos = positive_pairs(m);
    const auto& Q = m.sync_states();
    const std::size_t nq = Q.size();
    auto options = [&](SymbolId s) {
        std::vector<int> out;
        if (m.is_sync(s)) {
            out.push_back(m.sync_index(s));
        } else {
            for (std::size_t i = 0; i < nq; ++i)
                if (pos[s * nq + i]) out.push_back(static_cast<int>(i));
        }
        return out;
    };
    for (const Rule& r : m.rules()) {
        if (r.rhs.arity != 2) continue;
        auto o1 = options(r.rhs.items[0]);
        if (o1.empty()) continue;
        auto o2 = options(r.rhs.items[1]);
        for (int i : o1)
            for (int j : o2)
                if (m.join_at(i, j) == kNoSymbol) return false;
    }
    return true;
}

Model ensure_normalised(const Model& m, bool* changed) {
    if (is_normalised(m)) {
        if (changed) *changed = false;
        return m;
    }
    if (changed) *changed = true;
    return normalise(m).model;
}

// ---- space ----

namespace {

using Bits = std::vector<std::uint64_t>;

struct Reach {
    std::size_t words = 0;
    std::vector<Bits> rows;  // per symbol
    bool test(SymbolId a, SymbolId b) const { return (rows[a][b / 64] >> (b % 64)) & 1u; }
};

Reach compute_reach(const Model& m, const std::vector<char>& pos) {
    const std::size_t n = m.symbol_count();
    const std::size_t nq = m.sync_states().size();
    Reach R;
    R.words = (n + 63) / 64;
    R.rows.assign(n, Bits(R.words, 0));
    for (SymbolId s = 0; s < n; ++s)
        if (m.in_sigma(s)) R.rows[s][s / 64] |= std::uint64_t{1} << (s % 64);

    // Successor lists: σ1 ⇒ σ3 whenever σ2 ⇒ σ3 for each listed σ2.
    std::vector<std::vector<SymbolId>> succ(n);
    auto options = [&](SymbolId s) {
        std::vector<int> out;
        if (m.is_sync(s)) {
            out.push_back(m.sync_index(s));
        } else {
            for (std::size_t i = 0; i < nq; ++i)
                if (pos[s * nq + i]) out.push_back(static_cast<int>(i));
        }
        return out;
    };
    const bool bp = m.flags().branching;
    for (const Rule& r : m.rules()) {
        auto& out = succ[r.lhs];
        if (r.rhs.arity == 1) {
            out.push_back(r.rhs.items[0]);
        } else if (r.rhs.arity == 2 && !bp) {
            auto o1 = options(r.rhs.items[0]);
            auto o2 = options(r.rhs.items[1]);
            for (int i : o1)
                for (int j : o2) {
                    SymbolId jn = m.join_at(i, j);
                    if (jn != kNoSymbol) out.push_back(jn);
                }
        }
    }
    for (auto& v : succ) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (SymbolId a : m.process_symbols())
            for (SymbolId s : succ[a])
                for (std::size_t w = 0; w < R.words; ++w) {
                    std::uint64_t nv = R.rows[a][w] | R.rows[s][w];
                    if (nv != R.rows[a][w]) {
                        R.rows[a][w] = nv;
                        changed = true;
                    }
                }
    }
    return R;
}

std::set<SymbolId> step_with(const Model& m, const Reach& R, const std::set<SymbolId>& uk) {
    std::vector<SymbolId> good;
    for (const Rule& r : m.rules()) {
        if (r.rhs.arity < 2) continue;
        for (SymbolId c : r.rhs.children())
            if (uk.count(c)) {
                good.push_back(r.lhs);
                break;
            }
    }
    std::set<SymbolId> out;
    for (SymbolId a : m.process_symbols())
        for (SymbolId b : good)
            if (R.test(a, b)) {
                out.insert(a);
                break;
            }
    return out;
}

} // namespace

std::vector<std::vector<char>> reach_relation(const Model& m, const std::vector<char>& positive) {
    Reach R = compute_reach(m, positive);
    const std::size_t n = m.symbol_count();
    std::vector<std::vector<char>> out(n, std::vector<char>(n, 0));
    for (SymbolId a = 0; a < n; ++a)
        for (SymbolId b = 0; b < n; ++b) out[a][b] = R.test(a, b) ? 1 : 0;
    return out;
}

std::set<SymbolId> unbounded_step(const Model& m, const std::vector<std::vector<char>>& reach,
                                  const std::set<SymbolId>& uk) {
    const std::size_t n = m.symbol_count();
    Reach R;
    R.words = (n + 63) / 64;
    R.rows.assign(n, Bits(R.words, 0));
    for (SymbolId a = 0; a < n; ++a)
        for (SymbolId b = 0; b < n; ++b)
            if (reach[a][b]) R.rows[a][b / 64] |= std::uint64_t{1} << (b % 64);
    return step_with(m, R, uk);
}

std::set<SymbolId> unbounded_set(const Model& m) {
    Reach R = compute_reach(m, positive_pairs(m));
    std::set<SymbolId> u;
    for (SymbolId s = 0; s < m.symbol_count(); ++s)
        if (m.in_sigma(s)) u.insert(s);
    for (;;) {
        auto next = step_with(m, R, u);
        if (next == u) return u;
        u = std::move(next);
    }
}

FiniteSpace finite_space_transform(const Model& m) {
    FiniteSpace out;
    Model norm = m;
    if (!is_normalised(m)) {
        auto n = normalise(m);
        norm = std::move(n.model);
        out.qcheck = n.fresh;
    }
    out.unbounded = unbounded_set(norm);
    const auto pos = positive_pairs(norm);
    const std::size_t nq = norm.sync_states().size();
    for (SymbolId a : norm.process_symbols()) {
        if (out.unbounded.count(a)) continue;
        bool any = false;
        for (std::size_t i = 0; i < nq && !any; ++i) any = pos[a * nq + i] != 0;
        if (!any) out.bounded.insert(a);
    }

    ModelBuilder b(norm);
    out.qbar = b.sync(b.fresh_name("_bounded"));
    for (SymbolId s : out.bounded) {
        b.drop_rules(s);
        b.add_rule(s, Rhs::single(out.qbar), Rational(1));
    }
    if (!norm.flags().branching) {
        std::vector<SymbolId> Q = norm.sync_states();
        Q.push_back(out.qbar);
        for (SymbolId r : Q) {
            b.add_rule(b.join(out.qbar, r), Rhs::single(out.qbar), Rational(1));
            if (r != out.qbar) b.add_rule(b.join(r, out.qbar), Rhs::single(out.qbar), Rational(1));
        }
    }
    b.flags().normalised = true;
    out.model = b.build();
    return out;
}

// ---- conditioned branching process ----

SymbolId ConditionedBp::at(SymbolId a, SymbolId q) const {
    if (a == q) return bottom;
    auto it = symbol_of.find({a, q});
    if (it == symbol_of.end()) throw AnalysisError("conditioned_bp: [a↓q] = 0, no symbol for this pair");
    return it->second;
}

ConditionedBp conditioned_bp(const Model& m, const TermMatrix& terms) {
    const EquationSystem sys = build_equation_system(m, true);
    ConditionedBp out;
    ModelBuilder b;
    out.bottom = b.sync("bot");
    std::vector<SymbolId> bp_sym(sys.size(), kNoSymbol);
    std::vector<double> value(sys.size(), 0.0);
    for (std::uint32_t i = 0; i < sys.size(); ++i) {
        const Variable& v = sys.variable(i);
        value[i] = terms.value(v.sigma, v.q);
        if (value[i] <= 0.0) continue;
        bp_sym[i] = b.basic("[" + m.display(v.sigma) + "|" + m.display(v.q) + "]");
        out.symbol_of[{v.sigma, v.q}] = bp_sym[i];
    }
    bool degree3 = false;
    for (std::uint32_t i = 0; i < sys.size(); ++i) {
        if (bp_sym[i] == kNoSymbol) continue;
        std::vector<std::pair<Rhs, Rational>> rules;
        Rational sum(0);
        double dsum = 0.0;
        for (std::uint32_t k = sys.begin(i); k < sys.end(i); ++k) {
            const Monomial& mo = sys.monomials()[k];
            double y = mo.c;
            Rhs rhs;
            bool ok = true;
            for (std::size_t f = 0; f < mo.size(); ++f) {
                SymbolId child = out.bottom;
                if (mo.factor[f] != kOne) {
                    y *= value[mo.factor[f]];
                    child = bp_sym[mo.factor[f]];
                    if (child == kNoSymbol) ok = false;
                }
                rhs.items[f] = child;
            }
            if (!ok || y <= 0.0) continue;
            rhs.arity = static_cast<std::uint8_t>(mo.size());
            if (rhs.arity == 3) degree3 = true;
            double w = y / value[i];
            dsum += w;
            Rational r = rational_from_double(w);
            sum += r;
            rules.push_back({rhs, r});
        }
        if (rules.empty()) throw AnalysisError("conditioned_bp: no positive rule for " + b.symbol(bp_sym[i]).name);
        for (auto& [rhs, r] : rules) b.add_rule(bp_sym[i], rhs, r / sum);
        double d = dsum - 1.0;
        out.defect[bp_sym[i]] = d;
        out.max_defect = std::max(out.max_defect, std::abs(d));
    }
    b.flags().branching = true;
    b.flags().degree3 = degree3;
    b.flags().normalised = true;
    out.bp = b.build();
    require_valid(out.bp);
    return out;
}

} // namespace psjs
