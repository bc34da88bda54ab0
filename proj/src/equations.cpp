#include "psjs/equations.hpp"

namespace psjs {

std::optional<std::uint32_t> EquationSystem::find(SymbolId sigma, SymbolId q) const {
    int qi = sync_index(q);
    if (sigma >= symbol_count_ || qi < 0) return std::nullopt;
    std::int32_t v = index_[static_cast<std::size_t>(sigma) * sync_.size() + qi];
    if (v < 0) return std::nullopt;
    return static_cast<std::uint32_t>(v);
}

int EquationSystem::sync_index(SymbolId q) const {
    if (q >= sync_index_.size()) return -1;
    return sync_index_[q];
}

void EquationSystem::evaluate(const std::vector<double>& x, std::vector<double>& out) const {
    out.resize(vars_.size());
    for (std::uint32_t i = 0; i < vars_.size(); ++i) {
        double s = 0.0;
        for (std::uint32_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            const Monomial& mo = monomials_[k];
            double t = mo.c;
            for (std::size_t f = 0, n = mo.size(); f < n; ++f)
                if (mo.factor[f] != kOne) t *= x[mo.factor[f]];
            s += t;
        }
        out[i] = s;
    }
}

namespace {

// Enumerates the monomial shapes of one (a,q) equation. `has(σ,q)` says whether
// v(σ,q) may be nonzero; emit receives (rule, factor pairs).
template <class Has, class Emit>
void expand(const Model& m, SymbolId a, SymbolId q, Has&& has, Emit&& emit) {
    const bool bp = m.flags().branching;
    const auto& Q = m.sync_states();
    for (auto ri : m.rules_of(a)) {
        const Rule& r = m.rules()[ri];
        if (r.rhs.arity == 1) {
            SymbolId s = r.rhs.items[0];
            if (m.is_sync(s) ? s == q : has(s, q)) {
                std::array<std::pair<SymbolId, SymbolId>, 4> f{};
                f[0] = {s, q};
                emit(ri, f, 1, false);
            }
            continue;
        }
        if (bp) {
            std::array<std::pair<SymbolId, SymbolId>, 4> f{};
            bool ok = true;
            for (std::size_t i = 0; i < r.rhs.arity && ok; ++i) {
                SymbolId s = r.rhs.items[i];
                ok = m.is_sync(s) ? s == q : has(s, q);
                f[i] = {s, q};
            }
            if (ok) emit(ri, f, r.rhs.arity, false);
            continue;
        }
        SymbolId s1 = r.rhs.items[0], s2 = r.rhs.items[1];
        auto options = [&](SymbolId s) {
            std::vector<SymbolId> out;
            if (m.is_sync(s)) {
                out.push_back(s);
            } else {
                for (SymbolId q1 : Q)
                    if (has(s, q1)) out.push_back(q1);
            }
            return out;
        };
        auto o1 = options(s1);
        if (o1.empty()) continue;
        auto o2 = options(s2);
        for (SymbolId q1 : o1)
            for (SymbolId q2 : o2) {
                SymbolId j = m.join_at(m.sync_index(q1), m.sync_index(q2));
                if (j == kNoSymbol || !has(j, q)) continue;
                std::array<std::pair<SymbolId, SymbolId>, 4> f{};
                f[0] = {s1, q1};
                f[1] = {s2, q2};
                f[2] = {j, q};
                emit(ri, f, 2, true);
            }
    }
}

} // namespace

std::vector<char> positive_pairs(const Model& m) {
    const auto& Q = m.sync_states();
    const std::size_t nq = Q.size();
    std::vector<char> pos(m.symbol_count() * nq, 0);
    for (std::size_t i = 0; i < nq; ++i) pos[Q[i] * nq + i] = 1;
    auto has = [&](SymbolId s, SymbolId q) { return pos[s * nq + m.sync_index(q)] != 0; };
    bool changed = true;
    while (changed) {
        changed = false;
        for (SymbolId a : m.process_symbols())
            for (std::size_t qi = 0; qi < nq; ++qi) {
                auto& cell = pos[a * nq + qi];
                if (cell) continue;
                bool found = false;
                expand(m, a, Q[qi], has, [&](std::uint32_t, auto&, std::size_t, bool) { found = true; });
                if (found) {
                    cell = 1;
                    changed = true;
                }
            }
    }
    return pos;
}

EquationSystem build_equation_system(const Model& m, bool prune_zero) {
    EquationSystem sys;
    sys.mode_ = m.flags().branching ? SystemMode::Branching : SystemMode::Psjs;
    sys.pruned_ = prune_zero;
    sys.sync_ = m.sync_states();
    sys.process_ = m.process_symbols();
    sys.symbol_count_ = m.symbol_count();
    sys.sync_index_.assign(m.symbol_count(), -1);
    for (std::size_t i = 0; i < sys.sync_.size(); ++i) sys.sync_index_[sys.sync_[i]] = static_cast<int>(i);
    const std::size_t nq = sys.sync_.size();

    std::vector<char> pos;
    if (prune_zero) pos = positive_pairs(m);
    sys.index_.assign(m.symbol_count() * nq, -1);
    for (SymbolId a : m.process_symbols())
        for (std::size_t qi = 0; qi < nq; ++qi)
            if (!prune_zero || pos[a * nq + qi]) {
                sys.index_[a * nq + qi] = static_cast<std::int32_t>(sys.vars_.size());
                sys.vars_.push_back({a, sys.sync_[qi]});
            }

    auto has = [&](SymbolId s, SymbolId q) { return sys.index_[s * nq + sys.sync_index_[q]] >= 0; };
    for (const Variable& v : sys.vars_) {
        expand(m, v.sigma, v.q, has, [&](std::uint32_t ri, auto& f, std::size_t arity, bool join) {
            Monomial mo;
            mo.rule = ri;
            mo.coef = m.rules()[ri].prob;
            mo.c = m.rules()[ri].p;
            mo.arity = static_cast<std::uint8_t>(arity);
            mo.join = join;
            for (std::size_t k = 0; k < mo.size(); ++k) {
                auto [s, q] = f[k];
                mo.factor_sigma[k] = s;
                mo.factor_state[k] = q;
                mo.factor[k] = m.is_sync(s) ? kOne : static_cast<std::uint32_t>(sys.index_[s * nq + sys.sync_index_[q]]);
            }
            sys.monomials_.push_back(std::move(mo));
        });
        sys.offsets_.push_back(static_cast<std::uint32_t>(sys.monomials_.size()));
    }
    return sys;
}

std::set<std::pair<SymbolId, SymbolId>> zero_set(const EquationSystem& sys) {
    std::vector<char> pos(sys.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t i = 0; i < sys.size(); ++i) {
            if (pos[i]) continue;
            for (std::uint32_t k = sys.begin(i); k < sys.end(i) && !pos[i]; ++k) {
                const Monomial& mo = sys.monomials()[k];
                bool all = true;
                for (std::size_t f = 0; f < mo.size() && all; ++f) all = mo.factor[f] == kOne || pos[mo.factor[f]];
                if (all) {
                    pos[i] = 1;
                    changed = true;
                }
            }
        }
    }
    std::set<std::pair<SymbolId, SymbolId>> zero;
    for (SymbolId a : sys.process_symbols())
        for (SymbolId q : sys.sync_states()) {
            auto v = sys.find(a, q);
            if (!v || !pos[*v]) zero.insert({a, q});
        }
    return zero;
}

} // namespace psjs
