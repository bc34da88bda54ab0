#pragma once

#include "psjs/model.hpp"
#include "psjs/model_io.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace psjs::testing {

inline const char* kEx1 =
    "states: q r\n"
    "X -> <X X> : 0.5\n"
    "X -> q : 0.3\n"
    "X -> r : 0.2\n"
    "<q r> -> X : 1\n";

inline Model ex1() { return parse_model(kEx1); }

inline std::string doubler_text(const std::string& p, bool as_psjs) {
    Rational pr = parse_rational(p);
    std::string s = as_psjs ? "states: q\n" : "states: bot\nflags: branching\n";
    s += "X -> <X X> : " + to_fraction_string(pr) + "\n";
    s += std::string("X -> ") + (as_psjs ? "q" : "bot") + " : " + to_fraction_string(1 - pr) + "\n";
    if (as_psjs) s += "<q q> -> q : 1\n";
    return s;
}

inline Model doubler(const std::string& p) { return parse_model(doubler_text(p, false)); }
inline Model doubler_psjs(const std::string& p) { return parse_model(doubler_text(p, true)); }

// Random pSJS with up to `max_basic` basic symbols and `max_states` sync
// states. Rule probabilities are multiples of 1/8 so sums stay exact.
inline Model random_model(std::mt19937_64& rng, int max_basic = 4, int max_states = 3, bool force_normalised = false) {
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ModelBuilder b;
    int nq = uni(1, max_states);
    int nb = uni(1, max_basic);
    std::vector<SymbolId> Q, B;
    for (int i = 0; i < nq; ++i) Q.push_back(b.sync("q" + std::to_string(i)));
    for (int i = 0; i < nb; ++i) B.push_back(b.basic("A" + std::to_string(i)));
    std::vector<SymbolId> joins;
    for (SymbolId q1 : Q)
        for (SymbolId q2 : Q)
            if (force_normalised || uni(0, 2) == 0) joins.push_back(b.join(q1, q2));
    std::vector<SymbolId> lhs = B;
    lhs.insert(lhs.end(), joins.begin(), joins.end());
    auto any_symbol = [&](bool allow_join) {
        int total = static_cast<int>(B.size() + Q.size() + (allow_join ? joins.size() : 0));
        int k = uni(0, total - 1);
        if (k < static_cast<int>(B.size())) return B[k];
        k -= static_cast<int>(B.size());
        if (k < static_cast<int>(Q.size())) return Q[k];
        return joins[k - Q.size()];
    };
    for (SymbolId a : lhs) {
        int nr = uni(1, 3);
        std::vector<int> parts(nr, 1);
        for (int left = 8 - nr; left > 0; --left) parts[uni(0, nr - 1)]++;
        for (int i = 0; i < nr; ++i) {
            Rational p(parts[i], 8);
            p.canonicalize();
            int shape = uni(0, 2);
            if (shape == 0) {
                SymbolId s = any_symbol(false);
                b.add_rule(a, Rhs::single(s), p);
            } else {
                b.add_rule(a, Rhs::pair(any_symbol(true), any_symbol(true)), p);
            }
        }
    }
    b.set_start(B[0]);
    return b.build();
}

} // namespace psjs::testing
