#pragma once

#include "psjs/tree.hpp"

#include <map>
#include <vector>

namespace psjs::testing {

// Exact joint law of (terminal state, T or W) over all runs whose measured
// quantity stays ≤ bound, by exhaustive expansion of M_S.
struct Enumerated {
    // mass[q][k] = P(Run↓q, Z = k)
    std::map<SymbolId, std::vector<double>> mass;
};

inline Enumerated enumerate_runs(const Model& m, SymbolId start, std::size_t bound, bool by_work) {
    Enumerated out;
    for (SymbolId q : m.sync_states()) out.mass[q].assign(bound + 1, 0.0);
    std::map<std::pair<std::vector<std::int32_t>, std::pair<std::size_t, std::size_t>>, double> layer;
    layer[{ConfigTree::leaf(m, start).tokens(), {0, 0}}] = 1.0;
    while (!layer.empty()) {
        std::map<std::pair<std::vector<std::int32_t>, std::pair<std::size_t, std::size_t>>, double> next;
        for (const auto& [key, pr] : layer) {
            ConfigTree t(key.first);
            auto [time, work] = key.second;
            auto fr = front(m, t);
            if (fr.empty()) {
                if (t.is_leaf() && m.is_sync(t.leaf_symbol())) out.mass[t.leaf_symbol()][by_work ? work : time] += pr;
                continue;
            }
            std::size_t nt = time + 1, nw = work + fr.size();
            if ((by_work ? nw : nt) > bound) continue;
            std::vector<std::size_t> choice(fr.size(), 0);
            for (;;) {
                std::vector<std::uint32_t> script;
                for (std::size_t i = 0; i < fr.size(); ++i) script.push_back(m.rules_of(fr[i].symbol)[choice[i]]);
                ScriptedChooser ch(script);
                Transition tr = step(m, t, ch);
                next[{tr.next.tokens(), {nt, nw}}] += pr * tr.probability;
                std::size_t i = 0;
                for (; i < fr.size(); ++i) {
                    if (++choice[i] < m.rules_of(fr[i].symbol).size()) break;
                    choice[i] = 0;
                }
                if (i == fr.size()) break;
            }
        }
        layer.swap(next);
    }
    return out;
}

} // namespace psjs::testing
