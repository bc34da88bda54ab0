#pragma once

#include "psjs/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace psjs::testing {

// [q a ↓ r] by plain fixed-point iteration on the pushdown system itself.
inline std::vector<double> ppds_termination(const Ppds& p, int iters = 200000, double tol = 1e-14) {
    const std::size_t nc = p.control_states.size(), ns = p.stack_alphabet.size();
    auto idx = [&](std::size_t q, std::size_t a, std::size_t r) { return (q * ns + a) * nc + r; };
    std::vector<double> x(nc * ns * nc, 0.0), y(x.size());
    for (int it = 0; it < iters; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const auto& rule : p.rules) {
            double pr = rule.prob.get_d();
            for (std::size_t r = 0; r < nc; ++r) {
                double v = 0.0;
                if (rule.push.empty()) {
                    v = rule.to == r ? 1.0 : 0.0;
                } else if (rule.push.size() == 1) {
                    v = x[idx(rule.to, rule.push[0], r)];
                } else {
                    for (std::size_t t = 0; t < nc; ++t)
                        v += x[idx(rule.to, rule.push[0], t)] * x[idx(t, rule.push[1], r)];
                }
                y[idx(rule.from, rule.top, r)] += pr * v;
            }
        }
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(y[i] - x[i]));
        x.swap(y);
        if (d < tol) break;
    }
    return x;
}

inline Ppds random_ppds(std::mt19937_64& rng, int max_control = 3, int max_stack = 3) {
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    Ppds p;
    int nc = uni(1, max_control), ns = uni(1, max_stack);
    for (int i = 0; i < nc; ++i) p.control_states.push_back("c" + std::to_string(i));
    for (int i = 0; i < ns; ++i) p.stack_alphabet.push_back("s" + std::to_string(i));
    for (int q = 0; q < nc; ++q)
        for (int a = 0; a < ns; ++a) {
            if (uni(0, 3) == 0 && !(q == 0 && a == 0)) continue;
            int nr = uni(1, 3);
            std::vector<int> parts(nr, 1);
            for (int left = 8 - nr; left > 0; --left) parts[uni(0, nr - 1)]++;
            for (int i = 0; i < nr; ++i) {
                PpdsRule r;
                r.from = q;
                r.top = a;
                r.to = uni(0, nc - 1);
                int len = uni(0, 2);
                for (int k = 0; k < len; ++k) r.push.push_back(uni(0, ns - 1));
                r.prob = Rational(parts[i], 8);
                r.prob.canonicalize();
                p.rules.push_back(r);
            }
        }
    return p;
}

inline Ppds random_walk(const Rational& p) {
    Ppds w;
    w.control_states = {"q"};
    w.stack_alphabet = {"a"};
    w.rules.push_back({0, 0, 0, {0, 0}, p});
    w.rules.push_back({0, 0, 0, {}, Rational(1) - p});
    return w;
}

} // namespace psjs::testing
