#pragma once

#include <cstddef>
#include <vector>
#include <algorithm>

namespace psjs::detail {

enum class LpOutcome { Feasible, Infeasible, Failed };

// Phase-1 simplex for {x ≥ 0 : B x ≥ 0, Σ x = 1}.
// Pivots by the most negative reduced cost, breaking ratio ties by the larger pivot, and switches to
// Bland's rule after a run of degenerate pivots.
// Ops supplies zero tests so the same code runs on exact and floating scalars.
template <class T, class Ops>
LpOutcome cone_feasible(const std::vector<std::vector<T>>& B, const Ops& ops, std::size_t max_pivots) {
    const std::size_t n = B.size();
    const std::size_t cols = 2 * n;  // x then surplus s; column cols is the rhs
    const std::size_t rows = n + 1;
    std::vector<std::vector<T>> t(rows, std::vector<T>(cols + 1, T(0)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) t[i][j] = B[i][j];
        t[i][n + i] = T(-1);
    }
    for (std::size_t j = 0; j < n; ++j) t[n][j] = T(1);
    t[n][cols] = T(1);
    // Rows start basic in their artificial variable, encoded as cols + row.
    std::vector<std::size_t> basis(rows);
    for (std::size_t i = 0; i < rows; ++i) basis[i] = cols + i;
    std::vector<T> cost(cols + 1, T(0));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j <= cols; ++j) cost[j] -= t[i][j];

    std::size_t degenerate = 0;
    std::vector<char> blocked(cols, 0);
    for (std::size_t pivots = 0; pivots < max_pivots; ++pivots) {
        const bool bland = degenerate >= 2 * rows;
        std::size_t enter = cols, leave = rows;
        T best(0);
        bool any_negative = false;
        for (;;) {
            enter = cols;
            for (std::size_t j = 0; j < cols; ++j)
                if (ops.negative(cost[j])) {
                    any_negative = true;
                    if (blocked[j]) continue;
                    if (bland) {
                        enter = j;
                        break;
                    }
                    if (enter == cols || ops.less(cost[j], cost[enter])) enter = j;
                }
            if (enter == cols) break;
            for (std::size_t i = 0; i < rows; ++i) {
                if (!ops.positive(t[i][enter])) continue;
                T ratio = t[i][cols] / t[i][enter];
                bool take = leave == rows || ops.less(ratio, best);
                if (!take && !ops.less(best, ratio))
                    take = bland ? basis[i] < basis[leave] : ops.less(t[leave][enter], t[i][enter]);
                if (take) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave != rows) break;
            // Only rounding can leave a negative reduced cost over a column without a positive entry.
            blocked[enter] = 1;
        }
        if (enter == cols) {
            if (any_negative) return LpOutcome::Failed;
            return ops.zero(cost[cols]) ? LpOutcome::Feasible : LpOutcome::Infeasible;
        }
        std::fill(blocked.begin(), blocked.end(), 0);
        if (ops.zero(best)) ++degenerate;
        else degenerate = 0;
        T piv = t[leave][enter];
        for (std::size_t j = 0; j <= cols; ++j) t[leave][j] /= piv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == leave || ops.zero(t[i][enter])) continue;
            T f = t[i][enter];
            for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[leave][j];
            ops.clean(t[i]);
        }
        if (!ops.zero(cost[enter])) {
            T f = cost[enter];
            for (std::size_t j = 0; j <= cols; ++j) cost[j] -= f * t[leave][j];
            ops.clean(cost);
        }
        basis[leave] = enter;
    }
    return LpOutcome::Failed;
}

} // namespace psjs::detail
