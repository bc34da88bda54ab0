#pragma once

#include "psjs/equations.hpp"
#include "psjs/model.hpp"

#include <json.hpp>

#include <functional>
#include <vector>

namespace psjs {

enum class SolveMethod { Kleene, Newton };

const char* method_name(SolveMethod m);

// [σ↓q] for every symbol and sync state of the solved system.
class TermMatrix {
public:
    TermMatrix() = default;
    TermMatrix(const EquationSystem& sys, const std::vector<double>& x);

    double value(SymbolId sigma, SymbolId q) const;
    // Σ_q [σ↓q]
    double total(SymbolId sigma) const;
    const std::vector<SymbolId>& sync_states() const { return sync_; }

    SolveMethod method = SolveMethod::Kleene;
    double tolerance = 0.0;       // last max-component change
    std::size_t iterations = 0;
    bool converged = false;
    bool monotone = true;         // every iterate dominated its successor

    nlohmann::ordered_json to_json(const Model& m) const;

private:
    std::vector<double> values_;  // symbol × sync
    std::vector<int> sync_index_;
    std::vector<SymbolId> sync_;
    std::size_t symbol_count_ = 0;
};

struct SolveOptions {
    SolveMethod method = SolveMethod::Newton;
    double tol = 1e-12;
    std::size_t max_iter = 0;  // 0: 10^6 for Kleene, 200 for Newton
};

using IterateObserver = std::function<void(std::size_t, const std::vector<double>&)>;

TermMatrix kleene_solve(const EquationSystem& sys, double tol = 1e-12, std::size_t max_iter = 1000000,
                        const IterateObserver& observe = {});
TermMatrix newton_solve(const EquationSystem& sys, double tol = 1e-12, std::size_t max_iter = 200);

TermMatrix solve_termination(const EquationSystem& sys, const SolveOptions& opt = {});
TermMatrix solve_termination(const Model& m, const SolveOptions& opt = {});

} // namespace psjs
