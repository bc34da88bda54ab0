#pragma once

#include "psjs/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace psjs {

// Factor slot holding the constant v(q,q) = 1.
inline constexpr std::uint32_t kOne = 0xffffffffu;

struct Variable {
    SymbolId sigma;
    SymbolId q;
};

// coef · Π factor[i]. For a rule a → σ (arity 1) the single factor is v(σ,q).
// For a pSJS split a → <σ1 σ2> the factors are v(σ1,q1), v(σ2,q2) and the
// join factor v(<q1 q2>,q). Branching processes have no join factor.
struct Monomial {
    Rational coef;
    double c = 0.0;
    std::uint32_t rule = 0;
    std::uint8_t arity = 0;
    bool join = false;
    std::array<std::uint32_t, 4> factor{kOne, kOne, kOne, kOne};
    std::array<SymbolId, 4> factor_sigma{kNoSymbol, kNoSymbol, kNoSymbol, kNoSymbol};
    std::array<SymbolId, 4> factor_state{kNoSymbol, kNoSymbol, kNoSymbol, kNoSymbol};

    std::size_t size() const { return arity + (join ? 1u : 0u); }
};

enum class SystemMode { Psjs, Branching };

class EquationSystem {
public:
    SystemMode mode() const { return mode_; }
    std::size_t size() const { return vars_.size(); }
    const std::vector<Variable>& variables() const { return vars_; }
    const Variable& variable(std::uint32_t i) const { return vars_[i]; }
    const std::vector<Monomial>& monomials() const { return monomials_; }
    // Monomials of variable i occupy [begin(i), end(i)).
    std::uint32_t begin(std::uint32_t i) const { return offsets_[i]; }
    std::uint32_t end(std::uint32_t i) const { return offsets_[i + 1]; }
    std::optional<std::uint32_t> find(SymbolId sigma, SymbolId q) const;

    std::size_t symbol_count() const { return symbol_count_; }
    const std::vector<SymbolId>& sync_states() const { return sync_; }
    const std::vector<SymbolId>& process_symbols() const { return process_; }
    int sync_index(SymbolId q) const;
    // Whether the build dropped variables known to be zero.
    bool pruned() const { return pruned_; }

    // out[i] = f_i(x)
    void evaluate(const std::vector<double>& x, std::vector<double>& out) const;

private:
    friend EquationSystem build_equation_system(const Model&, bool);
    SystemMode mode_ = SystemMode::Psjs;
    std::vector<Variable> vars_;
    std::vector<Monomial> monomials_;
    std::vector<std::uint32_t> offsets_{0};
    std::vector<std::int32_t> index_;  // symbol × sync → variable or -1
    std::vector<int> sync_index_;
    std::vector<SymbolId> sync_;
    std::vector<SymbolId> process_;
    std::size_t symbol_count_ = 0;
    bool pruned_ = true;
};

// Boolean least fixed point on the model: (σ,q) is positive iff [σ↓q] > 0.
// Dense over symbol × sync index.
std::vector<char> positive_pairs(const Model& m);

// With prune_zero the system keeps only variables in positive_pairs and
// monomials whose factors are all positive; the least solution is unchanged.
EquationSystem build_equation_system(const Model& m, bool prune_zero = true);

// Pairs (a,q), a ∈ Γ, q ∈ Q, with [a↓q] = 0, from the boolean fixpoint of sys.
std::set<std::pair<SymbolId, SymbolId>> zero_set(const EquationSystem& sys);

} // namespace psjs
