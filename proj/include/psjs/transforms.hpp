#pragma once

#include "psjs/model.hpp"
#include "psjs/solvers.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace psjs {

// ---- normalisation ----

struct Normalised {
    Model model;
    std::optional<SymbolId> fresh;  // q̌, absent when no join was missing
};

// Adds q̌ and <r s> -> q̌ for every missing join over Q ∪ {q̌}.
Normalised normalise(const Model& m);

// Every split whose children can terminate in (q1, q2) has a rule for <q1 q2>,
// so no run ends in a tree with more than one leaf.
bool is_normalised(const Model& m);

// m itself when already normalised, otherwise normalise(m).model.
Model ensure_normalised(const Model& m, bool* changed = nullptr);

// ---- pPDS ----

struct PpdsRule {
    std::uint32_t from = 0;  // control state index
    std::uint32_t top = 0;   // stack symbol index
    std::uint32_t to = 0;
    std::vector<std::uint32_t> push;  // at most two stack symbols, leftmost on top
    Rational prob;
};

struct Ppds {
    std::vector<std::string> control_states;
    std::vector<std::string> stack_alphabet;
    std::vector<PpdsRule> rules;

    std::optional<std::uint32_t> control(const std::string& name) const;
    std::optional<std::uint32_t> stack(const std::string& name) const;
};

// (control, top) pairs with rules must have probabilities summing to 1.
std::vector<Diagnostic> validate(const Ppds& p);
Ppds parse_ppds(std::string_view text);
std::string render_ppds(const Ppds& p);

struct SerializationMap {
    std::uint32_t box = 0;                               // □
    std::map<SymbolId, std::uint32_t> ret;               // q -> q̄ (control)
    std::map<SymbolId, std::uint32_t> pending;           // q -> q̃ (stack)
    std::map<SymbolId, std::uint32_t> stack_of;          // σ -> stack symbol

    nlohmann::ordered_json to_json(const Model& m, const Ppds& p) const;
};

struct Serialised {
    Ppds ppds;
    SerializationMap map;
};

Serialised serialise(const Model& m);

// Q = Q_P ∪ Γ_P, Γ = {<q a>} for pairs with rules. A push target <r b>
// without rules becomes a stuck process <r b> -> <r b>.
Model from_ppds(const Ppds& p);

// ---- space ----

// Boolean reachability a ⇒ b over Σ, dense symbol × symbol.
std::vector<std::vector<char>> reach_relation(const Model& m, const std::vector<char>& positive);

// Γ-symbols whose runs reach trees of unbounded height with positive probability.
std::set<SymbolId> unbounded_set(const Model& m);

// One application of the U_{k+1} recurrence.
std::set<SymbolId> unbounded_step(const Model& m, const std::vector<std::vector<char>>& reach,
                                  const std::set<SymbolId>& uk);

struct FiniteSpace {
    Model model;
    SymbolId qbar = kNoSymbol;
    std::optional<SymbolId> qcheck;  // added by normalisation
    std::set<SymbolId> unbounded;
    std::set<SymbolId> bounded;      // B
};

FiniteSpace finite_space_transform(const Model& m);

// ---- conditioned branching process ----

struct ConditionedBp {
    Model bp;
    SymbolId bottom = kNoSymbol;
    std::map<std::pair<SymbolId, SymbolId>, SymbolId> symbol_of;  // (a, q) -> <a q>
    std::map<SymbolId, double> defect;  // Σ p·y/[a↓q] − 1 before exact renormalisation
    double max_defect = 0.0;

    // Throws AnalysisError when [a↓q] = 0.
    SymbolId at(SymbolId a, SymbolId q) const;
};

ConditionedBp conditioned_bp(const Model& m, const TermMatrix& terms);

} // namespace psjs
