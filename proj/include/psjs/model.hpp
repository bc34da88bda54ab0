#pragma once

#include "psjs/errors.hpp"
#include "psjs/rational.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace psjs {

using SymbolId = std::uint32_t;
inline constexpr SymbolId kNoSymbol = 0xffffffffu;

enum class SymbolKind : std::uint8_t { Basic, Sync, Join };

struct Symbol {
    SymbolKind kind = SymbolKind::Basic;
    std::string name;           // Basic and Sync only
    SymbolId left = kNoSymbol;  // Join only
    SymbolId right = kNoSymbol;
};

struct Rhs {
    std::array<SymbolId, 3> items{kNoSymbol, kNoSymbol, kNoSymbol};
    std::uint8_t arity = 0;

    static Rhs single(SymbolId a) { return Rhs{{a, kNoSymbol, kNoSymbol}, 1}; }
    static Rhs pair(SymbolId a, SymbolId b) { return Rhs{{a, b, kNoSymbol}, 2}; }
    static Rhs triple(SymbolId a, SymbolId b, SymbolId c) { return Rhs{{a, b, c}, 3}; }

    std::span<const SymbolId> children() const { return {items.data(), arity}; }
    bool operator==(const Rhs&) const = default;
};

struct Rule {
    SymbolId lhs = kNoSymbol;
    Rhs rhs;
    Rational prob;
    double p = 0.0;
};

struct ModelFlags {
    bool branching = false;
    bool degree3 = false;
    bool normalised = false;
    bool operator==(const ModelFlags&) const = default;
};

class ModelBuilder;

// Immutable once built; ModelBuilder is the only way to make one.
class Model {
public:
    Model() = default;

    std::size_t symbol_count() const { return symbols_.size(); }
    const Symbol& symbol(SymbolId id) const { return symbols_.at(id); }
    std::string display(SymbolId id) const;

    bool is_sync(SymbolId id) const { return symbols_[id].kind == SymbolKind::Sync; }
    bool is_join(SymbolId id) const { return symbols_[id].kind == SymbolKind::Join; }
    bool is_process(SymbolId id) const { return process_index_[id] >= 0; }
    bool in_sigma(SymbolId id) const { return is_sync(id) || is_process(id); }

    const std::vector<SymbolId>& sync_states() const { return sync_; }
    const std::vector<SymbolId>& process_symbols() const { return process_; }
    int sync_index(SymbolId id) const { return sync_index_[id]; }
    int process_index(SymbolId id) const { return process_index_[id]; }

    const std::vector<Rule>& rules() const { return rules_; }
    const std::vector<std::uint32_t>& rules_of(SymbolId id) const { return rules_of_[id]; }

    std::optional<SymbolId> find_sync(std::string_view name) const;
    std::optional<SymbolId> find_basic(std::string_view name) const;
    // Returns a join symbol only if it carries rules, i.e. lies in Γ.
    std::optional<SymbolId> find_join(SymbolId q1, SymbolId q2) const;
    // Join symbol by sync indices; kNoSymbol when the pair is frozen.
    SymbolId join_at(int i1, int i2) const { return join_table_[static_cast<std::size_t>(i1) * sync_.size() + i2]; }

    // Accepts a bare or quoted name, or "<q r>".
    SymbolId resolve(std::string_view text) const;

    const ModelFlags& flags() const { return flags_; }
    std::optional<SymbolId> start() const { return start_; }

private:
    friend class ModelBuilder;
    std::vector<Symbol> symbols_;
    std::vector<SymbolId> sync_;
    std::vector<SymbolId> process_;
    std::vector<int> sync_index_;
    std::vector<int> process_index_;
    std::vector<Rule> rules_;
    std::vector<std::vector<std::uint32_t>> rules_of_;
    std::vector<SymbolId> join_table_;
    std::unordered_map<std::string, SymbolId> basic_by_name_;
    std::unordered_map<std::string, SymbolId> sync_by_name_;
    ModelFlags flags_;
    std::optional<SymbolId> start_;
};

class ModelBuilder {
public:
    ModelBuilder() = default;
    // Starts from a copy of an existing model's symbols, rules, flags and start.
    explicit ModelBuilder(const Model& base);

    SymbolId sync(std::string_view name);
    SymbolId basic(std::string_view name);
    SymbolId join(SymbolId q1, SymbolId q2);

    // A Single rhs naming a join symbol is stored as the equivalent Pair.
    void add_rule(SymbolId lhs, Rhs rhs, const Rational& prob);
    void drop_rules(SymbolId lhs);
    bool has_rules(SymbolId lhs) const;

    bool name_taken(std::string_view name) const;
    // stem, stem', stem'', ... whichever is first unused.
    std::string fresh_name(std::string_view stem) const;

    ModelFlags& flags() { return flags_; }
    void set_start(std::optional<SymbolId> s) { start_ = s; }
    const Symbol& symbol(SymbolId id) const { return symbols_.at(id); }
    std::optional<SymbolId> find_sync(std::string_view name) const;

    Model build() const;

private:
    std::vector<Symbol> symbols_;
    std::vector<Rule> rules_;
    std::unordered_map<std::string, SymbolId> basic_by_name_;
    std::unordered_map<std::string, SymbolId> sync_by_name_;
    std::unordered_map<std::uint64_t, SymbolId> join_by_pair_;
    ModelFlags flags_;
    std::optional<SymbolId> start_;
};

std::vector<Diagnostic> validate(const Model& m);
// Throws ModelError when validate reports anything.
void require_valid(const Model& m);

} // namespace psjs
