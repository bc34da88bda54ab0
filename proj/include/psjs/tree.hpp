#pragma once

#include "psjs/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace psjs {

// Preorder token encoding: a token >= 0 is a leaf symbol id, kNode2 / kNode3
// open a binary / ternary node whose children follow.
class ConfigTree {
public:
    static constexpr std::int32_t kNode2 = -1;
    static constexpr std::int32_t kNode3 = -2;

    ConfigTree() = default;
    explicit ConfigTree(std::vector<std::int32_t> tokens) : tokens_(std::move(tokens)) {}

    // A join symbol expands to the node of its two sync states.
    static ConfigTree leaf(const Model& m, SymbolId s);
    static ConfigTree node(const std::vector<ConfigTree>& children);
    static ConfigTree parse(const Model& m, std::string_view text);

    const std::vector<std::int32_t>& tokens() const { return tokens_; }
    std::size_t leaf_count() const;
    bool is_leaf() const { return tokens_.size() == 1; }
    SymbolId leaf_symbol() const { return static_cast<SymbolId>(tokens_.at(0)); }
    std::string render(const Model& m) const;

    bool operator==(const ConfigTree&) const = default;

private:
    std::vector<std::int32_t> tokens_;
};

struct FrontItem {
    std::size_t position;  // token index of the leaf, or of the node for a join
    SymbolId symbol;
    bool operator==(const FrontItem&) const = default;
};

std::vector<FrontItem> front(const Model& m, const ConfigTree& t);
bool is_terminal(const Model& m, const ConfigTree& t);

class RuleChooser {
public:
    virtual ~RuleChooser() = default;
    // Returns an index into model.rules() whose lhs is the given symbol.
    virtual std::uint32_t choose(const Model& m, SymbolId lhs) = 0;
};

// Plays back a fixed list of global rule indices in front order.
class ScriptedChooser : public RuleChooser {
public:
    explicit ScriptedChooser(std::vector<std::uint32_t> script) : script_(std::move(script)) {}
    std::uint32_t choose(const Model& m, SymbolId lhs) override;
    bool exhausted() const { return next_ == script_.size(); }

private:
    std::vector<std::uint32_t> script_;
    std::size_t next_ = 0;
};

struct Transition {
    ConfigTree next;
    double probability = 1.0;
    std::vector<std::uint32_t> applied;  // rule indices, front order
};

Transition step(const Model& m, const ConfigTree& t, RuleChooser& chooser);

Rational path_probability(const Model& m, const std::vector<std::uint32_t>& rules);

// Rewrites every front element of `in` into `out`; shared by step and the simulator.
struct RhsTokens {
    explicit RhsTokens(const Model& m);
    std::vector<std::vector<std::int32_t>> per_rule;
};
std::size_t rewrite_front(const Model& m, const RhsTokens& rhs, const std::vector<std::int32_t>& in,
                          std::vector<std::int32_t>& out, RuleChooser& chooser, double* prob,
                          std::vector<std::uint32_t>* applied);

} // namespace psjs
