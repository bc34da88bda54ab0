#pragma once

#include "psjs/analysis.hpp"
#include "psjs/distribution.hpp"
#include "psjs/model.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace psjs {

struct DivConParams {
    Rational p;
    int n_max = 10;
};

// Q = {q}, Γ = {<q q>, 0..n_max}; n splits into <n1 n2> with multinomial weights.
Model gen_divcon(const DivConParams& params);

enum class GameVariant { Par, Seq, Ybw };
const char* variant_name(GameVariant v);
GameVariant parse_variant(const std::string& s);

struct GameTreeParams {
    GameVariant variant = GameVariant::Ybw;
    Rational p;
};

// Random game trees over values {0..4}; the start symbol is the root max-node
// with window (0,4) and parameter 2 (the window is dropped for par).
Model gen_gametree(const GameTreeParams& params);

inline constexpr const char* kGameTarget = "2";

struct CaseStudyOptions {
    SolveOptions solve;
    std::size_t k0 = 64;
    std::size_t k_max = 1u << 13;
};

// E[W | Run↓q] via the conditioned branching process, and E[T | Run↓q] as a
// truncated tail sum.
struct ConditionalMeasures {
    double cond_prob = 0.0;
    double termination = 0.0;
    Expectation work;
    TailExpectation time;
    Verdict finite = Verdict::Finite;
};

ConditionalMeasures conditional_measures(const Model& m, SymbolId a, SymbolId q, const CaseStudyOptions& opt = {});

struct GameRow {
    GameVariant variant;
    Rational p;
    ConditionalMeasures m;
    double pct_time_vs_seq = 0.0;
    double pct_work_vs_seq = 0.0;
    bool has_seq = false;
};

std::vector<GameRow> run_gametree_study(const std::vector<GameVariant>& variants, const std::vector<Rational>& sweep,
                                        const CaseStudyOptions& opt = {});

struct DivConRow {
    Rational p;
    int n = 0;
    ConditionalMeasures m;
    double ratio = 0.0;  // E W / E T
};

std::vector<DivConRow> run_divcon_study(const std::vector<Rational>& sweep, int n_max, const CaseStudyOptions& opt = {});

std::string gametree_csv(const std::vector<GameRow>& rows);
std::string divcon_csv(const std::vector<DivConRow>& rows);
nlohmann::ordered_json gametree_json(const std::vector<GameRow>& rows);
nlohmann::ordered_json divcon_json(const std::vector<DivConRow>& rows);

// "a:b:step" or a comma list; values are exact decimals.
std::vector<Rational> parse_sweep(const std::string& text);

} // namespace psjs
