#pragma once

#include "psjs/model.hpp"
#include "psjs/solvers.hpp"
#include "psjs/transforms.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace psjs {

struct CharEntry {
    std::uint32_t col = 0;
    Rational exact;
    double value = 0.0;
};

// A[X][Y] = Σ over X-rules of p · (occurrences of Y in the rhs), stored by rows.
struct CharMatrix {
    std::vector<SymbolId> index;  // process symbols of the branching process
    std::vector<std::vector<CharEntry>> rows;

    std::size_t size() const { return index.size(); }
    int position(SymbolId s) const;
    double at(std::size_t i, std::size_t j) const;
    std::vector<std::vector<double>> dense() const;

    static CharMatrix from_exact(const std::vector<std::vector<Rational>>& a);
    static CharMatrix from_dense(const std::vector<std::vector<double>>& a);
};

CharMatrix characteristic_matrix(const Model& bp);

// Drops every process symbol not reachable from x0 through rule right-hand sides.
Model reduce_bp(const Model& bp, SymbolId x0);

enum class LpMethod { Exact, Floating, PowerIteration };
const char* lp_method_name(LpMethod m);

struct SubcriticalityOptions {
    // Decides infeasibility of A x ≥ (1 − margin) x instead of A x ≥ x.
    double margin = 0.0;
    std::size_t exact_limit = 50;
    // Exact pivoting also requires every numerator and denominator to fit in this many bits.
    std::size_t exact_bits = 32;
    std::size_t lp_limit = 600;
};

struct SubcriticalityReport {
    bool subcritical = true;
    double rho_estimate = 0.0;
    bool near_critical = false;
    bool estimate_agrees = true;  // (rho_estimate < 1) == subcritical
    LpMethod method = LpMethod::Exact;
    std::size_t components = 0;
    std::size_t largest_component = 0;
    std::vector<std::string> warnings;

    nlohmann::ordered_json to_json() const;
};

SubcriticalityReport is_subcritical(const CharMatrix& A, const SubcriticalityOptions& opt = {});

// Spectral radius by power iteration on A + I with Collatz–Wielandt bounds.
double spectral_radius(const CharMatrix& A, double tol = 1e-13, std::size_t max_iter = 200000);

struct Expectation {
    bool infinite = false;
    double value = 0.0;
    double residual = 0.0;
    SubcriticalityReport subcriticality;

    nlohmann::ordered_json to_json() const;
};

// The x0-component of (I − A)⁻¹·1, or infinite when ρ(A) ≥ 1.
Expectation expected_work_bp(const Model& bp, SymbolId x0, const SubcriticalityOptions& opt = {});

// E[W_a | Run↓q]: the expected work of <a q> in the conditioned branching process.
Expectation conditional_expected_work(const Model& m, const TermMatrix& terms, SymbolId a, SymbolId q);

struct SpaceReport {
    double p_finite = 0.0;
    double p_terminate = 0.0;
    double p_bounded_nonterm = 0.0;
    bool converged = false;
    double tolerance = 0.0;
    nlohmann::ordered_json to_json() const;
};

SpaceReport space_probability(const Model& m, SymbolId a, const SolveOptions& opt = {});

inline constexpr double kTerminationTolerance = 1e-9;
inline constexpr double kConditionedMargin = 1e-9;
inline constexpr double kNearCritical = 1e-6;

struct WorkReport {
    bool infinite = false;
    double value = 0.0;
    double termination = 0.0;  // Σ_q [a↓q]
    double residual = 0.0;
    double renormalisation_defect = 0.0;
    std::optional<SubcriticalityReport> subcriticality;
    std::string reason;

    nlohmann::ordered_json to_json() const;
};

// Normalises when needed; a must be a symbol of the original model.
WorkReport expected_work_psjs(const Model& m, SymbolId a, const SolveOptions& opt = {});

enum class Verdict { Finite, Infinite };
const char* verdict_name(Verdict v);

struct FinitenessReport {
    Verdict work = Verdict::Finite;
    Verdict time = Verdict::Finite;
    WorkReport detail;
    nlohmann::ordered_json to_json() const;
};

FinitenessReport finiteness(const Model& m, SymbolId a, const SolveOptions& opt = {});

} // namespace psjs
