#pragma once

#include "psjs/equations.hpp"
#include "psjs/model.hpp"
#include "psjs/solvers.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace psjs {

enum class DistKind { Time, Work };

const char* kind_name(DistKind k);

// mass[k] = P(Run↓q, Z = k) for k ≤ K. tail is what the truncation misses of
// cond_prob = [a↓q].
struct Pmf {
    DistKind kind = DistKind::Time;
    std::vector<double> mass;
    double cond_prob = 0.0;
    double tail = 0.0;

    std::size_t K() const { return mass.empty() ? 0 : mass.size() - 1; }
    double cdf(std::size_t k) const;
    // 1 − cdf(k)/cond_prob, clamped at 0
    double survival(std::size_t k) const;

    std::string to_csv() const;
    nlohmann::ordered_json to_json() const;
};

// Time and work distributions of a normalised model by dynamic programming.
// Tables are extended on demand and cover only the variables reachable from
// the requested targets.
class DistributionEngine {
public:
    DistributionEngine(const Model& m, DistKind kind);
    DistributionEngine(const Model& m, DistKind kind, const TermMatrix& terms);
    ~DistributionEngine();
    DistributionEngine(DistributionEngine&&) noexcept;
    DistributionEngine& operator=(DistributionEngine&&) noexcept;

    Pmf pmf(SymbolId a, SymbolId q, std::size_t K);
    const TermMatrix& terms() const;
    DistKind kind() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Throws AnalysisError unless m is normalised.
Pmf time_distribution(const Model& m, SymbolId a, SymbolId q, std::size_t K);
Pmf work_distribution(const Model& m, SymbolId a, SymbolId q, std::size_t K);

struct TailExpectation {
    double lower_bound = 0.0;
    bool converged = false;
    double tail_at_K = 1.0;
    std::size_t K = 0;
};

inline constexpr double kTailTolerance = 1e-9;

// Σ_{k=0}^{K} (1 − cdf(k)/cond_prob); converged iff the last summand < 1e-9.
TailExpectation tail_expectation(const Pmf& pmf, double cond_prob);

// E[Z | Run↓q] with K doubled from k0 up to k_max until the tail is negligible.
TailExpectation conditional_expectation(DistributionEngine& engine, SymbolId a, SymbolId q,
                                        std::size_t k0 = 64, std::size_t k_max = 1u << 14);

} // namespace psjs
