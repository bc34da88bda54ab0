#pragma once

#include "psjs/model.hpp"
#include "psjs/tree.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace psjs {

// Hardware concurrency capped by PSJS_THREADS.
unsigned configured_threads();

// splitmix64 finaliser applied to (seed, run_index): one mt19937_64 stream per run.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t run_index);

class RunRng {
public:
    explicit RunRng(std::uint64_t stream_seed) : eng_(stream_seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 eng_;
};

// Inverse-CDF rule selection over double probabilities.
class RandomChooser : public RuleChooser {
public:
    RandomChooser(const Model& m, RunRng& rng);
    // Borrows a prebuilt per-symbol cumulative table.
    RandomChooser(const std::vector<std::vector<double>>& cum, RunRng& rng) : cumulative_(&cum), rng_(rng) {}
    std::uint32_t choose(const Model& m, SymbolId lhs) override;

private:
    const std::vector<std::vector<double>>* cumulative_;
    std::vector<std::vector<double>> owned_;
    RunRng& rng_;
};

struct Budgets {
    std::uint64_t max_steps = 100000;
    std::uint64_t max_space = 1000000;
};

enum class Outcome : std::uint8_t { Terminated, CutoffSteps, CutoffSpace };

struct RunStats {
    Outcome outcome = Outcome::Terminated;
    std::optional<ConfigTree> terminal;
    std::uint64_t time = 0;
    std::uint64_t work = 0;
    std::uint64_t space = 0;
    double log_prob = 0.0;
};

RunStats simulate_run(const Model& m, SymbolId start, const Budgets& budgets, RuleChooser& chooser);
RunStats simulate_run(const Model& m, SymbolId start, const Budgets& budgets, RunRng& rng);

struct Proportion {
    std::uint64_t count = 0;
    double freq = 0.0;
    double se = 0.0;
};

struct SampleSummary {
    std::uint64_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level, value)
};

struct ConditionalStats {
    SampleSummary time, work, space;
};

struct MonteCarloReport {
    std::uint64_t runs = 0;
    std::uint64_t seed = 0;
    Budgets budgets;
    std::vector<std::string> states;            // sync state names in model order
    std::vector<Proportion> terminated;         // per state
    std::vector<ConditionalStats> cond_stats;   // per state
    Proportion frozen;                          // terminal trees with more than one leaf
    Proportion cutoff_steps, cutoff_space;

    const Proportion& terminated_in(const std::string& q) const;
    const ConditionalStats& conditional(const std::string& q) const;
    nlohmann::ordered_json to_json() const;
};

// Thread count honours PSJS_THREADS; results do not depend on it.
MonteCarloReport estimate(const Model& m, SymbolId start, std::uint64_t n_runs, const Budgets& budgets,
                          std::uint64_t seed);

} // namespace psjs
