#include "psjs/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace psjs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::vector<std::vector<double>> cumulative_table(const Model& m) {
    std::vector<std::vector<double>> cum(m.symbol_count());
    for (SymbolId a : m.process_symbols()) {
        double acc = 0.0;
        for (auto r : m.rules_of(a)) {
            acc += m.rules()[r].p;
            cum[a].push_back(acc);
        }
        if (!cum[a].empty()) cum[a].back() = 1.0;
    }
    return cum;
}

std::uint32_t pick(const Model& m, SymbolId lhs, const std::vector<double>& cum, double u) {
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t k = it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    return m.rules_of(lhs)[k];
}

struct Record {
    Outcome outcome;
    std::int32_t state;  // sync index, or -1 for a frozen terminal tree
    std::uint64_t time, work, space;
};

class Simulator {
public:
    explicit Simulator(const Model& m) : m_(m), rhs_(m), cum_(cumulative_table(m)) {}

    template <class Chooser>
    RunStats run(SymbolId start, const Budgets& b, Chooser& chooser, bool keep_tree) {
        RunStats st;
        cur_ = ConfigTree::leaf(m_, start).tokens();
        st.space = leaves(cur_);
        double prob = 1.0;
        while (true) {
            if (st.space > b.max_space) {
                st.outcome = Outcome::CutoffSpace;
                break;
            }
            prob = 1.0;
            std::size_t n = rewrite_front(m_, rhs_, cur_, next_, chooser, &prob, nullptr);
            if (n == 0) {
                st.outcome = Outcome::Terminated;
                if (keep_tree) st.terminal = ConfigTree(cur_);
                break;
            }
            if (st.time >= b.max_steps) {
                st.outcome = Outcome::CutoffSteps;
                break;
            }
            st.log_prob += std::log(prob);
            ++st.time;
            st.work += n;
            std::swap(cur_, next_);
            st.space = std::max<std::uint64_t>(st.space, leaves(cur_));
        }
        return st;
    }

    Record record(SymbolId start, const Budgets& b, RunRng& rng) {
        RandomChooser chooser(cum_, rng);
        RunStats st = run(start, b, chooser, false);
        Record r{st.outcome, -1, st.time, st.work, st.space};
        if (st.outcome == Outcome::Terminated) r.state = classify();
        return r;
    }

    const std::vector<std::vector<double>>& cumulative() const { return cum_; }

private:
    static std::uint64_t leaves(const std::vector<std::int32_t>& t) {
        std::uint64_t n = 0;
        for (auto x : t) n += x >= 0;
        return n;
    }

    std::int32_t classify() const {
        if (cur_.size() == 1) return m_.sync_index(static_cast<SymbolId>(cur_[0]));
        if (m_.flags().branching) return 0;
        return -1;
    }

    const Model& m_;
    RhsTokens rhs_;
    std::vector<std::vector<double>> cum_;
    std::vector<std::int32_t> cur_, next_;
};

Proportion proportion(std::uint64_t count, std::uint64_t n) {
    Proportion p;
    p.count = count;
    p.freq = n ? static_cast<double>(count) / static_cast<double>(n) : 0.0;
    p.se = n ? std::sqrt(p.freq * (1.0 - p.freq) / static_cast<double>(n)) : 0.0;
    return p;
}

SampleSummary summarise(std::vector<double> xs) {
    SampleSummary s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    if (xs.size() > 1) s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    std::sort(xs.begin(), xs.end());
    for (double level : {0.5, 0.9, 0.99}) {
        auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(xs.size()))) - 1;
        s.quantiles.emplace_back(level, xs[std::min(idx, xs.size() - 1)]);
    }
    return s;
}

nlohmann::ordered_json proportion_json(const Proportion& p) {
    return {{"count", p.count}, {"freq", p.freq}, {"se", p.se}};
}

nlohmann::ordered_json summary_json(const SampleSummary& s) {
    nlohmann::ordered_json q = nlohmann::ordered_json::object();
    for (auto& [level, v] : s.quantiles) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%g", level);
        q[buf] = v;
    }
    return {{"n", s.n}, {"mean", s.mean}, {"se", s.se}, {"quantiles", q}};
}

unsigned thread_count(std::uint64_t runs) {
    return static_cast<unsigned>(std::min<std::uint64_t>(configured_threads(), std::max<std::uint64_t>(1, runs / 1024)));
}

} // namespace

unsigned configured_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PSJS_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t run_index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(run_index + 0x632be59bd9b4e019ull));
}

RandomChooser::RandomChooser(const Model& m, RunRng& rng) : owned_(cumulative_table(m)), rng_(rng) {
    cumulative_ = &owned_;
}

std::uint32_t RandomChooser::choose(const Model& m, SymbolId lhs) {
    return pick(m, lhs, (*cumulative_)[lhs], rng_.uniform());
}

RunStats simulate_run(const Model& m, SymbolId start, const Budgets& budgets, RuleChooser& chooser) {
    Simulator sim(m);
    return sim.run(start, budgets, chooser, true);
}

RunStats simulate_run(const Model& m, SymbolId start, const Budgets& budgets, RunRng& rng) {
    RandomChooser chooser(m, rng);
    return simulate_run(m, start, budgets, chooser);
}

const Proportion& MonteCarloReport::terminated_in(const std::string& q) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == q) return terminated[i];
    throw std::out_of_range("no sync state '" + q + "' in report");
}

const ConditionalStats& MonteCarloReport::conditional(const std::string& q) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == q) return cond_stats[i];
    throw std::out_of_range("no sync state '" + q + "' in report");
}

nlohmann::ordered_json MonteCarloReport::to_json() const {
    nlohmann::ordered_json j;
    j["runs"] = runs;
    j["seed"] = seed;
    j["budgets"] = {{"max_steps", budgets.max_steps}, {"max_space", budgets.max_space}};
    nlohmann::ordered_json term = nlohmann::ordered_json::object();
    nlohmann::ordered_json cond = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < states.size(); ++i) {
        term[states[i]] = proportion_json(terminated[i]);
        cond[states[i]] = {{"time", summary_json(cond_stats[i].time)},
                           {"work", summary_json(cond_stats[i].work)},
                           {"space", summary_json(cond_stats[i].space)}};
    }
    j["terminated"] = term;
    j["frozen"] = proportion_json(frozen);
    j["cutoff"] = {{"steps", proportion_json(cutoff_steps)}, {"space", proportion_json(cutoff_space)}};
    j["cond_stats"] = cond;
    return j;
}

MonteCarloReport estimate(const Model& m, SymbolId start, std::uint64_t n_runs, const Budgets& budgets,
                          std::uint64_t seed) {
    if (n_runs == 0) throw std::invalid_argument("n_runs must be at least 1");
    std::vector<Record> records(n_runs);
    unsigned threads = thread_count(n_runs);
    auto work = [&](unsigned t) {
        Simulator sim(m);
        std::uint64_t lo = n_runs * t / threads, hi = n_runs * (t + 1) / threads;
        for (std::uint64_t i = lo; i < hi; ++i) {
            RunRng rng(derive_stream_seed(seed, i));
            records[i] = sim.record(start, budgets, rng);
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }

    MonteCarloReport rep;
    rep.runs = n_runs;
    rep.seed = seed;
    rep.budgets = budgets;
    const auto& Q = m.sync_states();
    for (SymbolId q : Q) rep.states.push_back(m.symbol(q).name);
    std::vector<std::uint64_t> counts(Q.size(), 0);
    std::vector<std::vector<double>> times(Q.size()), works(Q.size()), spaces(Q.size());
    std::uint64_t frozen = 0, cut_steps = 0, cut_space = 0;
    for (const Record& r : records) {
        if (r.outcome == Outcome::CutoffSteps) { ++cut_steps; continue; }
        if (r.outcome == Outcome::CutoffSpace) { ++cut_space; continue; }
        if (r.state < 0) { ++frozen; continue; }
        ++counts[r.state];
        times[r.state].push_back(static_cast<double>(r.time));
        works[r.state].push_back(static_cast<double>(r.work));
        spaces[r.state].push_back(static_cast<double>(r.space));
    }
    for (std::size_t i = 0; i < Q.size(); ++i) {
        rep.terminated.push_back(proportion(counts[i], n_runs));
        rep.cond_stats.push_back({summarise(std::move(times[i])), summarise(std::move(works[i])), summarise(std::move(spaces[i]))});
    }
    rep.frozen = proportion(frozen, n_runs);
    rep.cutoff_steps = proportion(cut_steps, n_runs);
    rep.cutoff_space = proportion(cut_space, n_runs);
    return rep;
}

} // namespace psjs
