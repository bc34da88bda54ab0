#include "psjs/analysis.hpp"
#include "psjs/casestudies.hpp"
#include "psjs/distribution.hpp"
#include "psjs/model_io.hpp"
#include "psjs/simulate.hpp"
#include "psjs/solvers.hpp"
#include "psjs/transforms.hpp"
#include "psjs/tree.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace psjs;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "psjs-cli/1";

enum class Format { Table, Json, Csv };

enum Exit { kOk = 0, kUsage = 1, kInvalidModel = 2, kUnconverged = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string format = "table";
    bool strict = false;
    std::string model_path;
    std::string from;
    std::string method = "newton";
    double tol = 1e-12;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

Format parse_format(const std::string& s) {
    if (s == "table") return Format::Table;
    if (s == "json") return Format::Json;
    if (s == "csv") return Format::Csv;
    throw UsageError("unknown format '" + s + "' (expected table, json or csv)");
}

SolveOptions solve_options(const Common& c) {
    SolveOptions o;
    if (c.method == "kleene") o.method = SolveMethod::Kleene;
    else if (c.method == "newton") o.method = SolveMethod::Newton;
    else throw UsageError("unknown method '" + c.method + "' (expected kleene or newton)");
    if (!(c.tol > 0)) throw UsageError("--tol must be positive");
    o.tol = c.tol;
    return o;
}

Model load(const Common& c) {
    std::ifstream in(c.model_path);
    if (!in) throw UsageError("cannot open model file '" + c.model_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

SymbolId start_of(const Model& m, const Common& c) {
    if (!c.from.empty()) return m.resolve(c.from);
    if (m.start()) return *m.start();
    throw UsageError("no --from symbol given and the model declares no start");
}

// Aligned columns; the first row is the header.
void print_table(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return;
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            line += r[i];
            if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
        }
        os << line << '\n';
    }
}

void print_csv(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
}

void print_rows(Format f, const std::vector<std::vector<std::string>>& rows) {
    if (f == Format::Csv) print_csv(std::cout, rows);
    else print_table(std::cout, rows);
}

void print_json(const std::string& command, json result) {
    json j;
    j["schema"] = kSchema;
    j["command"] = command;
    j["result"] = std::move(result);
    std::cout << j.dump(2) << '\n';
}

std::vector<std::vector<std::string>> key_values(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::vector<std::vector<std::string>> rows{{"key", "value"}};
    for (const auto& [k, v] : kv) rows.push_back({k, v});
    return rows;
}

json tail_json(const TailExpectation& t) {
    return {{"lower_bound", t.lower_bound}, {"converged", t.converged}, {"tail_at_K", t.tail_at_K}, {"K", t.K}};
}

int finish(const Common& c, bool converged) { return c.strict && !converged ? kUnconverged : kOk; }

// ---- subcommands -----------------------------------------------------------

int cmd_validate(const Common& c) {
    const Format f = parse_format(c.format);
    std::ifstream in(c.model_path);
    if (!in) throw UsageError("cannot open model file '" + c.model_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        Model m = parse_model(ss.str());
        const bool norm = is_normalised(m);
        if (f == Format::Json) {
            print_json("validate", {{"valid", true},
                                    {"symbols", m.symbol_count()},
                                    {"rules", m.rules().size()},
                                    {"states", m.sync_states().size()},
                                    {"branching", m.flags().branching},
                                    {"normalised", norm}});
        } else {
            print_rows(f, key_values({{"valid", "yes"},
                                      {"symbols", std::to_string(m.symbol_count())},
                                      {"rules", std::to_string(m.rules().size())},
                                      {"states", std::to_string(m.sync_states().size())},
                                      {"branching", yes_no(m.flags().branching)},
                                      {"normalised", yes_no(norm)}}));
        }
        return kOk;
    } catch (const ModelError& e) {
        if (f == Format::Json) {
            json d = json::array();
            for (const auto& x : e.diagnostics()) d.push_back({{"invariant", x.invariant}, {"message", x.message}});
            print_json("validate", {{"valid", false}, {"diagnostics", d}});
        } else {
            std::vector<std::vector<std::string>> rows{{"invariant", "message"}};
            for (const auto& x : e.diagnostics()) rows.push_back({x.invariant, x.message});
            print_rows(f, rows);
        }
        return kInvalidModel;
    }
}

int cmd_term(const Common& c) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    TermMatrix t = solve_termination(m, solve_options(c));
    std::vector<SymbolId> rows_of;
    if (!c.from.empty()) rows_of.push_back(m.resolve(c.from));
    else rows_of = m.process_symbols();
    if (f == Format::Json) {
        json j = t.to_json(m);
        if (!c.from.empty()) {
            json only = json::object();
            only[m.display(rows_of[0])] = j["values"][m.display(rows_of[0])];
            j["values"] = only;
        }
        print_json("term", j);
    } else if (f == Format::Csv) {
        std::vector<std::vector<std::string>> rows{{"symbol", "state", "value"}};
        for (SymbolId a : rows_of)
            for (SymbolId q : m.sync_states()) rows.push_back({m.display(a), m.display(q), num(t.value(a, q))});
        print_csv(std::cout, rows);
    } else {
        std::vector<std::vector<std::string>> rows{{"symbol"}};
        for (SymbolId q : m.sync_states()) rows[0].push_back("[" + m.display(q) + "]");
        rows[0].push_back("total");
        for (SymbolId a : rows_of) {
            std::vector<std::string> r{m.display(a)};
            for (SymbolId q : m.sync_states()) r.push_back(num(t.value(a, q)));
            r.push_back(num(t.total(a)));
            rows.push_back(std::move(r));
        }
        print_table(std::cout, rows);
        std::cout << "method " << method_name(t.method) << ", converged " << yes_no(t.converged) << ", iterations "
                  << t.iterations << ", last change " << num(t.tolerance) << '\n';
    }
    return finish(c, t.converged);
}

int cmd_space(const Common& c) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    SpaceReport r = space_probability(m, start_of(m, c), solve_options(c));
    if (f == Format::Json) {
        print_json("space", r.to_json());
    } else {
        print_rows(f, key_values({{"p_finite", num(r.p_finite)},
                                  {"p_terminate", num(r.p_terminate)},
                                  {"p_bounded_nonterm", num(r.p_bounded_nonterm)},
                                  {"converged", yes_no(r.converged)},
                                  {"tolerance", num(r.tolerance)}}));
    }
    return finish(c, r.converged);
}

DistKind parse_kind(const std::string& s) {
    if (s == "time") return DistKind::Time;
    if (s == "work") return DistKind::Work;
    throw UsageError("unknown kind '" + s + "' (expected time or work)");
}

int cmd_dist(const Common& c, const std::string& kind, const std::string& to, std::size_t max_k) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    SymbolId a = start_of(m, c);
    Model norm = ensure_normalised(m);
    SymbolId an = norm.resolve(m.display(a));
    auto q = norm.find_sync(to);
    if (!q) throw UsageError("unknown sync state '" + to + "'");
    DistributionEngine engine(norm, parse_kind(kind), solve_termination(norm, solve_options(c)));
    Pmf pmf = engine.pmf(an, *q, max_k);
    if (f == Format::Json) {
        print_json("dist", pmf.to_json());
    } else if (f == Format::Csv) {
        std::cout << pmf.to_csv();
    } else {
        std::vector<std::vector<std::string>> rows{{"k", "mass", "cdf", "tail"}};
        for (std::size_t k = 0; k <= pmf.K(); ++k)
            rows.push_back({std::to_string(k), num(pmf.mass[k]), num(pmf.cdf(k)), num(pmf.cond_prob - pmf.cdf(k))});
        print_table(std::cout, rows);
        std::cout << kind_name(pmf.kind) << " distribution, [" << m.display(a) << "↓" << to
                  << "] = " << num(pmf.cond_prob) << ", mass beyond K = " << num(pmf.tail) << '\n';
    }
    return kOk;
}

int cmd_expect(const Common& c, const std::string& kind, const std::string& to, std::size_t max_k) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    SymbolId a = start_of(m, c);
    const DistKind k = parse_kind(kind);
    const SolveOptions so = solve_options(c);
    if (k == DistKind::Work && to.empty()) {
        WorkReport r = expected_work_psjs(m, a, so);
        if (f == Format::Json) print_json("expect", r.to_json());
        else
            print_rows(f, key_values({{"E[W]", r.infinite ? "inf" : num(r.value)},
                                      {"termination", num(r.termination)},
                                      {"residual", num(r.residual)},
                                      {"renormalisation_defect", num(r.renormalisation_defect)},
                                      {"reason", r.reason}}));
        return kOk;
    }
    Model norm = ensure_normalised(m);
    SymbolId an = norm.resolve(m.display(a));
    TermMatrix terms = solve_termination(norm, so);
    std::vector<SymbolId> targets;
    if (!to.empty()) {
        auto q = norm.find_sync(to);
        if (!q) throw UsageError("unknown sync state '" + to + "'");
        targets.push_back(*q);
    } else {
        for (SymbolId q : norm.sync_states())
            if (terms.value(an, q) > 0) targets.push_back(q);
    }
    json per = json::array();
    std::vector<std::vector<std::string>> rows{{"state", "p", kind == "work" ? "E[W|state]" : "E[T|state]", "converged"}};
    bool converged = terms.converged;
    double total = 0.0;
    std::unique_ptr<DistributionEngine> engine;
    if (k == DistKind::Time) engine = std::make_unique<DistributionEngine>(norm, DistKind::Time, terms);
    for (SymbolId q : targets) {
        const double pq = terms.value(an, q);
        json e{{"state", norm.display(q)}, {"cond_prob", pq}};
        if (!(pq > 0)) {
            e["expectation"] = nullptr;
            rows.push_back({norm.display(q), num(pq), "undefined", "-"});
            per.push_back(e);
            continue;
        }
        if (k == DistKind::Work) {
            Expectation x = conditional_expected_work(norm, terms, an, q);
            e["expectation"] = x.to_json();
            rows.push_back({norm.display(q), num(pq), x.infinite ? "inf" : num(x.value), "exact"});
            total += x.infinite ? std::numeric_limits<double>::infinity() : pq * x.value;
        } else {
            TailExpectation t = conditional_expectation(*engine, an, q, 64, std::max<std::size_t>(max_k, 64));
            e["expectation"] = tail_json(t);
            rows.push_back({norm.display(q), num(pq), num(t.lower_bound), yes_no(t.converged)});
            converged = converged && t.converged;
            total += pq * t.lower_bound;
        }
        per.push_back(e);
    }
    const bool whole = to.empty();
    const bool terminates = terms.total(an) >= 1.0 - kTerminationTolerance;
    if (f == Format::Json) {
        json j{{"kind", kind}, {"conditional", per}};
        if (whole) {
            if (terminates) j["unconditional"] = total;
            else j["unconditional"] = nullptr;
            j["termination"] = terms.total(an);
        }
        print_json("expect", j);
    } else {
        if (whole)
            rows.push_back({"(all)", num(terms.total(an)), terminates ? num(total) : "inf", yes_no(converged)});
        print_rows(f, rows);
    }
    return finish(c, converged);
}

int cmd_finite(const Common& c) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    FinitenessReport r = finiteness(m, start_of(m, c), solve_options(c));
    if (f == Format::Json) {
        print_json("finite", r.to_json());
    } else {
        std::vector<std::pair<std::string, std::string>> kv{{"work", verdict_name(r.work)},
                                                            {"time", verdict_name(r.time)},
                                                            {"termination", num(r.detail.termination)}};
        if (r.detail.subcriticality) {
            kv.push_back({"rho_estimate", num(r.detail.subcriticality->rho_estimate)});
            kv.push_back({"near_critical", yes_no(r.detail.subcriticality->near_critical)});
            kv.push_back({"lp_method", lp_method_name(r.detail.subcriticality->method)});
        }
        if (!r.detail.reason.empty()) kv.push_back({"reason", r.detail.reason});
        print_rows(f, key_values(kv));
    }
    return kOk;
}

std::vector<std::uint32_t> parse_script(const std::string& s) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) throw UsageError("--replay expects comma-separated rule indices, got '" + item + "'");
        out.push_back(static_cast<std::uint32_t>(v));
    }
    return out;
}

const char* outcome_name(Outcome o) {
    switch (o) {
    case Outcome::Terminated: return "terminated";
    case Outcome::CutoffSteps: return "cutoff-steps";
    case Outcome::CutoffSpace: return "cutoff-space";
    }
    return "?";
}

int cmd_simulate(const Common& c, std::uint64_t runs, std::uint64_t seed, const Budgets& budgets,
                 const std::string& replay) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    SymbolId a = start_of(m, c);
    if (!replay.empty()) {
        auto script = parse_script(replay);
        for (auto r : script)
            if (r >= m.rules().size()) throw UsageError("rule index " + std::to_string(r) + " out of range");
        ScriptedChooser chooser(script);
        RunStats s = simulate_run(m, a, budgets, chooser);
        const bool used_all = chooser.exhausted();
        std::string terminal = s.terminal ? s.terminal->render(m) : "";
        Rational prob = path_probability(m, script);
        if (f == Format::Json) {
            print_json("simulate", {{"replay", true},
                                    {"outcome", outcome_name(s.outcome)},
                                    {"time", s.time},
                                    {"work", s.work},
                                    {"space", s.space},
                                    {"probability", to_fraction_string(prob)},
                                    {"script_consumed", used_all},
                                    {"terminal", terminal}});
        } else {
            print_rows(f, key_values({{"outcome", outcome_name(s.outcome)},
                                      {"T", std::to_string(s.time)},
                                      {"W", std::to_string(s.work)},
                                      {"S", std::to_string(s.space)},
                                      {"probability", to_fraction_string(prob)},
                                      {"script_consumed", yes_no(used_all)},
                                      {"terminal", terminal}}));
        }
        return used_all ? kOk : kUsage;
    }
    MonteCarloReport r = estimate(m, a, runs, budgets, seed);
    if (f == Format::Json) {
        print_json("simulate", r.to_json());
        return kOk;
    }
    std::vector<std::vector<std::string>> rows{{"state", "count", "freq", "se", "E[T|state]", "E[W|state]", "E[S|state]"}};
    for (std::size_t i = 0; i < r.states.size(); ++i) {
        const auto& t = r.terminated[i];
        const auto& cs = r.cond_stats[i];
        rows.push_back({r.states[i], std::to_string(t.count), num(t.freq), num(t.se), num(cs.time.mean),
                        num(cs.work.mean), num(cs.space.mean)});
    }
    for (auto [name, p] : {std::pair{"(frozen)", &r.frozen}, std::pair{"(cutoff-steps)", &r.cutoff_steps},
                           std::pair{"(cutoff-space)", &r.cutoff_space}})
        rows.push_back({name, std::to_string(p->count), num(p->freq), num(p->se), "", "", ""});
    print_rows(f, rows);
    if (f == Format::Table) std::cout << "runs " << r.runs << ", seed " << r.seed << '\n';
    return kOk;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
}

int cmd_serialise(const Common& c, const std::string& out_path, const std::string& map_path) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    Serialised s = serialise(m);
    const std::string text = render_ppds(s.ppds);
    json map = s.map.to_json(m, s.ppds);
    if (!map_path.empty()) write_text(map_path, map.dump(2) + "\n");
    if (!out_path.empty()) write_text(out_path, text);
    if (f == Format::Json) print_json("serialise", {{"ppds", text}, {"map", map}});
    else if (out_path.empty()) std::cout << text;
    return kOk;
}

int cmd_normalise(const Common& c, const std::string& out_path) {
    const Format f = parse_format(c.format);
    Model m = load(c);
    Normalised n = normalise(m);
    const std::string text = render_model(n.model);
    if (!out_path.empty()) write_text(out_path, text);
    if (f == Format::Json) {
        json j{{"changed", n.fresh.has_value() || n.model.rules().size() != m.rules().size()}, {"model", text}};
        if (n.fresh) j["fresh_state"] = n.model.display(*n.fresh);
        else j["fresh_state"] = nullptr;
        print_json("normalise", j);
    } else if (out_path.empty()) {
        std::cout << text;
    }
    return kOk;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<std::string> r;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) r.push_back(cell);
        if (!line.empty() && line.back() == ',') r.push_back("");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string file_tag(const Rational& p) {
    std::string s = to_fraction_string(p);
    for (char& ch : s)
        if (ch == '/') ch = '_';
    return s;
}

int cmd_casestudy(const Common& c, const std::string& study, const std::string& sweep_text,
                  const std::string& variants_text, int n_max, std::size_t max_k, const std::string& models_dir) {
    const Format f = parse_format(c.format);
    CaseStudyOptions opt;
    opt.solve = solve_options(c);
    opt.k_max = std::max<std::size_t>(max_k, opt.k0);
    std::vector<Rational> sweep;
    try {
        sweep = parse_sweep(sweep_text.empty() ? (study == "divcon" ? "0.8" : "0:0.3:0.05") : sweep_text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--p-sweep: ") + e.what());
    }
    if (!models_dir.empty()) std::filesystem::create_directories(models_dir);
    std::string csv;
    json result;
    bool converged = true;
    if (study == "divcon") {
        if (n_max < 0) throw UsageError("--n-max must be nonnegative");
        for (const auto& p : sweep)
            if (p <= 0 || p >= 1) throw UsageError("divcon needs 0 < p < 1");
        if (!models_dir.empty())
            for (const auto& p : sweep)
                save_model_file(gen_divcon({p, n_max}), models_dir + "/divcon_p" + file_tag(p) + ".psjs");
        auto rows = run_divcon_study(sweep, n_max, opt);
        for (const auto& r : rows) converged = converged && (r.m.time.converged || r.m.finite == Verdict::Infinite);
        csv = divcon_csv(rows);
        result = divcon_json(rows);
    } else {
        std::vector<GameVariant> variants;
        std::stringstream ss(variants_text);
        std::string item;
        try {
            while (std::getline(ss, item, ','))
                if (!item.empty()) variants.push_back(parse_variant(item));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (variants.empty()) throw UsageError("--variant needs at least one of par, seq, ybw");
        for (const auto& p : sweep)
            if (p < 0 || p >= 1) throw UsageError("gametree needs 0 <= p < 1");
        if (!models_dir.empty())
            for (auto v : variants)
                for (const auto& p : sweep)
                    save_model_file(gen_gametree({v, p}),
                                    models_dir + "/gametree_" + variant_name(v) + "_p" + file_tag(p) + ".psjs");
        auto rows = run_gametree_study(variants, sweep, opt);
        for (const auto& r : rows) converged = converged && (r.m.time.converged || r.m.finite == Verdict::Infinite);
        csv = gametree_csv(rows);
        result = gametree_json(rows);
    }
    if (f == Format::Json) print_json("casestudy", {{"study", study}, {"rows", result}});
    else if (f == Format::Csv) std::cout << csv;
    else print_table(std::cout, csv_rows(csv));
    return finish(c, converged);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analyses of probabilistic split-join systems"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* sub, bool model, bool from, bool solver) {
        sub->add_option("--format", c.format, "table, json or csv")->capture_default_str();
        sub->add_flag("--strict", c.strict, "exit 3 when a computation did not converge");
        if (model) sub->add_option("model", c.model_path, "model file")->required();
        if (from) sub->add_option("--from", c.from, "start symbol (defaults to the model's start)");
        if (solver) {
            sub->add_option("--method", c.method, "kleene or newton")->capture_default_str();
            sub->add_option("--tol", c.tol, "solver tolerance")->capture_default_str();
        }
    };

    auto* validate = app.add_subcommand("validate", "check a model file");
    add_common(validate, true, false, false);

    auto* term = app.add_subcommand("term", "termination probabilities [X↓q]");
    add_common(term, true, true, true);

    auto* space = app.add_subcommand("space", "probability of finite space");
    add_common(space, true, true, true);

    std::string kind = "time", to;
    std::size_t max_k = 256;
    auto* dist = app.add_subcommand("dist", "time or work distribution of runs terminating in a state");
    add_common(dist, true, true, true);
    dist->add_option("--kind", kind, "time or work")->capture_default_str();
    dist->add_option("--to", to, "target sync state")->required();
    dist->add_option("--max-k", max_k, "largest k")->capture_default_str();

    std::string ekind = "work", eto;
    std::size_t emax_k = 1u << 13;
    auto* expect = app.add_subcommand("expect", "expected work or time");
    add_common(expect, true, true, true);
    expect->add_option("--kind", ekind, "work or time")->capture_default_str();
    expect->add_option("--to", eto, "condition on termination in this sync state");
    expect->add_option("--max-k", emax_k, "truncation limit for expected time")->capture_default_str();

    auto* finite = app.add_subcommand("finite", "decide finiteness of expected work and time");
    add_common(finite, true, true, true);

    std::uint64_t runs = 10000, seed = 1;
    Budgets budgets;
    budgets.max_space = 10000;
    std::string replay;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo simulation or replay of a scripted run");
    add_common(simulate, true, true, false);
    simulate->add_option("--runs", runs, "number of runs")->capture_default_str();
    simulate->add_option("--seed", seed, "seed")->capture_default_str();
    simulate->add_option("--max-steps", budgets.max_steps, "step budget per run")->capture_default_str();
    simulate->add_option("--max-space", budgets.max_space, "space budget per run")->capture_default_str();
    simulate->add_option("--replay", replay, "comma-separated rule indices (0-based, file order)");

    std::string out_path, map_path;
    auto* ser = app.add_subcommand("serialise", "translate to a probabilistic pushdown system");
    add_common(ser, true, false, false);
    ser->add_option("-o,--output", out_path, "write the pPDS here");
    ser->add_option("--map", map_path, "write the symbol map (JSON) here");

    std::string norm_out;
    auto* norm = app.add_subcommand("normalise", "complete the join table");
    add_common(norm, true, false, false);
    norm->add_option("-o,--output", norm_out, "write the model here");

    std::string study, sweep, variants = "par,seq,ybw", models_dir;
    int n_max = 10;
    std::size_t cs_max_k = 1u << 13;
    auto* cs = app.add_subcommand("casestudy", "divide-and-conquer and game-tree studies");
    c.format = "table";
    cs->add_option("study", study, "divcon or gametree")->required()->check(CLI::IsMember({"divcon", "gametree"}));
    cs->add_option("--format", c.format, "table, json or csv (default csv)");
    cs->add_flag("--strict", c.strict, "exit 3 when a computation did not converge");
    cs->add_option("--method", c.method, "kleene or newton")->capture_default_str();
    cs->add_option("--tol", c.tol, "solver tolerance")->capture_default_str();
    cs->add_option("--p-sweep", sweep, "a:b:step or a comma list");
    cs->add_option("--variant", variants, "comma list of par, seq, ybw")->capture_default_str();
    cs->add_option("--n-max", n_max, "largest divcon level")->capture_default_str();
    cs->add_option("--max-k", cs_max_k, "truncation limit for expected time")->capture_default_str();
    cs->add_option("--models-dir", models_dir, "write the generated models here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (cs->parsed() && cs->count("--format") == 0) c.format = "csv";

    try {
        if (validate->parsed()) return cmd_validate(c);
        if (term->parsed()) return cmd_term(c);
        if (space->parsed()) return cmd_space(c);
        if (dist->parsed()) return cmd_dist(c, kind, to, max_k);
        if (expect->parsed()) return cmd_expect(c, ekind, eto, emax_k);
        if (finite->parsed()) return cmd_finite(c);
        if (simulate->parsed()) return cmd_simulate(c, runs, seed, budgets, replay);
        if (ser->parsed()) return cmd_serialise(c, out_path, map_path);
        if (norm->parsed()) return cmd_normalise(c, norm_out);
        if (cs->parsed()) return cmd_casestudy(c, study, sweep, variants, n_max, cs_max_k, models_dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << c.model_path << ": " << e.what() << '\n';
        return kInvalidModel;
    } catch (const ModelError& e) {
        std::cerr << "error: invalid model " << c.model_path << '\n';
        for (const auto& d : e.diagnostics()) std::cerr << "  [" << d.invariant << "] " << d.message << '\n';
        return kInvalidModel;
    } catch (const AnalysisError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
