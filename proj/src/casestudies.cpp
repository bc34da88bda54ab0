#include "psjs/casestudies.hpp"

#include "psjs/simulate.hpp"
#include "psjs/transforms.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <sstream>

namespace psjs {

namespace {

Rational binom(int n, int k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return Rational(r);
}

Rational power(const Rational& x, int n) {
    Rational r(1);
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

std::string args(std::initializer_list<std::string> xs) {
    std::string s = "(";
    bool first = true;
    for (const auto& x : xs) {
        if (!first) s += ',';
        s += x;
        first = false;
    }
    return s + ")";
}

std::string num(int x) { return std::to_string(x); }

int ominus(int a, int b) { return std::max(a - b, 0); }
int oplus(int a, int b) { return std::min(a + b, 4); }

// x(k) = (1 − p)·C(4,k)·(e/4)^k·(1 − e/4)^(4−k)
std::vector<Rational> leaf_weights(const Rational& p, int e) {
    std::vector<Rational> x(5);
    Rational f(e, 4);
    f.canonicalize();
    for (int k = 0; k <= 4; ++k) {
        x[k] = (1 - p) * binom(4, k) * power(f, k) * power(1 - f, 4 - k);
        x[k].canonicalize();
    }
    return x;
}

void add_positive(ModelBuilder& b, SymbolId lhs, Rhs rhs, const Rational& p) {
    if (p > 0) b.add_rule(lhs, rhs, p);
}

enum class Kind { Max, Min };

Kind other(Kind k) { return k == Kind::Max ? Kind::Min : Kind::Max; }
const char* kname(Kind k) { return k == Kind::Max ? "max" : "min"; }
int step(Kind k, int e, int i) { return k == Kind::Max ? ominus(e, i) : oplus(e, i); }

Model gen_windowed(const Rational& p, bool ybw) {
    ModelBuilder b;
    std::vector<SymbolId> val;
    for (int v = 0; v <= 4; ++v) val.push_back(b.sync(num(v)));
    auto node = [&](Kind k, int a, int be, int e) {
        return b.basic(std::string(k == Kind::Max ? "Max" : "Min") + args({num(a), num(be), num(e)}));
    };
    auto node2 = [&](Kind k, int a, int be, int e) {
        return b.basic(std::string(k == Kind::Max ? "Max2" : "Min2") + args({num(a), num(be), num(e)}));
    };
    auto qwin = [&](Kind k, int a, int be, int e) { return b.sync("q" + args({num(a), num(be), kname(k), num(e)})); };
    auto rwin = [&](Kind k, int a, int be, int e) { return b.sync("r" + args({num(a), num(be), kname(k), num(e)})); };
    auto qkind = [&](Kind k) { return b.sync(std::string("q(") + kname(k) + ")"); };

    SymbolId root = node(Kind::Max, 0, 4, 2);
    for (Kind k : {Kind::Max, Kind::Min}) {
        const Kind o = other(k);
        for (int a = 0; a <= 4; ++a)
            for (int be = a + 1; be <= 4; ++be) {
                const int cut = k == Kind::Max ? be : a;
                auto window = [&](int g) { return k == Kind::Max ? std::pair{g, be} : std::pair{a, g}; };
                for (int e = 0; e <= 4; ++e) {
                    SymbolId n = node(k, a, be, e);
                    auto x = leaf_weights(p, e);
                    Rational low(0), high(0);
                    for (int v = 0; v <= a; ++v) low += x[v];
                    for (int v = be; v <= 4; ++v) high += x[v];
                    add_positive(b, n, Rhs::single(val[a]), low);
                    add_positive(b, n, Rhs::single(val[be]), high);
                    for (int v = a + 1; v < be; ++v) add_positive(b, n, Rhs::single(val[v]), x[v]);
                    add_positive(b, n, Rhs::pair(node(o, a, be, e), qwin(k, a, be, step(k, e, 1))), p);

                    SymbolId qa = qwin(k, a, be, e);
                    for (int g = a; g <= be; ++g) {
                        SymbolId j = b.join(val[g], qa);
                        if (g == cut) {
                            b.add_rule(j, Rhs::single(val[g]), Rational(1));
                        } else {
                            auto [na, nb] = window(g);
                            b.add_rule(j, Rhs::pair(node2(k, na, nb, e), qkind(k)), Rational(1));
                        }
                    }
                    SymbolId m2 = node2(k, a, be, e);
                    if (ybw) {
                        b.add_rule(m2, Rhs::pair(node(o, a, be, e), node(o, a, be, step(k, e, 1))), Rational(1));
                    } else {
                        b.add_rule(m2, Rhs::pair(node(o, a, be, e), rwin(k, a, be, step(k, e, 1))), Rational(1));
                        SymbolId ra = rwin(k, a, be, e);
                        for (int g = a; g <= be; ++g) {
                            SymbolId j = b.join(val[g], ra);
                            if (g == cut) {
                                b.add_rule(j, Rhs::single(val[g]), Rational(1));
                            } else {
                                auto [na, nb] = window(g);
                                b.add_rule(j, Rhs::single(node(o, na, nb, e)), Rational(1));
                            }
                        }
                    }
                }
            }
    }
    for (Kind k : {Kind::Max, Kind::Min}) {
        SymbolId qk = qkind(k);
        if (ybw) {
            for (int x = 0; x <= 4; ++x)
                for (int y = 0; y <= 4; ++y) {
                    SymbolId qxy = b.sync("q" + args({num(x), num(y)}));
                    if (k == Kind::Max) b.add_rule(b.join(val[x], val[y]), Rhs::single(qxy), Rational(1));
                    int r = k == Kind::Max ? std::max(x, y) : std::min(x, y);
                    b.add_rule(b.join(qxy, qk), Rhs::single(val[r]), Rational(1));
                }
        } else {
            for (int x = 0; x <= 4; ++x) b.add_rule(b.join(val[x], qk), Rhs::single(val[x]), Rational(1));
        }
    }
    b.set_start(root);
    return b.build();
}

Model gen_par(const Rational& p) {
    ModelBuilder b;
    std::vector<SymbolId> val, mval;
    for (int v = 0; v <= 4; ++v) val.push_back(b.sync(num(v)));
    for (int v = 0; v <= 4; ++v) mval.push_back(b.sync("m" + args({num(v)})));
    auto node = [&](Kind k, int e) { return b.basic(std::string(k == Kind::Max ? "Max" : "Min") + args({num(e)})); };
    auto rest = [&](Kind k, int e) { return b.basic(std::string(k == Kind::Max ? "Cmax" : "Cmin") + args({num(e)})); };
    SymbolId root = node(Kind::Max, 2);
    for (Kind k : {Kind::Max, Kind::Min}) {
        const auto& out = k == Kind::Max ? val : mval;
        for (int e = 0; e <= 4; ++e) {
            SymbolId n = node(k, e);
            auto x = leaf_weights(p, e);
            for (int v = 0; v <= 4; ++v) add_positive(b, n, Rhs::single(out[v]), x[v]);
            add_positive(b, n, Rhs::pair(node(other(k), e), rest(k, e)), p);
            b.add_rule(rest(k, e), Rhs::pair(node(other(k), step(k, e, 1)), node(other(k), step(k, e, 2))), Rational(1));
        }
    }
    for (int x = 0; x <= 4; ++x)
        for (int y = 0; y <= 4; ++y) {
            SymbolId qmax = b.sync("qmax" + args({num(x), num(y)}));
            SymbolId qmin = b.sync("qmin" + args({num(x), num(y)}));
            b.add_rule(b.join(mval[x], mval[y]), Rhs::single(qmax), Rational(1));
            b.add_rule(b.join(val[x], val[y]), Rhs::single(qmin), Rational(1));
            for (int a = 0; a <= 4; ++a) {
                b.add_rule(b.join(mval[a], qmax), Rhs::single(val[std::max({a, x, y})]), Rational(1));
                b.add_rule(b.join(val[a], qmin), Rhs::single(mval[std::min({a, x, y})]), Rational(1));
            }
        }
    b.set_start(root);
    return b.build();
}

} // namespace

Model gen_divcon(const DivConParams& params) {
    if (params.p <= 0 || params.p >= 1) throw AnalysisError("divcon: p must lie in (0,1)");
    if (params.n_max < 0) throw AnalysisError("divcon: n_max must be nonnegative");
    ModelBuilder b;
    SymbolId q = b.sync("q");
    std::vector<SymbolId> n;
    for (int i = 0; i <= params.n_max; ++i) n.push_back(b.basic(num(i)));
    b.add_rule(n[0], Rhs::single(q), Rational(1));
    b.add_rule(b.join(q, q), Rhs::single(q), Rational(1));
    Rational half = params.p / 2;
    for (int i = 1; i <= params.n_max; ++i)
        for (int n1 = 0; n1 <= i; ++n1)
            for (int n2 = 0; n1 + n2 <= i; ++n2) {
                Rational x = binom(i, n1) * binom(i - n1, n2) * power(half, n1 + n2) * power(1 - params.p, i - n1 - n2);
                x.canonicalize();
                b.add_rule(n[i], Rhs::pair(n[n1], n[n2]), x);
            }
    b.set_start(params.n_max >= 1 ? n[params.n_max] : n[0]);
    Model m = b.build();
    require_valid(m);
    return m;
}

const char* variant_name(GameVariant v) {
    switch (v) {
    case GameVariant::Par: return "par";
    case GameVariant::Seq: return "seq";
    case GameVariant::Ybw: return "ybw";
    }
    return "?";
}

GameVariant parse_variant(const std::string& s) {
    if (s == "par") return GameVariant::Par;
    if (s == "seq") return GameVariant::Seq;
    if (s == "ybw") return GameVariant::Ybw;
    throw std::invalid_argument("unknown game-tree variant '" + s + "' (expected par, seq or ybw)");
}

Model gen_gametree(const GameTreeParams& params) {
    if (params.p < 0 || params.p >= 1) throw AnalysisError("gametree: p must lie in [0,1)");
    Model m = params.variant == GameVariant::Par ? gen_par(params.p) : gen_windowed(params.p, params.variant == GameVariant::Ybw);
    require_valid(m);
    return m;
}

ConditionalMeasures conditional_measures(const Model& m, SymbolId a, SymbolId q, const CaseStudyOptions& opt) {
    Model norm = ensure_normalised(m);
    SymbolId an = norm.resolve(m.display(a));
    SymbolId qn = *norm.find_sync(m.display(q));
    TermMatrix terms = solve_termination(norm, opt.solve);
    ConditionalMeasures out;
    out.cond_prob = terms.value(an, qn);
    out.termination = terms.total(an);
    if (!(out.cond_prob > 0.0)) throw AnalysisError("conditioning probability is zero");
    out.work = conditional_expected_work(norm, terms, an, qn);
    bool finite = out.termination >= 1.0 - kTerminationTolerance && !out.work.infinite;
    if (finite) finite = finiteness(norm, an, opt.solve).work == Verdict::Finite;
    out.finite = finite ? Verdict::Finite : Verdict::Infinite;
    DistributionEngine engine(norm, DistKind::Time, terms);
    out.time = conditional_expectation(engine, an, qn, opt.k0, finite ? opt.k_max : opt.k0);
    return out;
}

namespace {

template <class F>
void parallel_for(std::size_t n, F&& body) {
    const unsigned threads = std::min<std::size_t>(configured_threads(), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

ConditionalMeasures game_point(GameVariant v, const Rational& p, const CaseStudyOptions& opt) {
    Model m = gen_gametree({v, p});
    return conditional_measures(m, *m.start(), *m.find_sync(kGameTarget), opt);
}

} // namespace

std::vector<GameRow> run_gametree_study(const std::vector<GameVariant>& variants, const std::vector<Rational>& sweep,
                                        const CaseStudyOptions& opt) {
    std::vector<GameVariant> cols = variants;
    if (std::find(cols.begin(), cols.end(), GameVariant::Seq) == cols.end()) cols.push_back(GameVariant::Seq);
    const std::size_t seq_col = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), GameVariant::Seq) - cols.begin());
    std::vector<ConditionalMeasures> grid(sweep.size() * cols.size());
    parallel_for(grid.size(), [&](std::size_t i) { grid[i] = game_point(cols[i % cols.size()], sweep[i / cols.size()], opt); });

    std::vector<GameRow> rows;
    for (std::size_t pi = 0; pi < sweep.size(); ++pi) {
        const ConditionalMeasures& seq = grid[pi * cols.size() + seq_col];
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            GameRow r{variants[vi], sweep[pi], grid[pi * cols.size() + vi]};
            if (!seq.work.infinite && !r.m.work.infinite && seq.time.lower_bound > 0) {
                r.has_seq = true;
                r.pct_time_vs_seq = 100.0 * (r.m.time.lower_bound / seq.time.lower_bound - 1.0);
                r.pct_work_vs_seq = 100.0 * (r.m.work.value / seq.work.value - 1.0);
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::vector<DivConRow> run_divcon_study(const std::vector<Rational>& sweep, int n_max, const CaseStudyOptions& opt) {
    const std::size_t per = static_cast<std::size_t>(n_max) + 1;
    std::vector<DivConRow> rows(sweep.size() * per);
    std::vector<Model> models;
    for (const Rational& p : sweep) models.push_back(gen_divcon({p, n_max}));
    parallel_for(rows.size(), [&](std::size_t i) {
        const Model& m = models[i / per];
        const int n = static_cast<int>(i % per);
        DivConRow r{sweep[i / per], n, conditional_measures(m, *m.find_basic(num(n)), *m.find_sync("q"), opt)};
        if (!r.m.work.infinite && r.m.time.lower_bound > 0) r.ratio = r.m.work.value / r.m.time.lower_bound;
        rows[i] = std::move(r);
    });
    return rows;
}

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

std::string p_text(const Rational& p) {
    std::ostringstream os;
    os.precision(6);
    os << p.get_d();
    return os.str();
}

} // namespace

std::string gametree_csv(const std::vector<GameRow>& rows) {
    std::ostringstream os;
    os << "variant,p,EW,ET_lb,ET_converged,pct_vs_seq,pct_work_vs_seq,p_cond,p_term,finite\n";
    for (const auto& r : rows) {
        os << variant_name(r.variant) << ',' << p_text(r.p) << ',' << (r.m.work.infinite ? "inf" : fmt(r.m.work.value))
           << ',' << fmt(r.m.time.lower_bound) << ',' << (r.m.time.converged ? "true" : "false") << ','
           << (r.has_seq ? fmt(r.pct_time_vs_seq) : "") << ',' << (r.has_seq ? fmt(r.pct_work_vs_seq) : "") << ','
           << fmt(r.m.cond_prob) << ',' << fmt(r.m.termination) << ',' << verdict_name(r.m.finite) << '\n';
    }
    return os.str();
}

std::string divcon_csv(const std::vector<DivConRow>& rows) {
    std::ostringstream os;
    os << "p,n,EW,ET_lb,ET_converged,ratio,finite\n";
    for (const auto& r : rows)
        os << p_text(r.p) << ',' << r.n << ',' << (r.m.work.infinite ? "inf" : fmt(r.m.work.value)) << ','
           << fmt(r.m.time.lower_bound) << ',' << (r.m.time.converged ? "true" : "false") << ',' << fmt(r.ratio) << ','
           << verdict_name(r.m.finite) << '\n';
    return os.str();
}

namespace {

nlohmann::ordered_json measures_json(const ConditionalMeasures& m) {
    nlohmann::ordered_json j;
    j["cond_prob"] = m.cond_prob;
    j["termination"] = m.termination;
    j["work"] = m.work.to_json();
    j["time"] = {{"lower_bound", m.time.lower_bound}, {"converged", m.time.converged},
                 {"tail_at_K", m.time.tail_at_K}, {"K", m.time.K}};
    j["finite"] = verdict_name(m.finite);
    return j;
}

} // namespace

nlohmann::ordered_json gametree_json(const std::vector<GameRow>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["variant"] = variant_name(r.variant);
        j["p"] = to_fraction_string(r.p);
        j["measures"] = measures_json(r.m);
        if (r.has_seq) {
            j["pct_vs_seq"] = r.pct_time_vs_seq;
            j["pct_work_vs_seq"] = r.pct_work_vs_seq;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

nlohmann::ordered_json divcon_json(const std::vector<DivConRow>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["p"] = to_fraction_string(r.p);
        j["n"] = r.n;
        j["measures"] = measures_json(r.m);
        j["ratio"] = r.ratio;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<Rational> parse_sweep(const std::string& text) {
    std::vector<Rational> out;
    if (text.find(':') != std::string::npos) {
        auto c1 = text.find(':');
        auto c2 = text.find(':', c1 + 1);
        if (c2 == std::string::npos) throw std::invalid_argument("sweep must be a:b:step");
        Rational a = parse_rational(text.substr(0, c1)), b = parse_rational(text.substr(c1 + 1, c2 - c1 - 1)),
                 s = parse_rational(text.substr(c2 + 1));
        if (s <= 0) throw std::invalid_argument("sweep step must be positive");
        for (Rational x = a; x <= b; x += s) out.push_back(x);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_rational(item));
    if (out.empty()) throw std::invalid_argument("empty sweep");
    return out;
}

} // namespace psjs
