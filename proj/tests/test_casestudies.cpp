#include "psjs/casestudies.hpp"
#include "psjs/solvers.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace psjs;

namespace {

Rational q(const char* s) { return parse_rational(s); }

void check_exact_sums(const Model& m) {
    for (SymbolId a = 0; a < m.symbol_count(); ++a) {
        if (m.rules_of(a).empty()) continue;
        Rational sum(0);
        for (auto r : m.rules_of(a)) sum += m.rules()[r].prob;
        CHECK_MESSAGE(sum == 1, m.display(a));
    }
}

// Direct value/work recursion of the sequential alpha-beta program on random game trees,
// counting one unit per rewriting step of its pSJS encoding.
struct SeqOracle {
    struct Res {
        std::array<double, 5> P{}, WP{};
    };
    double p;
    // [kind][alpha][beta][e], kind 0 = max
    std::array<std::array<std::array<std::array<Res, 5>, 5>, 5>, 2> s{};

    static std::array<double, 5> leaf(double p, int e) {
        static const double c[5] = {1, 4, 6, 4, 1};
        std::array<double, 5> x{};
        double f = e / 4.0;
        for (int k = 0; k <= 4; ++k) x[k] = (1 - p) * c[k] * std::pow(f, k) * std::pow(1 - f, 4 - k);
        return x;
    }

    Res node(const decltype(s)& old, int kind, int a, int b, int e) const {
        const int o = 1 - kind;
        auto step = [&](int x) { return kind == 0 ? std::max(x - 1, 0) : std::min(x + 1, 4); };
        auto window = [&](int lo, int hi, int g) { return kind == 0 ? std::pair{g, hi} : std::pair{lo, g}; };
        auto cut = [&](int lo, int hi) { return kind == 0 ? hi : lo; };
        Res r;
        auto x = leaf(p, e);
        for (int k = 0; k <= 4; ++k) {
            int v = std::clamp(k, a, b);
            r.P[v] += x[k];
            r.WP[v] += x[k];
        }
        const Res& c1 = old[o][a][b][e];
        for (int g = a; g <= b; ++g) {
            double pb = p * c1.P[g], wb = p * (2 * c1.P[g] + c1.WP[g]);
            if (pb == 0) continue;
            if (g == cut(a, b)) {
                r.P[g] += pb;
                r.WP[g] += wb;
                continue;
            }
            auto [na, nb] = window(a, b, g);
            const int e1 = step(e);
            wb += pb;
            const Res& c2 = old[o][na][nb][e1];
            for (int g2 = na; g2 <= nb; ++g2) {
                double pb2 = pb * c2.P[g2];
                double wb2 = wb * c2.P[g2] + pb * c2.WP[g2] + pb2;
                if (pb2 == 0) continue;
                if (g2 == cut(na, nb)) {
                    r.P[g2] += pb2;
                    r.WP[g2] += wb2 + pb2;
                    continue;
                }
                auto [ma, mb] = window(na, nb, g2);
                const Res& c3 = old[o][ma][mb][step(e1)];
                for (int v = 0; v <= 4; ++v) {
                    double pb3 = pb2 * c3.P[v];
                    r.P[v] += pb3;
                    r.WP[v] += wb2 * c3.P[v] + pb2 * c3.WP[v] + pb3;
                }
            }
        }
        return r;
    }

    explicit SeqOracle(double p_) : p(p_) {
        for (int it = 0; it < 100000; ++it) {
            auto next = s;
            double change = 0;
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a <= 4; ++a)
                    for (int b = a + 1; b <= 4; ++b)
                        for (int e = 0; e <= 4; ++e) {
                            next[k][a][b][e] = node(s, k, a, b, e);
                            for (int v = 0; v <= 4; ++v)
                                change = std::max({change, std::abs(next[k][a][b][e].P[v] - s[k][a][b][e].P[v]),
                                                   std::abs(next[k][a][b][e].WP[v] - s[k][a][b][e].WP[v])});
                        }
            s = next;
            if (change < 1e-15) break;
        }
    }

    double cond_work(int v) const { return s[0][0][4][2].WP[v] / s[0][0][4][2].P[v]; }
    double prob(int v) const { return s[0][0][4][2].P[v]; }
};

} // namespace

TEST_CASE("divcon with n_max 0 has only the base rules") {
    Model m = gen_divcon({q("1/2"), 0});
    CHECK(m.rules().size() == 2);
    CHECK(m.sync_states().size() == 1);
}

TEST_CASE("divcon rule weights sum to one exactly") {
    for (const char* p : {"0.8", "1/3", "0.05"}) check_exact_sums(gen_divcon({q(p), 10}));
    Model m = gen_divcon({q("0.8"), 3});
    CHECK(m.rules_of(*m.find_basic("3")).size() == 10);
}

TEST_CASE("divcon level one matches the closed forms") {
    for (const char* ps : {"0.3", "0.5", "0.8"}) {
        Rational p = q(ps);
        Model m = gen_divcon({p, 1});
        auto r = conditional_measures(m, *m.find_basic("1"), *m.find_sync("q"));
        double pd = p.get_d();
        CHECK(r.work.value == doctest::Approx((4 - pd) / (1 - pd)).epsilon(1e-10));
        CHECK(r.time.lower_bound == doctest::Approx((3 - pd) / (1 - pd)).epsilon(1e-8));
        CHECK(r.time.converged);
        CHECK(r.finite == Verdict::Finite);
    }
}

TEST_CASE("divcon parallelism grows with the level") {
    auto rows = run_divcon_study({q("0.8")}, 10);
    REQUIRE(rows.size() == 11);
    for (std::size_t n = 1; n < rows.size(); ++n) {
        CHECK(rows[n].m.work.value > rows[n - 1].m.work.value);
        CHECK(rows[n].m.time.lower_bound > rows[n - 1].m.time.lower_bound);
        CHECK(rows[n].ratio > rows[n - 1].ratio);
    }
}

TEST_CASE("game-tree models have exact rule sums") {
    for (auto v : {GameVariant::Par, GameVariant::Seq, GameVariant::Ybw})
        for (const char* p : {"0", "0.2", "1/3"}) check_exact_sums(gen_gametree({v, q(p)}));
}

TEST_CASE("root leaf weights follow the binomial at e = 2") {
    Rational p = q("0.2");
    Model m = gen_gametree({GameVariant::Ybw, p});
    SymbolId root = *m.start();
    CHECK(m.symbol(root).name == "Max(0,4,2)");
    std::array<Rational, 5> w{};
    Rational split(0);
    for (auto ri : m.rules_of(root)) {
        const Rule& r = m.rules()[ri];
        if (r.rhs.arity == 2) {
            split += r.prob;
            continue;
        }
        w[std::stoi(m.display(r.rhs.items[0]))] += r.prob;
    }
    CHECK(split == p);
    for (int k = 0; k <= 4; ++k) {
        static const int binom[5] = {1, 4, 6, 4, 1};
        Rational b(binom[k], 16);
        b.canonicalize();
        CHECK(w[k] == (1 - p) * b);
    }
    CHECK(w[1] * 6 == w[2] * 4);
    CHECK(w[3] == w[1]);
}

TEST_CASE("ybw terminates in a value state almost surely") {
    for (const char* ps : {"0.05", "0.2", "0.3"}) {
        Model m = gen_gametree({GameVariant::Ybw, q(ps)});
        TermMatrix t = solve_termination(m);
        SymbolId root = *m.start();
        double values = 0;
        for (SymbolId s : m.sync_states()) {
            const std::string& name = m.symbol(s).name;
            bool value = name.size() == 1 && name[0] >= '0' && name[0] <= '4';
            if (value) {
                CHECK(t.value(root, s) > 0);
                values += t.value(root, s);
            } else {
                CHECK(t.value(root, s) == doctest::Approx(0.0));
            }
        }
        CHECK(std::abs(values - 1.0) < 1e-8);
    }
}

TEST_CASE("seq measures agree with a direct recursion of the program") {
    for (const char* ps : {"0.1", "0.25"}) {
        Rational p = q(ps);
        SeqOracle o(p.get_d());
        Model m = gen_gametree({GameVariant::Seq, p});
        auto r = conditional_measures(m, *m.start(), *m.find_sync(kGameTarget));
        CHECK(r.cond_prob == doctest::Approx(o.prob(2)).epsilon(1e-10));
        CHECK(r.work.value == doctest::Approx(o.cond_work(2)).epsilon(1e-8));
        // one leaf rewrites at a time, so time and work coincide
        CHECK(r.time.lower_bound == doctest::Approx(r.work.value).epsilon(1e-8));
    }
}

TEST_CASE("par at one third has infinite expected work") {
    Model m = gen_gametree({GameVariant::Par, q("1/3")});
    auto r = conditional_measures(m, *m.start(), *m.find_sync(kGameTarget));
    CHECK(r.finite == Verdict::Infinite);
    CHECK(r.work.infinite);
    CHECK_FALSE(r.time.converged);
}

TEST_CASE("game-tree sweep compares against seq") {
    auto rows = run_gametree_study({GameVariant::Ybw}, {q("0.1")});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].has_seq);
    CHECK(rows[0].pct_time_vs_seq < 0);
    CHECK(rows[0].pct_work_vs_seq >= 0);
    CHECK(rows[0].pct_work_vs_seq <= 0.5);
    auto csv = gametree_csv(rows);
    CHECK(csv.rfind("variant,p,EW,ET_lb,ET_converged,pct_vs_seq", 0) == 0);
    CHECK(gametree_json(rows)[0]["variant"] == "ybw");
}

TEST_CASE("parse_sweep") {
    auto s = parse_sweep("0:0.3:0.05");
    REQUIRE(s.size() == 7);
    CHECK(s.back() == q("3/10"));
    CHECK(s[1] == q("1/20"));
    auto l = parse_sweep("0.1,1/3");
    REQUIRE(l.size() == 2);
    CHECK(l[1] == Rational(1, 3));
    CHECK_THROWS(parse_sweep("0:1"));
    CHECK_THROWS(parse_sweep("0:1:0"));
    CHECK_THROWS(parse_variant("minimax"));
}
