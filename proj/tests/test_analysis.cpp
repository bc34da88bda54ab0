#include "corpus.hpp"
#include "enumerate.hpp"
#include "ppds_oracle.hpp"
#include "psjs/analysis.hpp"
#include "psjs/distribution.hpp"
#include "psjs/transforms.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace psjs;
using psjs::testing::ex1;

namespace {

Model normalised_random(std::mt19937_64& rng) {
    return normalise(testing::random_model(rng, 3, 2)).model;
}

} // namespace

TEST_CASE("time distribution basics") {
    Model one = parse_model("states: q\nX -> q : 1\n");
    auto p = time_distribution(one, *one.find_basic("X"), *one.find_sync("q"), 5);
    CHECK(p.mass[0] == 0.0);
    CHECK(p.mass[1] == 1.0);
    for (std::size_t k = 2; k <= 5; ++k) CHECK(p.mass[k] == 0.0);
    auto w = work_distribution(one, *one.find_basic("X"), *one.find_sync("q"), 5);
    CHECK(w.mass[1] == 1.0);

    Model m = normalise(ex1()).model;
    SymbolId x = *m.find_basic("X");
    CHECK(time_distribution(m, x, *m.find_sync("q"), 3).mass[1] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(time_distribution(m, x, *m.find_sync("r"), 3).mass[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK_THROWS_AS(time_distribution(ex1(), x, *m.find_sync("q"), 3), AnalysisError);
}

TEST_CASE("EX1 work mass at 5 includes the example run") {
    Model m = normalise(ex1()).model;
    SymbolId x = *m.find_basic("X"), q = *m.find_sync("q");
    auto w = work_distribution(m, x, q, 8);
    auto oracle = testing::enumerate_runs(m, x, 8, true);
    CHECK(w.mass[5] >= 0.009 - 1e-15);
    for (std::size_t k = 0; k <= 8; ++k) CHECK(std::abs(w.mass[k] - oracle.mass[q][k]) < 1e-14);
}

TEST_CASE("DP tables agree with exhaustive enumeration") {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 25; ++i) {
        Model m = normalised_random(rng);
        SymbolId a = *m.find_basic("A0");
        auto work = testing::enumerate_runs(m, a, 7, true);
        auto time = testing::enumerate_runs(m, a, 4, false);
        DistributionEngine ew(m, DistKind::Work), et(m, DistKind::Time);
        for (SymbolId q : m.sync_states()) {
            auto pw = ew.pmf(a, q, 7);
            auto pt = et.pmf(a, q, 4);
            for (std::size_t k = 0; k <= 7; ++k) CHECK(std::abs(pw.mass[k] - work.mass[q][k]) < 1e-13);
            for (std::size_t k = 0; k <= 4; ++k) CHECK(std::abs(pt.mass[k] - time.mass[q][k]) < 1e-13);
        }
    }
}

TEST_CASE("time mass converges to the termination probability") {
    Model d = testing::doubler_psjs("1/4");
    DistributionEngine e(d, DistKind::Time);
    SymbolId x = *d.find_basic("X"), q = *d.find_sync("q");
    double prev = 0.0;
    for (std::size_t K : {10u, 20u, 40u, 80u, 160u}) {
        auto p = e.pmf(x, q, K);
        double s = p.cdf(K);
        CHECK(s >= prev - 1e-15);
        prev = s;
        CHECK(std::abs(s + p.tail - p.cond_prob) < 1e-12);
    }
    CHECK(std::abs(prev - 1.0) < 1e-9);

    Model m = normalise(ex1()).model;
    DistributionEngine e1(m, DistKind::Time);
    SymbolId xq = *m.find_basic("X"), qq = *m.find_sync("q");
    auto p = e1.pmf(xq, qq, 1500);
    CHECK(std::abs(p.cdf(1500) - e1.terms().value(xq, qq)) < 1e-6);
}

TEST_CASE("work CDF is dominated by time CDF") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
        Model m = normalised_random(rng);
        SymbolId a = *m.find_basic("A0");
        DistributionEngine ew(m, DistKind::Work), et(m, DistKind::Time);
        for (SymbolId q : m.sync_states()) {
            auto pw = ew.pmf(a, q, 30), pt = et.pmf(a, q, 30);
            double cw = 0.0, ct = 0.0;
            for (std::size_t k = 0; k <= 30; ++k) {
                cw += pw.mass[k];
                ct += pt.mass[k];
                CHECK(cw <= ct + 1e-12);
            }
        }
    }
}

TEST_CASE("distributions transfer to the conditioned branching process") {
    std::mt19937_64 rng(29);
    int checked = 0;
    for (int i = 0; i < 40 && checked < 15; ++i) {
        Model m = normalised_random(rng);
        auto terms = solve_termination(m);
        if (!terms.converged) continue;
        auto cbp = conditioned_bp(m, terms);
        DistributionEngine ow(m, DistKind::Work, terms), ot(m, DistKind::Time, terms);
        DistributionEngine bw(cbp.bp, DistKind::Work), bt(cbp.bp, DistKind::Time);
        SymbolId a = *m.find_basic("A0");
        for (SymbolId q : m.sync_states()) {
            double c = terms.value(a, q);
            if (c <= 1e-6) continue;
            SymbolId s = cbp.at(a, q);
            auto w1 = ow.pmf(a, q, 40), w2 = bw.pmf(s, cbp.bottom, 40);
            auto t1 = ot.pmf(a, q, 40), t2 = bt.pmf(s, cbp.bottom, 40);
            double c1 = 0.0, c2 = 0.0;
            for (std::size_t k = 0; k <= 40; ++k) {
                CHECK(std::abs(w1.mass[k] / c - w2.mass[k]) < 1e-8);
                c1 += t1.mass[k] / c;
                c2 += t2.mass[k];
                CHECK(c1 <= c2 + 1e-8);
            }
        }
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("tail expectation") {
    Model one = parse_model("states: q\nX -> q : 1\n");
    DistributionEngine e(one, DistKind::Time);
    auto t = conditional_expectation(e, *one.find_basic("X"), *one.find_sync("q"));
    CHECK(t.converged);
    CHECK(t.lower_bound == doctest::Approx(1.0));

    Model d = testing::doubler_psjs("1/4");
    DistributionEngine ed(d, DistKind::Time);
    auto td = tail_expectation(ed.pmf(*d.find_basic("X"), *d.find_sync("q"), 500), 1.0);
    CHECK(td.converged);
    CHECK(td.lower_bound > 1.0);

    Model h = testing::doubler_psjs("1/2");
    DistributionEngine eh(h, DistKind::Time);
    auto th = tail_expectation(eh.pmf(*h.find_basic("X"), *h.find_sync("q"), 2000), eh.terms().value(*h.find_basic("X"), *h.find_sync("q")));
    CHECK_FALSE(th.converged);

    Pmf bad;
    CHECK_THROWS_AS(tail_expectation(bad, 0.0), AnalysisError);
}

TEST_CASE("characteristic matrix examples") {
    auto A = characteristic_matrix(testing::doubler("1/4"));
    REQUIRE(A.size() == 1);
    CHECK(A.rows[0][0].exact == Rational(1, 2));
    Model sw = parse_model("states: bot\nflags: branching\nX -> bot : 1/4\nX -> <X X> : 3/4\n");
    CHECK(characteristic_matrix(sw).rows[0][0].exact == Rational(3, 2));
    Model two = parse_model("states: bot\nflags: branching\nX -> <Y Y> : 1\nY -> X : 1/2\nY -> bot : 1/2\n");
    auto B = characteristic_matrix(two);
    auto dense = B.dense();
    int x = B.position(*two.find_basic("X")), y = B.position(*two.find_basic("Y"));
    CHECK(dense[x][x] == 0.0);
    CHECK(dense[x][y] == 2.0);
    CHECK(dense[y][x] == 0.5);
    CHECK(dense[y][y] == 0.0);
    CHECK_THROWS_AS(characteristic_matrix(ex1()), AnalysisError);
}

TEST_CASE("reduce_bp") {
    Model extra = parse_model("states: bot\nflags: branching\nX -> <X X> : 1/4\nX -> bot : 3/4\nZ -> bot : 1\n");
    Model r = reduce_bp(extra, *extra.find_basic("X"));
    CHECK(r.process_symbols().size() == 1);
    CHECK_FALSE(r.find_basic("Z"));
    Model d = testing::doubler("1/4");
    CHECK(render_model(reduce_bp(d, *d.find_basic("X"))) == render_model(d));
    Model m = ex1();
    auto c = conditioned_bp(m, solve_termination(m));
    Model rc = reduce_bp(c.bp, c.at(*m.find_basic("X"), *m.find_sync("q")));
    CHECK(rc.process_symbols().size() == 4);
}

TEST_CASE("subcriticality examples") {
    auto one = [](double v) { return CharMatrix::from_dense({{v}}); };
    CHECK(is_subcritical(one(0.5)).subcritical);
    CHECK_FALSE(is_subcritical(one(1.0)).subcritical);
    auto two = CharMatrix::from_exact({{Rational(0), Rational(2)}, {Rational(1, 2), Rational(0)}});
    auto rep = is_subcritical(two);
    CHECK_FALSE(rep.subcritical);
    CHECK(rep.method == LpMethod::Exact);
    CHECK(rep.rho_estimate == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.near_critical);
    auto sub = CharMatrix::from_exact({{Rational(0), Rational(3, 2)}, {Rational(1, 2), Rational(0)}});
    CHECK(is_subcritical(sub).subcritical);
}

TEST_CASE("LP verdicts agree with power iteration and across arithmetic") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int compared = 0;
    for (int i = 0; i < 200; ++i) {
        std::size_t n = 2 + rng() % 8;
        double scale = 0.2 + 0.4 * u(rng);
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (auto& row : a)
            for (auto& x : row)
                if (u(rng) < 0.5) x = scale * u(rng);
        auto A = CharMatrix::from_dense(a);
        auto exact = is_subcritical(A);
        SubcriticalityOptions fl;
        fl.exact_limit = 0;
        auto floating = is_subcritical(A, fl);
        SubcriticalityOptions pw;
        pw.exact_limit = 0;
        pw.lp_limit = 0;
        auto power = is_subcritical(A, pw);
        double rho = spectral_radius(A);
        if (std::abs(rho - 1.0) <= 1e-6) continue;
        ++compared;
        CHECK(exact.subcritical == (rho < 1.0));
        CHECK(floating.subcritical == exact.subcritical);
        CHECK(power.subcritical == exact.subcritical);
        CHECK(exact.estimate_agrees);
    }
    CHECK(compared > 150);
}

TEST_CASE("expected work of branching processes") {
    for (const char* p : {"1/10", "1/4", "2/5", "49/100"}) {
        Model d = testing::doubler(p);
        double pv = parse_rational(p).get_d();
        auto e = expected_work_bp(d, *d.find_basic("X"));
        REQUIRE_FALSE(e.infinite);
        CHECK(std::abs(e.value - 1.0 / (1.0 - 2.0 * pv)) < 1e-9);
    }
    Model half = testing::doubler("1/2");
    CHECK(expected_work_bp(half, *half.find_basic("X")).infinite);
    Model unit = parse_model("states: bot\nflags: branching\nX -> bot : 1\n");
    CHECK(expected_work_bp(unit, *unit.find_basic("X")).value == doctest::Approx(1.0));
}

TEST_CASE("space probability") {
    auto rw = [](const Rational& p) {
        Model m = from_ppds(testing::random_walk(p));
        return space_probability(m, *m.find_join(*m.find_sync("q"), *m.find_sync("a")));
    };
    CHECK(rw(Rational(1, 4)).p_finite == doctest::Approx(1.0).epsilon(1e-10));
    auto hi = rw(Rational(3, 4));
    CHECK(hi.p_finite < 0.5);
    CHECK(hi.p_finite == doctest::Approx(1.0 / 3.0).epsilon(1e-10));

    Model loop = parse_model("states: q\nb -> b : 1\n");
    auto s = space_probability(loop, *loop.find_basic("b"));
    CHECK(s.p_finite == 1.0);
    CHECK(s.p_terminate == 0.0);
    CHECK(s.p_bounded_nonterm == 1.0);
}

TEST_CASE("expected work of split-join systems") {
    Model one = parse_model("states: q\nX -> q : 1\n");
    auto w1 = expected_work_psjs(one, *one.find_basic("X"));
    CHECK_FALSE(w1.infinite);
    CHECK(w1.value == doctest::Approx(1.0).epsilon(1e-12));

    // Every split is followed by one join rewrite: E W = (1 + p) / (1 − 2p).
    for (double p : {0.1, 0.25, 0.4}) {
        Model d = testing::doubler_psjs(std::to_string(p));
        auto w = expected_work_psjs(d, *d.find_basic("X"));
        REQUIRE_FALSE(w.infinite);
        CHECK(std::abs(w.value - (1 + p) / (1 - 2 * p)) < 1e-8);
    }
    Model crit = testing::doubler_psjs("1/2");
    auto f = finiteness(crit, *crit.find_basic("X"));
    CHECK(f.work == Verdict::Infinite);
    CHECK(f.time == Verdict::Infinite);
    Model near = testing::doubler_psjs("0.49");
    auto g = finiteness(near, *near.find_basic("X"));
    CHECK(g.work == Verdict::Finite);
    CHECK(g.time == Verdict::Finite);
    Model lossy = testing::doubler_psjs("2/3");
    auto l = expected_work_psjs(lossy, *lossy.find_basic("X"));
    CHECK(l.infinite);
}
