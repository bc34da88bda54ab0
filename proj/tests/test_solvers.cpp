#include "corpus.hpp"
#include "psjs/equations.hpp"
#include "psjs/solvers.hpp"

#include <doctest.h>

#include <cmath>

using namespace psjs;
using psjs::testing::ex1;

namespace {

// Least root of x = p x^2 + (1-p).
double doubler_root(double p) { return std::min(1.0, (1 - p) / p); }

} // namespace

TEST_CASE("EX1 equation shape") {
    Model m = ex1();
    auto sys = build_equation_system(m);
    SymbolId x = *m.find_basic("X"), q = *m.find_sync("q"), r = *m.find_sync("r");
    SymbolId j = *m.find_join(q, r);
    REQUIRE(sys.find(x, q));
    auto a = *sys.find(x, q), b = *sys.find(x, r);
    auto jq = *sys.find(j, q), jr = *sys.find(j, r);
    // v(X,q) = 1/2 · v(X,q) · v(X,r) · v(<q r>,q) + 3/10
    int split = 0, unary = 0;
    for (auto k = sys.begin(a); k < sys.end(a); ++k) {
        const Monomial& mo = sys.monomials()[k];
        if (mo.join) {
            ++split;
            CHECK(mo.coef == Rational(1, 2));
            CHECK(mo.factor[0] == a);
            CHECK(mo.factor[1] == b);
            CHECK(mo.factor[2] == jq);
        } else {
            ++unary;
            CHECK(mo.coef == Rational(3, 10));
            CHECK(mo.factor[0] == kOne);
        }
    }
    CHECK(split == 1);
    CHECK(unary == 1);
    // v(<q r>,r) = v(X,r)
    REQUIRE(sys.end(jr) - sys.begin(jr) == 1);
    CHECK(sys.monomials()[sys.begin(jr)].factor[0] == b);
}

TEST_CASE("one-rule system is constant after propagation") {
    Model m = parse_model("states: q\nX -> q : 1\n");
    auto sys = build_equation_system(m);
    REQUIRE(sys.size() == 1);
    auto t = kleene_solve(sys);
    CHECK(t.value(*m.find_basic("X"), *m.find_sync("q")) == 1.0);
    CHECK(t.value(*m.find_sync("q"), *m.find_sync("q")) == 1.0);
}

TEST_CASE("DOUBLER-as-pSJS equation is p v^2 + (1-p)") {
    Model m = psjs::testing::doubler_psjs("1/3");
    auto sys = build_equation_system(m);
    SymbolId x = *m.find_basic("X"), q = *m.find_sync("q");
    auto v = *sys.find(x, q);
    bool found = false;
    for (auto k = sys.begin(v); k < sys.end(v); ++k) {
        const Monomial& mo = sys.monomials()[k];
        if (mo.join) {
            found = true;
            CHECK(mo.factor[0] == v);
            CHECK(mo.factor[1] == v);
            auto jv = mo.factor[2];
            // v(<q q>,q) collapses to the constant 1
            REQUIRE(sys.end(jv) - sys.begin(jv) == 1);
            CHECK(sys.monomials()[sys.begin(jv)].factor[0] == kOne);
        }
    }
    CHECK(found);
}

TEST_CASE("Kleene on DOUBLER equations matches the quadratic root") {
    for (const char* p : {"1/4", "2/3", "1/10", "9/10"}) {
        Model m = psjs::testing::doubler(p);
        double pd = parse_rational(p).get_d();
        auto t = kleene_solve(build_equation_system(m));
        CHECK(t.converged);
        CHECK(t.monotone);
        CHECK(t.value(*m.find_basic("X"), *m.find_sync("bot")) == doctest::Approx(doubler_root(pd)).epsilon(1e-10));
    }
}

TEST_CASE("Newton needs fewer iterations than Kleene on DOUBLER(2/3)") {
    Model m = psjs::testing::doubler("2/3");
    auto sys = build_equation_system(m);
    auto k = kleene_solve(sys, 1e-12);
    auto n = newton_solve(sys, 1e-12);
    SymbolId x = *m.find_basic("X"), b = *m.find_sync("bot");
    CHECK(std::fabs(n.value(x, b) - 0.5) < 1e-12);
    CHECK(n.iterations < k.iterations);
}

TEST_CASE("Newton is exact on an affine system") {
    Model m = parse_model("states: q r\nA -> B : 1/2\nA -> q : 1/2\nB -> A : 1/3\nB -> r : 2/3\n");
    auto t = newton_solve(build_equation_system(m));
    SymbolId a = *m.find_basic("A"), q = *m.find_sync("q");
    // [A↓q] = 1/2 + 1/6 [A↓q]
    CHECK(t.value(a, q) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(t.iterations <= 2);
}

TEST_CASE("EX1 Kleene and Newton agree") {
    Model m = ex1();
    auto sys = build_equation_system(m);
    auto k = kleene_solve(sys, 1e-14);
    auto n = newton_solve(sys, 1e-14);
    for (SymbolId a : m.process_symbols())
        for (SymbolId q : m.sync_states()) CHECK(std::fabs(k.value(a, q) - n.value(a, q)) < 1e-10);
}

TEST_CASE("zero_set examples") {
    Model m = ex1();
    auto z = zero_set(build_equation_system(m, false));
    SymbolId x = *m.find_basic("X"), q = *m.find_sync("q"), r = *m.find_sync("r");
    CHECK_FALSE(z.count({x, q}));
    CHECK_FALSE(z.count({x, r}));

    Model two = parse_model("states: q r\nX -> q : 1\n");
    auto z2 = zero_set(build_equation_system(two, false));
    CHECK(z2.count({*two.find_basic("X"), *two.find_sync("r")}));

    Model stuck = parse_model("states: q\na -> <b c> : 1\nb -> q : 1\nc -> c : 1\n<q q> -> q : 1\n");
    auto z3 = zero_set(build_equation_system(stuck, false));
    CHECK(z3.count({*stuck.find_basic("a"), *stuck.find_sync("q")}));
    CHECK(z3.count({*stuck.find_basic("c"), *stuck.find_sync("q")}));
    CHECK_FALSE(z3.count({*stuck.find_basic("b"), *stuck.find_sync("q")}));
}

TEST_CASE("property: pruned and unpruned systems agree") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 100; ++i) {
        Model m = psjs::testing::random_model(gen);
        auto full = build_equation_system(m, false);
        auto pruned = build_equation_system(m, true);
        CHECK(zero_set(full) == zero_set(pruned));
        auto a = kleene_solve(full, 1e-13), b = newton_solve(pruned, 1e-13);
        REQUIRE(b.converged);
        for (SymbolId s : m.process_symbols())
            for (SymbolId q : m.sync_states()) {
                // Kleene stalls below the solution on critical systems; it must never overshoot.
                if (a.converged) CHECK(std::fabs(a.value(s, q) - b.value(s, q)) < 1e-9);
                else CHECK(a.value(s, q) <= b.value(s, q) + 1e-12);
            }
    }
}

TEST_CASE("property: solver invariants on random models") {
    std::mt19937_64 gen(17);
    for (int i = 0; i < 200; ++i) {
        Model m = psjs::testing::random_model(gen, 5, 3);
        auto sys = build_equation_system(m, false);
        std::vector<double> prev;
        bool mono = true;
        auto k = kleene_solve(sys, 1e-12, 1000000, [&](std::size_t, const std::vector<double>& x) {
            for (std::size_t j = 0; j < prev.size(); ++j) mono = mono && x[j] >= prev[j] && x[j] <= 1.0;
            prev = x;
        });
        auto n = newton_solve(sys, 1e-12);
        CHECK(mono);
        CHECK(k.monotone);
        auto z = zero_set(sys);
        for (SymbolId s : m.process_symbols())
            for (SymbolId q : m.sync_states()) {
                double kv = k.value(s, q), nv = n.value(s, q);
                CHECK(kv >= 0.0);
                CHECK(kv <= 1.0);
                if (k.converged && n.converged) CHECK(std::fabs(kv - nv) <= 1e-10);
                CHECK((z.count({s, q}) != 0) == (kv < 1e-12));
            }
    }
}

TEST_CASE("Newton resolves critical roots beyond double-residual precision") {
    Model d = testing::doubler("1/2");
    auto t = solve_termination(d);
    CHECK(t.converged);
    CHECK(t.value(*d.find_basic("X"), *d.find_sync("bot")) >= 1 - 1e-12);
    // x = 0.3x² + 0.4y + 0.3, y = x has the double root 1
    Model m = parse_model("states: bot\nflags: branching\n"
                          "X -> <X X> : 3/10\nX -> Y : 2/5\nX -> bot : 3/10\nY -> X : 1\n");
    auto u = solve_termination(m);
    for (const char* s : {"X", "Y"}) {
        const double v = u.value(*m.find_basic(s), *m.find_sync("bot"));
        CHECK(v >= 1 - 1e-12);
        CHECK(v <= 1.0);
    }
}
