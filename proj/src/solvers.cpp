#include "psjs/solvers.hpp"
#include "psjs/kernels.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace psjs {

const char* method_name(SolveMethod m) { return m == SolveMethod::Kleene ? "kleene" : "newton"; }

TermMatrix::TermMatrix(const EquationSystem& sys, const std::vector<double>& x)
    : sync_(sys.sync_states()), symbol_count_(sys.symbol_count()) {
    const std::size_t nq = sync_.size();
    values_.assign(symbol_count_ * nq, 0.0);
    sync_index_.assign(symbol_count_, -1);
    for (std::size_t i = 0; i < nq; ++i) {
        sync_index_[sync_[i]] = static_cast<int>(i);
        values_[sync_[i] * nq + i] = 1.0;
    }
    for (std::uint32_t i = 0; i < sys.size(); ++i) {
        const Variable& v = sys.variable(i);
        values_[v.sigma * nq + sync_index_[v.q]] = x[i];
    }
}

double TermMatrix::value(SymbolId sigma, SymbolId q) const {
    if (sigma >= symbol_count_ || q >= symbol_count_ || sync_index_[q] < 0) return 0.0;
    return values_[sigma * sync_.size() + sync_index_[q]];
}

double TermMatrix::total(SymbolId sigma) const {
    double s = 0.0;
    for (SymbolId q : sync_) s += value(sigma, q);
    return s;
}

nlohmann::ordered_json TermMatrix::to_json(const Model& m) const {
    nlohmann::ordered_json vals = nlohmann::ordered_json::object();
    for (SymbolId a : m.process_symbols()) {
        nlohmann::ordered_json row = nlohmann::ordered_json::object();
        for (SymbolId q : sync_) row[m.display(q)] = value(a, q);
        vals[m.display(a)] = row;
    }
    nlohmann::ordered_json j;
    j["method"] = method_name(method);
    j["tolerance"] = tolerance;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["values"] = vals;
    return j;
}

TermMatrix kleene_solve(const EquationSystem& sys, double tol, std::size_t max_iter, const IterateObserver& observe) {
    if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
    const std::size_t n = sys.size();
    std::vector<double> x(n, 0.0), y(n, 0.0);
    bool monotone = true, converged = n == 0;
    double change = 0.0;
    std::size_t it = 0;
    if (observe) observe(0, x);
    while (!converged && it < max_iter) {
        sys.evaluate(x, y);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::min(y[i], 1.0);
            if (y[i] < x[i]) monotone = false;
        }
        change = kernels::max_abs_diff(x.data(), y.data(), n);
        std::swap(x, y);
        ++it;
        if (observe) observe(it, x);
        converged = change < tol;
    }
    TermMatrix t(sys, x);
    t.method = SolveMethod::Kleene;
    t.tolerance = change;
    t.iterations = it;
    t.converged = converged;
    t.monotone = monotone;
    return t;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// I − f'(x)
SpMat newton_matrix(const EquationSystem& sys, const std::vector<double>& x,
                    std::vector<Eigen::Triplet<double>>& trip) {
    const auto n = static_cast<Eigen::Index>(sys.size());
    trip.clear();
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
    for (std::uint32_t i = 0; i < sys.size(); ++i)
        for (std::uint32_t k = sys.begin(i); k < sys.end(i); ++k) {
            const Monomial& mo = sys.monomials()[k];
            const std::size_t sz = mo.size();
            for (std::size_t f = 0; f < sz; ++f) {
                if (mo.factor[f] == kOne) continue;
                double d = mo.c;
                for (std::size_t g = 0; g < sz; ++g)
                    if (g != f && mo.factor[g] != kOne) d *= x[mo.factor[g]];
                trip.emplace_back(i, mo.factor[f], -d);
            }
        }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

#if defined(__SIZEOF_FLOAT128__) && !defined(__aarch64__)
using Wide = __float128;
#else
using Wide = long double;
#endif

void evaluate_wide(const EquationSystem& sys, const std::vector<Wide>& coef, const std::vector<Wide>& x,
                   std::vector<Wide>& out) {
    for (std::uint32_t i = 0; i < sys.size(); ++i) {
        Wide s = 0;
        for (std::uint32_t k = sys.begin(i); k < sys.end(i); ++k) {
            const Monomial& mo = sys.monomials()[k];
            Wide t = coef[k];
            for (std::size_t f = 0, n = mo.size(); f < n; ++f)
                if (mo.factor[f] != kOne) t *= x[mo.factor[f]];
            s += t;
        }
        out[i] = s;
    }
}

} // namespace

TermMatrix newton_solve(const EquationSystem& sys, double tol, std::size_t max_iter) {
    if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
    const auto n = static_cast<Eigen::Index>(sys.size());
    std::vector<double> x(sys.size(), 0.0), fx(sys.size()), next(sys.size());
    bool converged = n == 0, monotone = true;
    double change = 0.0;
    std::size_t it = 0;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseLU<SpMat> lu;
    bool pattern_ready = false, factored = false;
    auto solve_step = [&](const Eigen::VectorXd& rhs, Eigen::VectorXd& d) {
        SpMat A = newton_matrix(sys, x, trip);
        if (!pattern_ready) {
            lu.analyzePattern(A);
            pattern_ready = true;
        }
        lu.factorize(A);
        factored = lu.info() == Eigen::Success;
        if (!factored) return false;
        d = lu.solve(rhs);
        return lu.info() == Eigen::Success && d.allFinite();
    };
    Eigen::VectorXd rhs(n), d;
    while (!converged && it < max_iter) {
        sys.evaluate(x, fx);
        for (Eigen::Index i = 0; i < n; ++i) rhs[i] = fx[i] - x[i];
        const bool ok = solve_step(rhs, d);
        for (std::size_t i = 0; i < sys.size(); ++i) {
            double kleene = std::min(fx[i], 1.0);
            double v = ok ? std::max(x[i] + d[static_cast<Eigen::Index>(i)], kleene) : kleene;
            next[i] = std::clamp(v, 0.0, 1.0);
            if (next[i] < x[i]) monotone = false;
        }
        change = kernels::max_abs_diff(x.data(), next.data(), sys.size());
        std::swap(x, next);
        ++it;
        converged = change < tol;
    }

    // Near a critical root f(x) − x is of order (x* − x)², so a double residual
    // is rounding noise once the error reaches about 1e-8. Check, and if needed
    // polish, with a wide residual over the exact coefficients.
    if (converged && n > 0) {
        std::vector<Wide> coef, X(x.begin(), x.end()), F(sys.size());
        coef.reserve(sys.monomials().size());
        for (const Monomial& mo : sys.monomials()) {
            const double hi = mo.coef.get_d();
            const double lo = mpq_class(mo.coef - hi).get_d();
            coef.push_back(Wide(hi) + Wide(lo));
        }
        for (std::size_t polish = 0; polish < max_iter; ++polish, ++it) {
            evaluate_wide(sys, coef, X, F);
            for (Eigen::Index i = 0; i < n; ++i) rhs[i] = static_cast<double>(F[i] - X[i]);
            bool ok;
            if (polish == 0 && factored) {
                d = lu.solve(rhs);
                ok = lu.info() == Eigen::Success && d.allFinite();
            } else {
                ok = solve_step(rhs, d);
            }
            change = 0.0;
            for (std::size_t i = 0; i < sys.size(); ++i) {
                Wide v = ok ? X[i] + d[static_cast<Eigen::Index>(i)] : F[i];
                v = std::clamp(std::max(v, std::min(F[i], Wide(1))), Wide(0), Wide(1));
                if (v < X[i]) monotone = false;
                change = std::max(change, static_cast<double>(v > X[i] ? v - X[i] : X[i] - v));
                X[i] = v;
                x[i] = static_cast<double>(v);
            }
            if (change < tol * 1e-3) break;
        }
    }

    TermMatrix t(sys, x);
    t.method = SolveMethod::Newton;
    t.tolerance = change;
    t.iterations = it;
    t.converged = converged;
    t.monotone = monotone;
    return t;
}

TermMatrix solve_termination(const EquationSystem& sys, const SolveOptions& opt) {
    if (opt.method == SolveMethod::Kleene) return kleene_solve(sys, opt.tol, opt.max_iter ? opt.max_iter : 1000000);
    return newton_solve(sys, opt.tol, opt.max_iter ? opt.max_iter : 200);
}

TermMatrix solve_termination(const Model& m, const SolveOptions& opt) {
    return solve_termination(build_equation_system(m), opt);
}

} // namespace psjs
