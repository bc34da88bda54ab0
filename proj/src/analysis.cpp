#include "psjs/analysis.hpp"

#include "simplex.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace psjs {

// ---- characteristic matrix ----

int CharMatrix::position(SymbolId s) const {
    auto it = std::find(index.begin(), index.end(), s);
    return it == index.end() ? -1 : static_cast<int>(it - index.begin());
}

double CharMatrix::at(std::size_t i, std::size_t j) const {
    for (const auto& e : rows[i])
        if (e.col == j) return e.value;
    return 0.0;
}

std::vector<std::vector<double>> CharMatrix::dense() const {
    std::vector<std::vector<double>> out(size(), std::vector<double>(size(), 0.0));
    for (std::size_t i = 0; i < size(); ++i)
        for (const auto& e : rows[i]) out[i][e.col] = e.value;
    return out;
}

CharMatrix CharMatrix::from_exact(const std::vector<std::vector<Rational>>& a) {
    CharMatrix m;
    m.rows.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        m.index.push_back(static_cast<SymbolId>(i));
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (a[i][j] != 0) m.rows[i].push_back({static_cast<std::uint32_t>(j), a[i][j], a[i][j].get_d()});
    }
    return m;
}

CharMatrix CharMatrix::from_dense(const std::vector<std::vector<double>>& a) {
    CharMatrix m;
    m.rows.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        m.index.push_back(static_cast<SymbolId>(i));
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (a[i][j] != 0.0) m.rows[i].push_back({static_cast<std::uint32_t>(j), rational_from_double(a[i][j]), a[i][j]});
    }
    return m;
}

CharMatrix characteristic_matrix(const Model& bp) {
    if (!bp.flags().branching) throw AnalysisError("characteristic matrix needs a branching process");
    CharMatrix A;
    A.index = bp.process_symbols();
    A.rows.resize(A.index.size());
    for (std::size_t i = 0; i < A.index.size(); ++i) {
        std::map<std::uint32_t, Rational> row;
        for (auto ri : bp.rules_of(A.index[i])) {
            const Rule& r = bp.rules()[ri];
            for (SymbolId c : r.rhs.children())
                if (bp.is_process(c)) row[static_cast<std::uint32_t>(bp.process_index(c))] += r.prob;
        }
        for (auto& [j, v] : row) A.rows[i].push_back({j, v, v.get_d()});
    }
    return A;
}

namespace {

Model reduce_to(const Model& bp, const std::vector<SymbolId>& roots, std::vector<SymbolId>* map_out = nullptr) {
    std::vector<char> seen(bp.symbol_count(), 0);
    std::vector<SymbolId> stack;
    for (SymbolId r : roots)
        if (!seen[r]) {
            seen[r] = 1;
            stack.push_back(r);
        }
    while (!stack.empty()) {
        SymbolId s = stack.back();
        stack.pop_back();
        for (auto ri : bp.rules_of(s))
            for (SymbolId c : bp.rules()[ri].rhs.children())
                if (bp.is_process(c) && !seen[c]) {
                    seen[c] = 1;
                    stack.push_back(c);
                }
    }
    ModelBuilder b;
    std::vector<SymbolId> map(bp.symbol_count(), kNoSymbol);
    for (SymbolId q : bp.sync_states()) map[q] = b.sync(bp.symbol(q).name);
    for (SymbolId s : bp.process_symbols())
        if (seen[s]) map[s] = b.basic(bp.symbol(s).name);
    for (const Rule& r : bp.rules()) {
        if (!seen[r.lhs]) continue;
        Rhs rhs = r.rhs;
        for (std::size_t i = 0; i < rhs.arity; ++i) rhs.items[i] = map[rhs.items[i]];
        b.add_rule(map[r.lhs], rhs, r.prob);
    }
    b.flags() = bp.flags();
    if (bp.start() && seen[*bp.start()]) b.set_start(map[*bp.start()]);
    if (map_out) *map_out = map;
    return b.build();
}

// Strongly connected components of the positive-entry graph, iterative Tarjan.
std::vector<std::vector<std::uint32_t>> components(const CharMatrix& A) {
    const std::size_t n = A.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on(n, 0);
    std::vector<std::uint32_t> st;
    std::vector<std::vector<std::uint32_t>> out;
    int counter = 0;
    struct Frame {
        std::uint32_t v;
        std::size_t edge;
    };
    for (std::uint32_t s = 0; s < n; ++s) {
        if (index[s] >= 0) continue;
        std::vector<Frame> call{{s, 0}};
        index[s] = low[s] = counter++;
        st.push_back(s);
        on[s] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& row = A.rows[f.v];
            if (f.edge < row.size()) {
                std::uint32_t w = row[f.edge++].col;
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    st.push_back(w);
                    on[w] = 1;
                    call.push_back({w, 0});
                } else if (on[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            std::uint32_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::uint32_t> comp;
                std::uint32_t w;
                do {
                    w = st.back();
                    st.pop_back();
                    on[w] = 0;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                out.push_back(std::move(comp));
            }
        }
    }
    return out;
}

struct Sub {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;
};

Sub restrict(const CharMatrix& A, const std::vector<std::uint32_t>& comp, std::vector<int>& local) {
    Sub s;
    s.rows.resize(comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i) local[comp[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < comp.size(); ++i)
        for (const auto& e : A.rows[comp[i]])
            if (local[e.col] >= 0) s.rows[i].push_back({static_cast<std::uint32_t>(local[e.col]), e.value});
    return s;
}

// Power iteration on the irreducible block plus the identity.
// With decide set, stops once the bracket separates the radius from 1 by more than the near-critical band.
double block_radius(const Sub& s, double tol, std::size_t max_iter, bool decide = false) {
    const std::size_t n = s.rows.size();
    std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
        double sum = 0.0;
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = x[i];
            for (auto [j, a] : s.rows[i]) v += a * x[j];
            y[i] = v;
            sum += v;
            double r = v / x[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / sum;
        if (hi - lo <= tol * hi) break;
        if (decide && hi - lo <= 1e-4 * hi && (hi < 2.0 - kNearCritical || lo > 2.0 + kNearCritical)) break;
    }
    return 0.5 * (lo + hi) - 1.0;
}

struct ExactOps {
    bool negative(const Rational& x) const { return sgn(x) < 0; }
    bool positive(const Rational& x) const { return sgn(x) > 0; }
    bool zero(const Rational& x) const { return sgn(x) == 0; }
    bool less(const Rational& a, const Rational& b) const { return a < b; }
    void clean(std::vector<Rational>&) const {}
};

struct FloatOps {
    double eps = 1e-9;
    bool negative(double x) const { return x < -eps; }
    bool positive(double x) const { return x > eps; }
    bool zero(double x) const { return std::abs(x) <= eps; }
    bool less(double a, double b) const { return a < b; }
    void clean(std::vector<double>& v) const {
        for (double& x : v)
            if (std::abs(x) < 1e-15) x = 0.0;
    }
};

} // namespace

Model reduce_bp(const Model& bp, SymbolId x0) {
    if (!bp.is_process(x0)) throw AnalysisError("reduce_bp: start is not a process symbol");
    return reduce_to(bp, {x0});
}

const char* lp_method_name(LpMethod m) {
    switch (m) {
    case LpMethod::Exact: return "exact";
    case LpMethod::Floating: return "floating";
    case LpMethod::PowerIteration: return "power-iteration";
    }
    return "?";
}

nlohmann::ordered_json SubcriticalityReport::to_json() const {
    nlohmann::ordered_json j;
    j["subcritical"] = subcritical;
    j["rho_estimate"] = rho_estimate;
    j["near_critical"] = near_critical;
    j["estimate_agrees"] = estimate_agrees;
    j["lp_method"] = lp_method_name(method);
    j["components"] = components;
    j["largest_component"] = largest_component;
    j["warnings"] = warnings;
    return j;
}

double spectral_radius(const CharMatrix& A, double tol, std::size_t max_iter) {
    double rho = 0.0;
    std::vector<int> local(A.size(), -1);
    for (const auto& comp : components(A)) {
        Sub s = restrict(A, comp, local);
        if (comp.size() == 1) {
            rho = std::max(rho, s.rows[0].empty() ? 0.0 : s.rows[0][0].second);
        } else {
            rho = std::max(rho, block_radius(s, tol, max_iter));
        }
        for (auto c : comp) local[c] = -1;
    }
    return rho;
}

SubcriticalityReport is_subcritical(const CharMatrix& A, const SubcriticalityOptions& opt) {
    SubcriticalityReport rep;
    const Rational shift = Rational(1) - rational_from_double(opt.margin);
    const double dshift = 1.0 - opt.margin;
    std::vector<int> local(A.size(), -1);
    auto comps = components(A);
    rep.components = comps.size();
    LpMethod worst = LpMethod::Exact;
    for (const auto& comp : comps) {
        rep.largest_component = std::max(rep.largest_component, comp.size());
        Sub s = restrict(A, comp, local);
        bool sub = true;
        double rho = 0.0;
        if (comp.size() == 1) {
            Rational a(0);
            for (const auto& e : A.rows[comp[0]])
                if (e.col == comp[0]) a = e.exact;
            sub = a < shift;
            rho = a.get_d();
        } else {
            rho = block_radius(s, 1e-13, 200000, true);
            const std::size_t n = comp.size();
            detail::LpOutcome lp = detail::LpOutcome::Failed;
            LpMethod used = LpMethod::PowerIteration;
            bool small = n <= opt.exact_limit;
            for (std::size_t i = 0; small && i < n; ++i)
                for (const auto& e : A.rows[comp[i]])
                    if (local[e.col] >= 0 &&
                        (mpz_sizeinbase(e.exact.get_num_mpz_t(), 2) > opt.exact_bits ||
                         mpz_sizeinbase(e.exact.get_den_mpz_t(), 2) > opt.exact_bits)) {
                        small = false;
                        break;
                    }
            if (small) {
                std::vector<std::vector<Rational>> B(n, std::vector<Rational>(n, Rational(0)));
                for (std::size_t i = 0; i < n; ++i) {
                    for (const auto& e : A.rows[comp[i]])
                        if (local[e.col] >= 0) B[i][local[e.col]] = e.exact;
                    B[i][i] -= shift;
                }
                lp = detail::cone_feasible(B, ExactOps{}, 50 * n + 1000);
                used = LpMethod::Exact;
            } else if (n <= opt.lp_limit) {
                std::vector<std::vector<double>> B(n, std::vector<double>(n, 0.0));
                for (std::size_t i = 0; i < n; ++i) {
                    for (auto [j, a] : s.rows[i]) B[i][j] = a;
                    B[i][i] -= dshift;
                }
                lp = detail::cone_feasible(B, FloatOps{}, 50 * n + 1000);
                used = LpMethod::Floating;
            }
            if (lp == detail::LpOutcome::Failed) {
                if (used != LpMethod::PowerIteration)
                    rep.warnings.push_back("LP did not finish on a component of size " + std::to_string(n));
                else
                    rep.warnings.push_back("component of size " + std::to_string(n) + " decided by power iteration");
                used = LpMethod::PowerIteration;
                sub = rho < dshift;
            } else {
                sub = lp == detail::LpOutcome::Infeasible;
            }
            if (static_cast<int>(used) > static_cast<int>(worst)) worst = used;
        }
        rep.rho_estimate = std::max(rep.rho_estimate, rho);
        rep.subcritical = rep.subcritical && sub;
        for (auto c : comp) local[c] = -1;
    }
    rep.method = worst;
    rep.near_critical = std::abs(rep.rho_estimate - 1.0) <= kNearCritical;
    rep.estimate_agrees = (rep.rho_estimate < 1.0) == rep.subcritical;
    return rep;
}

nlohmann::ordered_json Expectation::to_json() const {
    nlohmann::ordered_json j;
    j["infinite"] = infinite;
    if (infinite) j["value"] = nullptr;
    else j["value"] = value;
    j["residual"] = residual;
    j["subcriticality"] = subcriticality.to_json();
    return j;
}

namespace {

// w = (I − A)⁻¹·1 on the block reachable from roots.
struct WorkSolve {
    bool infinite = false;
    std::vector<double> values;  // per root
    double residual = 0.0;
    SubcriticalityReport report;
};

WorkSolve solve_work(const Model& bp, const std::vector<SymbolId>& roots, const SubcriticalityOptions& opt) {
    WorkSolve out;
    std::vector<SymbolId> proc;
    for (SymbolId r : roots)
        if (bp.is_process(r)) proc.push_back(r);
    std::vector<SymbolId> map;
    Model red = reduce_to(bp, proc, &map);
    CharMatrix A = characteristic_matrix(red);
    out.report = is_subcritical(A, opt);
    if (!out.report.subcritical) {
        out.infinite = true;
        return out;
    }
    using SpMat = Eigen::SparseMatrix<double>;
    const auto n = static_cast<Eigen::Index>(A.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (const auto& e : A.rows[i]) trip.emplace_back(i, e.col, -e.value);
    SpMat M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n), w(n);
    if (n > 0) {
        Eigen::SparseLU<SpMat> lu;
        lu.compute(M);
        if (lu.info() != Eigen::Success) throw AnalysisError("expected work: singular system (I − A)");
        w = lu.solve(ones);
        out.residual = (M * w - ones).lpNorm<Eigen::Infinity>();
    }
    for (SymbolId r : roots) {
        if (!bp.is_process(r)) {
            out.values.push_back(0.0);
            continue;
        }
        out.values.push_back(w[red.process_index(map[r])]);
    }
    return out;
}

} // namespace

Expectation expected_work_bp(const Model& bp, SymbolId x0, const SubcriticalityOptions& opt) {
    if (!bp.flags().branching) throw AnalysisError("expected_work_bp needs a branching process");
    Expectation e;
    if (!bp.is_process(x0)) {
        e.value = 0.0;
        return e;
    }
    auto w = solve_work(bp, {x0}, opt);
    e.infinite = w.infinite;
    e.subcriticality = w.report;
    e.residual = w.residual;
    if (!w.infinite) e.value = w.values[0];
    return e;
}

Expectation conditional_expected_work(const Model& m, const TermMatrix& terms, SymbolId a, SymbolId q) {
    if (!(terms.value(a, q) > 0.0)) throw AnalysisError("conditional expected work: [a↓q] = 0");
    Expectation e;
    if (m.is_sync(a)) return e;
    SubcriticalityOptions so;
    std::vector<SymbolId> roots;
    Model bp;
    if (m.flags().branching) {
        bp = m;
        roots.push_back(a);
    } else {
        ConditionedBp cbp = conditioned_bp(m, terms);
        roots.push_back(cbp.at(a, q));
        bp = std::move(cbp.bp);
        so.margin = kConditionedMargin;
    }
    auto w = solve_work(bp, roots, so);
    e.infinite = w.infinite;
    e.residual = w.residual;
    e.subcriticality = w.report;
    if (!w.infinite) e.value = w.values[0];
    return e;
}

nlohmann::ordered_json SpaceReport::to_json() const {
    nlohmann::ordered_json j;
    j["p_finite"] = p_finite;
    j["p_terminate"] = p_terminate;
    j["p_bounded_nonterm"] = p_bounded_nonterm;
    j["converged"] = converged;
    j["tolerance"] = tolerance;
    return j;
}

SpaceReport space_probability(const Model& m, SymbolId a, const SolveOptions& opt) {
    if (!m.is_process(a)) throw AnalysisError("space_probability: symbol is not a process symbol");
    FiniteSpace fs = finite_space_transform(m);
    const Model& t = fs.model;
    SymbolId at = t.resolve(m.display(a));
    TermMatrix terms = solve_termination(t, opt);
    SpaceReport r;
    for (SymbolId q : t.sync_states())
        if (q != fs.qbar) r.p_terminate += terms.value(at, q);
    r.p_bounded_nonterm = terms.value(at, fs.qbar);
    r.p_finite = r.p_terminate + r.p_bounded_nonterm;
    r.converged = terms.converged;
    r.tolerance = terms.tolerance;
    return r;
}

nlohmann::ordered_json WorkReport::to_json() const {
    nlohmann::ordered_json j;
    j["infinite"] = infinite;
    if (infinite) j["value"] = nullptr;
    else j["value"] = value;
    j["termination"] = termination;
    j["residual"] = residual;
    j["renormalisation_defect"] = renormalisation_defect;
    if (subcriticality) j["subcriticality"] = subcriticality->to_json();
    if (!reason.empty()) j["reason"] = reason;
    return j;
}

WorkReport expected_work_psjs(const Model& m, SymbolId a, const SolveOptions& opt) {
    if (!m.in_sigma(a)) throw AnalysisError("expected_work: symbol is not in Σ");
    WorkReport rep;
    if (m.is_sync(a)) {
        rep.termination = 1.0;
        return rep;
    }
    Model norm = ensure_normalised(m);
    SymbolId an = norm.resolve(m.display(a));
    TermMatrix terms = solve_termination(norm, opt);
    rep.termination = terms.total(an);
    if (rep.termination < 1.0 - kTerminationTolerance) {
        rep.infinite = true;
        rep.reason = "nonterminating runs have positive probability";
        return rep;
    }
    SubcriticalityOptions so;
    if (norm.flags().branching) {
        auto w = solve_work(norm, {an}, so);
        rep.subcriticality = w.report;
        rep.infinite = w.infinite;
        rep.residual = w.residual;
        if (!w.infinite) rep.value = w.values[0];
        if (w.infinite) rep.reason = "characteristic matrix is not subcritical";
        return rep;
    }
    ConditionedBp cbp = conditioned_bp(norm, terms);
    rep.renormalisation_defect = cbp.max_defect;
    so.margin = kConditionedMargin;
    std::vector<SymbolId> roots;
    std::vector<double> weights;
    for (SymbolId q : norm.sync_states()) {
        double v = terms.value(an, q);
        if (v <= 0.0) continue;
        roots.push_back(cbp.at(an, q));
        weights.push_back(v);
    }
    auto w = solve_work(cbp.bp, roots, so);
    rep.subcriticality = w.report;
    rep.residual = w.residual;
    if (w.infinite) {
        rep.infinite = true;
        rep.reason = "characteristic matrix of the conditioned process is not subcritical";
        return rep;
    }
    for (std::size_t i = 0; i < roots.size(); ++i) rep.value += weights[i] * w.values[i];
    return rep;
}

const char* verdict_name(Verdict v) { return v == Verdict::Finite ? "finite" : "infinite"; }

nlohmann::ordered_json FinitenessReport::to_json() const {
    nlohmann::ordered_json j;
    j["work"] = verdict_name(work);
    j["time"] = verdict_name(time);
    j["detail"] = detail.to_json();
    return j;
}

FinitenessReport finiteness(const Model& m, SymbolId a, const SolveOptions& opt) {
    FinitenessReport r;
    r.detail = expected_work_psjs(m, a, opt);
    r.work = r.time = r.detail.infinite ? Verdict::Infinite : Verdict::Finite;
    return r;
}

} // namespace psjs
