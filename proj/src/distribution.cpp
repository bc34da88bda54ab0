#include "psjs/distribution.hpp"

#include "psjs/kernels.hpp"
#include "psjs/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace psjs {

const char* kind_name(DistKind k) { return k == DistKind::Time ? "time" : "work"; }

double Pmf::cdf(std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i <= k && i < mass.size(); ++i) s += mass[i];
    return s;
}

double Pmf::survival(std::size_t k) const {
    if (cond_prob <= 0.0) return 0.0;
    return std::max(0.0, 1.0 - cdf(k) / cond_prob);
}

std::string Pmf::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "k,mass,cdf,tail\n";
    double c = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) {
        c += mass[k];
        os << k << ',' << mass[k] << ',' << c << ',' << std::max(0.0, cond_prob - c) << '\n';
    }
    return os.str();
}

nlohmann::ordered_json Pmf::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(kind);
    j["K"] = K();
    j["cond_prob"] = cond_prob;
    j["tail"] = tail;
    j["mass"] = mass;
    return j;
}

struct DistributionEngine::Impl {
    Model model;
    DistKind kind;
    TermMatrix terms;
    EquationSystem sys;
    bool bp = false;

    std::vector<char> active;
    std::vector<std::uint32_t> order;
    std::size_t levels = 0;  // tables hold entries 0..levels-1
    std::vector<std::vector<double>> d;    // per variable
    std::vector<std::vector<double>> cdf;  // per variable, time only
    std::vector<double> delta, ones;
    std::vector<std::vector<double>> aux;  // per monomial
    std::vector<double> prev;              // per monomial, last product term

    Impl(const Model& m, DistKind k, TermMatrix t)
        : model(m), kind(k), terms(std::move(t)), sys(build_equation_system(m, true)),
          bp(m.flags().branching) {
        active.assign(sys.size(), 0);
        d.resize(sys.size());
        cdf.resize(sys.size());
        aux.resize(sys.monomials().size());
        prev.assign(sys.monomials().size(), 0.0);
    }

    const std::vector<double>& table(std::uint32_t f) const { return f == kOne ? delta : d[f]; }
    const std::vector<double>& cdf_table(std::uint32_t f) const { return f == kOne ? ones : cdf[f]; }

    void reset() {
        levels = 0;
        delta.clear();
        ones.clear();
        for (auto& v : d) v.clear();
        for (auto& v : cdf) v.clear();
        for (auto& v : aux) v.clear();
        std::fill(prev.begin(), prev.end(), 0.0);
    }

    void activate(std::uint32_t root) {
        if (active[root]) return;
        std::vector<std::uint32_t> stack{root};
        active[root] = 1;
        while (!stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            order.push_back(i);
            for (auto k = sys.begin(i); k < sys.end(i); ++k) {
                const Monomial& mo = sys.monomials()[k];
                for (std::size_t f = 0; f < mo.size(); ++f)
                    if (mo.factor[f] != kOne && !active[mo.factor[f]]) {
                        active[mo.factor[f]] = 1;
                        stack.push_back(mo.factor[f]);
                    }
            }
        }
        if (levels > 0) {
            std::size_t keep = levels;
            reset();
            extend(keep);
        }
    }

    double work_term(std::uint32_t k, std::size_t n) {
        const Monomial& mo = sys.monomials()[k];
        const std::size_t sz = mo.size();
        if (sz == 1) return table(mo.factor[0])[n - 1];
        const auto& t0 = table(mo.factor[0]);
        const auto& t1 = table(mo.factor[1]);
        double c01 = kernels::dot_reversed(t0.data(), t1.data(), n);
        if (sz == 2) return c01;
        auto& c = aux[k];
        c.push_back(c01);
        return kernels::dot_reversed(c.data(), table(mo.factor[2]).data(), n);
    }

    double time_term(std::uint32_t k, std::size_t n) {
        const Monomial& mo = sys.monomials()[k];
        const std::size_t sz = mo.size();
        if (sz == 1) return table(mo.factor[0])[n - 1];
        if (!mo.join) {
            double g = 1.0;
            for (std::size_t f = 0; f < sz; ++f) g *= cdf_table(mo.factor[f])[n - 1];
            double out = g - prev[k];
            prev[k] = g;
            return out;
        }
        double g = cdf_table(mo.factor[0])[n - 1] * cdf_table(mo.factor[1])[n - 1];
        auto& m = aux[k];
        m.push_back(g - prev[k]);
        prev[k] = g;
        return kernels::dot_reversed(m.data(), table(mo.factor[2]).data(), n);
    }

    void extend(std::size_t count) {
        std::vector<double> next(order.size());
        while (levels < count) {
            const std::size_t n = levels;
            if (n == 0) {
                std::fill(next.begin(), next.end(), 0.0);
            } else {
                for (std::size_t idx = 0; idx < order.size(); ++idx) {
                    auto i = order[idx];
                    double s = 0.0;
                    for (auto k = sys.begin(i); k < sys.end(i); ++k)
                        s += sys.monomials()[k].c * (kind == DistKind::Work ? work_term(k, n) : time_term(k, n));
                    next[idx] = std::max(0.0, s);
                }
            }
            delta.push_back(n == 0 ? 1.0 : 0.0);
            ones.push_back(1.0);
            for (std::size_t idx = 0; idx < order.size(); ++idx) {
                auto i = order[idx];
                d[i].push_back(next[idx]);
                if (kind == DistKind::Time) cdf[i].push_back((cdf[i].empty() ? 0.0 : cdf[i].back()) + next[idx]);
            }
            ++levels;
        }
    }
};

DistributionEngine::DistributionEngine(const Model& m, DistKind kind)
    : DistributionEngine(m, kind, is_normalised(m) ? solve_termination(m) : TermMatrix{}) {}

DistributionEngine::DistributionEngine(const Model& m, DistKind kind, const TermMatrix& terms) {
    if (!is_normalised(m)) throw AnalysisError("distributions need a normalised model; normalise it first");
    impl_ = std::make_unique<Impl>(m, kind, terms);
}

DistributionEngine::~DistributionEngine() = default;
DistributionEngine::DistributionEngine(DistributionEngine&&) noexcept = default;
DistributionEngine& DistributionEngine::operator=(DistributionEngine&&) noexcept = default;

const TermMatrix& DistributionEngine::terms() const { return impl_->terms; }
DistKind DistributionEngine::kind() const { return impl_->kind; }

Pmf DistributionEngine::pmf(SymbolId a, SymbolId q, std::size_t K) {
    Impl& im = *impl_;
    if (!im.model.is_sync(q)) throw AnalysisError("conditioning target must be a sync state");
    if (!im.model.in_sigma(a)) throw AnalysisError("symbol is not in Σ");
    Pmf out;
    out.kind = im.kind;
    out.mass.assign(K + 1, 0.0);
    if (im.model.is_sync(a)) {
        if (a == q) {
            out.mass[0] = 1.0;
            out.cond_prob = 1.0;
        }
        return out;
    }
    auto v = im.sys.find(a, q);
    if (!v) return out;
    im.activate(*v);
    im.extend(K + 1);
    std::copy(im.d[*v].begin(), im.d[*v].begin() + static_cast<std::ptrdiff_t>(K + 1), out.mass.begin());
    out.cond_prob = im.terms.value(a, q);
    double s = 0.0;
    for (double x : out.mass) s += x;
    out.tail = std::max(0.0, out.cond_prob - s);
    return out;
}

Pmf time_distribution(const Model& m, SymbolId a, SymbolId q, std::size_t K) {
    DistributionEngine e(m, DistKind::Time);
    return e.pmf(a, q, K);
}

Pmf work_distribution(const Model& m, SymbolId a, SymbolId q, std::size_t K) {
    DistributionEngine e(m, DistKind::Work);
    return e.pmf(a, q, K);
}

TailExpectation tail_expectation(const Pmf& pmf, double cond_prob) {
    if (!(cond_prob > 0.0)) throw AnalysisError("tail_expectation: conditioning probability must be positive");
    TailExpectation out;
    out.K = pmf.K();
    double c = 0.0, sum = 0.0, last = 1.0;
    for (std::size_t k = 0; k < pmf.mass.size(); ++k) {
        c += pmf.mass[k];
        last = std::max(0.0, 1.0 - c / cond_prob);
        sum += last;
    }
    out.lower_bound = sum;
    out.tail_at_K = last;
    out.converged = last < kTailTolerance;
    return out;
}

TailExpectation conditional_expectation(DistributionEngine& engine, SymbolId a, SymbolId q, std::size_t k0,
                                        std::size_t k_max) {
    double c = engine.terms().value(a, q);
    if (!(c > 0.0)) throw AnalysisError("conditional expectation: [a↓q] = 0");
    std::size_t K = std::max<std::size_t>(k0, 1);
    for (;;) {
        auto t = tail_expectation(engine.pmf(a, q, K), c);
        if (t.converged || K >= k_max) return t;
        K = std::min(K * 2, k_max);
    }
}

} // namespace psjs
