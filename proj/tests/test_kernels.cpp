#include "psjs/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace psjs::kernels;

namespace {

std::vector<Isa> available() {
    std::vector<Isa> out{Isa::Scalar};
    for (Isa i : {Isa::Avx2, Isa::Neon})
        if (isa_available(i)) out.push_back(i);
    return out;
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(b)); }

} // namespace

TEST_CASE("SIMD kernels match the scalar reference") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Isa saved = active_isa();
    for (Isa isa : available()) {
        force_isa(isa);
        CAPTURE(isa_name(isa));
        for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1001}) {
            std::vector<double> a(n), b(n);
            for (auto& x : a) x = u(rng);
            for (auto& x : b) x = u(rng) - 0.5;
            CHECK(close(dot(a.data(), b.data(), n), scalar::dot(a.data(), b.data(), n)));
            CHECK(close(dot_reversed(a.data(), b.data(), n), scalar::dot_reversed(a.data(), b.data(), n)));
            CHECK(max_abs_diff(a.data(), b.data(), n) == scalar::max_abs_diff(a.data(), b.data(), n));
        }
    }
    force_isa(saved);
}

TEST_CASE("dot_reversed is a convolution coefficient") {
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    for (Isa isa : available()) {
        force_isa(isa);
        CHECK(dot_reversed(a.data(), b.data(), 3) == 1 * 6 + 2 * 5 + 3 * 4);
        CHECK(dot(a.data(), b.data(), 3) == 32);
    }
}
