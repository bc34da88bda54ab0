#include "psjs/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace psjs::kernels {

namespace {

struct Table {
    Isa isa;
    double (*dot)(const double*, const double*, std::size_t);
    double (*dot_reversed)(const double*, const double*, std::size_t);
    double (*max_abs_diff)(const double*, const double*, std::size_t);
};

constexpr Table kScalar{Isa::Scalar, scalar::dot, scalar::dot_reversed, scalar::max_abs_diff};
#if defined(__x86_64__) || defined(__i386__)
constexpr Table kAvx2{Isa::Avx2, avx2::dot, avx2::dot_reversed, avx2::max_abs_diff};
#endif
#if defined(__aarch64__)
constexpr Table kNeon{Isa::Neon, neon::dot, neon::dot_reversed, neon::max_abs_diff};
#endif

const Table* table_for(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return &kScalar;
#if defined(__x86_64__) || defined(__i386__)
    case Isa::Avx2: return &kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::Neon: return &kNeon;
#endif
    default: return nullptr;
    }
}

const Table* detect() {
    const char* env = std::getenv("PSJS_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
#if defined(__x86_64__) || defined(__i386__)
    if (isa_available(Isa::Avx2)) return &kAvx2;
#endif
#if defined(__aarch64__)
    return &kNeon;
#endif
    return &kScalar;
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> t{detect()};
    return t;
}

} // namespace

const char* isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "?";
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Isa active_isa() { return current().load()->isa; }

void force_isa(Isa isa) {
    const Table* t = table_for(isa);
    if (!t || !isa_available(isa)) throw std::invalid_argument(std::string("ISA not available: ") + isa_name(isa));
    current().store(t);
}

double dot(const double* a, const double* b, std::size_t n) { return current().load(std::memory_order_relaxed)->dot(a, b, n); }
double dot_reversed(const double* a, const double* b, std::size_t n) {
    return current().load(std::memory_order_relaxed)->dot_reversed(a, b, n);
}
double max_abs_diff(const double* a, const double* b, std::size_t n) {
    return current().load(std::memory_order_relaxed)->max_abs_diff(a, b, n);
}

} // namespace psjs::kernels
