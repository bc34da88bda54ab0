#pragma once

#include <cstddef>

namespace psjs::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);

// Chosen once from CPU features; PSJS_SIMD=scalar forces the reference path.
Isa active_isa();
// Overrides dispatch (tests and benchmarks). Throws if the ISA is unavailable.
void force_isa(Isa isa);

// Σ a[i]·b[i]
double dot(const double* a, const double* b, std::size_t n);
// Σ a[i]·b[n-1-i], the inner loop of a discrete convolution.
double dot_reversed(const double* a, const double* b, std::size_t n);
// max |a[i] - b[i]|, 0 for n = 0
double max_abs_diff(const double* a, const double* b, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double dot_reversed(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double dot_reversed(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double dot_reversed(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
} // namespace neon
#endif

} // namespace psjs::kernels
