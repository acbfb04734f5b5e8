#pragma once

// Data-parallel inner loops shared by the point-set code paths (discrete
// assignment, grid oracle, quadrature reductions). Each kernel has a scalar
// reference and vectorized variants; the variant is picked once at runtime
// from CPUID and can be overridden for equivalence testing.

#include <span>
#include <string_view>

#include "kcover/geometry.hpp"

namespace kcover::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
// Best variant the running CPU supports.
Isa detected_isa();
Isa active_isa();
// Throws std::invalid_argument when the CPU lacks the instruction set.
void set_active_isa(Isa isa);

// out[i] = (xs[i] - p.x)^2 + (ys[i] - p.y)^2. Bit-identical across variants.
void squared_distances(std::span<const double> xs, std::span<const double> ys, Point2 p,
                       std::span<double> out);

// sum_i a[i] * b[i]. Summation order is fixed per variant.
double dot(std::span<const double> a, std::span<const double> b);

// out[i] = min(out[i], v[i]); returns nothing, used to fold per-generator
// distance rows into a running minimum.
void min_inplace(std::span<double> out, std::span<const double> v);

namespace scalar {
void squared_distances(const double* xs, const double* ys, double px, double py, double* out, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void min_inplace(double* out, const double* v, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define KCOVER_HAVE_AVX2_KERNELS 1
namespace avx2 {
void squared_distances(const double* xs, const double* ys, double px, double py, double* out, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void min_inplace(double* out, const double* v, std::size_t n);
}  // namespace avx2
#endif

}  // namespace kcover::kernels
