#pragma once

#include <cstddef>
#include <span>

// Numeric inner-loop kernels used by feature statistics and ADASYN
// neighbor search. Scalar reference implementations are always built;
// an AVX2 variant is selected at runtime when the CPU supports it.
// The dispatched entry points must agree with the scalar references on
// every input (equivalence-tested; min/max/sum over integer-valued data
// are exact, general sums agree to reassociation tolerance).

namespace flowlens::kernels {

namespace scalar {
double sum(std::span<const double> v);
double minimum(std::span<const double> v); // +inf when empty
double maximum(std::span<const double> v); // -inf when empty
double sum_sq_dev(std::span<const double> v, double center);
double squared_distance(std::span<const double> a, std::span<const double> b);
} // namespace scalar

#if defined(FLOWLENS_HAVE_AVX2)
namespace avx2 {
double sum(std::span<const double> v);
double minimum(std::span<const double> v);
double maximum(std::span<const double> v);
double sum_sq_dev(std::span<const double> v, double center);
double squared_distance(std::span<const double> a, std::span<const double> b);
} // namespace avx2
#endif

// Runtime-dispatched entry points.
double sum(std::span<const double> v);
double minimum(std::span<const double> v);
double maximum(std::span<const double> v);
double sum_sq_dev(std::span<const double> v, double center);
double squared_distance(std::span<const double> a, std::span<const double> b);

// "avx2" or "scalar".
const char* backend_name();

} // namespace flowlens::kernels
