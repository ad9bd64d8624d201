#include "flowlens/kernels.hpp"

#if defined(FLOWLENS_HAVE_AVX2)

#include <cassert>
#include <immintrin.h>
#include <limits>

namespace flowlens::kernels::avx2 {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double hmin(__m128d v) {
    __m128d shuf = _mm_unpackhi_pd(v, v);
    return _mm_cvtsd_f64(_mm_min_sd(v, shuf));
}

double hmax(__m128d v) {
    __m128d shuf = _mm_unpackhi_pd(v, v);
    return _mm_cvtsd_f64(_mm_max_sd(v, shuf));
}

} // namespace

double sum(std::span<const double> v) {
    const double* p = v.data();
    std::size_t n = v.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += p[i];
    return total;
}

double minimum(std::span<const double> v) {
    const double* p = v.data();
    std::size_t n = v.size();
    double tail = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(p);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_min_pd(acc, _mm256_loadu_pd(p + i));
        __m128d m = _mm_min_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
        tail = hmin(m);
    }
    for (; i < n; ++i)
        if (p[i] < tail) tail = p[i];
    return tail;
}

double maximum(std::span<const double> v) {
    const double* p = v.data();
    std::size_t n = v.size();
    double tail = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(p);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(p + i));
        __m128d m = _mm_max_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
        tail = hmax(m);
    }
    for (; i < n; ++i)
        if (p[i] > tail) tail = p[i];
    return tail;
}

double sum_sq_dev(std::span<const double> v, double center) {
    const double* p = v.data();
    std::size_t n = v.size();
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = p[i] - center;
        total += d * d;
    }
    return total;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const double* pa = a.data();
    const double* pb = b.data();
    std::size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = pa[i] - pb[i];
        total += d * d;
    }
    return total;
}

} // namespace flowlens::kernels::avx2

#endif // FLOWLENS_HAVE_AVX2
