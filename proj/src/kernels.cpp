#include "flowlens/kernels.hpp"

#include <cassert>
#include <limits>

namespace flowlens::kernels {

namespace scalar {

double sum(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
}

double minimum(std::span<const double> v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v)
        if (x < m) m = x;
    return m;
}

double maximum(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v)
        if (x > m) m = x;
    return m;
}

double sum_sq_dev(std::span<const double> v, double center) {
    double acc = 0.0;
    for (double x : v) {
        const double d = x - center;
        acc += d * d;
    }
    return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace scalar

namespace {

struct Backend {
    const char* name;
    double (*sum)(std::span<const double>);
    double (*minimum)(std::span<const double>);
    double (*maximum)(std::span<const double>);
    double (*sum_sq_dev)(std::span<const double>, double);
    double (*squared_distance)(std::span<const double>, std::span<const double>);
};

constexpr Backend kScalar{"scalar",        scalar::sum,
                          scalar::minimum, scalar::maximum,
                          scalar::sum_sq_dev, scalar::squared_distance};

#if defined(FLOWLENS_HAVE_AVX2)
constexpr Backend kAvx2{"avx2",        avx2::sum,
                        avx2::minimum, avx2::maximum,
                        avx2::sum_sq_dev, avx2::squared_distance};
#endif

const Backend& select_backend() {
#if defined(FLOWLENS_HAVE_AVX2)
    static const Backend& chosen = __builtin_cpu_supports("avx2") ? kAvx2 : kScalar;
#else
    static const Backend& chosen = kScalar;
#endif
    return chosen;
}

} // namespace

double sum(std::span<const double> v) { return select_backend().sum(v); }
double minimum(std::span<const double> v) { return select_backend().minimum(v); }
double maximum(std::span<const double> v) { return select_backend().maximum(v); }
double sum_sq_dev(std::span<const double> v, double center) {
    return select_backend().sum_sq_dev(v, center);
}
double squared_distance(std::span<const double> a, std::span<const double> b) {
    return select_backend().squared_distance(a, b);
}
const char* backend_name() { return select_backend().name; }

} // namespace flowlens::kernels
