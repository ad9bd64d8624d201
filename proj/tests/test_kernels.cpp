#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "flowlens/kernels.hpp"
#include "flowlens/rng.hpp"

using namespace flowlens;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = (rng.uniform() - 0.5) * scale;
    return v;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

// The dispatched kernels (AVX2 on this host when available) must agree with
// the scalar references: exactly for min/max, to reassociation tolerance
// for sums.
TEST_CASE("kernels: dispatched backend matches scalar reference") {
    Rng rng(42);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 64u, 100u, 257u}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto v = random_vector(rng, n, 2000.0);
            const auto w = random_vector(rng, n, 2000.0);

            if (n > 0) {
                CHECK(kernels::minimum(v) == kernels::scalar::minimum(v));
                CHECK(kernels::maximum(v) == kernels::scalar::maximum(v));
            }
            CHECK(close_rel(kernels::sum(v), kernels::scalar::sum(v), 1e-12));
            const double center = n ? kernels::scalar::sum(v) / static_cast<double>(n) : 0.0;
            CHECK(close_rel(kernels::sum_sq_dev(v, center),
                            kernels::scalar::sum_sq_dev(v, center), 1e-12));
            CHECK(close_rel(kernels::squared_distance(v, w),
                            kernels::scalar::squared_distance(v, w), 1e-12));
        }
    }
}

TEST_CASE("kernels: integer-valued data reduces exactly") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(1 + rng.uniform_index(50));
        for (double& x : v) x = static_cast<double>(rng.uniform_index(1500));
        CHECK(kernels::sum(v) == kernels::scalar::sum(v)); // exact: integer addition
    }
}

TEST_CASE("kernels: empty-input conventions") {
    std::vector<double> empty;
    CHECK(kernels::sum(empty) == 0.0);
    CHECK(kernels::minimum(empty) == std::numeric_limits<double>::infinity());
    CHECK(kernels::maximum(empty) == -std::numeric_limits<double>::infinity());
    CHECK(kernels::sum_sq_dev(empty, 3.0) == 0.0);
}

TEST_CASE("kernels: backend is reported") {
    const std::string name = kernels::backend_name();
    CHECK((name == "avx2" || name == "scalar"));
}
