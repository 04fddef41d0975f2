#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sptest/errors.hpp"
#include "sptest/kernels.hpp"
#include "sptest/rng.hpp"

using namespace sptest;

namespace {

// Independent fixed-grid oracle: composite trapezoid, panel count chosen by
// the caller. Kept free of the adaptive engine on purpose.
double trapezoid(const std::function<double(double)>& f, double a, double b, long long panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.5 * (f(a) + f(b));
    for (long long i = 1; i < panels; ++i) sum += f(a + h * static_cast<double>(i));
    return sum * h;
}

double varphi_oracle(double s, double x, long long panels = 1000000) {
    return trapezoid(
        [&](double xi) {
            return (1.0 - std::abs(xi)) * std::cos(xi * s * x) * std::exp(0.5 * xi * xi * s * s);
        },
        -1.0, 1.0, panels);
}

double eta_oracle(double r, double w, double x, long long panels = 1000000) {
    const double scale = r / (1.0 - 2.0 * normal_sf(r));
    return scale * trapezoid(
                       [&](double xi) {
                           return std::exp(-0.5 * r * r * xi * xi) / std::sqrt(2.0 * M_PI) *
                                  std::exp(0.5 * xi * xi * w * w) * std::cos(xi * w * x);
                       },
                       -1.0, 1.0, panels);
}

double psi_oracle(double r, double w, double x, long long panels = 1000000) {
    const double scale = 1.0 / (1.0 - 2.0 * normal_sf(r));
    return scale * trapezoid(
                       [&](double xi) {
                           return std::exp(-0.5 * xi * xi) / std::sqrt(2.0 * M_PI) *
                                  std::cos(xi * x * w / r);
                       },
                       -r, r, panels);
}

}  // namespace

TEST_CASE("normal tail and quantile are mutually consistent") {
    CHECK(normal_sf(0.0) == doctest::Approx(0.5));
    CHECK(normal_sf(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-9));
    for (double q : {0.4, 0.1, 0.01, 1e-4, 1e-8}) {
        const double x = normal_upper_quantile(q);
        CHECK(normal_sf(x) == doctest::Approx(q).epsilon(1e-10));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("varphi is even in x") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const double s = 0.2 + 2.5 * rng.uniform();
        const double x = 6.0 * (rng.uniform() - 0.5);
        CHECK(varphi(s, -x) == varphi(s, x));  // exact: quadrature sees |x|
    }
}

TEST_CASE("varphi matches the trapezoid oracle") {
    CHECK(std::abs(varphi(1.0, 0.0) - varphi_oracle(1.0, 0.0)) <= 1e-8);
    CHECK(std::abs(varphi(0.7, 2.3) - varphi_oracle(0.7, 2.3)) <= 1e-8);
    CHECK(std::abs(varphi(2.0, 5.0) - varphi_oracle(2.0, 5.0)) <= 1e-8);
}

TEST_CASE("varphi Monte Carlo mean matches 2(1-cos(sa))/(sa)^2 at (1, pi)") {
    const double s = 1.0;
    const double a = M_PI;
    const long long n = 1000000;
    Rng rng(20240201);
    double sum = 0.0, sum_sq = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double v = varphi(s, a + rng.normal());
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sum_sq / n - mean * mean) / n);
    const double expected = 4.0 / (M_PI * M_PI);  // 2(1-cos(pi))/pi^2
    CHECK(std::abs(mean - expected) <= 3.0 * sd);
}

TEST_CASE("g_pop closed-form values") {
    CHECK(g_pop(0.0) == 0.0);
    CHECK(g_pop(2.0 * M_PI) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g_pop(M_PI) == doctest::Approx(1.0 - 4.0 / (M_PI * M_PI)).epsilon(1e-14));
    // series / direct branches agree near the switch point
    for (double u : {9.9e-5, 1.00001e-4, 5e-5}) {
        const double direct = 1.0 - 2.0 * (1.0 - std::cos(u)) / (u * u);
        CHECK(g_pop(u) == doctest::Approx(direct).epsilon(1e-6));
    }
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double u = 40.0 * (rng.uniform() - 0.5);
        const double g = g_pop(u);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
    }
}

TEST_CASE("eta_kernel is even and matches the trapezoid oracle") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const double r = 0.5 + 2.5 * rng.uniform();
        const double w = 0.5 + 2.5 * rng.uniform();
        const double x = 4.0 * (rng.uniform() - 0.5);
        CHECK(eta_kernel(r, w, -x) == eta_kernel(r, w, x));
    }
    CHECK(std::abs(eta_kernel(2.0, 3.0, 0.0) - eta_oracle(2.0, 3.0, 0.0)) <= 1e-8);
    CHECK(std::abs(eta_kernel(1.5, 1.0, 2.0) - eta_oracle(1.5, 1.0, 2.0)) <= 1e-8);
}

TEST_CASE("eta_kernel Monte Carlo mean matches psi_pop at (2, 3, 1)") {
    const double r = 2.0, w = 3.0, a = 1.0;
    const long long n = 1000000;
    Rng rng(77);
    double sum = 0.0, sum_sq = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double v = eta_kernel(r, w, a + rng.normal());
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - psi_pop(r, w, a)) <= 3.0 * sd);
}

TEST_CASE("psi_pop properties") {
    CHECK(psi_pop(2.0, 3.0, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(psi_pop(0.8, 1.7, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(psi_pop(2.0, 3.0, -1.3) == psi_pop(2.0, 3.0, 1.3));
    CHECK(std::abs(psi_pop(2.0, 3.0, 1.0) - psi_oracle(2.0, 3.0, 1.0)) <= 1e-8);
    // far tail: |psi| below the exponential bound plus the grid slack scale
    const double bound = 2.0 * std::exp(-9.0 * 400.0 / 4.0) + std::exp(-2.0);
    CHECK(std::abs(psi_pop(2.0, 3.0, 20.0)) <= bound);
}

TEST_CASE("quadrature failure on an overflowing integrand") {
    CHECK_THROWS_AS(varphi(60.0, 0.0), QuadratureFailure);
}

TEST_CASE("kernel_params small-k0 branches") {
    KernelParams kp = kernel_params(0, 1000);
    CHECK(kp.s == 1.0);
    CHECK(kp.grid.empty());

    // e * k0 / sqrt(p) == 1 at p = ceil(e^2 k0^2): inner log vanishes
    kp = kernel_params(10, 739);
    CHECK(kp.s == doctest::Approx(1.0));

    // below the 2^11 sqrt(p) gate the grid stays empty
    kp = kernel_params(2000, 4);
    CHECK(kp.grid.empty());
}

TEST_CASE("kernel_params dyadic grid at k0 = 2^12 sqrt(p), p = 2^20") {
    const long long p = 1LL << 20;
    const long long k0 = 1LL << 22;  // 2^12 * sqrt(p)
    const KernelParams kp = kernel_params(k0, p);
    REQUIRE(!kp.grid.empty());

    const long long l0_expected = static_cast<long long>(
        std::ceil(std::pow(static_cast<double>(k0), 0.8) * std::pow(static_cast<double>(p), 0.1)));
    CHECK(kp.l0 == l0_expected);
    for (std::size_t g = 0; g < kp.grid.size(); ++g) {
        const KernelGridEntry& e = kp.grid[g];
        CHECK(e.l == (kp.l0 << g));
        CHECK(e.l <= k0 / 4);
        CHECK(e.r > 0.0);
        CHECK(e.w > 0.0);
        CHECK(std::isfinite(e.r));
        CHECK(std::isfinite(e.w));
        CHECK(e.r == doctest::Approx(std::sqrt(2.0 * std::log(double(k0) / double(e.l)))));
        CHECK(e.w == doctest::Approx(std::sqrt(std::log(double(e.l) / std::sqrt(double(p))))));
    }
}

TEST_CASE("adaptive quadrature tracks the oracle across a parameter grid") {
    // 20-point grid spanning the regimes the statistics use
    const double s_values[4] = {0.5, 1.0, 1.5, 2.2};
    const double x_values[5] = {0.0, 0.5, 1.0, 3.0, 8.0};
    for (double s : s_values) {
        for (double x : x_values) {
            CHECK(std::abs(varphi(s, x) - varphi_oracle(s, x)) <= 1e-8);
        }
    }
}
