#pragma once

#include <functional>
#include <vector>

namespace sptest {

/// Standard normal tail probability P(Z > x).
double normal_sf(double x);

/// Standard normal quantile (inverse CDF), Wichura AS241.
double normal_quantile(double prob);

/// Upper quantile: x with P(Z > x) = q.
double normal_upper_quantile(double q);

/// Adaptive Gauss-Kronrod 15-point quadrature over [a, b] by panel
/// bisection. Throws QuadratureFailure when the absolute tolerance cannot
/// be met within the panel cap or the integrand is non-finite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_panels = 1 << 14);

/// Fejer-smoothed cosine transform sum kernel:
/// integral over [-1,1] of (1-|xi|) cos(xi s x) exp(xi^2 s^2 / 2).
/// Even in x.
double varphi(double s, double x);

/// Population transform of 1 - varphi for a unit-variance Gaussian shifted
/// by u/s: g(u) = 1 - 2(1 - cos u)/u^2, with g(0) = 0 and range [0,1].
double g_pop(double u);

/// Truncated-Gaussian cosine kernel with tail-normalized constant:
/// (r / (1 - 2*normal_sf(r))) * integral over [-1,1] of
/// phi-like weight exp(-r^2 xi^2/2)/sqrt(2 pi) * exp(xi^2 w^2/2) cos(xi w x).
double eta_kernel(double r, double w, double x);

/// Population mean of eta_kernel(r, w, X) for X ~ N(x, 1):
/// (1/(1 - 2*normal_sf(r))) * integral over [-r,r] of
/// normal pdf(xi) cos(xi x w / r). Equals 1 at x = 0.
double psi_pop(double r, double w, double x);

struct KernelGridEntry {
    long long l;
    double r;
    double w;
};

struct KernelParams {
    double s = 1.0;
    long long l0 = 0;
    std::vector<KernelGridEntry> grid;  // empty means the dyadic test is trivial
};

/// Tuning parameters for the Fourier statistics: s floored at 1, and the
/// dyadic grid {l0, 2 l0, ...} up to l_max, built only when k0 is at least
/// 2^11 sqrt(p).
KernelParams kernel_params(long long k0, long long p);

}  // namespace sptest
