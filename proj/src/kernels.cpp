#include "sptest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sptest/errors.hpp"

namespace sptest {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Gauss-Kronrod 15/7 nodes and weights on [-1, 1] (QUADPACK values).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
    double kronrod;
    double error;
    bool finite;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(center - half * kXgk[i]);
        fv[14 - i] = f(center + half * kXgk[i]);
    }
    fv[7] = f(center);

    double kron = kWgk[7] * fv[7];
    double gauss = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kron += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kron *= half;
    gauss *= half;

    PanelResult r;
    r.kronrod = kron;
    r.error = std::abs(kron - gauss);
    r.finite = std::isfinite(kron) && std::isfinite(gauss);
    return r;
}

}  // namespace

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// Wichura's PPND16 (algorithm AS241).
double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) {
        throw InvalidConfig("normal_quantile: probability must be in (0,1)");
    }
    const double q = prob - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? prob : 1.0 - prob;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

double normal_upper_quantile(double q) { return -normal_quantile(q); }

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_panels) {
    if (a == b) return 0.0;
    const double total_width = std::abs(b - a);

    struct Panel {
        double a, b;
        PanelResult r;
    };
    std::deque<Panel> work;
    work.push_back({a, b, gk15(f, a, b)});
    int panels = 1;
    double sum = 0.0;

    while (!work.empty()) {
        Panel panel = work.front();
        work.pop_front();
        if (!panel.r.finite) {
            throw QuadratureFailure("integrate: non-finite integrand values");
        }
        const double budget = abs_tol * std::abs(panel.b - panel.a) / total_width;
        if (panel.r.error <= budget) {
            sum += panel.r.kronrod;
            continue;
        }
        if (panels >= max_panels) {
            throw QuadratureFailure("integrate: panel cap reached before tolerance");
        }
        const double mid = 0.5 * (panel.a + panel.b);
        work.push_back({panel.a, mid, gk15(f, panel.a, mid)});
        work.push_back({mid, panel.b, gk15(f, mid, panel.b)});
        ++panels;
    }
    return sum;
}

double varphi(double s, double x) {
    if (!(s > 0.0)) throw InvalidConfig("varphi: s must be positive");
    const double ax = std::abs(x);
    const double s2 = s * s;
    auto f = [&](double xi) {
        return (1.0 - xi) * std::cos(xi * s * ax) * std::exp(0.5 * xi * xi * s2);
    };
    return 2.0 * integrate(f, 0.0, 1.0);
}

double g_pop(double u) {
    const double au = std::abs(u);
    if (au < 1e-4) {
        const double u2 = u * u;
        return u2 / 12.0 - u2 * u2 / 360.0;
    }
    return 1.0 - 2.0 * (1.0 - std::cos(u)) / (u * u);
}

double eta_kernel(double r, double w, double x) {
    if (!(r > 0.0) || !(w > 0.0)) throw InvalidConfig("eta_kernel: r, w must be positive");
    const double ax = std::abs(x);
    const double scale = r / (1.0 - 2.0 * normal_sf(r));
    auto f = [&](double xi) {
        return kInvSqrt2Pi * std::exp(0.5 * xi * xi * (w * w - r * r)) * std::cos(xi * w * ax);
    };
    return scale * 2.0 * integrate(f, 0.0, 1.0);
}

double psi_pop(double r, double w, double x) {
    if (!(r > 0.0) || !(w > 0.0)) throw InvalidConfig("psi_pop: r, w must be positive");
    const double ax = std::abs(x);
    const double scale = 1.0 / (1.0 - 2.0 * normal_sf(r));
    auto f = [&](double xi) {
        return kInvSqrt2Pi * std::exp(-0.5 * xi * xi) * std::cos(xi * ax * w / r);
    };
    return scale * 2.0 * integrate(f, 0.0, r);
}

KernelParams kernel_params(long long k0, long long p) {
    if (k0 < 0 || p < 1) throw InvalidConfig("kernel_params: need k0 >= 0, p >= 1");
    KernelParams params;

    const double sqrt_p = std::sqrt(static_cast<double>(p));
    double inner = 0.0;
    if (k0 > 0) {
        inner = std::max(0.0, 1.0 + std::log(static_cast<double>(k0) / sqrt_p));
    }
    params.s = std::max(1.0, std::sqrt(inner));

    if (static_cast<double>(k0) < 2048.0 * sqrt_p) {
        return params;  // dyadic test is trivial in this regime
    }

    params.l0 = static_cast<long long>(std::ceil(
        std::pow(static_cast<double>(k0), 0.8) * std::pow(static_cast<double>(p), 0.1)));
    const double ratio = static_cast<double>(k0) / static_cast<double>(params.l0);
    const long long j_max = static_cast<long long>(std::floor(std::log2(ratio)));
    // l_max = 2^j_max * l0 / 4 <= k0/4
    if (j_max < 2) return params;
    const long long l_max = (params.l0 << (j_max - 2));

    for (long long l = params.l0; l <= l_max; l <<= 1) {
        KernelGridEntry e;
        e.l = l;
        e.r = std::sqrt(2.0 * std::log(static_cast<double>(k0) / static_cast<double>(l)));
        e.w = std::sqrt(std::log(static_cast<double>(l) / sqrt_p));
        params.grid.push_back(e);
    }
    return params;
}

}  // namespace sptest
