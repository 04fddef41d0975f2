#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sptest/harness.hpp"
#include "sptest/model.hpp"
#include "sptest/rng.hpp"
#include "sptest/tests_independent.hpp"

using namespace sptest;
using Eigen::VectorXd;

namespace {

Scenario base_scenario(int n, int p) {
    Scenario sc;
    sc.n = n;
    sc.p = p;
    sc.sigma = 1.0;
    sc.signal = SignalSpec{0, 0, 0.0, SignalPattern::spikes, 10.0, {}};
    return sc;
}

// Scales (Y, sigma) by a power of two; all decision arithmetic commutes
// exactly with dyadic scaling.
RegressionSample scaled(const RegressionSample& sample, double c) {
    RegressionSample out = sample;
    out.y *= c;
    out.theta_star *= c;
    return out;
}

}  // namespace

TEST_CASE("test_t threshold arithmetic") {
    // c_t = 1, sigma = 1, p = 100, alpha = 0.05, n = 300
    const double expected = std::sqrt(std::log(100.0 / 0.05) / 300.0);
    CHECK(expected == doctest::Approx(0.15917).epsilon(1e-4));

    Scenario sc = base_scenario(300, 100);
    const RegressionSample sample = generate_sample(sc, 1);
    const SplitSample split = split_sample(sample, 3);
    DesignConstants constants = DesignConstants::defaults();
    constants.c_t = 1.0;
    const TestReport report = test_t(sample, split, 0, 1.0, 0.05, 0.05, constants);
    CHECK(report.threshold == doctest::Approx(expected).epsilon(1e-12));
    CHECK(report.statistic == report.theta_tilde_order_stat);
}

TEST_CASE("z_chi formula cases") {
    VectorXd zero = VectorXd::Zero(7);
    CHECK(z_chi_statistic(zero, 1.0) == -1.0);

    VectorXd r(4);
    r.setConstant(std::sqrt(2.0));  // ||r||^2 = 8 = 2 m sigma^2 with m = 4, sigma = 1
    CHECK(z_chi_statistic(r, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("test_chi accepts on an exact noiseless fit") {
    Scenario sc = base_scenario(90, 20);
    sc.signal = SignalSpec{0, 0, 0.0, SignalPattern::spikes, 10.0, {}};
    RegressionSample sample = generate_sample(sc, 3);
    sample.y.setZero();  // sigma = 0 exact fit of theta* = 0
    const SplitSample split = split_sample(sample, 3);
    const TestReport report =
        test_chi(sample, split, 0, 1.0, 0.05, 0.05, DesignConstants::defaults());
    CHECK(report.statistic == doctest::Approx(-1.0));
    CHECK(!report.reject);
}

TEST_CASE("z_f on a supplied covariance vector is pure arithmetic") {
    const int p = 24;
    const double s = 1.0;
    const VectorXd w = VectorXd::Zero(p);
    const VectorXd theta_bar = VectorXd::Zero(p);
    const double z1 = z_f_statistic(w, theta_bar, s);
    const double z2 = z_f_statistic(w, theta_bar, s);
    CHECK(z1 == z2);
    CHECK(z1 == doctest::Approx(p * (1.0 - varphi(s, 0.0))).epsilon(1e-10));

    VectorXd mask = theta_bar;
    mask[3] = 1.0;  // one coordinate already attributed
    CHECK(z_f_statistic(w, mask, s) ==
          doctest::Approx((p - 1) * (1.0 - varphi(s, 0.0)) + 1.0).epsilon(1e-10));
}

TEST_CASE("v statistic matches its definition") {
    const int p = 10;
    Rng rng(5);
    VectorXd w(p);
    for (int j = 0; j < p; ++j) w[j] = rng.normal();
    VectorXd theta_bar = VectorXd::Zero(p);
    theta_bar[0] = 2.0;
    const double r = 1.4, omega = 1.1;
    double expected = 1.0;
    for (int j = 1; j < p; ++j) expected += 1.0 - eta_kernel(r, omega, w[j]);
    CHECK(v_statistic(w, theta_bar, r, omega) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("test_i is trivial below the dyadic gate") {
    Scenario sc = base_scenario(90, 64);
    const RegressionSample sample = generate_sample(sc, 11);
    const SplitSample split = split_sample(sample, 3);
    const TestReport report =
        test_i(sample, split, 2, 1.0, 0.05, 0.05, DesignConstants::defaults());
    CHECK(!report.reject);
    CHECK(report.per_l_statistic.empty());
}

TEST_CASE("test_i with an injected grid is deterministic and can reject") {
    Scenario sc = base_scenario(240, 64);
    const RegressionSample sample = generate_sample(sc, 21);
    const SplitSample split = split_sample(sample, 3);
    DesignConstants constants = DesignConstants::defaults();

    KernelParams params;
    params.s = 1.0;
    params.l0 = 16;
    params.grid.push_back({16, std::sqrt(2.0 * std::log(128.0 / 16.0)),
                           std::sqrt(std::log(16.0 / 8.0))});

    const TestReport a =
        test_i_with_params(sample, split, 2, 1.0, 0.05, 0.05, constants, params);
    const TestReport b =
        test_i_with_params(sample, split, 2, 1.0, 0.05, 0.05, constants, params);
    REQUIRE(a.per_l_statistic.size() == 1);
    CHECK(a.per_l_statistic[0] == b.per_l_statistic[0]);
    CHECK(a.per_l_threshold[0] == b.per_l_threshold[0]);

    // per-l threshold arithmetic
    const double l = 16.0, w = params.grid[0].w;
    const double dev = std::sqrt(2.0 * l * std::sqrt(64.0) *
                                 std::log(M_PI * M_PI * 1.0 / (6.0 * 0.05)));
    CHECK(a.per_l_threshold[0] ==
          doctest::Approx(2.0 + l + 0.5 * std::exp(0.5) * w * w + dev).epsilon(1e-12));
}

TEST_CASE("test_f has power against many flat small coefficients") {
    // k0 + delta = 2 k0 coordinates at 0.045 sigma ~ C sigma / sqrt(n log p)
    // with C ~ 11 (calibrated): each is far below the recovery scale
    // sqrt(log p / n) ~ 0.02, yet the Fourier statistic sums their mass.
    const int n = 12288, p = 144, k0 = 72;
    const double sigma = 1.0, alpha = 0.05, delta = 0.05;
    TestParams params;
    params.k0 = k0;

    const std::vector<Scenario> panel = null_panel(n, p, k0, sigma);
    DesignConstants constants = calibrate_threshold("t", params, panel, 200, 881,
                                                    DesignConstants::defaults());
    constants = calibrate_threshold("f", params, panel, 200, 882, constants);

    Scenario alt = base_scenario(n, p);
    alt.signal = SignalSpec{k0, k0, 0.045 * std::sqrt(double(k0)), SignalPattern::flat_small,
                            10.0, {}};
    int rejected = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        const RegressionSample sample = generate_sample(alt, 88000 + trial);
        const SplitSample split = split_sample(sample, 3);
        if (test_f(sample, split, k0, sigma, alpha, delta, constants).reject) ++rejected;
    }
    CHECK(rejected >= static_cast<int>(0.8 * trials));
}

TEST_CASE("test_i with an injected grid rejects a dense moderate signal") {
    // p = 64 with every coordinate carrying a moderate coefficient: each
    // V-term approaches 1 while the injected threshold stays near 48
    Scenario sc = base_scenario(4800, 64);
    sc.signal = SignalSpec{2, 62, 3.54, SignalPattern::flat_small, 10.0, {}};
    DesignConstants constants = DesignConstants::defaults();

    KernelParams params;
    params.s = 1.0;
    params.l0 = 16;
    params.grid.push_back({16, std::sqrt(2.0 * std::log(8.0)), std::sqrt(std::log(2.0))});

    int rejected = 0;
    int null_rejected = 0;
    Scenario null_sc = base_scenario(4800, 64);
    for (int trial = 0; trial < 20; ++trial) {
        const RegressionSample alt = generate_sample(sc, 5900 + trial);
        const SplitSample split = split_sample(alt, 3);
        if (test_i_with_params(alt, split, 2, 1.0, 0.05, 0.05, constants, params).reject) {
            ++rejected;
        }
        const RegressionSample null_sample = generate_sample(null_sc, 6900 + trial);
        if (test_i_with_params(null_sample, split, 2, 1.0, 0.05, 0.05, constants, params)
                .reject) {
            ++null_rejected;
        }
    }
    CHECK(rejected >= 18);
    CHECK(null_rejected <= 2);
}

TEST_CASE("aggregate level stays below the union-bound target on the pure null") {
    // alpha = delta = 0.04; empirical aggregate level well under 5(alpha+delta)
    Scenario sc = base_scenario(210, 500);
    const DesignConstants constants = DesignConstants::defaults();
    int rejected = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const RegressionSample sample = generate_sample(sc, 7700 + trial);
        if (test_ag(sample, 0, 1.0, 0.04, 0.04, constants).reject) ++rejected;
    }
    CHECK(static_cast<double>(rejected) / trials <= 0.25);
}

TEST_CASE("independent decisions are exactly scale equivariant") {
    DesignConstants constants = DesignConstants::defaults();
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        Scenario sc = base_scenario(90, 40);
        if (trial % 2 == 0) {
            sc.signal = SignalSpec{1, 2, 0.8, SignalPattern::flat_small, 10.0, {}};
        }
        const RegressionSample sample = generate_sample(sc, 900 + trial);
        const SplitSample split = split_sample(sample, 3);
        const double c = trial % 3 == 0 ? 4.0 : 0.5;  // dyadic scalings
        const RegressionSample big = scaled(sample, c);

        const int k0 = 1;
        const double sigma = sc.sigma;
        CHECK(test_t(sample, split, k0, sigma, 0.05, 0.05, constants).reject ==
              test_t(big, split, k0, c * sigma, 0.05, 0.05, constants).reject);
        CHECK(test_chi(sample, split, k0, sigma, 0.05, 0.05, constants).reject ==
              test_chi(big, split, k0, c * sigma, 0.05, 0.05, constants).reject);
        CHECK(test_f(sample, split, k0, sigma, 0.05, 0.05, constants).reject ==
              test_f(big, split, k0, c * sigma, 0.05, 0.05, constants).reject);
        CHECK(test_i(sample, split, k0, sigma, 0.05, 0.05, constants).reject ==
              test_i(big, split, k0, c * sigma, 0.05, 0.05, constants).reject);
        ++checked;
    }
    CHECK(checked == 50);
}

TEST_CASE("pipeline accepts the classical-lasso pilot substitution") {
    Scenario sc = base_scenario(120, 40);
    sc.signal = SignalSpec{1, 0, 0.0, SignalPattern::spikes, 6.0, {}};
    const RegressionSample sample = generate_sample(sc, 64);
    const SplitSample split = split_sample(sample, 3);

    const IndepPipeline default_pipe = build_indep_pipeline(sample, split, 0.05);
    const IndepPipeline lasso_pipe =
        build_indep_pipeline(sample, split, 0.05, PilotEstimator::lasso, sc.sigma);
    CHECK(default_pipe.theta_tilde.size() == lasso_pipe.theta_tilde.size());
    // both pilots localize the spike; the debiased estimates stay close
    CHECK(std::abs(default_pipe.theta_tilde[0] - lasso_pipe.theta_tilde[0]) <= 0.5);
    CHECK(lasso_pipe.fit.theta_hat[0] != 0.0);
}

TEST_CASE("aggregate rejects iff some component rejects") {
    DesignConstants constants = DesignConstants::defaults();
    for (int trial = 0; trial < 20; ++trial) {
        Scenario sc = base_scenario(90, 30);
        if (trial % 2 == 1) {
            sc.signal = SignalSpec{0, 5, 2.0, SignalPattern::flat_small, 10.0, {}};
        }
        const RegressionSample sample = generate_sample(sc, 333 + trial);
        const TestReport report = test_ag(sample, 1, 1.0, 0.05, 0.05, constants);
        REQUIRE(report.sub_reports.size() == 5);
        bool any = false;
        for (const TestReport& sub : report.sub_reports) any = any || sub.reject;
        CHECK(report.reject == any);
    }
}

TEST_CASE("dense guard fires on a dense strong signal") {
    Scenario sc = base_scenario(120, 30);
    sc.signal = SignalSpec{0, 30, 12.0, SignalPattern::flat_small, 10.0, {}};
    const RegressionSample sample = generate_sample(sc, 42);
    const TestReport report = test_ag(sample, 0, 1.0, 0.05, 0.05, DesignConstants::defaults());
    const TestReport& guard = report.sub_reports.back();
    CHECK(guard.name == "dense-guard");
    CHECK(guard.reject);
    CHECK(report.reject);
}

TEST_CASE("calibrated level and monotone power for test_chi at unit scale") {
    const int n = 120, p = 200, k0 = 2;
    TestParams params;
    params.k0 = k0;

    const std::vector<Scenario> nulls = null_panel(n, p, k0, 1.0);
    DesignConstants constants = calibrate_threshold("chi", params, nulls, 400, 99,
                                                    DesignConstants::defaults());
    CHECK(constants.provenance_of("c_chi") == "calibrated");

    // level on a fresh batch
    const DecisionFn test = make_test("chi", params, constants);
    const RiskEstimate level = estimate_risk(test, nulls, {nulls[0]}, 400, 1234);
    CHECK(level.type1 <= 0.05 + 0.06);

    // monotonicity: power at 2 rho at least power at rho minus 2 SE
    Scenario alt = nulls[0];
    alt.signal = SignalSpec{k0, 30, 0.9, SignalPattern::flat_small, 10.0, {}};
    Scenario alt2 = alt;
    alt2.signal.rho = 1.8;
    const RiskEstimate r1 = estimate_risk(test, nulls, {alt}, 300, 777);
    const RiskEstimate r2 = estimate_risk(test, nulls, {alt2}, 300, 778);
    const double power1 = 1.0 - r1.type2;
    const double power2 = 1.0 - r2.type2;
    const double se = r1.type2_half_width() / 1.96;
    CHECK(power2 >= power1 - 2.0 * se);
}

TEST_CASE("threshold-mode consistency: injecting the calibrated constant reproduces decisions") {
    const int n = 90, p = 60, k0 = 1;
    TestParams params;
    params.k0 = k0;
    const std::vector<Scenario> nulls = null_panel(n, p, k0, 1.0);
    const DesignConstants calibrated =
        calibrate_threshold("t", params, nulls, 200, 5, DesignConstants::defaults());

    DesignConstants injected = DesignConstants::defaults();
    injected.c_t = calibrated.c_t;  // same value, analytic tag
    for (int trial = 0; trial < 30; ++trial) {
        const RegressionSample sample = generate_sample(nulls[0], 4000 + trial);
        const SplitSample split = split_sample(sample, 3);
        const TestReport a = test_t(sample, split, k0, 1.0, 0.05, 0.05, calibrated);
        const TestReport b = test_t(sample, split, k0, 1.0, 0.05, 0.05, injected);
        CHECK(a.reject == b.reject);
        CHECK(a.threshold == b.threshold);
        CHECK(a.threshold_mode == "calibrated");
        CHECK(b.threshold_mode == "analytic");
    }
}
