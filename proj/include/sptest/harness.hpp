#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sptest/model.hpp"
#include "sptest/report.hpp"

namespace sptest {

struct RiskEstimate {
    double type1 = 0.0;
    double type2 = 0.0;
    double risk = 0.0;
    double half_width = 0.0;  // Wald 95% for the risk (components combined)
    long long trials = 0;
    std::uint64_t seed = 0;
    long long excluded = 0;  // trials dropped on DidNotConverge

    double type1_half_width() const;
    double type2_half_width() const;
};

/// Decision function: reject (true) / accept (false) on one sample.
using DecisionFn = std::function<bool(const RegressionSample&, const Scenario&)>;

/// Statistic function for calibration; returns one or more components
/// (one per grid entry for the dyadic test).
using StatisticFn = std::function<std::vector<double>(const RegressionSample&, const Scenario&)>;

/// Worst-case empirical type I over nulls plus worst-case type II over
/// alternatives, with per-(scenario, trial) substreams from seed.
RiskEstimate estimate_risk(const DecisionFn& test, const std::vector<Scenario>& null_scenarios,
                           const std::vector<Scenario>& alt_scenarios, long long trials,
                           std::uint64_t seed);

/// Empirical (1 - alpha)-quantiles of the statistic components, each maximized
/// over the supplied null scenarios.
std::vector<double> calibrate_quantiles(const StatisticFn& statistic,
                                        const std::vector<Scenario>& null_scenarios,
                                        double alpha, long long trials, std::uint64_t seed);

/// Known test families the harness can calibrate and evaluate by name.
/// Independent setting: "t", "chi", "f", "i", "ag".
/// General setting: "u", "th-mcp", "th-ith", "general-ag".
struct TestParams {
    int k0 = 0;
    double sigma = 1.0;
    double alpha = 0.05;
    double delta = 0.05;
    double eta = 3.0;
};

DecisionFn make_test(const std::string& name, const TestParams& params,
                     const DesignConstants& constants);

/// Null calibration panel for a given (n, p, k0): the zero signal plus, for
/// k0 > 0, k0 spikes of magnitude 10 sigma sqrt(log(p)/n).
std::vector<Scenario> null_panel(int n, int p, int k0, double sigma);

/// Replaces the family's constant(s) with Monte Carlo null quantiles and tags
/// them "calibrated". Returns the updated registry.
DesignConstants calibrate_threshold(const std::string& test_name, const TestParams& params,
                                    const std::vector<Scenario>& null_scenarios,
                                    long long trials, std::uint64_t seed,
                                    DesignConstants constants);

/// Bisection (12 steps) for the rho where the risk crosses gamma. The
/// bracketing pre-check throws NotBracketed.
double separation_search(const std::function<double(double rho, int probe)>& risk_at_rho,
                         double gamma, double rho_lo, double rho_hi);

/// Convenience wrapper: risk of a named test on the scenario template with the
/// alternative's rho swept; `trials` applies per probe.
double separation_search(const std::string& test_name, const TestParams& params,
                         const DesignConstants& constants, const Scenario& scenario_template,
                         double gamma, double rho_lo, double rho_hi, long long trials,
                         std::uint64_t seed);

enum class RateSetting { independent, general };

struct RateQuery {
    RateSetting setting = RateSetting::independent;
    long long n = 0, p = 0, k0 = 0, delta = 0;
    double varsigma = 0.05;  // regime-boundary exponent
};

struct RateResult {
    double rate = 0.0;      // squared separation rate (upper bound in the gap rows)
    double rate_alt = 0.0;  // second candidate (gap / lower bound rows)
    bool has_alt = false;
    std::string regime;
};

/// Reference squared separation rates from the regime tables.
RateResult rate_reference(const RateQuery& q);

struct SweepConfig {
    std::vector<int> n_values;
    std::vector<int> p_values;
    std::vector<int> k0_values;
    std::vector<int> delta_values;
    std::vector<double> rho_values;
    std::vector<std::string> tests;
    long long trials = 100;
    double alpha = 0.05;
    double delta_param = 0.05;
    double eta = 3.0;
    double sigma = 1.0;
    SignalPattern pattern = SignalPattern::flat_small;
    std::uint64_t seed = 0;
    RateSetting rate_setting = RateSetting::independent;
    DesignConstants constants = DesignConstants::defaults();
};

/// Cartesian sweep writing one CSV row per cell; per-cell errors go to the
/// `error` column and the sweep continues. Byte-deterministic under a fixed
/// seed.
void sweep(const SweepConfig& config, std::ostream& out);

}  // namespace sptest
