#pragma once

#include <string>
#include <vector>

namespace sptest {

/// Pure-data outcome of one test run. `reject` always equals
/// statistic-exceeds-threshold under the test's rejection rule (an early
/// rejection is recorded as an infinite statistic).
struct TestReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool reject = false;
    std::string threshold_mode = "analytic";  // or "calibrated"

    // per-l values for the dyadic test
    std::vector<double> per_l_statistic;
    std::vector<double> per_l_threshold;

    // side channels
    double theta_tilde_order_stat = 0.0;
    int support_size = -1;
    bool condition_A = true;
    bool condition_B = true;
    bool degenerate = false;   // zero-residual / zero-norm fallbacks
    std::string regime;        // general aggregation branch

    std::vector<TestReport> sub_reports;
};

}  // namespace sptest
