#pragma once

#include <Eigen/Dense>

#include "sptest/model.hpp"
#include "sptest/report.hpp"
#include "sptest/solvers.hpp"

namespace sptest {

struct PropertySParams {
    double a1 = 1.0;
    double a2 = 2.0;
    double a3 = 1.0;
};

struct PropertySReport {
    bool holds = false;
    double size_lhs = 0.0, size_rhs = 0.0;      // |S| vs a2 * ||theta*||_0
    double missed_lhs = 0.0, missed_rhs = 0.0;  // missed mass vs small-entry budget
    int m_small = 0;                            // count of small non-zero entries
};

/// Normalized U-statistic of the residuals against block 1 of a 2-way split;
/// block 0 provides the projected square-root lasso estimate.
TestReport test_u(const RegressionSample& sample, const SplitSample& split, int k0,
                  double alpha, double delta, double eta, const DesignConstants& constants);

/// Raw statistic for a given evaluation design and residual vector.
double z_u_statistic(const Eigen::MatrixXd& x_eval, const Eigen::VectorXd& residual);

/// Default threshold constant sqrt(2) a1 + 11 eta^2 max(a3, 1) sqrt(log(4e/delta)).
double c_star_default(double a1, double a3, double eta, double delta);

/// Counts entries of theta/sigma_hat at least c_star sqrt(log(p)/m); rejects
/// when the count exceeds k0.
TestReport test_th(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y0, const SupportSet& s,
                   int k0, double c_star);

/// Support of an MCP stationary point, warm-started from the square-root
/// lasso with delta = 1/p and its plug-in variance.
SupportSet select_mcp(const Eigen::MatrixXd& x1, const Eigen::VectorXd& y1, double eta,
                      const DesignConstants& constants);

/// Iterative thresholded square-root lasso over log2(n)+1 sub-blocks with
/// orthogonal-complement projections of previously selected columns.
SupportSet select_iterative(const Eigen::MatrixXd& x1, const Eigen::VectorXd& y1, double eta,
                            double delta, const DesignConstants& constants);

/// Harness-only oracle: checks property S against the generative truth.
PropertySReport property_S_check(const SupportSet& s, const Eigen::VectorXd& theta_star,
                                 double sigma, const PropertySParams& params, int m, int p);

/// Regime-dependent aggregation: U-statistic OR restricted-LS count test when
/// p <= c_eta n^2 / log(2/delta), the count test alone otherwise.
TestReport test_general_ag(const RegressionSample& sample, int k0, double alpha, double delta,
                           double eta, const DesignConstants& constants);

}  // namespace sptest
