#pragma once

#include <Eigen/Dense>

#include "sptest/kernels.hpp"
#include "sptest/model.hpp"
#include "sptest/report.hpp"
#include "sptest/solvers.hpp"

namespace sptest {

/// Pilot estimator for the first block. The classical lasso is a permitted
/// substitution when sigma is known; the square-root lasso is the default
/// everywhere for uniformity.
enum class PilotEstimator { sqrt_lasso, lasso };

/// Shared estimation pipeline for the independent-setting tests: pilot fit on
/// block 0, one-step debiasing on block 1.
struct IndepPipeline {
    SqrtLassoFit fit;
    Eigen::VectorXd theta_tilde;
    int n_eff = 0;  // parts * m
};

IndepPipeline build_indep_pipeline(const RegressionSample& sample, const SplitSample& split,
                                   double delta,
                                   PilotEstimator pilot = PilotEstimator::sqrt_lasso,
                                   double sigma = 1.0);

/// Statistic helpers exposed for direct arithmetic checks.
double order_statistic(const Eigen::VectorXd& v, int j);  // j-th largest magnitude, 0 for j > p
double z_chi_statistic(const Eigen::VectorXd& residual, double sigma);
double z_f_statistic(const Eigen::VectorXd& w_over_u, const Eigen::VectorXd& theta_bar, double s);
double v_statistic(const Eigen::VectorXd& w_over_u, const Eigen::VectorXd& theta_bar,
                   double r, double w);

/// Order-statistic test on the debiased estimator: rejects when the
/// (k0+1)-th largest magnitude exceeds c_t sigma sqrt(log(p/alpha)/n).
TestReport test_t(const RegressionSample& sample, const SplitSample& split, int k0,
                  double sigma, double alpha, double delta, const DesignConstants& constants);

/// Residual chi-square test on the top-k0 projected square-root lasso.
TestReport test_chi(const RegressionSample& sample, const SplitSample& split, int k0,
                    double sigma, double alpha, double delta, const DesignConstants& constants);

/// Fourier statistic over corrected raw covariances from block 2.
TestReport test_f(const RegressionSample& sample, const SplitSample& split, int k0,
                  double sigma, double alpha, double delta, const DesignConstants& constants);

/// Dyadic Fourier statistic family; empty grid means always-accept.
TestReport test_i(const RegressionSample& sample, const SplitSample& split, int k0,
                  double sigma, double alpha, double delta, const DesignConstants& constants);

/// test_i with an explicit kernel grid (testing hook; test_i uses
/// kernel_params(k0, p)).
TestReport test_i_with_params(const RegressionSample& sample, const SplitSample& split, int k0,
                              double sigma, double alpha, double delta,
                              const DesignConstants& constants, const KernelParams& params);

/// Max of the four tests plus the dense guard
/// 1{d2^2(theta_SL, B0[k0]) >= sigma^2/2}; one shared split and fit.
TestReport test_ag(const RegressionSample& sample, int k0, double sigma, double alpha,
                   double delta, const DesignConstants& constants);

// Variants over a prebuilt pipeline so calibration and aggregation share fits.
TestReport test_t_from(const IndepPipeline& pipe, int p, int k0, double sigma, double alpha,
                       const DesignConstants& constants);
TestReport test_chi_from(const IndepPipeline& pipe, const RegressionSample& sample,
                         const SplitSample& split, int k0, double sigma, double alpha,
                         double delta, const DesignConstants& constants);
TestReport test_f_from(const IndepPipeline& pipe, const RegressionSample& sample,
                       const SplitSample& split, int k0, double sigma, double alpha,
                       const DesignConstants& constants);
TestReport test_i_from(const IndepPipeline& pipe, const RegressionSample& sample,
                       const SplitSample& split, int k0, double sigma, double alpha,
                       const DesignConstants& constants, const KernelParams& params);

}  // namespace sptest
