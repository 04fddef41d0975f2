#include "sptest/tests_independent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sptest/errors.hpp"

namespace sptest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string mode_of(const DesignConstants& constants, const std::string& name) {
    return constants.provenance_of(name) == "calibrated" ? "calibrated" : "analytic";
}

}  // namespace

IndepPipeline build_indep_pipeline(const RegressionSample& sample, const SplitSample& split,
                                   double delta, PilotEstimator pilot, double sigma) {
    if (split.parts != 3) throw InvalidConfig("independent tests need a 3-way split");
    IndepPipeline pipe;
    pipe.fit = pilot == PilotEstimator::sqrt_lasso
                   ? sqrt_lasso(split.x_block(sample, 0), split.y_block(sample, 0), delta)
                   : lasso_known_sigma(split.x_block(sample, 0), split.y_block(sample, 0),
                                       sigma, delta);
    pipe.theta_tilde =
        debias(pipe.fit.theta_hat, split.x_block(sample, 1), split.y_block(sample, 1));
    pipe.n_eff = split.parts * split.m;
    return pipe;
}

double order_statistic(const Eigen::VectorXd& v, int j) {
    const int p = static_cast<int>(v.size());
    if (j < 1 || j > p) return 0.0;
    std::vector<double> mags(p);
    for (int i = 0; i < p; ++i) mags[i] = std::abs(v[i]);
    std::nth_element(mags.begin(), mags.begin() + (j - 1), mags.end(), std::greater<double>());
    return mags[j - 1];
}

double z_chi_statistic(const Eigen::VectorXd& residual, double sigma) {
    const double m = static_cast<double>(residual.size());
    return residual.squaredNorm() / (m * sigma * sigma) - 1.0;
}

double z_f_statistic(const Eigen::VectorXd& w_over_u, const Eigen::VectorXd& theta_bar,
                     double s) {
    double z = 0.0;
    for (int j = 0; j < w_over_u.size(); ++j) {
        z += theta_bar[j] == 0.0 ? 1.0 - varphi(s, w_over_u[j]) : 1.0;
    }
    return z;
}

double v_statistic(const Eigen::VectorXd& w_over_u, const Eigen::VectorXd& theta_bar, double r,
                   double w) {
    double v = 0.0;
    for (int j = 0; j < w_over_u.size(); ++j) {
        v += theta_bar[j] == 0.0 ? 1.0 - eta_kernel(r, w, w_over_u[j]) : 1.0;
    }
    return v;
}

TestReport test_t_from(const IndepPipeline& pipe, int p, int k0, double sigma, double alpha,
                       const DesignConstants& constants) {
    TestReport report;
    report.name = "t";
    report.threshold_mode = mode_of(constants, "c_t");
    report.theta_tilde_order_stat = order_statistic(pipe.theta_tilde, k0 + 1);
    report.statistic = report.theta_tilde_order_stat;
    report.threshold =
        constants.c_t * sigma * std::sqrt(std::log(p / alpha) / pipe.n_eff);
    report.reject = report.statistic >= report.threshold;
    return report;
}

TestReport test_t(const RegressionSample& sample, const SplitSample& split, int k0, double sigma,
                  double alpha, double delta, const DesignConstants& constants) {
    IndepPipeline pipe = build_indep_pipeline(sample, split, delta);
    return test_t_from(pipe, static_cast<int>(sample.x.cols()), k0, sigma, alpha, constants);
}

TestReport test_chi_from(const IndepPipeline& pipe, const RegressionSample& sample,
                         const SplitSample& split, int k0, double sigma, double alpha,
                         double delta, const DesignConstants& constants) {
    const int p = static_cast<int>(sample.x.cols());
    const double m = split.m;

    TestReport report;
    report.name = "chi";
    report.threshold_mode = mode_of(constants, "c_chi");

    const Eigen::VectorXd theta_proj = top_k_project(pipe.fit.theta_hat, k0);
    const Eigen::VectorXd residual =
        split.y_block(sample, 1) - split.x_block(sample, 1) * theta_proj;
    report.statistic = z_chi_statistic(residual, sigma);
    report.support_size = static_cast<int>((theta_proj.array() != 0.0).count());

    const double v = std::sqrt(std::log(1.0 / alpha) / m) +
                     std::max(k0, 1) * std::log(p / delta) / m;
    report.threshold = constants.c_chi * v;
    report.reject = report.statistic > report.threshold;
    return report;
}

TestReport test_chi(const RegressionSample& sample, const SplitSample& split, int k0,
                    double sigma, double alpha, double delta, const DesignConstants& constants) {
    IndepPipeline pipe = build_indep_pipeline(sample, split, delta);
    return test_chi_from(pipe, sample, split, k0, sigma, alpha, delta, constants);
}

namespace {

// Shared theta_bar / corrected-covariance computation on block 2. The
// order-statistic short circuit belongs to the Fourier test alone, so the
// caller checks it; this always realizes the thresholded estimate.
struct FourierData {
    bool degenerate = false;
    Eigen::VectorXd theta_bar;
    Eigen::VectorXd w_over_u;
    int support_size = 0;
};

double hard_threshold_tau(const DesignConstants& constants, double sigma, int p, double alpha,
                          int n_eff) {
    return constants.c_t * sigma * std::sqrt(std::log(2.0 * p / alpha) / n_eff);
}

FourierData fourier_data(const IndepPipeline& pipe, const RegressionSample& sample,
                         const SplitSample& split, double tau) {
    const int p = static_cast<int>(sample.x.cols());
    FourierData data;
    data.theta_bar = pipe.theta_tilde;
    for (int j = 0; j < p; ++j) {
        if (std::abs(data.theta_bar[j]) <= tau) data.theta_bar[j] = 0.0;
    }
    data.support_size = static_cast<int>((data.theta_bar.array() != 0.0).count());

    const Eigen::VectorXd y_bar =
        split.y_block(sample, 2) - split.x_block(sample, 2) * data.theta_bar;
    const double u = y_bar.norm();
    if (u == 0.0) {
        data.degenerate = true;
        return data;
    }
    data.w_over_u = split.x_block(sample, 2).transpose() * y_bar / u;
    return data;
}

TestReport finish_f(const FourierData& data, int p, int k0, double alpha,
                    const DesignConstants& constants, double order_stat, bool early_reject) {
    TestReport report;
    report.name = "f";
    report.threshold_mode = mode_of(constants, "c_f");
    report.theta_tilde_order_stat = order_stat;

    const double s = kernel_params(k0, p).s;
    report.threshold =
        k0 + constants.c_f * (s * s / 5.0 +
                              s * std::exp(0.5 * s * s) * std::sqrt(2.0 * p * std::log(2.0 / alpha)));
    if (early_reject) {
        report.statistic = kInf;
        report.reject = true;
        return report;
    }
    report.support_size = data.support_size;
    if (data.degenerate) {
        report.degenerate = true;
        report.statistic = 0.0;
        report.reject = false;
        return report;
    }
    report.statistic = z_f_statistic(data.w_over_u, data.theta_bar, s);
    report.reject = report.statistic >= report.threshold;
    return report;
}

TestReport finish_i(const FourierData& data, int p_cols, int k0, double alpha,
                    const DesignConstants& constants, const KernelParams& params) {
    TestReport report;
    report.name = "i";
    report.threshold_mode = mode_of(constants, "c_i");
    report.statistic = 0.0;
    report.threshold = kInf;
    report.reject = false;
    if (params.grid.empty()) return report;  // trivial always-accept regime
    if (data.degenerate) {
        report.degenerate = true;
        return report;
    }
    report.support_size = data.support_size;

    const double p = static_cast<double>(p_cols);
    const double l0 = params.l0 > 0 ? static_cast<double>(params.l0)
                                    : static_cast<double>(params.grid.front().l);
    double best_margin = -kInf;
    for (std::size_t g = 0; g < params.grid.size(); ++g) {
        const KernelGridEntry& entry = params.grid[g];
        const double v = v_statistic(data.w_over_u, data.theta_bar, entry.r, entry.w);
        const double log2_ratio = std::log2(static_cast<double>(entry.l) / l0);
        const double bracket = 1.0 + log2_ratio;
        const double deviation = std::sqrt(
            2.0 * entry.l * std::sqrt(p) *
            std::log(9.8696044010893586188 * bracket * bracket / (6.0 * alpha)));
        const double threshold =
            k0 + entry.l +
            constants.c_i * (0.5 * std::exp(0.5) * entry.w * entry.w + deviation);
        report.per_l_statistic.push_back(v);
        report.per_l_threshold.push_back(threshold);
        if (v >= threshold) report.reject = true;
        if (v - threshold > best_margin) {
            best_margin = v - threshold;
            report.statistic = v;
            report.threshold = threshold;
        }
    }
    return report;
}

}  // namespace

TestReport test_f_from(const IndepPipeline& pipe, const RegressionSample& sample,
                       const SplitSample& split, int k0, double sigma, double alpha,
                       const DesignConstants& constants) {
    const int p = static_cast<int>(sample.x.cols());
    const double tau = hard_threshold_tau(constants, sigma, p, alpha, pipe.n_eff);
    const double order_stat = order_statistic(pipe.theta_tilde, k0 + 1);
    if (order_stat > tau) {
        return finish_f(FourierData{}, p, k0, alpha, constants, order_stat, true);
    }
    const FourierData data = fourier_data(pipe, sample, split, tau);
    return finish_f(data, p, k0, alpha, constants, order_stat, false);
}

TestReport test_f(const RegressionSample& sample, const SplitSample& split, int k0, double sigma,
                  double alpha, double delta, const DesignConstants& constants) {
    IndepPipeline pipe = build_indep_pipeline(sample, split, delta);
    return test_f_from(pipe, sample, split, k0, sigma, alpha, constants);
}

TestReport test_i_from(const IndepPipeline& pipe, const RegressionSample& sample,
                       const SplitSample& split, int k0, double sigma, double alpha,
                       const DesignConstants& constants, const KernelParams& params) {
    const int p = static_cast<int>(sample.x.cols());
    if (params.grid.empty()) {
        return finish_i(FourierData{}, p, k0, alpha, constants, params);
    }
    // No short circuit here: a dense theta_bar only adds unit terms to each V.
    const double tau = hard_threshold_tau(constants, sigma, p, alpha, pipe.n_eff);
    const FourierData data = fourier_data(pipe, sample, split, tau);
    return finish_i(data, p, k0, alpha, constants, params);
}

TestReport test_i_with_params(const RegressionSample& sample, const SplitSample& split, int k0,
                              double sigma, double alpha, double delta,
                              const DesignConstants& constants, const KernelParams& params) {
    IndepPipeline pipe = build_indep_pipeline(sample, split, delta);
    return test_i_from(pipe, sample, split, k0, sigma, alpha, constants, params);
}

TestReport test_i(const RegressionSample& sample, const SplitSample& split, int k0, double sigma,
                  double alpha, double delta, const DesignConstants& constants) {
    const KernelParams params = kernel_params(k0, static_cast<long long>(sample.x.cols()));
    return test_i_with_params(sample, split, k0, sigma, alpha, delta, constants, params);
}

TestReport test_ag(const RegressionSample& sample, int k0, double sigma, double alpha,
                   double delta, const DesignConstants& constants) {
    const SplitSample split = split_sample(sample, 3);
    IndepPipeline pipe = build_indep_pipeline(sample, split, delta);
    const int p = static_cast<int>(sample.x.cols());
    const KernelParams params = kernel_params(k0, p);

    TestReport report;
    report.name = "ag";
    report.sub_reports.push_back(test_t_from(pipe, p, k0, sigma, alpha, constants));
    report.sub_reports.push_back(
        test_chi_from(pipe, sample, split, k0, sigma, alpha, delta, constants));

    // one corrected-covariance computation shared by the two Fourier tests
    const double tau = hard_threshold_tau(constants, sigma, p, alpha, pipe.n_eff);
    const double order_stat = order_statistic(pipe.theta_tilde, k0 + 1);
    const bool early = order_stat > tau;
    const FourierData data = (early && params.grid.empty())
                                 ? FourierData{}
                                 : fourier_data(pipe, sample, split, tau);
    report.sub_reports.push_back(
        finish_f(data, p, k0, alpha, constants, order_stat, early));
    report.sub_reports.push_back(finish_i(data, p, k0, alpha, constants, params));

    TestReport guard;
    guard.name = "dense-guard";
    const double d2 = d2_to_sparse(pipe.fit.theta_hat, k0);
    guard.statistic = d2 * d2;
    guard.threshold = 0.5 * sigma * sigma;
    guard.reject = guard.statistic >= guard.threshold;
    report.sub_reports.push_back(guard);

    report.reject = false;
    for (const TestReport& sub : report.sub_reports) report.reject = report.reject || sub.reject;
    report.statistic = report.reject ? 1.0 : 0.0;
    report.threshold = 0.5;
    report.threshold_mode = report.sub_reports[0].threshold_mode;
    return report;
}

}  // namespace sptest
