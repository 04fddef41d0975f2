#include "sptest/tests_general.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sptest/errors.hpp"

namespace sptest {

double z_u_statistic(const Eigen::MatrixXd& x_eval, const Eigen::VectorXd& residual) {
    const double m = static_cast<double>(x_eval.rows());
    const double r2 = residual.squaredNorm();
    if (r2 == 0.0) throw InvalidConfig("z_u_statistic: zero residual");
    const Eigen::VectorXd v = x_eval.transpose() * residual;
    const double trace = x_eval.squaredNorm();  // tr(X X^T)
    return (v.squaredNorm() - trace * r2 / m) / (r2 * (m + 1.0));
}

TestReport test_u(const RegressionSample& sample, const SplitSample& split, int k0, double alpha,
                  double delta, double eta, const DesignConstants& constants) {
    (void)eta;
    if (split.parts != 2) throw InvalidConfig("test_u needs a 2-way split");
    const int p = static_cast<int>(sample.x.cols());
    const double m = split.m;

    TestReport report;
    report.name = "u";
    report.threshold_mode =
        constants.provenance_of("c_u_eta") == "calibrated" ? "calibrated" : "analytic";
    report.threshold = constants.c_u_eta * (std::max(k0, 1) * std::log(p / delta) / m +
                                            std::sqrt(p * std::log(2.0 / alpha)) / m);
    if (p < split.m) report.condition_A = false;  // p >= m recommended for this statistic

    SqrtLassoFit fit = sqrt_lasso(split.x_block(sample, 0), split.y_block(sample, 0), delta);
    const Eigen::VectorXd theta_proj = top_k_project(fit.theta_hat, k0);
    const Eigen::VectorXd residual =
        split.y_block(sample, 1) - split.x_block(sample, 1) * theta_proj;
    report.support_size = static_cast<int>((theta_proj.array() != 0.0).count());

    if (residual.squaredNorm() == 0.0) {
        report.degenerate = true;  // exact fit: accept by convention
        report.statistic = 0.0;
        report.reject = false;
        return report;
    }
    report.statistic = z_u_statistic(split.x_block(sample, 1), residual);
    report.reject = report.statistic > report.threshold;
    return report;
}

double c_star_default(double a1, double a3, double eta, double delta) {
    if (!(a1 > 0.0) || !(a3 > 0.0) || !(eta > 0.0) || !(delta > 0.0 && delta < 1.0)) {
        throw InvalidConfig("c_star_default: invalid inputs");
    }
    return std::sqrt(2.0) * a1 +
           11.0 * eta * eta * std::max(a3, 1.0) *
               std::sqrt(std::log(4.0 * 2.718281828459045235360287 / delta));
}

TestReport test_th(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y0, const SupportSet& s,
                   int k0, double c_star) {
    const int m = static_cast<int>(x0.rows());
    const int p = static_cast<int>(x0.cols());

    TestReport report;
    report.name = "th";
    report.support_size = s.size();

    RestrictedLsFit fit = restricted_least_squares(x0, y0, s);
    int count = 0;
    if (fit.sigma_hat == 0.0) {
        // Noiseless exact fit: count every non-zero coefficient.
        count = static_cast<int>((fit.theta.array() != 0.0).count());
        report.degenerate = true;
    } else {
        const double cut = c_star * std::sqrt(std::log(static_cast<double>(p)) / m);
        for (int j : s.indices) {
            if (std::abs(fit.theta[j]) / fit.sigma_hat >= cut) ++count;
        }
    }
    report.statistic = count;
    report.threshold = k0;  // reject when the count strictly exceeds k0
    report.reject = count > k0;
    return report;
}

SupportSet select_mcp(const Eigen::MatrixXd& x1, const Eigen::VectorXd& y1, double eta,
                      const DesignConstants& constants) {
    (void)eta;
    const int p = static_cast<int>(x1.cols());
    const double delta_sl = std::min(1.0 / p, 0.5);
    SqrtLassoFit fit = sqrt_lasso(x1, y1, delta_sl);

    SupportSet support;
    support.method = SelectionMethod::mcp;
    const double lambda = constants.c_MCP_eta * fit.sigma_hat * std::sqrt(std::log(p));
    if (!(lambda > 0.0)) {
        // Exact interpolation leaves nothing to select against.
        for (int j = 0; j < p; ++j) {
            if (fit.theta_hat[j] != 0.0) support.indices.push_back(j);
        }
        support.step_sizes.push_back(support.size());
        return support;
    }
    McpFit mcp = mcp_fit(x1, y1, lambda, constants.c_MCP_prime_eta, fit.theta_hat);
    for (int j = 0; j < p; ++j) {
        if (mcp.theta[j] != 0.0) support.indices.push_back(j);
    }
    support.step_sizes.push_back(support.size());
    return support;
}

SupportSet select_iterative(const Eigen::MatrixXd& x1, const Eigen::VectorXd& y1, double eta,
                            double delta, const DesignConstants& constants) {
    (void)eta;
    const int m = static_cast<int>(x1.rows());
    const int p = static_cast<int>(x1.cols());
    const int n_full = 2 * m;  // block (1) of a 2-way split
    const int t_steps = static_cast<int>(std::floor(std::log2(static_cast<double>(n_full)))) + 1;
    const int block = m / t_steps;
    if (block < 8) throw BlockTooSmall("select_iterative: fewer than 8 rows per sub-block");

    std::set<int> selected;
    SupportSet support;
    support.method = SelectionMethod::iterative;

    for (int t = 0; t < t_steps; ++t) {
        const int row0 = t * block;
        const Eigen::MatrixXd xt = x1.middleRows(row0, block);
        const Eigen::VectorXd yt = y1.segment(row0, block);

        Eigen::MatrixXd x_proj;
        Eigen::VectorXd y_proj;
        if (selected.empty()) {
            x_proj = xt;
            y_proj = yt;
        } else {
            if (static_cast<int>(selected.size()) >= block - 1) break;  // projector exhausted
            Eigen::MatrixXd xs(block, selected.size());
            int c = 0;
            for (int j : selected) xs.col(c++) = xt.col(j);
            const Eigen::MatrixXd proj = orthogonal_complement_projector(xs);
            if (proj.rows() < 2) break;
            x_proj = proj * xt;
            y_proj = proj * yt;
        }

        Eigen::VectorXd theta = threshold_sqrt_lasso(x_proj, y_proj, delta, constants.c_SL_eta);
        for (int j : selected) theta[j] = 0.0;  // annihilated columns stay out
        for (int j = 0; j < p; ++j) {
            if (theta[j] != 0.0) selected.insert(j);
        }
        support.step_sizes.push_back(static_cast<int>(selected.size()));
    }

    support.indices.assign(selected.begin(), selected.end());
    return support;
}

PropertySReport property_S_check(const SupportSet& s, const Eigen::VectorXd& theta_star,
                                 double sigma, const PropertySParams& params, int m, int p) {
    PropertySReport report;
    const double small_cut = params.a1 * std::sqrt(std::log(static_cast<double>(p)) / m);
    int sparsity = 0;
    for (int j = 0; j < theta_star.size(); ++j) {
        const double ratio = std::abs(theta_star[j]) / sigma;
        if (ratio > 0.0) ++sparsity;
        if (ratio > 0.0 && ratio <= small_cut) ++report.m_small;
    }

    report.size_lhs = s.size();
    report.size_rhs = params.a2 * sparsity;

    double missed = 0.0;
    for (int j = 0; j < theta_star.size(); ++j) {
        if (!s.contains(j)) missed += theta_star[j] * theta_star[j];
    }
    report.missed_lhs = missed;
    report.missed_rhs = params.a3 * params.a3 * sigma * sigma * report.m_small *
                        std::log(static_cast<double>(p)) / m;

    report.holds = report.size_lhs <= report.size_rhs && report.missed_lhs <= report.missed_rhs;
    return report;
}

TestReport test_general_ag(const RegressionSample& sample, int k0, double alpha, double delta,
                           double eta, const DesignConstants& constants) {
    const SplitSample split = split_sample(sample, 2);
    const double n = static_cast<double>(split.parts * split.m);
    const double p = static_cast<double>(sample.x.cols());

    TestReport report;
    report.name = "general-ag";
    const bool moderate_p = p <= constants.c_regime_eta * n * n / std::log(2.0 / delta);
    report.regime = moderate_p ? "u+th" : "th-only";

    const SupportSet support =
        select_mcp(split.x_block(sample, 0), split.y_block(sample, 0), eta, constants);
    const double c_star =
        c_star_default(constants.c_star_a1, constants.c_star_a3, eta, delta);
    TestReport th =
        test_th(split.x_block(sample, 1), split.y_block(sample, 1), support, k0, c_star);
    report.sub_reports.push_back(th);

    bool reject = th.reject;
    if (moderate_p) {
        TestReport u = test_u(sample, split, k0, alpha, delta, eta, constants);
        reject = reject || u.reject;
        report.sub_reports.push_back(u);
    }
    report.reject = reject;
    report.statistic = reject ? 1.0 : 0.0;
    report.threshold = 0.5;
    report.threshold_mode =
        constants.provenance_of("c_u_eta") == "calibrated" ? "calibrated" : "analytic";
    return report;
}

}  // namespace sptest
