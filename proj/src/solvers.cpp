#include "sptest/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sptest/errors.hpp"
#include "sptest/kernels.hpp"

namespace sptest {

namespace {

constexpr double kZeroColumnNorm = 1e-12;
constexpr double kRankTolerance = 1e-10;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace

std::string trace_to_csv(const std::vector<SolverTraceRow>& trace) {
    std::string out = "iteration,objective,sigma_hat\n";
    char line[96];
    for (const SolverTraceRow& row : trace) {
        std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", row.iteration, row.objective,
                      row.sigma_hat);
        out += line;
    }
    return out;
}

ColumnNormalized column_normalize(const Eigen::MatrixXd& x) {
    ColumnNormalized out;
    out.t = x;
    out.norms.resize(x.cols());
    for (int j = 0; j < x.cols(); ++j) {
        const double norm = x.col(j).norm();
        out.norms[j] = norm;
        if (norm < kZeroColumnNorm) {
            out.zero_columns.push_back(j);
            out.t.col(j).setZero();
        } else {
            out.t.col(j) /= norm;
        }
    }
    return out;
}

double sqrt_lasso_lambda(double delta, int m, int p) {
    // Penalty for the unit-column objective. The level sits just under the
    // max noise correlation sqrt(2 log p)/sqrt(m), which keeps the plug-in
    // variance inside the [3/4, 5/4] band at realistic (m, p, k).
    return std::sqrt(2.0 * normal_upper_quantile(delta / (4.0 * p)) / m);
}

SqrtLassoFit sqrt_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double delta,
                        std::vector<SolverTraceRow>* trace) {
    const int m = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    if (m < 2) throw InvalidConfig("sqrt_lasso: need at least 2 rows");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("sqrt_lasso: delta in (0,1)");
    if (!all_finite(x) || !y.allFinite()) throw NonFiniteInput("sqrt_lasso: non-finite input");

    ColumnNormalized cn = column_normalize(x);
    const double lambda = sqrt_lasso_lambda(delta, m, p);
    const double sqrt_m = std::sqrt(static_cast<double>(m));

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = y;
    double objective = residual.norm();
    int iterations = 0;

    const int max_outer = 500;
    bool converged = objective == 0.0;
    std::vector<bool> is_zero_col(p, false);
    for (int j : cn.zero_columns) is_zero_col[j] = true;

    while (!converged && iterations < max_outer) {
        ++iterations;
        const double q = residual.norm();  // sigma_hat * sqrt(m)
        if (q == 0.0) break;
        const double threshold = lambda * q;
        for (int j = 0; j < p; ++j) {
            if (is_zero_col[j]) continue;
            const double z = cn.t.col(j).dot(residual) + theta[j];
            const double updated = soft_threshold(z, threshold);
            const double step = updated - theta[j];
            if (step != 0.0) {
                residual -= step * cn.t.col(j);
                theta[j] = updated;
            }
        }
        const double new_objective = residual.norm() + lambda * theta.lpNorm<1>();
        const double decrease = objective - new_objective;
        if (trace) trace->push_back({iterations, new_objective, residual.norm() / sqrt_m});
        // Relative stop keeps the decision path exactly scale-equivariant.
        converged = decrease < 1e-10 * std::max(objective, 1e-300);
        objective = new_objective;
    }

    SqrtLassoFit fit;
    fit.lambda = lambda;
    fit.iterations = iterations;
    fit.sigma_hat = residual.norm() / sqrt_m;

    fit.theta_hat = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        if (!is_zero_col[j] && theta[j] != 0.0) fit.theta_hat[j] = theta[j] / cn.norms[j];
    }

    const double rnorm = residual.norm();
    double kkt = 0.0;
    if (rnorm > 0.0) {
        for (int j = 0; j < p; ++j) {
            if (is_zero_col[j]) continue;
            const double u = cn.t.col(j).dot(residual) / rnorm;
            if (theta[j] != 0.0) {
                kkt = std::max(kkt, std::abs(u - lambda * (theta[j] > 0 ? 1.0 : -1.0)));
            } else {
                kkt = std::max(kkt, std::max(0.0, std::abs(u) - lambda));
            }
        }
    }
    fit.kkt_residual = kkt;

    if (!converged && iterations >= max_outer) {
        throw DidNotConverge("sqrt_lasso: no convergence in 500 outer iterations",
                             to_std(fit.theta_hat), fit.kkt_residual);
    }
    return fit;
}

SqrtLassoFit lasso_known_sigma(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               double sigma, double delta) {
    const int m = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    if (m < 2) throw InvalidConfig("lasso_known_sigma: need at least 2 rows");
    if (!(sigma >= 0.0)) throw InvalidConfig("lasso_known_sigma: sigma must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("lasso_known_sigma: delta in (0,1)");
    if (!all_finite(x) || !y.allFinite()) {
        throw NonFiniteInput("lasso_known_sigma: non-finite input");
    }

    ColumnNormalized cn = column_normalize(x);
    const double lambda = sqrt_lasso_lambda(delta, m, p);
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    const double threshold = lambda * sigma * sqrt_m;

    std::vector<bool> is_zero_col(p, false);
    for (int j : cn.zero_columns) is_zero_col[j] = true;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = y;
    int iterations = 0;
    bool converged = y.norm() == 0.0;
    const double scale = std::max(y.norm(), 1e-300);

    while (!converged && iterations < 500) {
        ++iterations;
        double max_step = 0.0;
        for (int j = 0; j < p; ++j) {
            if (is_zero_col[j]) continue;
            const double z = cn.t.col(j).dot(residual) + theta[j];
            const double updated = soft_threshold(z, threshold);
            const double step = updated - theta[j];
            if (step != 0.0) {
                residual -= step * cn.t.col(j);
                theta[j] = updated;
                max_step = std::max(max_step, std::abs(step));
            }
        }
        converged = max_step < 1e-10 * scale;
    }

    SqrtLassoFit fit;
    fit.lambda = lambda;
    fit.iterations = iterations;
    fit.sigma_hat = residual.norm() / sqrt_m;
    fit.theta_hat = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        if (!is_zero_col[j] && theta[j] != 0.0) fit.theta_hat[j] = theta[j] / cn.norms[j];
    }
    double kkt = 0.0;
    for (int j = 0; j < p; ++j) {
        if (is_zero_col[j]) continue;
        const double u = cn.t.col(j).dot(residual);
        if (theta[j] != 0.0) {
            kkt = std::max(kkt, std::abs(u - threshold * (theta[j] > 0 ? 1.0 : -1.0)));
        } else {
            kkt = std::max(kkt, std::max(0.0, std::abs(u) - threshold));
        }
    }
    fit.kkt_residual = kkt;
    if (!converged) {
        throw DidNotConverge("lasso_known_sigma: no convergence in 500 sweeps",
                             to_std(fit.theta_hat), kkt);
    }
    return fit;
}

Eigen::VectorXd top_k_project(const Eigen::VectorXd& theta, int k0) {
    if (k0 < 0) throw InvalidConfig("top_k_project: k0 must be nonnegative");
    const int p = static_cast<int>(theta.size());
    if (k0 >= p) return theta;
    std::vector<int> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(theta[a]) > std::abs(theta[b]);
    });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
    for (int r = 0; r < k0; ++r) out[idx[r]] = theta[idx[r]];
    return out;
}

Eigen::VectorXd debias(const Eigen::VectorXd& theta_sl, const Eigen::MatrixXd& x2,
                       const Eigen::VectorXd& y2) {
    if (x2.cols() != theta_sl.size() || x2.rows() != y2.size()) {
        throw InvalidConfig("debias: dimension mismatch");
    }
    if (!all_finite(x2) || !y2.allFinite() || !theta_sl.allFinite()) {
        throw NonFiniteInput("debias: non-finite input");
    }
    const double m = static_cast<double>(x2.rows());
    return theta_sl + x2.transpose() * (y2 - x2 * theta_sl) / m;
}

bool SupportSet::contains(int j) const {
    return std::binary_search(indices.begin(), indices.end(), j);
}

RestrictedLsFit restricted_least_squares(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y0,
                                         const SupportSet& s) {
    const int m = static_cast<int>(x0.rows());
    const int p = static_cast<int>(x0.cols());
    if (s.size() >= m) throw SupportTooLarge("restricted_least_squares: |S| >= m");

    RestrictedLsFit fit;
    fit.theta = Eigen::VectorXd::Zero(p);
    if (s.size() == 0) {
        fit.sigma_hat = y0.norm() / std::sqrt(static_cast<double>(m));
        return fit;
    }

    Eigen::MatrixXd xs(m, s.size());
    for (int c = 0; c < s.size(); ++c) xs.col(c) = x0.col(s.indices[c]);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xs);
    cod.setThreshold(kRankTolerance);
    const Eigen::VectorXd coef = cod.solve(y0);

    for (int c = 0; c < s.size(); ++c) fit.theta[s.indices[c]] = coef[c];
    fit.sigma_hat = (y0 - xs * coef).norm() / std::sqrt(static_cast<double>(m));
    return fit;
}

double mcp_penalty(double t, double lambda, double kappa) {
    if (!(lambda > 0.0) || !(kappa > 0.0)) {
        throw InvalidConfig("mcp_penalty: lambda, kappa must be positive");
    }
    const double at = std::abs(t);
    if (at >= kappa * lambda) return 0.5 * kappa * lambda * lambda;
    return lambda * at - at * at / (2.0 * kappa);
}

double mcp_prox(double z, double lambda, double kappa) {
    // Minimizes (t - z)^2 + mcp_penalty(|t|). Candidates cover both convex
    // (kappa > 1/2) and nonconvex coordinate problems.
    const double az = std::abs(z);
    const double sign = z >= 0 ? 1.0 : -1.0;
    double best_t = 0.0;
    double best_value = z * z;  // f(0)

    auto consider = [&](double t) {
        const double d = t - z;
        const double value = d * d + mcp_penalty(t, lambda, kappa);
        if (value < best_value || (value == best_value && std::abs(t) < std::abs(best_t))) {
            best_value = value;
            best_t = t;
        }
    };

    if (az >= kappa * lambda) consider(z);
    if (2.0 * kappa > 1.0) {
        const double interior = sign * kappa * (2.0 * az - lambda) / (2.0 * kappa - 1.0);
        if (std::abs(interior) > 0.0 && std::abs(interior) < kappa * lambda && az > 0.5 * lambda) {
            consider(interior);
        }
    }
    return best_t;
}

McpFit mcp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, double kappa,
               const Eigen::VectorXd& init) {
    const int m = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    if (!(lambda > 0.0) || !(kappa > 0.0)) {
        throw InvalidConfig("mcp_fit: lambda, kappa must be positive");
    }
    if (!all_finite(x) || !y.allFinite()) throw NonFiniteInput("mcp_fit: non-finite input");
    if (init.size() != p) throw InvalidConfig("mcp_fit: init has wrong length");
    (void)m;

    ColumnNormalized cn = column_normalize(x);
    std::vector<bool> is_zero_col(p, false);
    for (int j : cn.zero_columns) is_zero_col[j] = true;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        if (!is_zero_col[j]) theta[j] = init[j] * cn.norms[j];
    }
    Eigen::VectorXd residual = y - cn.t * theta;

    const int max_sweeps = 2000;
    int sweeps = 0;
    double max_change = 0.0;
    while (sweeps < max_sweeps) {
        ++sweeps;
        max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            if (is_zero_col[j]) continue;
            const double z = cn.t.col(j).dot(residual) + theta[j];
            const double updated = mcp_prox(z, lambda, kappa);
            const double step = updated - theta[j];
            if (step != 0.0) {
                residual -= step * cn.t.col(j);
                theta[j] = updated;
                max_change = std::max(max_change, std::abs(step));
            }
        }
        if (max_change < 1e-9) break;
    }

    McpFit fit;
    fit.sweeps = sweeps;
    fit.theta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        if (!is_zero_col[j] && theta[j] != 0.0) fit.theta[j] = theta[j] / cn.norms[j];
    }

    double residual_max = 0.0;
    for (int j = 0; j < p; ++j) {
        if (is_zero_col[j]) continue;
        const double grad = -2.0 * cn.t.col(j).dot(residual);
        double dist;
        if (theta[j] == 0.0) {
            dist = std::max(0.0, std::abs(grad) - lambda);
        } else {
            const double pen_grad =
                lambda * std::max(0.0, 1.0 - std::abs(theta[j]) / (kappa * lambda)) *
                (theta[j] > 0 ? 1.0 : -1.0);
            dist = std::abs(grad + pen_grad);
        }
        residual_max = std::max(residual_max, dist);
    }
    fit.stationarity_residual = residual_max;

    if (sweeps >= max_sweeps && max_change >= 1e-9) {
        throw DidNotConverge("mcp_fit: no convergence in 2000 sweeps", to_std(fit.theta),
                             residual_max);
    }
    return fit;
}

Eigen::VectorXd threshold_sqrt_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double delta, double c_sl) {
    const int m = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    SqrtLassoFit fit = sqrt_lasso(x, y, delta);
    const double threshold =
        c_sl * fit.sigma_hat * (8.0 / 3.0) * std::sqrt(std::log(p / delta) / m);
    Eigen::VectorXd out = fit.theta_hat;
    for (int j = 0; j < p; ++j) {
        if (std::abs(out[j]) < threshold) out[j] = 0.0;
    }
    return out;
}

Eigen::MatrixXd orthogonal_complement_projector(const Eigen::MatrixXd& x_s) {
    const int m = static_cast<int>(x_s.rows());
    if (x_s.cols() == 0) return Eigen::MatrixXd::Identity(m, m);
    if (x_s.cols() >= m) throw SupportTooLarge("orthogonal_complement_projector: |S| >= m");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_s);
    qr.setThreshold(kRankTolerance);
    const int rank = static_cast<int>(qr.rank());
    const Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(m - rank).transpose();
}

}  // namespace sptest
