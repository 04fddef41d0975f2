#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "sptest/model.hpp"

namespace sptest {

struct ColumnNormalized {
    Eigen::MatrixXd t;          // unit-norm columns; zero columns left as zero
    Eigen::VectorXd norms;      // original column norms
    std::vector<int> zero_columns;
};

/// Scales each column to unit l2 norm. Columns with norm below 1e-12 are
/// flagged and left as zero.
ColumnNormalized column_normalize(const Eigen::MatrixXd& x);

struct SolverTraceRow {
    int iteration;
    double objective;
    double sigma_hat;
};

/// CSV dump of a solver trace: header "iteration,objective,sigma_hat".
std::string trace_to_csv(const std::vector<SolverTraceRow>& trace);

struct SqrtLassoFit {
    Eigen::VectorXd theta_hat;  // rescaled to the original design
    double sigma_hat = 0.0;     // residual norm / sqrt(m)
    double lambda = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
};

/// Penalty level for the normalized square-root lasso objective.
double sqrt_lasso_lambda(double delta, int m, int p);

/// Minimizes norm(y - T theta) + lambda * l1(theta) on the column-normalized
/// design by alternating the variance update with one coordinate-descent
/// lasso pass. Entries for zero-norm columns are 0.
SqrtLassoFit sqrt_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        double delta, std::vector<SolverTraceRow>* trace = nullptr);

/// Classical lasso at a known noise level: the same coordinate descent with
/// the soft threshold frozen at lambda * sigma * sqrt(m) instead of the
/// plug-in residual norm. Substitutable for sqrt_lasso when sigma is known.
SqrtLassoFit lasso_known_sigma(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               double sigma, double delta);

/// Euclidean projection onto B0[k0]: keeps the k0 largest magnitudes,
/// lowest index on ties.
Eigen::VectorXd top_k_project(const Eigen::VectorXd& theta, int k0);

/// One-step correction from residual-covariate correlations:
/// theta_sl + x2^T (y2 - x2 theta_sl) / m.
Eigen::VectorXd debias(const Eigen::VectorXd& theta_sl, const Eigen::MatrixXd& x2,
                       const Eigen::VectorXd& y2);

enum class SelectionMethod { mcp, iterative, oracle };

struct SupportSet {
    std::vector<int> indices;  // sorted, unique, in [0, p)
    SelectionMethod method = SelectionMethod::oracle;
    std::vector<int> step_sizes;  // per-step support sizes (iterative)

    int size() const { return static_cast<int>(indices.size()); }
    bool contains(int j) const;
};

struct RestrictedLsFit {
    Eigen::VectorXd theta;  // supported on s
    double sigma_hat = 0.0;
};

/// Least squares restricted to the support s (QR, minimum-norm on rank
/// deficiency) with the plug-in variance estimate.
RestrictedLsFit restricted_least_squares(const Eigen::MatrixXd& x0,
                                         const Eigen::VectorXd& y0,
                                         const SupportSet& s);

/// MCP penalty value: lambda * integral_0^t (1 - x/(kappa lambda))_+ dx.
double mcp_penalty(double t, double lambda, double kappa);

/// Exact scalar minimizer of (t - z)^2 + mcp_penalty(|t|).
double mcp_prox(double z, double lambda, double kappa);

struct McpFit {
    Eigen::VectorXd theta;  // rescaled to the original design
    double stationarity_residual = 0.0;
    int sweeps = 0;
};

/// Cyclic coordinate descent on the normalized-design MCP criterion. Any
/// stationary point is acceptable; the returned residual is the max-norm
/// distance of the gradient to the penalty subdifferential.
McpFit mcp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
               double kappa, const Eigen::VectorXd& init);

/// Square-root lasso followed by hard thresholding at
/// c_sl * sigma_hat * (8/3) * sqrt(log(p/delta) / m).
Eigen::VectorXd threshold_sqrt_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double delta, double c_sl);

/// Rows form an orthonormal basis of the orthogonal complement of the column
/// span of x_s (rank by QR, tolerance 1e-10). Empty span yields the identity.
Eigen::MatrixXd orthogonal_complement_projector(const Eigen::MatrixXd& x_s);

}  // namespace sptest
