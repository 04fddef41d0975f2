#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sptest {

enum class CovKind { identity, ar1, equicorrelation, explicit_matrix };

/// Covariance family together with the class bound eta (> 1). Realized
/// matrices must have their spectrum inside [1/eta, eta].
struct CovarianceSpec {
    CovKind kind = CovKind::identity;
    double param = 0.0;  // ar1 coefficient or equicorrelation value
    double eta = 3.0;
    Eigen::MatrixXd matrix;  // explicit_matrix only

    static CovarianceSpec identity(double eta = 3.0);
    static CovarianceSpec ar1(double a, double eta = 3.0);
    static CovarianceSpec equicorrelation(double r, double eta = 3.0);
    static CovarianceSpec explicit_matrix_spec(Eigen::MatrixXd m, double eta = 3.0);
};

enum class SignalPattern { spikes, flat_small, decaying, explicit_vector };

/// Description of theta*: k0 "null-sized" coordinates plus delta extra
/// coordinates carrying separation rho (in sigma units) from B0[k0].
struct SignalSpec {
    int k0 = 0;
    int delta = 0;
    double rho = 0.0;
    SignalPattern pattern = SignalPattern::spikes;
    double spike_scale = 10.0;
    Eigen::VectorXd explicit_theta;  // explicit_vector only
};

struct Scenario {
    int n = 0;
    int p = 0;
    double sigma = 1.0;
    bool sigma_known = true;
    CovarianceSpec covariance;
    SignalSpec signal;

    void validate() const;  // throws InvalidConfig
};

struct RegressionSample {
    Eigen::MatrixXd x;            // n x p
    Eigen::VectorXd y;            // n
    Eigen::VectorXd theta_star;   // generative truth, harness scoring only
    std::uint64_t seed = 0;
};

/// Row partition into equal contiguous blocks; trailing remainder rows are
/// discarded (and counted).
struct SplitSample {
    int parts = 0;
    int m = 0;          // rows per block
    int discarded = 0;  // n mod parts

    int block_start(int i) const { return i * m; }

    Eigen::Ref<const Eigen::MatrixXd> x_block(const RegressionSample& s, int i) const {
        return s.x.middleRows(block_start(i), m);
    }
    Eigen::Ref<const Eigen::VectorXd> y_block(const RegressionSample& s, int i) const {
        return s.y.segment(block_start(i), m);
    }
};

/// Registry of all tuning constants the formulas leave unspecified. Defaults
/// carry provenance "analytic-default"; calibration overwrites values and
/// tags them "calibrated".
struct DesignConstants {
    double c_t = 2.5;              // l-infinity order-statistic test multiplier
    double c_chi = 3.0;            // residual chi-square test multiplier
    double c_f = 1.0;              // Fourier statistic deviation multiplier
    double c_i = 1.0;              // dyadic Fourier statistic deviation multiplier
    double c_u_eta = 2.0;          // U-statistic threshold multiplier
    double c_SL_eta = 1.0;         // thresholded square-root lasso multiplier
    double c_MCP_eta = 3.0;        // MCP lambda multiplier
    double c_MCP_prime_eta = 3.0;  // MCP concavity parameter kappa
    double c_star_a1 = 1.0;        // restricted-LS count test: property-S a1
    double c_star_a3 = 1.0;        // restricted-LS count test: property-S a3
    double c_ith_eta = 1.0;        // iterative selection multiplier
    double condition_A_c = 1.0;
    double condition_B_c = 1.0;
    double c_regime_eta = 1.0;     // general aggregation regime constant

    std::map<std::string, std::string> provenance;

    static DesignConstants defaults();
    void validate() const;  // all entries strictly positive
    void set_provenance(const std::string& name, const std::string& tag) {
        provenance[name] = tag;
    }
    std::string provenance_of(const std::string& name) const;
};

struct ConditionReport {
    bool condition_A = false;
    bool condition_B = false;
    double margin_A = 0.0;  // c_A * n - LHS_A
    double margin_B = 0.0;
};

/// Realizes the covariance matrix and checks the spectrum band
/// [1/eta - 1e-9, eta + 1e-9]. Throws SpectrumOutOfClass / NotSymmetric.
Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec, int p);

/// Builds theta* with d2(theta*, B0[k0]) = rho * sigma exactly for the
/// built-in patterns. Throws PatternInfeasible when delta = 0 but rho > 0.
Eigen::VectorXd make_theta(const SignalSpec& signal, int p, double sigma);

/// Draws one (X, Y) with X rows i.i.d. N(0, Sigma) and Y = X theta* + sigma eps.
/// Bit-identical regeneration from (scenario, seed).
RegressionSample generate_sample(const Scenario& scenario, std::uint64_t seed);

/// l2 distance from theta to the set of k0-sparse vectors: the norm of theta
/// with its k0 largest-magnitude entries removed (lowest index on ties).
double d2_to_sparse(const Eigen::VectorXd& theta, int k0);

/// Contiguous equal blocks of floor(n/parts) rows; remainder discarded.
SplitSample split_sample(const RegressionSample& sample, int parts);

/// Advisory applicability diagnostics; never aborts.
ConditionReport check_conditions(const Scenario& scenario, int k0, double alpha,
                                 const DesignConstants& constants);

}  // namespace sptest
