#include "sptest/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sptest/errors.hpp"
#include "sptest/rng.hpp"

namespace sptest {

CovarianceSpec CovarianceSpec::identity(double eta) {
    CovarianceSpec s;
    s.kind = CovKind::identity;
    s.eta = eta;
    return s;
}

CovarianceSpec CovarianceSpec::ar1(double a, double eta) {
    CovarianceSpec s;
    s.kind = CovKind::ar1;
    s.param = a;
    s.eta = eta;
    return s;
}

CovarianceSpec CovarianceSpec::equicorrelation(double r, double eta) {
    CovarianceSpec s;
    s.kind = CovKind::equicorrelation;
    s.param = r;
    s.eta = eta;
    return s;
}

CovarianceSpec CovarianceSpec::explicit_matrix_spec(Eigen::MatrixXd m, double eta) {
    CovarianceSpec s;
    s.kind = CovKind::explicit_matrix;
    s.matrix = std::move(m);
    s.eta = eta;
    return s;
}

void Scenario::validate() const {
    if (n < 3) throw InvalidConfig("Scenario: n must be at least 3");
    if (p < 1) throw InvalidConfig("Scenario: p must be at least 1");
    if (!(sigma > 0.0)) throw InvalidConfig("Scenario: sigma must be positive");
    if (!(covariance.eta > 1.0)) throw InvalidConfig("Scenario: eta must exceed 1");
    if (signal.k0 < 0 || signal.delta < 0) throw InvalidConfig("Scenario: negative sparsity");
    if (signal.k0 + signal.delta > p) throw InvalidConfig("Scenario: k0 + delta > p");
    if (signal.rho < 0.0) throw InvalidConfig("Scenario: rho must be nonnegative");
}

DesignConstants DesignConstants::defaults() {
    DesignConstants c;
    const char* names[] = {"c_t",       "c_chi",          "c_f",
                           "c_i",       "c_u_eta",        "c_SL_eta",
                           "c_MCP_eta", "c_MCP_prime_eta", "c_star_a1",
                           "c_star_a3", "c_ith_eta",      "condition_A_c",
                           "condition_B_c", "c_regime_eta"};
    for (const char* name : names) c.provenance[name] = "analytic-default";
    return c;
}

void DesignConstants::validate() const {
    const double values[] = {c_t,       c_chi,          c_f,           c_i,
                             c_u_eta,   c_SL_eta,       c_MCP_eta,     c_MCP_prime_eta,
                             c_star_a1, c_star_a3,      c_ith_eta,     condition_A_c,
                             condition_B_c, c_regime_eta};
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidConfig("DesignConstants: all entries must be strictly positive");
        }
    }
}

std::string DesignConstants::provenance_of(const std::string& name) const {
    auto it = provenance.find(name);
    return it == provenance.end() ? "analytic-default" : it->second;
}

Eigen::MatrixXd covariance_matrix(const CovarianceSpec& spec, int p) {
    if (p < 1) throw InvalidConfig("covariance_matrix: p must be at least 1");
    if (!(spec.eta > 1.0)) throw InvalidConfig("covariance_matrix: eta must exceed 1");

    Eigen::MatrixXd sigma;
    switch (spec.kind) {
        case CovKind::identity:
            sigma = Eigen::MatrixXd::Identity(p, p);
            break;
        case CovKind::ar1: {
            sigma.resize(p, p);
            for (int i = 0; i < p; ++i) {
                for (int j = 0; j < p; ++j) {
                    sigma(i, j) = std::pow(spec.param, std::abs(i - j));
                }
            }
            break;
        }
        case CovKind::equicorrelation:
            sigma = Eigen::MatrixXd::Constant(p, p, spec.param);
            sigma.diagonal().setOnes();
            break;
        case CovKind::explicit_matrix: {
            if (spec.matrix.rows() != p || spec.matrix.cols() != p) {
                throw InvalidConfig("covariance_matrix: explicit matrix has wrong size");
            }
            const double asym = (spec.matrix - spec.matrix.transpose()).cwiseAbs().maxCoeff();
            if (asym > 1e-12) {
                throw NotSymmetric("covariance_matrix: explicit matrix asymmetric by " +
                                   std::to_string(asym));
            }
            sigma = 0.5 * (spec.matrix + spec.matrix.transpose());
            break;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < 1.0 / spec.eta - 1e-9 || hi > spec.eta + 1e-9) {
        throw SpectrumOutOfClass("covariance_matrix: spectrum [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "] outside [1/eta, eta] for eta = " +
                                 std::to_string(spec.eta));
    }
    return sigma;
}

Eigen::VectorXd make_theta(const SignalSpec& signal, int p, double sigma) {
    if (signal.k0 < 0 || signal.delta < 0) throw InvalidConfig("make_theta: negative sparsity");
    if (signal.k0 + signal.delta > p) throw InvalidConfig("make_theta: k0 + delta > p");
    if (signal.pattern == SignalPattern::explicit_vector) {
        if (signal.explicit_theta.size() != p) {
            throw InvalidConfig("make_theta: explicit vector has wrong length");
        }
        return signal.explicit_theta;
    }
    if (signal.delta == 0 && signal.rho > 0.0) {
        throw PatternInfeasible("make_theta: rho > 0 requires delta > 0");
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    const int k0 = signal.k0;
    const int delta = signal.delta;
    const double tail_target = signal.rho * sigma;

    switch (signal.pattern) {
        case SignalPattern::spikes: {
            for (int i = 0; i < k0; ++i) {
                theta[i] = (i % 2 == 0 ? 1.0 : -1.0) * signal.spike_scale * sigma;
            }
            if (delta > 0) {
                const double mag = tail_target / std::sqrt(static_cast<double>(delta));
                for (int j = 0; j < delta; ++j) theta[k0 + j] = mag;
            }
            break;
        }
        case SignalPattern::flat_small: {
            const double mag =
                delta > 0 ? tail_target / std::sqrt(static_cast<double>(delta)) : 0.0;
            for (int i = 0; i < k0 + delta; ++i) theta[i] = mag;
            break;
        }
        case SignalPattern::decaying: {
            // Tail entry q has magnitude proportional to 1 + log(k0 / (q ^ k0)),
            // rescaled so the tail norm equals rho * sigma exactly.
            Eigen::VectorXd profile(delta);
            for (int q = 1; q <= delta; ++q) {
                const double ratio =
                    k0 > 0 ? static_cast<double>(k0) / std::min<double>(q, k0) : 1.0;
                profile[q - 1] = 1.0 + std::log(ratio);
            }
            double scale = 0.0;
            if (delta > 0 && tail_target > 0.0) scale = tail_target / profile.norm();
            const double tail_max = delta > 0 ? scale * profile[0] : 0.0;
            const double head = tail_max > 0.0 ? 2.0 * tail_max : sigma;
            for (int i = 0; i < k0; ++i) theta[i] = head;
            for (int q = 0; q < delta; ++q) theta[k0 + q] = scale * profile[q];
            break;
        }
        case SignalPattern::explicit_vector:
            break;  // handled above
    }
    return theta;
}

RegressionSample generate_sample(const Scenario& scenario, std::uint64_t seed) {
    scenario.validate();
    const int n = scenario.n;
    const int p = scenario.p;

    RegressionSample sample;
    sample.seed = seed;
    sample.theta_star = make_theta(scenario.signal, p, scenario.sigma);

    Rng design_rng = Rng::substream(seed, 0);
    sample.x.resize(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) sample.x(i, j) = design_rng.normal();
    }
    if (scenario.covariance.kind != CovKind::identity) {
        const Eigen::MatrixXd sigma_mat = covariance_matrix(scenario.covariance, p);
        const Eigen::MatrixXd chol = sigma_mat.llt().matrixL();
        sample.x = sample.x * chol.transpose();
    }

    Rng noise_rng = Rng::substream(seed, 1);
    Eigen::VectorXd eps(n);
    for (int i = 0; i < n; ++i) eps[i] = noise_rng.normal();

    sample.y = sample.x * sample.theta_star + scenario.sigma * eps;
    return sample;
}

namespace {

// Indices ordered by magnitude descending, lowest index first on ties.
std::vector<int> magnitude_order(const Eigen::VectorXd& theta) {
    std::vector<int> idx(theta.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(theta[a]) > std::abs(theta[b]);
    });
    return idx;
}

}  // namespace

double d2_to_sparse(const Eigen::VectorXd& theta, int k0) {
    if (k0 < 0) throw InvalidConfig("d2_to_sparse: k0 must be nonnegative");
    const int p = static_cast<int>(theta.size());
    if (k0 >= p) return 0.0;
    std::vector<int> idx = magnitude_order(theta);
    double sum_sq = 0.0;
    for (int r = k0; r < p; ++r) sum_sq += theta[idx[r]] * theta[idx[r]];
    return std::sqrt(sum_sq);
}

SplitSample split_sample(const RegressionSample& sample, int parts) {
    if (parts != 2 && parts != 3) throw InvalidConfig("split_sample: parts must be 2 or 3");
    const int n = static_cast<int>(sample.y.size());
    if (n < parts) throw TooFewRows("split_sample: n < parts");
    SplitSample split;
    split.parts = parts;
    split.m = n / parts;
    split.discarded = n - parts * split.m;
    return split;
}

ConditionReport check_conditions(const Scenario& scenario, int k0, double alpha,
                                 const DesignConstants& constants) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("check_conditions: alpha in (0,1)");
    const double p = scenario.p;
    const double n = scenario.n;
    const double k = std::max(k0, 1);
    const double log_pa = std::log(p / alpha);
    const double log_p = std::log(p);
    const double log_inv_a = std::log(1.0 / alpha);

    ConditionReport report;
    const double lhs_a = k * log_pa + log_pa * log_pa;
    report.margin_A = constants.condition_A_c * n - lhs_a;
    report.condition_A = report.margin_A >= 0.0;

    const double lhs_b = k * (1.0 + log_pa) + log_inv_a * log_inv_a * log_inv_a +
                         log_p * log_inv_a;
    report.margin_B = constants.condition_B_c * n - lhs_b;
    report.condition_B = report.margin_B >= 0.0;
    return report;
}

}  // namespace sptest
