#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sptest {

/// Base class for all library errors. CLI maps these to exit code 3
/// (numerical failure) unless they derive from InvalidConfig.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

struct SpectrumOutOfClass : Error {
    explicit SpectrumOutOfClass(const std::string& msg) : Error(msg) {}
};

struct NotSymmetric : Error {
    explicit NotSymmetric(const std::string& msg) : Error(msg) {}
};

struct PatternInfeasible : Error {
    explicit PatternInfeasible(const std::string& msg) : Error(msg) {}
};

struct TooFewRows : Error {
    explicit TooFewRows(const std::string& msg) : Error(msg) {}
};

struct NonFiniteInput : Error {
    explicit NonFiniteInput(const std::string& msg) : Error(msg) {}
};

struct SupportTooLarge : Error {
    explicit SupportTooLarge(const std::string& msg) : Error(msg) {}
};

struct QuadratureFailure : Error {
    explicit QuadratureFailure(const std::string& msg) : Error(msg) {}
};

struct NotBracketed : Error {
    explicit NotBracketed(const std::string& msg) : Error(msg) {}
};

struct BlockTooSmall : Error {
    explicit BlockTooSmall(const std::string& msg) : Error(msg) {}
};

/// Carries the last iterate so Monte Carlo drivers can log and skip the trial.
struct DidNotConverge : Error {
    DidNotConverge(const std::string& msg, std::vector<double> iterate, double residual)
        : Error(msg), last_iterate(std::move(iterate)), last_residual(residual) {}
    std::vector<double> last_iterate;
    double last_residual;
};

}  // namespace sptest
