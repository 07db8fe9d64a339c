#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace robgasp {

/// Broad error category; the CLI maps each category to an exit code.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Inconsistent or invalid configuration (bad hyperparameters, forbidden prior/parameterization pairs).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Malformed or degenerate input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Outputs carry no information beyond the mean basis (zero generalized residual).
class DegenerateOutputError : public DataError {
public:
    explicit DegenerateOutputError(const std::string& what) : DataError(what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Cholesky of the working covariance failed at every jitter level tried.
class SingularCovarianceError : public NumericalError {
public:
    explicit SingularCovarianceError(std::vector<double> attempted_jitter);
    [[nodiscard]] const std::vector<double>& attempted_jitter() const noexcept { return jitter_; }

private:
    std::vector<double> jitter_;
};

/// H^T C^{-1} H (or another small Gram matrix) is not of full rank.
class RankError : public NumericalError {
public:
    explicit RankError(const std::string& what) : NumericalError(what) {}
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

}  // namespace robgasp
