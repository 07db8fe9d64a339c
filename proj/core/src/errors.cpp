#include "robgasp/errors.hpp"

#include <sstream>

namespace robgasp {

namespace {

std::string describe_jitter(const std::vector<double>& jitter) {
    std::ostringstream os;
    os << "covariance matrix is not positive definite; attempted jitter levels:";
    for (double j : jitter) os << ' ' << j;
    return os.str();
}

}  // namespace

SingularCovarianceError::SingularCovarianceError(std::vector<double> attempted_jitter)
    : NumericalError(describe_jitter(attempted_jitter)), jitter_(std::move(attempted_jitter)) {}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return "CONFIG";
        case ErrorKind::Data: return "DATA";
        case ErrorKind::Numerical: return "NUMERICAL";
    }
    return "UNKNOWN";
}

}  // namespace robgasp
