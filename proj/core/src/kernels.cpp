#include "robgasp/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "robgasp/errors.hpp"

namespace robgasp {

Kernel1D::Kernel1D(KernelFamily family, double alpha) : family_(family), alpha_(alpha) {
    if (family_ == KernelFamily::Matern) {
        scale_ = std::sqrt(2.0 * alpha_);
        half_order_ = static_cast<int>(std::lround(alpha_ - 0.5));
    }
}

Kernel1D Kernel1D::power_exponential(double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ConfigError("power-exponential roughness must lie in (0, 2], got " + std::to_string(alpha));
    }
    return {KernelFamily::PowerExponential, alpha};
}

Kernel1D Kernel1D::matern(double alpha) {
    if (alpha != 0.5 && alpha != 1.5 && alpha != 2.5) {
        throw ConfigError("Matern roughness must be one of 0.5, 1.5, 2.5, got " + std::to_string(alpha));
    }
    return {KernelFamily::Matern, alpha};
}

namespace {

// log c for the Matern family as a function of r = scale * d * beta.
double matern_log_corr(int half_order, double r) noexcept {
    switch (half_order) {
        case 0: return -r;
        case 1: return std::log1p(r) - r;
        default: return std::log1p(r + r * r / 3.0) - r;
    }
}

// d log c / d r for the Matern family, finite at r = 0.
double matern_dlog_dr(int half_order, double r) noexcept {
    switch (half_order) {
        case 0: return -1.0;
        case 1: return -r / (1.0 + r);
        default: return -r * (1.0 + r) / (3.0 + 3.0 * r + r * r);
    }
}

double log_corr(const Kernel1D& k, double d, double beta, int half_order, double scale) noexcept {
    if (d == 0.0 || beta == 0.0) return 0.0;
    if (k.family() == KernelFamily::PowerExponential) return -std::pow(d * beta, k.roughness());
    return matern_log_corr(half_order, scale * d * beta);
}

}  // namespace

double Kernel1D::log_corr_inverse_range(double d, double beta) const noexcept {
    return log_corr(*this, d, beta, half_order_, scale_);
}

double Kernel1D::corr_inverse_range(double d, double beta) const noexcept {
    return std::exp(log_corr_inverse_range(d, beta));
}

double Kernel1D::dlog_corr_dbeta(double d, double beta) const noexcept {
    if (d == 0.0) return 0.0;
    if (family_ == KernelFamily::PowerExponential) {
        if (beta == 0.0) {
            if (alpha_ > 1.0) return 0.0;
            if (alpha_ == 1.0) return -d;
            return -std::numeric_limits<double>::infinity();
        }
        return -alpha_ * std::pow(d, alpha_) * std::pow(beta, alpha_ - 1.0);
    }
    return scale_ * d * matern_dlog_dr(half_order_, scale_ * d * beta);
}

double corr1d(const Kernel1D& kernel, double d, double gamma) {
    if (!std::isfinite(d) || d < 0.0) throw DataError("corr1d: distance must be finite and nonnegative");
    if (!(gamma > 0.0)) throw DataError("corr1d: range parameter must be positive");
    return kernel.corr_inverse_range(d, 1.0 / gamma);
}

CorrelationSpec::CorrelationSpec(std::vector<Kernel1D> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty()) throw ConfigError("correlation spec needs at least one coordinate");
}

CorrelationSpec CorrelationSpec::uniform(const Kernel1D& kernel, Eigen::Index dim) {
    if (dim < 1) throw ConfigError("correlation spec needs at least one coordinate");
    return CorrelationSpec(std::vector<Kernel1D>(static_cast<std::size_t>(dim), kernel));
}

const char* to_string(Parameterization p) noexcept {
    switch (p) {
        case Parameterization::Gamma: return "gamma";
        case Parameterization::Xi: return "xi";
        case Parameterization::Beta: return "beta";
    }
    return "?";
}

Parameterization parse_parameterization(const std::string& name) {
    if (name == "gamma") return Parameterization::Gamma;
    if (name == "xi") return Parameterization::Xi;
    if (name == "beta") return Parameterization::Beta;
    throw ConfigError("unknown parameterization '" + name + "' (expected gamma, xi or beta)");
}

RangeParams RangeParams::from_gamma(Eigen::VectorXd gamma) {
    if ((gamma.array() <= 0.0).any()) throw DataError("range parameters must be positive");
    return {std::move(gamma), Parameterization::Gamma};
}

RangeParams RangeParams::from_beta(Eigen::VectorXd beta) {
    if ((beta.array() < 0.0).any()) throw DataError("inverse range parameters must be nonnegative");
    return {std::move(beta), Parameterization::Beta};
}

RangeParams RangeParams::from_xi(Eigen::VectorXd xi) { return {std::move(xi), Parameterization::Xi}; }

Eigen::VectorXd RangeParams::beta() const {
    switch (parameterization) {
        case Parameterization::Gamma: return values.array().inverse();
        case Parameterization::Beta: return values;
        case Parameterization::Xi: return values.array().exp();
    }
    return values;
}

Eigen::VectorXd RangeParams::gamma() const {
    switch (parameterization) {
        case Parameterization::Gamma: return values;
        case Parameterization::Beta: return values.array().inverse();
        case Parameterization::Xi: return (-values.array()).exp();
    }
    return values;
}

Eigen::VectorXd RangeParams::xi() const {
    switch (parameterization) {
        case Parameterization::Gamma: return -values.array().log();
        case Parameterization::Beta: return values.array().log();
        case Parameterization::Xi: return values;
    }
    return values;
}

RangeParams RangeParams::to(Parameterization target) const {
    switch (target) {
        case Parameterization::Gamma: return {gamma(), target};
        case Parameterization::Beta: return {beta(), target};
        case Parameterization::Xi: return {xi(), target};
    }
    return *this;
}

Eigen::VectorXd RangeParams::dbeta_dvalue() const {
    const Eigen::VectorXd b = beta();
    switch (parameterization) {
        case Parameterization::Gamma: return -b.array().square();
        case Parameterization::Beta: return Eigen::VectorXd::Ones(b.size());
        case Parameterization::Xi: return b;
    }
    return b;
}

std::vector<Eigen::MatrixXd> coordinate_distances(const Eigen::MatrixXd& points) {
    return cross_distances(points, points);
}

std::vector<Eigen::MatrixXd> cross_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& new_points) {
    if (points.cols() != new_points.cols()) {
        throw DataError("input dimension mismatch: " + std::to_string(points.cols()) + " vs " +
                        std::to_string(new_points.cols()));
    }
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index l = 0; l < points.cols(); ++l) {
        Eigen::MatrixXd d(points.rows(), new_points.rows());
        for (Eigen::Index j = 0; j < new_points.rows(); ++j) {
            d.col(j) = (points.col(l).array() - new_points(j, l)).abs().matrix();
        }
        out.push_back(std::move(d));
    }
    return out;
}

Eigen::MatrixXd product_correlation(const CorrelationSpec& spec, const std::vector<Eigen::MatrixXd>& distances,
                                   const Eigen::VectorXd& beta) {
    if (static_cast<Eigen::Index>(distances.size()) != spec.dim() || beta.size() != spec.dim()) {
        throw DataError("correlation: dimension mismatch between kernels (" + std::to_string(spec.dim()) +
                        "), distances (" + std::to_string(distances.size()) + ") and parameters (" +
                        std::to_string(beta.size()) + ")");
    }
    Eigen::MatrixXd log_r = Eigen::MatrixXd::Zero(distances.front().rows(), distances.front().cols());
    for (Eigen::Index l = 0; l < spec.dim(); ++l) {
        const Kernel1D& k = spec[l];
        const double b = beta(l);
        if (b == 0.0) continue;
        const auto& d = distances[static_cast<std::size_t>(l)];
        if (k.family() == KernelFamily::PowerExponential) {
            log_r.array() -= (d.array() * b).pow(k.roughness());
        } else {
            log_r += d.unaryExpr([&](double x) { return k.log_corr_inverse_range(x, b); });
        }
    }
    return log_r.array().exp().matrix();
}

Eigen::MatrixXd dlog_correlation_dbeta(const Kernel1D& kernel, const Eigen::MatrixXd& distance, double beta) {
    return distance.unaryExpr([&](double d) { return kernel.dlog_corr_dbeta(d, beta); });
}

namespace {

void check_dims(const CorrelationSpec& spec, const DesignMatrix& design, const RangeParams& params) {
    if (spec.dim() != design.dim() || params.size() != design.dim()) {
        throw DataError("dimension mismatch: kernels " + std::to_string(spec.dim()) + ", design " +
                        std::to_string(design.dim()) + ", parameters " + std::to_string(params.size()));
    }
}

}  // namespace

Eigen::MatrixXd corr_matrix(const CorrelationSpec& spec, const DesignMatrix& design, const RangeParams& params) {
    check_dims(spec, design, params);
    const Eigen::VectorXd beta = params.beta();
    if (!beta.allFinite() || (beta.array() < 0.0).any()) throw DataError("range parameters must be positive");
    return product_correlation(spec, coordinate_distances(design.points()), beta);
}

Eigen::MatrixXd corr_matrix_deriv(const CorrelationSpec& spec, const DesignMatrix& design,
                                  const RangeParams& params, Eigen::Index l) {
    check_dims(spec, design, params);
    if (l < 0 || l >= spec.dim()) throw DataError("coordinate index out of range");
    const Eigen::VectorXd beta = params.beta();
    if (!beta.allFinite() || (beta.array() < 0.0).any()) throw DataError("range parameters must be positive");
    const auto dist = coordinate_distances(design.points());
    const Eigen::MatrixXd r = product_correlation(spec, dist, beta);
    const double chain = params.dbeta_dvalue()(l);
    Eigen::MatrixXd g = dlog_correlation_dbeta(spec[l], dist[static_cast<std::size_t>(l)], beta(l));
    return (r.array() * g.array() * chain).matrix();
}

}  // namespace robgasp
