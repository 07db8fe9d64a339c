#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robgasp/design.hpp"

namespace robgasp {

enum class KernelFamily { PowerExponential, Matern };

/// One-dimensional isotropic correlation function with fixed roughness.
///
/// PowerExponential: c(d) = exp(-(d/gamma)^alpha), alpha in (0, 2].
/// Matern: closed-form half-integer roughness alpha in {0.5, 1.5, 2.5}, written in
/// terms of r = sqrt(2 alpha) d / gamma, e.g. alpha = 2.5 gives (1 + r + r^2/3) exp(-r).
class Kernel1D {
public:
    static Kernel1D power_exponential(double alpha);
    static Kernel1D matern(double alpha);

    [[nodiscard]] KernelFamily family() const noexcept { return family_; }
    [[nodiscard]] double roughness() const noexcept { return alpha_; }

    /// Correlation at distance d >= 0 for inverse range beta >= 0.
    [[nodiscard]] double corr_inverse_range(double d, double beta) const noexcept;
    [[nodiscard]] double log_corr_inverse_range(double d, double beta) const noexcept;

    /// d log c / d beta at (d, beta). Finite at beta = 0 for every supported kernel with alpha >= 1.
    [[nodiscard]] double dlog_corr_dbeta(double d, double beta) const noexcept;

    friend bool operator==(const Kernel1D&, const Kernel1D&) = default;

private:
    Kernel1D(KernelFamily family, double alpha);

    KernelFamily family_ = KernelFamily::Matern;
    double alpha_ = 2.5;
    double scale_ = 0.0;  // sqrt(2 alpha) for Matern
    int half_order_ = 2;  // k in alpha = (2k + 1) / 2 for Matern
};

/// c_l(d) for range parameter gamma > 0.
[[nodiscard]] double corr1d(const Kernel1D& kernel, double d, double gamma);

/// Per-coordinate kernels of a product correlation function.
class CorrelationSpec {
public:
    CorrelationSpec() = default;
    explicit CorrelationSpec(std::vector<Kernel1D> kernels);
    static CorrelationSpec uniform(const Kernel1D& kernel, Eigen::Index dim);

    [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(kernels_.size()); }
    [[nodiscard]] const Kernel1D& operator[](Eigen::Index l) const { return kernels_.at(static_cast<std::size_t>(l)); }
    [[nodiscard]] const std::vector<Kernel1D>& kernels() const noexcept { return kernels_; }

private:
    std::vector<Kernel1D> kernels_;
};

/// gamma: range; xi = log(1/gamma); beta = 1/gamma.
enum class Parameterization { Gamma, Xi, Beta };

[[nodiscard]] const char* to_string(Parameterization p) noexcept;
[[nodiscard]] Parameterization parse_parameterization(const std::string& name);

/// Range parameters in a chosen parameterization.
struct RangeParams {
    Eigen::VectorXd values;
    Parameterization parameterization = Parameterization::Xi;

    static RangeParams from_gamma(Eigen::VectorXd gamma);
    static RangeParams from_beta(Eigen::VectorXd beta);
    static RangeParams from_xi(Eigen::VectorXd xi);

    [[nodiscard]] Eigen::Index size() const noexcept { return values.size(); }
    [[nodiscard]] Eigen::VectorXd gamma() const;
    [[nodiscard]] Eigen::VectorXd beta() const;
    [[nodiscard]] Eigen::VectorXd xi() const;
    [[nodiscard]] RangeParams to(Parameterization target) const;

    /// d beta_l / d value_l for the active parameterization.
    [[nodiscard]] Eigen::VectorXd dbeta_dvalue() const;
};

/// Pairwise absolute coordinate differences |x_il - x_jl|, one n x n matrix per coordinate.
[[nodiscard]] std::vector<Eigen::MatrixXd> coordinate_distances(const Eigen::MatrixXd& points);

/// |x_il - x*_jl| between design rows and new rows, one n x m matrix per coordinate.
[[nodiscard]] std::vector<Eigen::MatrixXd> cross_distances(const Eigen::MatrixXd& points,
                                                           const Eigen::MatrixXd& new_points);

/// Product correlation R = R_1 o R_2 o ... o R_px from precomputed distances and inverse ranges.
[[nodiscard]] Eigen::MatrixXd product_correlation(const CorrelationSpec& spec,
                                                  const std::vector<Eigen::MatrixXd>& distances,
                                                  const Eigen::VectorXd& beta);

/// Entrywise d log R / d beta_l from precomputed distances.
[[nodiscard]] Eigen::MatrixXd dlog_correlation_dbeta(const Kernel1D& kernel, const Eigen::MatrixXd& distance,
                                                     double beta);

[[nodiscard]] Eigen::MatrixXd corr_matrix(const CorrelationSpec& spec, const DesignMatrix& design,
                                          const RangeParams& params);

/// Derivative of R with respect to coordinate l of params, in params' own parameterization.
[[nodiscard]] Eigen::MatrixXd corr_matrix_deriv(const CorrelationSpec& spec, const DesignMatrix& design,
                                                const RangeParams& params, Eigen::Index l);

}  // namespace robgasp
