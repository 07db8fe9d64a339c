#pragma once

#include <optional>

#include <Eigen/Dense>

#include "robgasp/design.hpp"
#include "robgasp/gasp.hpp"
#include "robgasp/kernels.hpp"

namespace robgasp {

enum class PriorKind { Reference, JR };
enum class FitContext { Emulation, Calibration };

[[nodiscard]] const char* to_string(PriorKind kind) noexcept;
[[nodiscard]] PriorKind parse_prior_kind(const std::string& name);

/// Jointly robust prior pi(beta, eta) = C t^a exp(-b t), t = sum_l C_l beta_l (+ eta).
struct JRPriorParams {
    double a = 0.2;
    double b = 1.0;
    Eigen::VectorXd C;

    /// Throws ConfigError unless b > 0, C > 0 and a exceeds the propriety bound of the chosen form.
    void validate(bool with_nugget) const;
};

struct PriorSpec {
    PriorKind kind = PriorKind::JR;
    std::optional<JRPriorParams> jr;
    bool nugget_included = false;

    static PriorSpec reference(bool nugget);
    static PriorSpec jointly_robust(JRPriorParams params, bool nugget);
    void validate() const;
};

/// Defaults: b = 1, C_l = n^{-1/p} (max_l - min_l), a = 1/5 (emulation) or 1/2 - p (calibration).
[[nodiscard]] JRPriorParams jr_default_params(const DesignMatrix& design, FitContext context);

/// log of the normalizing constant for the nugget (eta present) or no-nugget form.
[[nodiscard]] double jr_log_normalizer(const JRPriorParams& p, bool with_nugget);

/// Normalized log density. At t = 0 returns -inf for a > 0 and +inf for a < 0.
[[nodiscard]] double jr_log_density(const JRPriorParams& p, const Eigen::VectorXd& beta,
                                    std::optional<double> eta = std::nullopt);

/// Gradient w.r.t. (beta, [eta]): a C_l / t - b C_l and a / t - b.
[[nodiscard]] Eigen::VectorXd jr_log_density_grad(const JRPriorParams& p, const Eigen::VectorXd& beta,
                                                  std::optional<double> eta = std::nullopt);

struct JRMoments {
    Eigen::VectorXd mean_beta;
    Eigen::VectorXd var_beta;
    double mean_eta = 0.0;
    double var_eta = 0.0;
};

/// Closed-form first two moments of the nugget form.
[[nodiscard]] JRMoments jr_moments(const JRPriorParams& p);

/// 1/2 log det I* in params' parameterization (raw eta for the nugget row). Unnormalized.
/// Returns -inf when I* is singular; throws NumericalError when it is clearly indefinite.
[[nodiscard]] double reference_log_density(const GaSPModel& model, const RangeParams& params, double eta);

/// 1/2 log det of a Fisher matrix with the eigenvalue policy above.
[[nodiscard]] double half_log_det_fisher(const Eigen::MatrixXd& info);

}  // namespace robgasp
