#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robgasp/gasp.hpp"
#include "robgasp/kernels.hpp"
#include "robgasp/priors.hpp"

namespace robgasp {

/// Optimizer settings and prior for marginal posterior mode estimation.
///
/// The search always runs on u = (log beta, [log eta]); the parameterization selects which
/// density is maximized. With a nugget, the nugget coordinate is log eta under Xi and raw
/// eta under Gamma and Beta.
struct FitConfig {
    Parameterization parameterization = Parameterization::Xi;
    PriorSpec prior;
    int max_iter = 200;
    double grad_tol = 1e-6;
    int multistart = 3;
    std::uint64_t seed = 0;
    /// Box on u. Defaults: C_l beta_l in [1e-8, 1e4] with C_l the design scale, eta in [1e-12, 1e4].
    std::optional<Eigen::VectorXd> lower;
    std::optional<Eigen::VectorXd> upper;

    /// Rejects the reference prior under Beta and the JR prior under Beta with a <= 0.
    void validate(Eigen::Index dim, bool nugget) const;
};

/// Config with the default JR prior for the model (emulation defaults).
[[nodiscard]] FitConfig default_fit_config(const GaSPModel& model, Parameterization param = Parameterization::Xi);

struct RobustnessDiagnostics {
    double min_offdiag_corr = 0.0;
    double max_offdiag_corr = 0.0;
    bool flag_near_identity = false;
    bool flag_near_ones = false;
};

struct OptimizerTrace {
    int starts = 0;
    int failed_starts = 0;
    int best_start = -1;
    int iterations = 0;
    long n_objective = 0;
    long n_gradient = 0;
    long n_factorizations = 0;
    bool converged = false;
    bool at_bound = false;
    std::string status;
    double seconds = 0.0;
};

struct FitResult {
    Parameterization parameterization = Parameterization::Xi;
    PriorSpec prior;
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;
    Eigen::VectorXd xi;
    double eta = 0.0;
    Eigen::VectorXd theta_m;
    double sigma2 = 0.0;
    double log_posterior = 0.0;
    RobustnessDiagnostics diagnostics;
    OptimizerTrace trace;

    [[nodiscard]] RangeParams params() const { return RangeParams::from_beta(beta); }
};

/// Log marginal posterior in params' parameterization, with optional gradient with respect to
/// (params.values, nugget coordinate). The nugget coordinate follows the FitConfig convention.
///
/// JR gradients are analytic. Reference-prior gradients use central differences in (xi, log eta).
struct PosteriorValue {
    double value = 0.0;
    Eigen::VectorXd grad;
};
[[nodiscard]] PosteriorValue log_posterior(const GaSPModel& model, const PriorSpec& prior, const RangeParams& params,
                                           double eta, bool with_grad);

/// Nugget coordinate for a parameterization: log eta under Xi, raw eta otherwise.
[[nodiscard]] bool nugget_in_log_space(Parameterization p) noexcept;

[[nodiscard]] FitResult fit_mode(const GaSPModel& model, const FitConfig& cfg);

/// Near-identity and near-ones diagnostics on the fitted correlation matrix. Never throws.
[[nodiscard]] RobustnessDiagnostics robustness_check(const GaSPModel& model, const RangeParams& params, double eta);

struct TimingProfile {
    double seconds_total = 0.0;
    long n_objective_evals = 0;
    long n_gradient_evals = 0;
    long n_factorizations = 0;
};
[[nodiscard]] TimingProfile profile_timings(const GaSPModel& model, const FitConfig& cfg);

/// Plug-in predictor at the fitted mode.
[[nodiscard]] Predictor make_predictor(const GaSPModel& model, const FitResult& fit);

}  // namespace robgasp
