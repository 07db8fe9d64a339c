#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "robgasp/fit.hpp"
#include "robgasp/gasp.hpp"
#include "robgasp/metrics.hpp"
#include "robgasp/priors.hpp"

namespace robgasp {

/// f^M(x, theta) evaluated at every row of x.
using ComputerModel = std::function<Eigen::VectorXd(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta)>;

/// Box-uniform prior on theta, optionally multiplied by an extra log-density term.
struct ThetaPrior {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::function<double(const Eigen::VectorXd&)> log_density;

    /// -inf outside the box.
    [[nodiscard]] double log_pdf(const Eigen::VectorXd& theta) const;
};

/// GaSP emulator of f^M fitted on runs over (x, theta) for modular calibration.
struct ModularEmulator {
    GaSPModel model;
    FitResult fit;
    Predictor predictor;
    Eigen::Index px = 0;
};

/// Fits a JR-prior emulator to computer-model runs. Columns of runs are (x, theta); px says how many are x.
[[nodiscard]] std::shared_ptr<const ModularEmulator> fit_emulator_modular(const Eigen::MatrixXd& runs,
                                                                          const Eigen::VectorXd& outputs,
                                                                          Eigen::Index px, std::uint64_t seed = 1);

struct ProprietyReport {
    bool pass = false;
    Eigen::Index rank = 0;
    Eigen::Index n = 0;
    Eigen::Index q = 0;
    std::string message;
};

/// rank(H, y) = q + 1 (tolerance 1e-10 ||(H, y)||_2) and n >= q + 1.
[[nodiscard]] ProprietyReport check_propriety_preconditions(const Eigen::MatrixXd& H, const Eigen::VectorXd& y);

class CalibrationProblem {
public:
    /// Direct mode: f^M is cheap and evaluated exactly.
    CalibrationProblem(DesignMatrix field_inputs, Eigen::VectorXd y, ComputerModel model, ThetaPrior theta_prior,
                       MeanBasis basis, CorrelationSpec spec, PriorSpec prior);
    /// Modular mode: f^M replaced by draws from a fitted emulator.
    CalibrationProblem(DesignMatrix field_inputs, Eigen::VectorXd y, std::shared_ptr<const ModularEmulator> emulator,
                       ThetaPrior theta_prior, MeanBasis basis, CorrelationSpec spec, PriorSpec prior);

    [[nodiscard]] const GaSPModel& discrepancy() const noexcept { return model_; }
    [[nodiscard]] const Eigen::VectorXd& field_outputs() const noexcept { return model_.outputs(); }
    [[nodiscard]] const Eigen::MatrixXd& field_inputs() const noexcept { return model_.design().points(); }
    [[nodiscard]] const ThetaPrior& theta_prior() const noexcept { return theta_prior_; }
    [[nodiscard]] const PriorSpec& prior() const noexcept { return prior_; }
    [[nodiscard]] Eigen::Index theta_dim() const noexcept { return theta_prior_.lower.size(); }
    [[nodiscard]] bool modular() const noexcept { return emulator_ != nullptr; }
    [[nodiscard]] ProprietyReport propriety() const;

    /// f^M (or the emulator predictive mean) at rows of x.
    [[nodiscard]] Eigen::VectorXd model_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) const;
    /// f^M in direct mode; a joint emulator predictive draw in modular mode.
    [[nodiscard]] Eigen::VectorXd model_draw(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta,
                                             std::mt19937_64& rng) const;
    /// Per-row flag: the emulator would extrapolate at (x, theta). Always false in direct mode.
    [[nodiscard]] std::vector<bool> extrapolation_flags(const Eigen::MatrixXd& x) const;

    /// log pi(xi, [log eta]) for the range/nugget block in u coordinates (Jacobian included).
    [[nodiscard]] double log_range_prior(const LikelihoodState& st) const;

private:
    void validate();

    GaSPModel model_;
    ComputerModel computer_;
    std::shared_ptr<const ModularEmulator> emulator_;
    ThetaPrior theta_prior_;
    PriorSpec prior_;
};

/// Normal-inverse-gamma conditionals of (theta_m, sigma^2) at fixed (theta, xi, eta).
struct NigConditional {
    Eigen::Index n = 0;
    Eigen::Index q = 0;
    double S2 = 0.0;                 // (z - H theta_hat)^T C^-1 (z - H theta_hat)
    Eigen::VectorXd theta_hat;       // GLS estimate
    Eigen::MatrixXd gram;            // H^T C^-1 H
    Eigen::VectorXd z;               // y - f^M(x, theta)
    std::shared_ptr<const LikelihoodState> state;

    /// sigma^2 | rest with theta_m integrated out: IG((n - q)/2, S2/2). Used by the sampler.
    [[nodiscard]] double collapsed_sigma2_log_density(double sigma2) const;
    /// sigma^2 | theta_m, rest: IG(n/2, (z - H theta_m)^T C^-1 (z - H theta_m) / 2).
    [[nodiscard]] double sigma2_log_density(double sigma2, const Eigen::VectorXd& theta_m) const;
    /// theta_m | sigma^2, rest: N(theta_hat, sigma^2 gram^-1).
    [[nodiscard]] double theta_m_log_density(const Eigen::VectorXd& theta_m, double sigma2) const;
    /// Joint draw: sigma^2 from the collapsed conditional, then theta_m | sigma^2.
    void draw(std::mt19937_64& rng, double& sigma2, Eigen::VectorXd& theta_m) const;
};

[[nodiscard]] NigConditional gibbs_conditionals(const CalibrationProblem& prob, const Eigen::VectorXd& theta,
                                                const Eigen::VectorXd& xi, double eta);

struct McmcOptions {
    int S = 20000;
    int S0 = 4000;
    std::uint64_t seed = 1;
    double target_accept = 0.3;
    double init_scale = 0.1;
    bool update_theta = true;
    bool update_range = true;
    std::optional<Eigen::VectorXd> init_theta;
    std::optional<Eigen::VectorXd> init_xi;
    std::optional<double> init_eta;
    int max_consecutive_failures = 100;
};

struct PosteriorChain {
    Eigen::MatrixXd theta;    // S x p_theta
    Eigen::MatrixXd theta_m;  // S x q
    Eigen::VectorXd sigma2;   // S
    Eigen::MatrixXd xi;       // S x p_x
    Eigen::VectorXd log_eta;  // S (zeros without nugget)
    int S = 0;
    int S0 = 0;
    double accept_theta = 0.0;  // post burn-in acceptance rates
    double accept_range = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] int retained() const noexcept { return S - S0; }
};

/// Metropolis-within-Gibbs on (theta, xi, log eta) with (theta_m, sigma^2) drawn from their conditionals.
[[nodiscard]] PosteriorChain run_mcmc(const CalibrationProblem& prob, const McmcOptions& opts);

enum class PredictionMode { ModelOnly, ModelPlusDiscrepancy };

/// Pointwise mean and 2.5/97.5 percentiles of the noise-free reality over retained samples.
[[nodiscard]] IntervalPrediction predict_calibrated(const CalibrationProblem& prob, const PosteriorChain& chain,
                                                    const Eigen::MatrixXd& new_inputs, PredictionMode mode,
                                                    std::uint64_t seed = 1, int max_samples = 5000);

/// Profile-likelihood point estimate over (theta, xi, log eta); theta_m and sigma^2 maximized in closed form.
struct MleCalibration {
    Eigen::VectorXd theta;
    Eigen::VectorXd theta_m;
    double sigma2 = 0.0;
    Eigen::VectorXd xi;
    double eta = 0.0;
    double log_lik = 0.0;
};

[[nodiscard]] MleCalibration calibrate_mle(const CalibrationProblem& prob, std::uint64_t seed = 1);
[[nodiscard]] IntervalPrediction predict_mle(const CalibrationProblem& prob, const MleCalibration& mle,
                                             const Eigen::MatrixXd& new_inputs, PredictionMode mode);

}  // namespace robgasp
