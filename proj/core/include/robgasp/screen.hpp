#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robgasp/fit.hpp"
#include "robgasp/gasp.hpp"
#include "robgasp/priors.hpp"

namespace robgasp {

/// Normalized inverse ranges P_l = C_l beta_l / sum_i C_i beta_i and the selection P_l > p0 / p.
struct ScreenResult {
    Eigen::VectorXd P;
    std::vector<bool> selected;
    double p0 = 1.0;
};

[[nodiscard]] ScreenResult normalized_inverse_ranges(const FitResult& fit, const JRPriorParams& jr, double p0 = 1.0);
[[nodiscard]] ScreenResult normalized_inverse_ranges(const Eigen::VectorXd& beta, const Eigen::VectorXd& C,
                                                     double p0 = 1.0);

enum class SobolEstimator { MonteCarlo, Emulator };

struct SobolIndices {
    Eigen::VectorXd S;      // main effects
    Eigen::VectorXd S_T;    // total effects
    Eigen::VectorXd se_S;   // jackknife standard errors
    Eigen::VectorXd se_S_T;
    SobolEstimator estimator = SobolEstimator::MonteCarlo;
    int n_mc = 0;
};

/// Evaluates a function on every row of its argument.
using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using PointFunction = std::function<double(const Eigen::RowVectorXd&)>;

/// Pick-freeze estimates with independent uniform inputs on [lower, upper].
/// Main effect: mean f_B (f_ABi - f_A) / V. Total effect (Jansen): mean (f_A - f_ABi)^2 / (2 V).
[[nodiscard]] SobolIndices sobol_mc(const BatchFunction& f, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper, int n_mc, std::uint64_t seed);
[[nodiscard]] SobolIndices sobol_mc(const PointFunction& f, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper, int n_mc, std::uint64_t seed);

/// Same estimator with the emulator predictive mean in place of the function.
[[nodiscard]] SobolIndices sobol_emulator(const Predictor& emulator, const Eigen::VectorXd& lower,
                                          const Eigen::VectorXd& upper, int n_mc, std::uint64_t seed);

enum class ScreenMethod { InverseRange, SobolEmulator };

struct ScreeningConfig {
    std::string example = "ex2-i";
    int n = 0;               // design size; 0 selects the default for the example
    int replicates = 100;
    std::uint64_t seed = 1;
    ScreenMethod method = ScreenMethod::InverseRange;
    double p0 = 1.0;
    int sobol_n_mc = 5000;
    int lhd_candidates = 50;
    int multistart = 12;  // starts per fit; the beta-parameterized posterior has boundary modes
};

struct ScreeningReport {
    std::string example;
    int n = 0;
    int replicates = 0;
    ScreenMethod method = ScreenMethod::InverseRange;
    Eigen::VectorXd selection_frequency;  // per input, fraction of replicates selected
    Eigen::VectorXd mean_index;           // mean P_l (or S_T) per input
    double separation_fraction = 0.0;     // min signal index > max noise index
    Eigen::MatrixXd indices;              // replicates x p
};

/// Default design sizes: ex2 54, ex3-i 20, ex3-ii..iv 35.
[[nodiscard]] int default_screening_size(const std::string& example);

[[nodiscard]] ScreeningReport screening_benchmark(const ScreeningConfig& cfg);

}  // namespace robgasp
