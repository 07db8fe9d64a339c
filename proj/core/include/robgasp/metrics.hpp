#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace robgasp {

/// Pointwise predictive summary: mean and central 95% interval.
struct IntervalPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<bool> extrapolated;
};

/// sqrt(sum (y - yhat)^2 / sum (y - c)^2). The center c defaults to mean(truth);
/// benchmarks pass the mean of the observed training outputs.
[[nodiscard]] double nrmse(const Eigen::VectorXd& prediction, const Eigen::VectorXd& truth,
                           std::optional<double> center = std::nullopt);

/// Mean of per-replicate NRMSE values.
[[nodiscard]] double avg_nrmse(const std::vector<double>& per_replicate);

struct CalibrationMetrics {
    double nrmse = 0.0;
    double p_ci = 0.0;  // fraction of truth values inside [lower, upper]
    double l_ci = 0.0;  // mean interval length
};

[[nodiscard]] CalibrationMetrics calibration_metrics(const IntervalPrediction& prediction, const Eigen::VectorXd& truth,
                                                     std::optional<double> center = std::nullopt);

/// Empirical quantile with linear interpolation between order statistics.
[[nodiscard]] double quantile(std::vector<double> values, double prob);

}  // namespace robgasp
