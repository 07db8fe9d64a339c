#include "robgasp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "robgasp/errors.hpp"

namespace robgasp {

double nrmse(const Eigen::VectorXd& prediction, const Eigen::VectorXd& truth, std::optional<double> center) {
    if (prediction.size() != truth.size()) {
        throw DataError("NRMSE: " + std::to_string(prediction.size()) + " predictions for " +
                        std::to_string(truth.size()) + " truth values");
    }
    if (truth.size() == 0) throw DataError("NRMSE: empty input");
    const double c = center.value_or(truth.mean());
    const double denom = (truth.array() - c).square().sum();
    if (!(denom > 0.0)) throw DataError("NRMSE: truth has zero spread about the reference mean");
    return std::sqrt((truth - prediction).squaredNorm() / denom);
}

double avg_nrmse(const std::vector<double>& per_replicate) {
    if (per_replicate.empty()) throw DataError("Avg-NRMSE of zero replicates");
    return std::accumulate(per_replicate.begin(), per_replicate.end(), 0.0) /
           static_cast<double>(per_replicate.size());
}

CalibrationMetrics calibration_metrics(const IntervalPrediction& prediction, const Eigen::VectorXd& truth,
                                       std::optional<double> center) {
    const Eigen::Index m = truth.size();
    if (prediction.lower.size() != m || prediction.upper.size() != m) {
        throw DataError("calibration metrics: interval bounds do not match the truth length");
    }
    CalibrationMetrics out;
    out.nrmse = nrmse(prediction.mean, truth, center);
    const auto inside = (truth.array() >= prediction.lower.array() && truth.array() <= prediction.upper.array());
    out.p_ci = static_cast<double>(inside.count()) / static_cast<double>(m);
    out.l_ci = (prediction.upper - prediction.lower).mean();
    return out;
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[hi];
}

}  // namespace robgasp
