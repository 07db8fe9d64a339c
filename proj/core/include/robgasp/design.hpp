#pragma once

#include <Eigen/Dense>

namespace robgasp {

/// n x p_x matrix of design inputs together with per-coordinate bounds.
///
/// Bounds default to the observed coordinate ranges. They are used to flag
/// extrapolation; prior scale constants are always derived from the observed
/// ranges (data_min/data_max).
class DesignMatrix {
public:
    DesignMatrix() = default;
    explicit DesignMatrix(Eigen::MatrixXd points);
    DesignMatrix(Eigen::MatrixXd points, Eigen::VectorXd lower, Eigen::VectorXd upper);

    [[nodiscard]] const Eigen::MatrixXd& points() const noexcept { return points_; }
    [[nodiscard]] Eigen::Index rows() const noexcept { return points_.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return points_.cols(); }

    [[nodiscard]] const Eigen::VectorXd& lower() const noexcept { return lower_; }
    [[nodiscard]] const Eigen::VectorXd& upper() const noexcept { return upper_; }

    [[nodiscard]] Eigen::VectorXd data_min() const;
    [[nodiscard]] Eigen::VectorXd data_max() const;

    /// True when x lies outside [lower, upper] in any coordinate.
    [[nodiscard]] bool outside_bounds(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

}  // namespace robgasp
