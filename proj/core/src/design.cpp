#include "robgasp/design.hpp"

#include <string>

#include "robgasp/errors.hpp"

namespace robgasp {

DesignMatrix::DesignMatrix(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() == 0 || points_.cols() == 0) throw DataError("design matrix is empty");
    if (!points_.allFinite()) throw DataError("design matrix contains non-finite entries");
    lower_ = data_min();
    upper_ = data_max();
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd points, Eigen::VectorXd lower, Eigen::VectorXd upper)
    : points_(std::move(points)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (points_.rows() == 0 || points_.cols() == 0) throw DataError("design matrix is empty");
    if (!points_.allFinite()) throw DataError("design matrix contains non-finite entries");
    if (lower_.size() != points_.cols() || upper_.size() != points_.cols()) {
        throw DataError("design bounds have length " + std::to_string(lower_.size()) + "/" +
                        std::to_string(upper_.size()) + " but the design has " +
                        std::to_string(points_.cols()) + " columns");
    }
    if ((upper_.array() < lower_.array()).any()) throw DataError("design upper bound below lower bound");
}

Eigen::VectorXd DesignMatrix::data_min() const { return points_.colwise().minCoeff().transpose(); }

Eigen::VectorXd DesignMatrix::data_max() const { return points_.colwise().maxCoeff().transpose(); }

bool DesignMatrix::outside_bounds(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    for (Eigen::Index l = 0; l < x.size(); ++l) {
        if (x(l) < lower_(l) || x(l) > upper_(l)) return true;
    }
    return false;
}

}  // namespace robgasp
