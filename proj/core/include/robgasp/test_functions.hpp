#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace robgasp {

/// Benchmark function with its input box, noise level and known signal coordinates.
struct TestFunction {
    std::string id;
    Eigen::Index dim = 0;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double noise_sd = 0.0;
    std::vector<Eigen::Index> signals;  // 0-based; empty when every input is active
    std::function<double(const Eigen::RowVectorXd&)> f;

    /// Noise-free values at each row of x.
    [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const;
    /// Values plus N(0, noise_sd^2) noise.
    [[nodiscard]] Eigen::VectorXd sample(const Eigen::MatrixXd& x, std::mt19937_64& rng) const;
};

/// Ids: ex1-i .. ex1-v, ex2-i, ex2-ii, ex3-i .. ex3-iv, ex4 (field reality on [0, 5]).
[[nodiscard]] const TestFunction& test_function(const std::string& id);
[[nodiscard]] std::vector<std::string> test_function_ids();

/// ex4 computer model f(x, theta) = 5 exp(-theta x).
[[nodiscard]] double ex4_computer_model(double x, double theta);

/// Maps unit-cube points to [lower, upper].
[[nodiscard]] Eigen::MatrixXd scale_to_box(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper);

}  // namespace robgasp
