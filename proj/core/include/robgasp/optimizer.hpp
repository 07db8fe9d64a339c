#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace robgasp {

/// Objective to minimize. Fills *grad when grad != nullptr. Non-finite values are treated as +inf.
using ObjectiveFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct OptimizerOptions {
    int max_iter = 200;
    double grad_tol = 1e-6;   // on the projected gradient, infinity norm
    double f_rel_tol = 1e-10; // relative change of f between iterations
    int memory = 10;
    int max_line_search = 40;
};

struct OptimizerResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    int iterations = 0;
    long n_objective = 0;
    long n_gradient = 0;
    bool converged = false;
    std::string status;
};

/// Limited-memory BFGS with weak Wolfe line search on the box [lower, upper].
///
/// Bound-blocked coordinates are frozen for the step (projected gradient active set).
[[nodiscard]] OptimizerResult minimize_lbfgs(const ObjectiveFunction& f, const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                             const OptimizerOptions& options = {});

}  // namespace robgasp
