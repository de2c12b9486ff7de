#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace crtcea {

struct NewtonOptions {
    double grad_tol = 1e-6;    // max |gradient| at convergence
    double rel_tol = 1e-10;    // relative objective change at convergence
    int max_iter = 200;
    double fd_step = 1e-4;     // central-difference step for the Hessian
    int max_halvings = 40;
};

struct NewtonResult {
    Eigen::VectorXd theta;
    double value = 0.0;
    Eigen::VectorXd grad;
    bool converged = false;
    int iterations = 0;
    double max_abs_grad = 0.0;
    std::vector<double> value_trace; // accepted objective values, non-decreasing
    std::string note;
};

/// Objective for maximization. `value_grad` may be empty, in which case the
/// gradient is formed by central differences of `value`. `before_iteration`
/// runs ahead of each gradient/Hessian evaluation round (used to refresh
/// per-iteration state such as adaptive quadrature centering).
struct Objective {
    std::function<double(const Eigen::VectorXd &)> value;
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd &)> value_grad;
    std::function<void(const Eigen::VectorXd &)> before_iteration;
};

/// Newton ascent with step halving. The Hessian is built by central
/// differences of the gradient; non-concave directions are handled by ridging
/// toward steepest ascent. Accepted steps never decrease the objective.
NewtonResult newton_maximize(const Objective &objective, Eigen::VectorXd theta0,
                             const NewtonOptions &options = {});

/// Symmetric numerical Hessian by central differences of the gradient.
Eigen::MatrixXd fd_hessian(
    const std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd &)> &value_grad,
    const Eigen::VectorXd &theta, double step);

} // namespace crtcea
