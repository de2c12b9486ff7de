#include "crtcea/newton.hpp"
#include "crtcea/errors.hpp"

#include <cmath>
#include <limits>

namespace crtcea {

namespace {

std::pair<double, Eigen::VectorXd>
fd_gradient(const std::function<double(const Eigen::VectorXd &)> &value,
            const Eigen::VectorXd &theta, double step) {
    const double f = value(theta);
    Eigen::VectorXd g(theta.size());
    Eigen::VectorXd t = theta;
    for (int j = 0; j < theta.size(); ++j) {
        const double h = step * (1.0 + std::abs(theta[j]));
        t[j] = theta[j] + h;
        const double fp = value(t);
        t[j] = theta[j] - h;
        const double fm = value(t);
        t[j] = theta[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    return {f, g};
}

} // namespace

Eigen::MatrixXd fd_hessian(
    const std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd &)> &value_grad,
    const Eigen::VectorXd &theta, double step) {
    const int p = static_cast<int>(theta.size());
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd t = theta;
    for (int j = 0; j < p; ++j) {
        t[j] = theta[j] + step;
        Eigen::VectorXd gp = value_grad(t).second;
        t[j] = theta[j] - step;
        Eigen::VectorXd gm = value_grad(t).second;
        t[j] = theta[j];
        h.col(j) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

NewtonResult newton_maximize(const Objective &objective, Eigen::VectorXd theta0,
                             const NewtonOptions &options) {
    if (!objective.value) throw NumericError("newton_maximize: objective.value is required");
    auto value_grad = objective.value_grad;
    if (!value_grad) {
        const auto &value = objective.value;
        const double step = options.fd_step;
        value_grad = [&value, step](const Eigen::VectorXd &t) { return fd_gradient(value, t, step); };
    }

    const int p = static_cast<int>(theta0.size());
    NewtonResult res;
    res.theta = std::move(theta0);

    if (objective.before_iteration) objective.before_iteration(res.theta);
    auto [f, g] = value_grad(res.theta);
    if (!std::isfinite(f))
        throw NumericError("newton_maximize: objective not finite at the starting point");
    res.value = f;
    res.grad = g;
    res.value_trace.push_back(f);

    double rel_change = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_iter; ++it) {
        res.max_abs_grad = res.grad.cwiseAbs().maxCoeff();
        if (res.max_abs_grad < options.grad_tol && (it > 0 ? rel_change < options.rel_tol : true)) {
            res.converged = true;
            res.iterations = it;
            return res;
        }

        Eigen::MatrixXd hess = fd_hessian(value_grad, res.theta, options.fd_step);

        // Solve (-H + ridge I) d = g, ridging until the system is positive
        // definite and d is an ascent direction.
        Eigen::MatrixXd neg_h = -hess;
        double ridge = 0.0;
        Eigen::VectorXd direction;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(neg_h + ridge * Eigen::MatrixXd::Identity(p, p));
            if (llt.info() == Eigen::Success) {
                direction = llt.solve(res.grad);
                if (res.grad.dot(direction) > 0.0) break;
            }
            direction.resize(0);
            ridge = (ridge == 0.0) ? 1e-6 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff())
                                   : ridge * 10.0;
        }
        if (direction.size() == 0) direction = res.grad; // steepest ascent fallback

        // Step halving: accept the first step that does not decrease the
        // objective value.
        double scale = 1.0;
        double f_new = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd theta_new;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
            theta_new = res.theta + scale * direction;
            f_new = objective.value(theta_new);
            if (std::isfinite(f_new) && f_new >= res.value) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.iterations = it;
            res.note = "no ascent step found";
            res.converged = res.max_abs_grad < options.grad_tol;
            return res;
        }

        rel_change = std::abs(f_new - res.value) / (std::abs(res.value) + 1e-10);
        res.theta = theta_new;
        if (objective.before_iteration) objective.before_iteration(res.theta);
        std::tie(f, g) = value_grad(res.theta);
        res.value = f;
        res.grad = g;
        res.value_trace.push_back(f);
        res.iterations = it + 1;
    }

    res.max_abs_grad = res.grad.cwiseAbs().maxCoeff();
    res.converged = res.max_abs_grad < options.grad_tol && rel_change < options.rel_tol;
    if (!res.converged) res.note = "iteration limit reached";
    return res;
}

} // namespace crtcea
