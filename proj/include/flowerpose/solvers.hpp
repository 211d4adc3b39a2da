#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

#include "flowerpose/error.hpp"

namespace flowerpose {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using ResidualFn = std::function<VectorXd(const VectorXd&)>;
using JacobianFn = std::function<MatrixXd(const VectorXd&)>;

// Minimize 0.5 * ||residual(x)||^2. When `jacobian` is empty, central
// finite differences are used.
struct LeastSquaresProblem {
    ResidualFn residual;
    JacobianFn jacobian;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 200;
};

enum class Termination { gradient, step, cost, max_iter };

std::string to_string(Termination t);

struct SolverResult {
    VectorXd x;
    double cost = 0.0;         // 0.5 * ||r(x)||^2
    double initial_cost = 0.0; // at x0 (after feasibility nudging for TRF)
    int iterations = 0;
    int evaluations = 0;
    Termination reason = Termination::max_iter;
};

// Raised when the solver cannot proceed; carries the best point reached.
class SolverError : public Error {
public:
    SolverError(const std::string& what, VectorXd best) : Error(what), best_(std::move(best)) {}
    const VectorXd& best() const { return best_; }

private:
    VectorXd best_;
};

// Central-difference Jacobian. Components whose stencil would leave
// [lower, upper] fall back to a one-sided difference.
MatrixXd numeric_jacobian(const ResidualFn& residual, const VectorXd& x, const VectorXd& lower = {},
                          const VectorXd& upper = {});

// Levenberg-Marquardt with Marquardt diagonal scaling and multiplicative
// damping updates. Stops when max|J^T r| < tol, when the step is below
// tol relative to x, or after max_iter iterations.
SolverResult lm_solve(const LeastSquaresProblem& problem, const VectorXd& x0, const SolverOptions& options = {});

// Bound-constrained trust region reflective method (Coleman-Li scaling,
// reflected and Cauchy step selection). x0 must satisfy the bounds; the
// iterate is kept strictly inside them.
SolverResult trf_solve(const LeastSquaresProblem& problem, const VectorXd& x0, const VectorXd& lower,
                       const VectorXd& upper, const SolverOptions& options = {});

} // namespace flowerpose
