#include "flowerpose/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace flowerpose {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const VectorXd& v) { return v.allFinite(); }

MatrixXd jacobian_at(const LeastSquaresProblem& p, const VectorXd& x, const VectorXd& lo = {}, const VectorXd& hi = {})
{
    return p.jacobian ? p.jacobian(x) : numeric_jacobian(p.residual, x, lo, hi);
}

// ---- trust region reflective helpers ----

// Coleman-Li scaling vector v and its derivative dv.
void cl_scaling(const VectorXd& x, const VectorXd& g, const VectorXd& lb, const VectorXd& ub, VectorXd& v,
                VectorXd& dv)
{
    const auto n = x.size();
    v = VectorXd::Ones(n);
    dv = VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (g[i] < 0 && std::isfinite(ub[i])) {
            v[i] = ub[i] - x[i];
            dv[i] = -1;
        }
        if (g[i] > 0 && std::isfinite(lb[i])) {
            v[i] = x[i] - lb[i];
            dv[i] = 1;
        }
    }
}

// Largest t >= 0 with x + t*s inside the bounds, and which components hit
// (sign of s where the bound is reached, 0 elsewhere).
double step_to_bound(const VectorXd& x, const VectorXd& s, const VectorXd& lb, const VectorXd& ub,
                     Eigen::VectorXi* hits = nullptr)
{
    const auto n = x.size();
    VectorXd steps = VectorXd::Constant(n, kInf);
    for (Eigen::Index i = 0; i < n; ++i)
        if (s[i] != 0.0)
            steps[i] = std::max((lb[i] - x[i]) / s[i], (ub[i] - x[i]) / s[i]);
    const double m = steps.minCoeff();
    if (hits) {
        hits->setZero(n);
        for (Eigen::Index i = 0; i < n; ++i)
            if (steps[i] == m)
                (*hits)[i] = s[i] > 0 ? 1 : (s[i] < 0 ? -1 : 0);
    }
    return m;
}

bool in_bounds(const VectorXd& x, const VectorXd& lb, const VectorXd& ub)
{
    return (x.array() >= lb.array()).all() && (x.array() <= ub.array()).all();
}

// Roots t1 <= t2 of ||x + t s|| = delta.
std::pair<double, double> intersect_trust_region(const VectorXd& x, const VectorXd& s, double delta)
{
    const double a = s.squaredNorm();
    const double b = x.dot(s);
    const double c = x.squaredNorm() - delta * delta;
    const double d = std::sqrt(std::max(b * b - a * c, 0.0));
    const double q = -(b + std::copysign(d, b));
    double t1 = q / a;
    double t2 = c / q;
    if (t1 > t2)
        std::swap(t1, t2);
    return {t1, t2};
}

struct Quadratic1d {
    double a, b, c;
};

// Coefficients of f(t) = 0.5 ||J(s0 + t s)||^2 + g.(s0 + t s) + 0.5 (s0+ts).diag.(s0+ts), up to a constant.
Quadratic1d build_quadratic_1d(const MatrixXd& J, const VectorXd& g, const VectorXd& s, const VectorXd& diag,
                               const VectorXd* s0 = nullptr)
{
    const VectorXd v = J * s;
    double a = v.squaredNorm() + s.cwiseProduct(diag).dot(s);
    a *= 0.5;
    double b = g.dot(s);
    double c = 0.0;
    if (s0) {
        const VectorXd u = J * (*s0);
        b += u.dot(v) + s0->cwiseProduct(diag).dot(s);
        c = 0.5 * u.squaredNorm() + g.dot(*s0) + 0.5 * s0->cwiseProduct(diag).dot(*s0);
    }
    return {a, b, c};
}

std::pair<double, double> minimize_quadratic_1d(const Quadratic1d& q, double lb, double ub)
{
    double ts[3] = {lb, ub, 0.0};
    int count = 2;
    if (q.a != 0.0) {
        const double ext = -0.5 * q.b / q.a;
        if (lb < ext && ext < ub)
            ts[count++] = ext;
    }
    double best_t = ts[0];
    double best_y = kInf;
    for (int i = 0; i < count; ++i) {
        const double y = ts[i] * (q.a * ts[i] + q.b) + q.c;
        if (y < best_y) {
            best_y = y;
            best_t = ts[i];
        }
    }
    return {best_t, best_y};
}

double evaluate_quadratic(const MatrixXd& J, const VectorXd& g, const VectorXd& s, const VectorXd& diag)
{
    const VectorXd js = J * s;
    return 0.5 * (js.squaredNorm() + s.cwiseProduct(diag).dot(s)) + s.dot(g);
}

// Solves min ||J p + f|| subject to ||p|| <= delta given the SVD of J
// (uf = U^T f). Returns the step and the final Levenberg parameter.
VectorXd solve_lsq_trust_region(Eigen::Index n, Eigen::Index m, const VectorXd& uf, const VectorXd& s,
                                const MatrixXd& V, double delta, double& alpha)
{
    const VectorXd suf = s.cwiseProduct(uf);

    bool full_rank = false;
    if (m >= n) {
        const double threshold = kEps * static_cast<double>(m) * s[0];
        full_rank = s[n - 1] > threshold;
    }
    if (full_rank) {
        const VectorXd p = -V * uf.cwiseQuotient(s);
        if (p.norm() <= delta) {
            alpha = 0.0;
            return p;
        }
    }

    auto phi_and_derivative = [&](double a, double& phi, double& phi_prime) {
        const VectorXd denom = s.array().square() + a;
        const double p_norm = suf.cwiseQuotient(denom).norm();
        phi = p_norm - delta;
        phi_prime = -(suf.array().square() / denom.array().cube()).sum() / p_norm;
    };

    double alpha_upper = suf.norm() / delta;
    double alpha_lower = 0.0;
    if (full_rank) {
        double phi, phi_prime;
        phi_and_derivative(0.0, phi, phi_prime);
        alpha_lower = -phi / phi_prime;
    }
    if (!full_rank && alpha == 0.0)
        alpha = std::max(0.001 * alpha_upper, std::sqrt(alpha_lower * alpha_upper));

    const double rtol = 0.01;
    for (int it = 0; it < 10; ++it) {
        if (alpha < alpha_lower || alpha > alpha_upper)
            alpha = std::max(0.001 * alpha_upper, std::sqrt(alpha_lower * alpha_upper));
        double phi, phi_prime;
        phi_and_derivative(alpha, phi, phi_prime);
        if (phi < 0)
            alpha_upper = alpha;
        const double ratio = phi / phi_prime;
        alpha_lower = std::max(alpha_lower, alpha - ratio);
        alpha -= (phi + delta) * ratio / delta;
        if (std::abs(phi) < rtol * delta)
            break;
    }

    VectorXd p = -V * suf.cwiseQuotient((s.array().square() + alpha).matrix());
    p *= delta / p.norm();
    return p;
}

VectorXd make_strictly_feasible(const VectorXd& x, const VectorXd& lb, const VectorXd& ub)
{
    VectorXd out = x.cwiseMax(lb).cwiseMin(ub);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (out[i] <= lb[i])
            out[i] = std::nextafter(lb[i], ub[i]);
        else if (out[i] >= ub[i])
            out[i] = std::nextafter(ub[i], lb[i]);
    }
    return out;
}

struct Step {
    VectorXd step;
    VectorXd step_h;
    double predicted_reduction;
};

Step select_step(const VectorXd& x, const MatrixXd& J_h, const VectorXd& diag_h, const VectorXd& g_h, VectorXd p,
                 VectorXd p_h, const VectorXd& d, double delta, const VectorXd& lb, const VectorXd& ub, double theta)
{
    if (in_bounds(x + p, lb, ub)) {
        const double value = evaluate_quadratic(J_h, g_h, p_h, diag_h);
        return {p, p_h, -value};
    }

    Eigen::VectorXi hits;
    const double p_stride = step_to_bound(x, p, lb, ub, &hits);

    // reflected direction
    VectorXd r_h = p_h;
    for (Eigen::Index i = 0; i < hits.size(); ++i)
        if (hits[i] != 0)
            r_h[i] *= -1;
    VectorXd r = d.cwiseProduct(r_h);

    p *= p_stride;
    p_h *= p_stride;
    const VectorXd x_on_bound = x + p;

    const double to_tr = intersect_trust_region(p_h, r_h, delta).second;
    const double to_bound = step_to_bound(x_on_bound, r, lb, ub);

    double r_stride = std::min(to_bound, to_tr);
    double r_stride_l, r_stride_u;
    if (r_stride > 0) {
        r_stride_l = (1 - theta) * p_stride / r_stride;
        r_stride_u = r_stride == to_bound ? theta * to_bound : to_tr;
    } else {
        r_stride_l = 0;
        r_stride_u = -1;
    }

    double r_value = kInf;
    if (r_stride_l <= r_stride_u) {
        const auto q = build_quadratic_1d(J_h, g_h, r_h, diag_h, &p_h);
        const auto [t, value] = minimize_quadratic_1d(q, r_stride_l, r_stride_u);
        r_value = value;
        r_h *= t;
        r_h += p_h;
        r = r_h.cwiseProduct(d);
    }

    p *= theta;
    p_h *= theta;
    const double p_value = evaluate_quadratic(J_h, g_h, p_h, diag_h);

    // constrained Cauchy step along the scaled anti-gradient
    VectorXd ag_h = -g_h;
    VectorXd ag = d.cwiseProduct(ag_h);
    const double ag_to_tr = delta / ag_h.norm();
    const double ag_to_bound = step_to_bound(x, ag, lb, ub);
    const double ag_stride_max = ag_to_bound < ag_to_tr ? theta * ag_to_bound : ag_to_tr;
    const auto q = build_quadratic_1d(J_h, g_h, ag_h, diag_h);
    const auto [ag_stride, ag_value] = minimize_quadratic_1d(q, 0.0, ag_stride_max);
    ag_h *= ag_stride;
    ag *= ag_stride;

    if (p_value < r_value && p_value < ag_value)
        return {p, p_h, -p_value};
    if (r_value < p_value && r_value < ag_value)
        return {r, r_h, -r_value};
    return {ag, ag_h, -ag_value};
}

} // namespace

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::gradient: return "gradient";
    case Termination::step: return "step";
    case Termination::cost: return "cost";
    case Termination::max_iter: return "max_iter";
    }
    return "unknown";
}

MatrixXd numeric_jacobian(const ResidualFn& residual, const VectorXd& x, const VectorXd& lower, const VectorXd& upper)
{
    const VectorXd r0 = residual(x);
    MatrixXd J(r0.size(), x.size());
    const double base = std::cbrt(kEps);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = base * std::max(1.0, std::abs(x[j]));
        const bool lo_ok = lower.size() == 0 || x[j] - h >= lower[j];
        const bool hi_ok = upper.size() == 0 || x[j] + h <= upper[j];
        VectorXd xp = x, xm = x;
        if (lo_ok && hi_ok) {
            xp[j] += h;
            xm[j] -= h;
            J.col(j) = (residual(xp) - residual(xm)) / (2 * h);
        } else if (hi_ok) {
            xp[j] += h;
            J.col(j) = (residual(xp) - r0) / h;
        } else {
            xm[j] -= h;
            J.col(j) = (r0 - residual(xm)) / h;
        }
    }
    return J;
}

SolverResult lm_solve(const LeastSquaresProblem& problem, const VectorXd& x0, const SolverOptions& options)
{
    // damping schedule: multiply by 11 on rejection, divide by 9 on acceptance
    constexpr double lambda0 = 1e-3;
    constexpr double lambda_up = 11.0;
    constexpr double lambda_down = 9.0;
    constexpr double lambda_min = 1e-7;
    constexpr double lambda_max = 1e16;
    constexpr double accept_ratio = 0.1;

    SolverResult res;
    res.x = x0;
    VectorXd r = problem.residual(x0);
    res.evaluations = 1;
    if (!finite(r))
        throw SolverError("lm_solve: residual is not finite at the initial point", x0);
    double chi2 = r.squaredNorm();
    res.initial_cost = 0.5 * chi2;

    MatrixXd J = jacobian_at(problem, res.x);
    double lambda = lambda0;

    for (res.iterations = 0; res.iterations < options.max_iter; ++res.iterations) {
        const VectorXd g = J.transpose() * r; // gradient of 0.5*chi2
        if (g.lpNorm<Eigen::Infinity>() < options.tol) {
            res.reason = Termination::gradient;
            res.cost = 0.5 * chi2;
            return res;
        }

        const MatrixXd JtJ = J.transpose() * J;
        // Floor the Marquardt scaling so parameters the residual barely
        // sees (a symmetric cup's yaw) cannot take unbounded steps.
        const double diag_floor = std::max(1e-6 * JtJ.diagonal().maxCoeff(), 1e-300);
        const VectorXd diag = JtJ.diagonal().cwiseMax(diag_floor);
        MatrixXd A = JtJ;
        A.diagonal() += lambda * diag;
        const VectorXd h = A.ldlt().solve(-g);

        if (!finite(h)) {
            lambda *= lambda_up;
            if (lambda > lambda_max)
                throw SolverError("lm_solve: damping overflow", res.x);
            continue;
        }

        const VectorXd x_new = res.x + h;
        const VectorXd r_new = problem.residual(x_new);
        ++res.evaluations;
        const double chi2_new = finite(r_new) ? r_new.squaredNorm() : kInf;
        const double predicted = h.dot(lambda * diag.cwiseProduct(h) - g);
        const double rho = predicted > 0 ? (chi2 - chi2_new) / predicted : -1.0;

        const bool small_step =
            h.lpNorm<Eigen::Infinity>() < options.tol * (res.x.lpNorm<Eigen::Infinity>() + options.tol);

        if (rho > accept_ratio && chi2_new <= chi2) {
            const double reduction = chi2 - chi2_new;
            res.x = x_new;
            r = r_new;
            chi2 = chi2_new;
            J = jacobian_at(problem, res.x);
            lambda = std::max(lambda / lambda_down, lambda_min);
            if (small_step) {
                res.reason = Termination::step;
                break;
            }
            if (reduction <= options.tol * chi2 && reduction > 0 && chi2 > 0 && reduction < kEps * chi2) {
                res.reason = Termination::cost;
                break;
            }
            if (chi2 == 0.0) {
                res.reason = Termination::cost;
                break;
            }
        } else {
            if (small_step) {
                res.reason = Termination::step;
                break;
            }
            lambda *= lambda_up;
            if (lambda > lambda_max)
                throw SolverError("lm_solve: damping overflow", res.x);
        }
    }
    if (res.iterations >= options.max_iter)
        res.reason = Termination::max_iter;
    res.cost = 0.5 * chi2;
    return res;
}

SolverResult trf_solve(const LeastSquaresProblem& problem, const VectorXd& x0, const VectorXd& lower,
                       const VectorXd& upper, const SolverOptions& options)
{
    const auto n = x0.size();
    if (lower.size() != n || upper.size() != n)
        throw InvalidArgument("trf_solve: bounds have wrong dimension");
    if ((lower.array() >= upper.array()).any())
        throw InvalidArgument("trf_solve: each lower bound must be below its upper bound");
    if (!in_bounds(x0, lower, upper))
        throw InvalidArgument("trf_solve: initial point violates the bounds");

    SolverResult res;
    VectorXd x = make_strictly_feasible(x0, lower, upper);
    VectorXd f = problem.residual(x);
    res.evaluations = 1;
    if (!finite(f))
        throw SolverError("trf_solve: residual is not finite at the initial point", x);
    const auto m = f.size();
    double cost = 0.5 * f.squaredNorm();
    res.initial_cost = cost;

    MatrixXd J = jacobian_at(problem, x, lower, upper);
    VectorXd g = J.transpose() * f;

    VectorXd v, dv;
    cl_scaling(x, g, lower, upper, v, dv);
    double delta = x.cwiseQuotient(v.cwiseSqrt()).norm();
    if (delta == 0.0)
        delta = 1.0;

    const int max_evals = options.max_iter * 10;
    double alpha = 0.0;
    bool done = false;

    MatrixXd J_aug(m + n, n);
    VectorXd f_aug = VectorXd::Zero(m + n);

    for (res.iterations = 0; res.iterations < options.max_iter && !done; ++res.iterations) {
        cl_scaling(x, g, lower, upper, v, dv);
        const double g_norm = g.cwiseProduct(v).lpNorm<Eigen::Infinity>();
        if (g_norm < options.tol) {
            res.reason = Termination::gradient;
            done = true;
            break;
        }

        const VectorXd d = v.cwiseSqrt();
        const VectorXd diag_h = g.cwiseProduct(dv);
        const VectorXd g_h = d.cwiseProduct(g);

        f_aug.head(m) = f;
        J_aug.topRows(m) = J * d.asDiagonal();
        J_aug.bottomRows(n) = diag_h.cwiseSqrt().asDiagonal();
        const MatrixXd J_h = J_aug.topRows(m);

        const Eigen::JacobiSVD<MatrixXd> svd(J_aug, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VectorXd s = svd.singularValues();
        const MatrixXd& V = svd.matrixV();
        const VectorXd uf = svd.matrixU().transpose() * f_aug;

        const double theta = std::max(0.995, 1.0 - g_norm);
        double actual_reduction = -1.0;
        VectorXd x_new, f_new;
        double cost_new = cost;

        while (actual_reduction <= 0 && res.evaluations < max_evals) {
            const VectorXd p_h = solve_lsq_trust_region(n, m, uf, s, V, delta, alpha);
            const VectorXd p = d.cwiseProduct(p_h);
            const Step st = select_step(x, J_h, diag_h, g_h, p, p_h, d, delta, lower, upper, theta);

            x_new = make_strictly_feasible(x + st.step, lower, upper);
            f_new = problem.residual(x_new);
            ++res.evaluations;

            const double step_h_norm = st.step_h.norm();
            if (!finite(f_new)) {
                delta = 0.25 * step_h_norm;
                continue;
            }
            cost_new = 0.5 * f_new.squaredNorm();
            actual_reduction = cost - cost_new;

            // trust region update
            double ratio;
            if (st.predicted_reduction > 0)
                ratio = actual_reduction / st.predicted_reduction;
            else if (st.predicted_reduction == 0 && actual_reduction == 0)
                ratio = 1.0;
            else
                ratio = 0.0;
            double delta_new = delta;
            if (ratio < 0.25)
                delta_new = 0.25 * step_h_norm;
            else if (ratio > 0.75 && step_h_norm > 0.95 * delta)
                delta_new = 2.0 * delta;

            const double step_norm = st.step.norm();
            const bool ftol_ok = actual_reduction < options.tol * cost && ratio > 0.25;
            const bool xtol_ok = step_norm < options.tol * (options.tol + x.norm());
            if (ftol_ok || xtol_ok) {
                res.reason = ftol_ok ? Termination::cost : Termination::step;
                done = true;
                break;
            }
            if (delta_new > 0)
                alpha *= delta / delta_new;
            delta = delta_new;
        }

        if (actual_reduction > 0) {
            x = x_new;
            f = f_new;
            cost = cost_new;
            J = jacobian_at(problem, x, lower, upper);
            g = J.transpose() * f;
        } else if (!done) {
            // no acceptable step within the evaluation budget
            res.reason = Termination::max_iter;
            done = true;
        }
    }
    if (!done && res.iterations >= options.max_iter)
        res.reason = Termination::max_iter;

    res.x = x;
    res.cost = cost;
    return res;
}

} // namespace flowerpose
