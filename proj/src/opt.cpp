#include "softirl/opt.hpp"

#include <algorithm>
#include <cmath>

namespace softirl {

namespace {

constexpr double kRidgeTrigger = 1e-10;
constexpr double kFullStepDecrement = 1e-3;
constexpr double kMinStep = 1e-12;
constexpr double kLagrangianTol = 1e-8;
constexpr int kPolishFactor = 10;

struct Eval {
    double loss;
    Vector grad;
    Matrix hess;
};

Eval evaluate(const Mdp& mdp, const FeatureMap& features, const Vector& target, const Vector& theta, double beta) {
    const auto p = analyze_theta(mdp, features, theta, beta);
    return Eval{p.soft.J_star - theta.dot(target), grad_J(p, features) - target, hessian_J(p)};
}

double loss_at(const Mdp& mdp, const FeatureMap& features, const Vector& target, const Vector& theta, double beta) {
    return J_star(mdp, features, theta, beta) - theta.dot(target);
}

// Largest t >= 0 with ||theta + t * dir|| <= radius (theta inside the ball).
double step_to_boundary(const Vector& theta, const Vector& dir, double radius) {
    const double a = dir.squaredNorm();
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    const double b = theta.dot(dir);
    const double c = theta.squaredNorm() - radius * radius;
    const double disc = std::max(b * b - a * c, 0.0);
    return std::max((-b + std::sqrt(disc)) / a, 0.0);
}

Vector project(const Vector& theta, double radius) {
    const double n = theta.norm();
    return n > radius ? Vector(theta * (radius / n)) : theta;
}

Vector lagrangian_gradient(const Vector& g, const Vector& theta, double radius) {
    const double n2 = theta.squaredNorm();
    if (n2 == 0.0 || std::sqrt(n2) < radius * (1.0 - 1e-9)) return g;
    const double mu = -g.dot(theta) / n2;
    return mu > 0.0 ? Vector(g + mu * theta) : g;
}

} // namespace

void FitConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("FitConfig: beta must be positive");
    if (!(tol_decrement > 0.0)) throw DomainError("FitConfig: tol_decrement must be positive");
    if (max_iters <= 0) throw DomainError("FitConfig: max_iters must be positive");
    if (!(ball_radius > 0.0)) throw DomainError("FitConfig: ball_radius must be positive");
    if (!(ridge > 0.0)) throw DomainError("FitConfig: ridge must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw DomainError("FitConfig: backtrack must lie in (0, 1)");
    if (!(armijo > 0.0 && armijo < 1.0)) throw DomainError("FitConfig: armijo must lie in (0, 1)");
}

double newton_decrement(const Vector& g, const Matrix& H, double ridge) {
    if (H.rows() != g.size() || H.cols() != g.size()) throw DimensionError("newton_decrement: shape mismatch");
    if (g.size() == 0 || g.isZero(0.0)) return 0.0;
    Matrix Hr = H;
    Hr.diagonal().array() += ridge;
    const Vector x = Hr.ldlt().solve(g);
    return std::sqrt(std::max(g.dot(x), 0.0));
}

IrlFitResult fit_to_target(const Mdp& mdp, const FeatureMap& features, const Vector& target, const FitConfig& cfg) {
    cfg.validate();
    check_shape(mdp, features);
    const int d = features.dim();
    if (d < 1) throw DimensionError("fit: feature dimension must be at least 1");
    if (target.size() != d) throw DimensionError("fit: target dimension differs from d");

    IrlFitResult res;
    Vector theta = Vector::Zero(d);
    bool hit_boundary = false;
    Eval ev = evaluate(mdp, features, target, theta, cfg.beta);

    for (;;) {
        const bool ridge_used = min_eigenvalue(ev.hess) < kRidgeTrigger;
        const double ridge = ridge_used ? cfg.ridge : 0.0;
        const double dec = newton_decrement(ev.grad, ev.hess, ridge);
        res.final_decrement = dec;
        if (dec <= cfg.tol_decrement) {
            res.converged = true;
            res.trace.push_back({ev.loss, dec, 0.0, ridge_used});
            break;
        }
        if (res.iterations >= cfg.max_iters) break;

        Matrix Hr = ev.hess;
        Hr.diagonal().array() += ridge;
        Vector dir = -Hr.ldlt().solve(ev.grad);
        if (ridge_used) {
            // Kernel directions leave the loss unchanged up to rounding in the
            // gradient, which the ridge would amplify; keep them fixed.
            const Matrix K = kernel_basis(ev.hess);
            dir -= K * (K.transpose() * dir);
        }
        const double t_max = step_to_boundary(theta, dir, cfg.ball_radius);
        double t = std::min(1.0, t_max);
        const double slope = ev.grad.dot(dir);
        Vector next = theta + t * dir;
        double next_loss = loss_at(mdp, features, target, next, cfg.beta);
        // Near the optimum the Armijo test is below rounding level; take the
        // full Newton step there.
        if (!(dec < kFullStepDecrement && t == 1.0)) {
            while (!(next_loss <= ev.loss + cfg.armijo * t * slope) && t > kMinStep) {
                t *= cfg.backtrack;
                next = theta + t * dir;
                next_loss = loss_at(mdp, features, target, next, cfg.beta);
            }
        }
        res.trace.push_back({ev.loss, dec, t, ridge_used});
        if (!(t > kMinStep)) break;  // line search stalled
        theta = next;
        ++res.iterations;
        ev = evaluate(mdp, features, target, theta, cfg.beta);
        if (t == t_max && t_max < 1.0) {
            hit_boundary = true;
            break;
        }
    }

    if (hit_boundary) {
        // Polish on the sphere: Newton steps in the tangent space of the
        // Lagrangian when the constraint pushes back (mu > 0), otherwise a
        // projected-gradient step.
        res.converged = false;
        const int polish_iters = kPolishFactor * cfg.max_iters;
        for (int k = 0; k < polish_iters; ++k) {
            const Vector gl = lagrangian_gradient(ev.grad, theta, cfg.ball_radius);
            if (gl.norm() <= kLagrangianTol) {
                res.converged = true;
                break;
            }
            const double n2 = theta.squaredNorm();
            const double mu = -ev.grad.dot(theta) / n2;
            Vector next;
            double next_loss = 0.0;
            double step = 0.0;
            bool accepted = false;
            if (mu > 0.0) {
                const Matrix P = Matrix::Identity(d, d) - theta * theta.transpose() / n2;
                Matrix L = P * (ev.hess + mu * Matrix::Identity(d, d)) * P;
                L += theta * theta.transpose() / n2;  // keeps the normal direction invertible
                const Vector v = -L.ldlt().solve(gl);
                const double slope = gl.dot(v);
                if (slope < 0.0) {
                    for (double t = 1.0; t > kMinStep; t *= cfg.backtrack) {
                        next = theta + t * v;
                        next *= cfg.ball_radius / next.norm();
                        next_loss = loss_at(mdp, features, target, next, cfg.beta);
                        const bool tiny = t == 1.0 && gl.norm() < kFullStepDecrement;
                        if (tiny || next_loss <= ev.loss + cfg.armijo * t * slope) {
                            step = t;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            if (!accepted) {
                Eigen::SelfAdjointEigenSolver<Matrix> es(ev.hess, Eigen::EigenvaluesOnly);
                double eta = 1.0 / std::max(es.eigenvalues()(d - 1), 1e-12);
                for (int ls = 0; ls < 60; ++ls) {
                    next = project(theta - eta * ev.grad, cfg.ball_radius);
                    next_loss = loss_at(mdp, features, target, next, cfg.beta);
                    const Vector dl = next - theta;
                    if (next_loss <= ev.loss + ev.grad.dot(dl) + 0.5 / eta * dl.squaredNorm()) break;
                    eta *= cfg.backtrack;
                }
                step = eta;
            }
            res.trace.push_back({ev.loss, newton_decrement(ev.grad, ev.hess, cfg.ridge), step, false});
            if ((next - theta).norm() == 0.0) break;
            theta = next;
            ++res.iterations;
            ev = evaluate(mdp, features, target, theta, cfg.beta);
        }
        res.final_decrement = newton_decrement(ev.grad, ev.hess, cfg.ridge);
    }

    res.theta_hat = theta;
    res.final_loss = ev.loss;
    res.hessian_at_solution = ev.hess;
    res.active_ball_constraint = theta.norm() >= cfg.ball_radius * (1.0 - 1e-9);
    res.gradient_norm = lagrangian_gradient(ev.grad, theta, cfg.ball_radius).norm();
    return res;
}

IrlFitResult fit_empirical(const Mdp& mdp, const FeatureMap& features, const Dataset& data, const FitConfig& cfg) {
    if (data.trajectories.empty()) throw EmptyDatasetError("fit_empirical: dataset has no trajectories");
    for (const auto& tau : data.trajectories) check_trajectory(mdp, tau);
    return fit_to_target(mdp, features, empirical_feature_expectation(data, features), cfg);
}

IrlFitResult fit_population(const Mdp& mdp, const FeatureMap& features, const Policy& expert, const FitConfig& cfg) {
    check_shape(mdp, expert);
    return fit_to_target(mdp, features, expected_features(features, forward_occupancy(mdp, expert)), cfg);
}

} // namespace softirl
