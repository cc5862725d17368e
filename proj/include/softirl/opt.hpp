#pragma once

#include <limits>
#include <vector>

#include "softirl/linear_reward.hpp"

namespace softirl {

struct FitConfig {
    double beta = 1.0;
    double tol_decrement = 1e-10;
    int max_iters = 100;
    double ball_radius = 100.0;
    double ridge = 1e-9;            ///< added to H when lambda_min(H) < 1e-10
    double backtrack = 0.5;
    double armijo = 1e-4;

    /// Throws DomainError unless every field is positive (and the line-search
    /// parameters lie in (0, 1)).
    void validate() const;
};

struct FitTraceEntry {
    double loss = 0.0;
    double decrement = 0.0;
    double step_size = 0.0;
    bool ridge_used = false;
};

struct IrlFitResult {
    Vector theta_hat;
    double final_loss = 0.0;
    int iterations = 0;
    double final_decrement = 0.0;
    double gradient_norm = 0.0;  ///< norm of the Lagrangian gradient when the ball is active
    Matrix hessian_at_solution;
    bool active_ball_constraint = false;
    bool converged = false;
    std::vector<FitTraceEntry> trace;
};

/// sqrt(g^T (H + ridge I)^{-1} g).
double newton_decrement(const Vector& g, const Matrix& H, double ridge = 0.0);

/// Minimizes J*(theta) - <theta, target> over the ball by damped Newton from
/// theta = 0. Non-convergence is reported through `converged`, never thrown.
IrlFitResult fit_to_target(const Mdp& mdp, const FeatureMap& features, const Vector& target, const FitConfig& cfg);

/// target = empirical feature expectation of `data`.
IrlFitResult fit_empirical(const Mdp& mdp, const FeatureMap& features, const Dataset& data, const FitConfig& cfg);

/// target = exact feature expectation under `expert`.
IrlFitResult fit_population(const Mdp& mdp, const FeatureMap& features, const Policy& expert, const FitConfig& cfg);

} // namespace softirl
