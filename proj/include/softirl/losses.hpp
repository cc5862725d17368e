#pragma once

#include "softirl/linear_reward.hpp"

namespace softirl {

/// L^IRL_n(theta) = J*(theta) - <theta, empirical feature expectation>.
double irl_empirical_loss(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                          const Dataset& data);

/// L^IRL(theta) = J*(theta) - <theta, sum_t <phi_t, mu_t^expert>>.
double irl_population_loss(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                           const Policy& expert);

/// Mean over trajectories of -sum_t log(pi_t(a_t|s_t) / nu[a_t]); +inf when the
/// policy gives zero probability to an observed action.
double mle_loss(const Mdp& mdp, const Policy& policy, const Dataset& data);

/// Exact expectation of the per-trajectory negative log-likelihood under the
/// expert's trajectory law.
double mle_population_loss(const Mdp& mdp, const Policy& policy, const Policy& expert);

/// Empirical mean of sum_{t=0}^{T-1} delta*_t, the dynamics residuals of the
/// soft-optimal values (delta*_0 = V*_0(s_0) - J*).
double residual_term(const Mdp& mdp, const SoftSolution& soft, const Dataset& data);

struct RiskReport {
    double beta = 0.0;
    double irl_empirical = 0.0;
    double irl_population = 0.0;
    double mle_empirical = 0.0;
    double mle_population = 0.0;
    double residual_term = 0.0;
    /// beta * mle_empirical - irl_empirical - residual_term
    double equivalence_gap = 0.0;
    /// beta * mle_population - irl_population
    double population_gap = 0.0;
    bool passed = false;
};

/// All four risks at theta, with the MLE risks evaluated at pi*_theta.
/// `passed` holds when both gaps are within `tol`.
RiskReport equivalence_report(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                              const Dataset& data, const Policy& expert, double tol = 1e-9);

/// The two-state, two-action, two-step instance on which the MLE loss of
/// soft-optimal policies is not quasiconvex in the reward parameter.
struct CounterexampleInstance {
    Mdp mdp;
    FeatureMap features;
    double beta = 1.0;
    Dataset data;  ///< the single trajectory (x, b, y, a)
    Vector theta_r;
    Vector theta_r_prime;
};

CounterexampleInstance appendix_e_instance();

struct NonconvexityProbe {
    double f_r = 0.0;
    double f_r_prime = 0.0;
    double f_mid = 0.0;
    bool non_quasiconvex = false;  ///< f_mid > max(f_r, f_r_prime)
};

/// MLE loss of pi*_theta on the builtin trajectory at r, r' and their midpoint.
NonconvexityProbe nonconvexity_probe();

} // namespace softirl
