#pragma once

#include <string>
#include <vector>

#include "softirl/mdp.hpp"

namespace softirl {

/// Soft-optimal values and the Gibbs policy for a fixed reward and beta > 0.
///
/// V has T + 1 rows with V(T, .) = 0, and
///   V(t, s)   = beta * log sum_a nu[a] exp(Q(t, s, a) / beta)
///   pi*(a|s)  = nu[a] exp((Q(t, s, a) - V(t, s)) / beta)
///   J*        = <initial_dist, V(0, .)>.
struct SoftSolution {
    double beta = 0.0;
    StateTable V;
    StateActionTable Q;
    Policy pi_star;
    double J_star = 0.0;
};

/// Values of a fixed policy under the beta-regularized return, with entropy
/// taken w.r.t. nu. `advantage` is Q - V - beta * log(pi / nu); it is +inf at
/// actions the policy never takes when beta > 0.
struct PolicyEvaluation {
    double beta = 0.0;
    StateTable V;
    StateActionTable Q;
    StateActionTable advantage;
    double J = 0.0;
};

/// Unregularized optimum with the greedy policy (ties go to the lowest action).
struct HardSolution {
    StateTable V;
    StateActionTable Q;
    Policy greedy;
    double J = 0.0;
};

/// Backward soft Bellman recursion with max-subtracted log-sum-exp.
/// Throws DomainError for beta <= 0; use hard_backward instead.
SoftSolution soft_backward(const Mdp& mdp, const RewardTable& reward, double beta);

HardSolution hard_backward(const Mdp& mdp, const RewardTable& reward);

PolicyEvaluation policy_evaluate(const Mdp& mdp, const RewardTable& reward, const Policy& policy, double beta);

/// [T][S][A][d] tensor of per-coordinate unregularized advantages
/// A^{pi,0}_{t,phi_i}(s, a).
FeatureMap advantage_vector(const Mdp& mdp, const FeatureMap& features, const Policy& policy);

/// Exact D_KL(P^p, P^q) via the chain rule over occupancy measures; +inf when
/// p reaches an action q never takes.
double trajectory_kl(const Mdp& mdp, const Policy& p, const Policy& q);

/// Exact squared Hellinger distance between trajectory laws, by enumeration.
double trajectory_hellinger(const Mdp& mdp, const Policy& p, const Policy& q,
                            std::size_t cap = kDefaultEnumerationCap);

/// G - J = sum_t A_t + sum_t delta_t along one trajectory.
/// deltas[0] is V(0, s_1) - J (the initial-state residual); deltas[t] for
/// t >= 1 is V(t, s_{t+1}) - (P_{t-1} V(t, .))(s_t, a_t) in zero-based steps.
struct ReturnDecomposition {
    double G = 0.0;
    double J = 0.0;
    double advantage_sum = 0.0;
    double delta_sum = 0.0;
    double residual = 0.0;
    std::vector<double> advantages;
    std::vector<double> deltas;
};

ReturnDecomposition return_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                         double beta, const Trajectory& tau);

/// Same, reusing an evaluation of (reward, policy, beta).
ReturnDecomposition return_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                         const PolicyEvaluation& eval, const Trajectory& tau);

struct VarianceDecomposition {
    double total_var = 0.0;     ///< Var[G] by enumeration
    double action_var = 0.0;    ///< sum_t E[A_t^2]
    double dynamics_var = 0.0;  ///< sum_t E[delta_t^2]
};

/// total_var is enumerated over trajectories; the two components are computed
/// from occupancy measures and kernels, so total = action + dynamics is a
/// genuine cross-check.
VarianceDecomposition variance_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                             double beta, std::size_t cap = kDefaultEnumerationCap);

/// Problems found when checking a (possibly deserialized) soft solution
/// against the MDP: shapes, the log-sum-exp value identity, the Gibbs form of
/// pi_star, the terminal row and J_star. Empty when everything holds within tol.
std::vector<std::string> check_soft_solution(const Mdp& mdp, const SoftSolution& sol, double tol = 1e-9);

/// log(pi(a|s) / nu[a]); -inf for zero probability.
double log_density(const Mdp& mdp, const Policy& policy, int t, int s, int a) noexcept;

} // namespace softirl
