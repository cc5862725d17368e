#include "softirl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace softirl {

namespace {

void require_data(const Mdp& mdp, const Dataset& data) {
    if (data.trajectories.empty()) throw EmptyDatasetError("dataset has no trajectories");
    for (const auto& tau : data.trajectories) check_trajectory(mdp, tau);
}

void require_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive");
}

} // namespace

double irl_empirical_loss(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                          const Dataset& data) {
    require_beta(beta);
    require_data(mdp, data);
    return J_star(mdp, features, theta, beta) - theta.dot(empirical_feature_expectation(data, features));
}

double irl_population_loss(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                           const Policy& expert) {
    require_beta(beta);
    check_shape(mdp, expert);
    const Vector target = expected_features(features, forward_occupancy(mdp, expert));
    return J_star(mdp, features, theta, beta) - theta.dot(target);
}

double mle_loss(const Mdp& mdp, const Policy& policy, const Dataset& data) {
    check_shape(mdp, policy);
    require_data(mdp, data);
    double total = 0.0;
    for (const auto& tau : data.trajectories)
        for (int t = 0; t < mdp.horizon(); ++t) total -= log_density(mdp, policy, t, tau.states[t], tau.actions[t]);
    return total / static_cast<double>(data.size());
}

double mle_population_loss(const Mdp& mdp, const Policy& policy, const Policy& expert) {
    check_shape(mdp, policy);
    const auto occ = forward_occupancy(mdp, expert);
    double total = 0.0;
    for (int t = 0; t < mdp.horizon(); ++t)
        for (int s = 0; s < mdp.n_states(); ++s)
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const double m = occ.mu(t, s, a);
                if (m == 0.0) continue;
                total -= m * log_density(mdp, policy, t, s, a);
            }
    return total;
}

double residual_term(const Mdp& mdp, const SoftSolution& soft, const Dataset& data) {
    require_data(mdp, data);
    const int T = mdp.horizon();
    double total = 0.0;
    for (const auto& tau : data.trajectories) {
        double sum = soft.V(0, tau.states[0]) - soft.J_star;
        for (int t = 1; t < T; ++t)
            sum += soft.V(t, tau.states[t]) -
                   mdp.expect_next(t - 1, tau.states[t - 1], tau.actions[t - 1], soft.V.row(t));
        total += sum;
    }
    return total / static_cast<double>(data.size());
}

RiskReport equivalence_report(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                              const Dataset& data, const Policy& expert, double tol) {
    require_beta(beta);
    require_data(mdp, data);
    check_shape(mdp, expert);
    const auto soft = soft_backward(mdp, reward_of(features, theta), beta);
    const Vector emp = empirical_feature_expectation(data, features);
    const Vector pop = expected_features(features, forward_occupancy(mdp, expert));

    RiskReport r;
    r.beta = beta;
    r.irl_empirical = soft.J_star - theta.dot(emp);
    r.irl_population = soft.J_star - theta.dot(pop);
    r.mle_empirical = mle_loss(mdp, soft.pi_star, data);
    r.mle_population = mle_population_loss(mdp, soft.pi_star, expert);
    r.residual_term = residual_term(mdp, soft, data);
    r.equivalence_gap = beta * r.mle_empirical - r.irl_empirical - r.residual_term;
    r.population_gap = beta * r.mle_population - r.irl_population;
    r.passed = std::abs(r.equivalence_gap) <= tol && std::abs(r.population_gap) <= tol;
    return r;
}

CounterexampleInstance appendix_e_instance() {
    constexpr int x = 0, y = 1, a = 0, b = 1;
    // kernels [t][s][a][s'] for the single transition step
    std::vector<double> kernels(2 * 2 * 2, 0.0);
    auto k = [&](int s, int act, int next) -> double& { return kernels[(s * 2 + act) * 2 + next]; };
    k(x, a, y) = 1.0;
    k(x, b, x) = 0.5;
    k(x, b, y) = 0.5;
    k(y, a, y) = 1.0;
    k(y, b, y) = 1.0;
    Mdp mdp(2, 2, 2, {1.0, 0.0}, kernels, {1.0, 1.0});

    FeatureMap phi(2, 2, 2, 2);
    phi.at(1, x, a)[0] = 1.0;
    phi.at(1, y, a)[1] = 1.0;

    Dataset data;
    data.trajectories.push_back(Trajectory{{x, y}, {b, a}});
    data.generator_label = "appendix-e";

    Vector r(2), rp(2);
    r << 2.0, 4.0;
    rp << -4.0, 2.0;
    return CounterexampleInstance{std::move(mdp), std::move(phi), 1.0, std::move(data), r, rp};
}

NonconvexityProbe nonconvexity_probe() {
    const auto inst = appendix_e_instance();
    auto f = [&](const Vector& theta) {
        const auto soft = soft_backward(inst.mdp, reward_of(inst.features, theta), inst.beta);
        return mle_loss(inst.mdp, soft.pi_star, inst.data);
    };
    NonconvexityProbe p;
    p.f_r = f(inst.theta_r);
    p.f_r_prime = f(inst.theta_r_prime);
    p.f_mid = f(0.5 * (inst.theta_r + inst.theta_r_prime));
    p.non_quasiconvex = p.f_mid > std::max(p.f_r, p.f_r_prime);
    return p;
}

} // namespace softirl
