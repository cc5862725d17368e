#include "softirl/soft_dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace softirl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_reward(const Mdp& mdp, const RewardTable& reward) {
    check_shape(mdp, reward);
    for (double v : reward.values())
        if (!std::isfinite(v)) throw DomainError("reward table contains a non-finite entry");
}

} // namespace

double log_density(const Mdp& mdp, const Policy& policy, int t, int s, int a) noexcept {
    const double p = policy(t, s, a);
    if (p == 0.0) return -kInf;
    return std::log(p / mdp.ref(a));
}

SoftSolution soft_backward(const Mdp& mdp, const RewardTable& reward, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw DomainError("soft_backward requires beta > 0; use hard_backward for the unregularized problem");
    check_reward(mdp, reward);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();

    SoftSolution sol;
    sol.beta = beta;
    sol.V = StateTable(T + 1, S);
    sol.Q = StateActionTable(T, S, A);
    StateActionTable pi(T, S, A);
    std::vector<double> w(A);

    for (int t = T - 1; t >= 0; --t) {
        const auto next_v = sol.V.row(t + 1);
        for (int s = 0; s < S; ++s) {
            double qmax = -kInf;
            for (int a = 0; a < A; ++a) {
                double q = reward(t, s, a);
                if (t + 1 < T) q += mdp.expect_next(t, s, a, next_v);
                sol.Q(t, s, a) = q;
                qmax = std::max(qmax, q);
            }
            double z = 0.0;
            for (int a = 0; a < A; ++a) {
                w[a] = mdp.ref(a) * std::exp((sol.Q(t, s, a) - qmax) / beta);
                z += w[a];
            }
            sol.V(t, s) = qmax + beta * std::log(z);
            for (int a = 0; a < A; ++a) pi(t, s, a) = w[a] / z;
        }
    }
    sol.pi_star = Policy(std::move(pi), "soft-optimal");
    double J = 0.0;
    for (int s = 0; s < S; ++s) J += mdp.initial_dist()[s] * sol.V(0, s);
    sol.J_star = J;
    return sol;
}

HardSolution hard_backward(const Mdp& mdp, const RewardTable& reward) {
    check_reward(mdp, reward);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    HardSolution sol;
    sol.V = StateTable(T + 1, S);
    sol.Q = StateActionTable(T, S, A);
    StateActionTable greedy(T, S, A, 0.0);
    for (int t = T - 1; t >= 0; --t) {
        const auto next_v = sol.V.row(t + 1);
        for (int s = 0; s < S; ++s) {
            int best = 0;
            for (int a = 0; a < A; ++a) {
                double q = reward(t, s, a);
                if (t + 1 < T) q += mdp.expect_next(t, s, a, next_v);
                sol.Q(t, s, a) = q;
                if (q > sol.Q(t, s, best)) best = a;
            }
            sol.V(t, s) = sol.Q(t, s, best);
            greedy(t, s, best) = 1.0;
        }
    }
    sol.greedy = Policy(std::move(greedy), "greedy");
    double J = 0.0;
    for (int s = 0; s < S; ++s) J += mdp.initial_dist()[s] * sol.V(0, s);
    sol.J = J;
    return sol;
}

PolicyEvaluation policy_evaluate(const Mdp& mdp, const RewardTable& reward, const Policy& policy, double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("policy_evaluate requires beta >= 0");
    check_reward(mdp, reward);
    check_shape(mdp, policy);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();

    PolicyEvaluation ev;
    ev.beta = beta;
    ev.V = StateTable(T + 1, S);
    ev.Q = StateActionTable(T, S, A);
    ev.advantage = StateActionTable(T, S, A);
    for (int t = T - 1; t >= 0; --t) {
        const auto next_v = ev.V.row(t + 1);
        for (int s = 0; s < S; ++s) {
            double v = 0.0;
            for (int a = 0; a < A; ++a) {
                double q = reward(t, s, a);
                if (t + 1 < T) q += mdp.expect_next(t, s, a, next_v);
                ev.Q(t, s, a) = q;
                const double p = policy(t, s, a);
                if (p == 0.0) continue;  // 0 * log 0 = 0
                v += p * (beta > 0.0 ? q - beta * std::log(p / mdp.ref(a)) : q);
            }
            ev.V(t, s) = v;
            for (int a = 0; a < A; ++a) {
                const double p = policy(t, s, a);
                if (beta > 0.0)
                    ev.advantage(t, s, a) = p == 0.0 ? kInf : ev.Q(t, s, a) - v - beta * std::log(p / mdp.ref(a));
                else
                    ev.advantage(t, s, a) = ev.Q(t, s, a) - v;
            }
        }
    }
    double J = 0.0;
    for (int s = 0; s < S; ++s) J += mdp.initial_dist()[s] * ev.V(0, s);
    ev.J = J;
    return ev;
}

FeatureMap advantage_vector(const Mdp& mdp, const FeatureMap& features, const Policy& policy) {
    check_shape(mdp, features);
    check_shape(mdp, policy);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions(), d = features.dim();
    FeatureMap adv(T, S, A, d);
    for (int i = 0; i < d; ++i) {
        const auto ev = policy_evaluate(mdp, features.coordinate(i), policy, 0.0);
        for (int t = 0; t < T; ++t)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) adv.at(t, s, a)[i] = ev.advantage(t, s, a);
    }
    return adv;
}

double trajectory_kl(const Mdp& mdp, const Policy& p, const Policy& q) {
    check_shape(mdp, p);
    check_shape(mdp, q);
    const auto occ = forward_occupancy(mdp, p);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    double kl = 0.0;
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) {
            const double ds = occ.state(t, s);
            if (ds == 0.0) continue;
            double row = 0.0;
            for (int a = 0; a < A; ++a) {
                const double pa = p(t, s, a);
                if (pa == 0.0) continue;
                const double qa = q(t, s, a);
                if (qa == 0.0) return kInf;
                row += pa * std::log(pa / qa);
            }
            kl += ds * row;
        }
    // Rounding can leave a tiny negative value for identical laws.
    return std::max(kl, 0.0);
}

double trajectory_hellinger(const Mdp& mdp, const Policy& p, const Policy& q, std::size_t cap) {
    check_shape(mdp, p);
    check_shape(mdp, q);
    // The mixture policy's trajectory support contains the union of both supports.
    StateActionTable mix(mdp.horizon(), mdp.n_states(), mdp.n_actions());
    for (std::size_t i = 0; i < mix.values().size(); ++i)
        mix.values()[i] = 0.5 * (p.probs().values()[i] + q.probs().values()[i]);
    const Policy mixture(std::move(mix), "mixture");

    double h2 = 0.0;
    for_each_trajectory(
        mdp, mixture,
        [&](const Trajectory& tau, double) {
            const double lp = trajectory_log_prob(mdp, p, tau);
            const double lq = trajectory_log_prob(mdp, q, tau);
            double diff;
            if (std::isfinite(lp) && std::isfinite(lq))
                diff = -std::exp(0.5 * lp) * std::expm1(0.5 * (lq - lp));
            else
                diff = std::exp(0.5 * lp) - std::exp(0.5 * lq);
            h2 += diff * diff;
        },
        cap);
    return std::clamp(h2, 0.0, 2.0);
}

ReturnDecomposition return_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                         const PolicyEvaluation& ev, const Trajectory& tau) {
    check_trajectory(mdp, tau);
    const int T = mdp.horizon();
    ReturnDecomposition out;
    out.J = ev.J;
    out.advantages.resize(T);
    out.deltas.resize(T);
    double G = 0.0;
    for (int t = 0; t < T; ++t) {
        const int s = tau.states[t], a = tau.actions[t];
        G += reward(t, s, a);
        if (ev.beta > 0.0) G -= ev.beta * log_density(mdp, policy, t, s, a);
        out.advantages[t] = ev.advantage(t, s, a);
    }
    out.G = G;
    out.deltas[0] = ev.V(0, tau.states[0]) - ev.J;
    for (int t = 1; t < T; ++t) {
        const int s = tau.states[t - 1], a = tau.actions[t - 1];
        out.deltas[t] = ev.V(t, tau.states[t]) - mdp.expect_next(t - 1, s, a, ev.V.row(t));
    }
    for (double x : out.advantages) out.advantage_sum += x;
    for (double x : out.deltas) out.delta_sum += x;
    out.residual = out.G - out.J - out.advantage_sum - out.delta_sum;
    return out;
}

ReturnDecomposition return_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                         double beta, const Trajectory& tau) {
    const auto ev = policy_evaluate(mdp, reward, policy, beta);
    return return_decomposition(mdp, reward, policy, ev, tau);
}

VarianceDecomposition variance_decomposition(const Mdp& mdp, const RewardTable& reward, const Policy& policy,
                                             double beta, std::size_t cap) {
    check_enumerable(mdp, cap);
    const auto ev = policy_evaluate(mdp, reward, policy, beta);
    const auto occ = forward_occupancy(mdp, policy);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();

    VarianceDecomposition out;
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double m = occ.mu(t, s, a);
                if (m == 0.0) continue;
                out.action_var += m * ev.advantage(t, s, a) * ev.advantage(t, s, a);
            }

    for (int s = 0; s < S; ++s) {
        const double d0 = ev.V(0, s) - ev.J;
        out.dynamics_var += mdp.initial_dist()[s] * d0 * d0;
    }
    for (int t = 1; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double m = occ.mu(t - 1, s, a);
                if (m == 0.0) continue;
                const auto p = mdp.next_state_dist(t - 1, s, a);
                const double pv = mdp.expect_next(t - 1, s, a, ev.V.row(t));
                for (int n = 0; n < S; ++n) {
                    if (p[n] == 0.0) continue;
                    const double dl = ev.V(t, n) - pv;
                    out.dynamics_var += m * p[n] * dl * dl;
                }
            }

    double centered = 0.0;
    for_each_trajectory(
        mdp, policy,
        [&](const Trajectory& tau, double prob) {
            double G = 0.0;
            for (int t = 0; t < T; ++t) {
                const int s = tau.states[t], a = tau.actions[t];
                G += reward(t, s, a);
                if (beta > 0.0) G -= beta * log_density(mdp, policy, t, s, a);
            }
            centered += prob * (G - ev.J) * (G - ev.J);
        },
        cap);
    // E[G] = J exactly, so this is Var[G].
    out.total_var = centered;
    return out;
}

std::vector<std::string> check_soft_solution(const Mdp& mdp, const SoftSolution& sol, double tol) {
    std::vector<std::string> problems;
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    if (!sol.Q.same_shape(StateActionTable(T, S, A)) || sol.V.rows() != T + 1 || sol.V.n_states() != S ||
        sol.pi_star.horizon() != T || sol.pi_star.n_states() != S || sol.pi_star.n_actions() != A) {
        problems.push_back("shape does not match the MDP");
        return problems;
    }
    if (!(sol.beta > 0.0)) problems.push_back("beta must be positive");
    auto where = [](int t, int s) { return "(t=" + std::to_string(t) + ", s=" + std::to_string(s) + ")"; };
    for (int s = 0; s < S; ++s)
        if (sol.V(T, s) != 0.0) problems.push_back("terminal value nonzero at " + where(T, s));
    if (!problems.empty()) return problems;
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) {
            double qmax = -kInf;
            for (int a = 0; a < A; ++a) qmax = std::max(qmax, sol.Q(t, s, a));
            double z = 0.0;
            for (int a = 0; a < A; ++a) z += mdp.ref(a) * std::exp((sol.Q(t, s, a) - qmax) / sol.beta);
            const double v = qmax + sol.beta * std::log(z);
            if (!(std::abs(v - sol.V(t, s)) <= tol * (1.0 + std::abs(v))))
                problems.push_back("V is not the soft maximum of Q at " + where(t, s));
            for (int a = 0; a < A; ++a) {
                const double p = mdp.ref(a) * std::exp((sol.Q(t, s, a) - sol.V(t, s)) / sol.beta);
                if (!(std::abs(p - sol.pi_star(t, s, a)) <= tol) || !(sol.pi_star(t, s, a) > 0.0))
                    problems.push_back("pi_star is not the Gibbs policy at " + where(t, s));
            }
        }
    double J = 0.0;
    for (int s = 0; s < S; ++s) J += mdp.initial_dist()[s] * sol.V(0, s);
    if (!(std::abs(J - sol.J_star) <= tol * (1.0 + std::abs(J)))) problems.push_back("J_star differs from <init, V_0>");
    return problems;
}

} // namespace softirl
