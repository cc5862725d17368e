#include "softirl/linear_reward.hpp"

#include <algorithm>
#include <cmath>

namespace softirl {

void LinearRewardModel::validate() const {
    if (theta.size() != features.dim()) throw DimensionError("LinearRewardModel: theta dimension differs from d");
    if (!(B_theta > 0.0)) throw DomainError("LinearRewardModel: B_theta must be positive");
    if (theta.norm() > B_theta * (1.0 + 1e-12)) throw DomainError("LinearRewardModel: ||theta|| exceeds B_theta");
}

RewardTable reward_of(const FeatureMap& features, const Vector& theta) {
    if (theta.size() != features.dim()) throw DimensionError("reward_of: theta dimension differs from d");
    RewardTable r(features.horizon(), features.n_states(), features.n_actions());
    for (int t = 0; t < features.horizon(); ++t)
        for (int s = 0; s < features.n_states(); ++s)
            for (int a = 0; a < features.n_actions(); ++a) r(t, s, a) = features.at(t, s, a).dot(theta);
    return r;
}

SoftOptimalPoint analyze_theta(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta) {
    check_shape(mdp, features);
    SoftOptimalPoint p;
    p.theta = theta;
    p.beta = beta;
    p.soft = soft_backward(mdp, reward_of(features, theta), beta);
    p.occupancy = forward_occupancy(mdp, p.soft.pi_star);
    p.advantage = advantage_vector(mdp, features, p.soft.pi_star);
    return p;
}

double J_star(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta) {
    check_shape(mdp, features);
    return soft_backward(mdp, reward_of(features, theta), beta).J_star;
}

Vector grad_J(const SoftOptimalPoint& point, const FeatureMap& features) {
    return expected_features(features, point.occupancy);
}

Vector grad_J(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta) {
    check_shape(mdp, features);
    const auto sol = soft_backward(mdp, reward_of(features, theta), beta);
    return expected_features(features, forward_occupancy(mdp, sol.pi_star));
}

Matrix hessian_J(const SoftOptimalPoint& point) {
    const auto& adv = point.advantage;
    const int d = adv.dim();
    Matrix H = Matrix::Zero(d, d);
    for (int t = 0; t < adv.horizon(); ++t)
        for (int s = 0; s < adv.n_states(); ++s)
            for (int a = 0; a < adv.n_actions(); ++a) {
                const double m = point.occupancy.mu(t, s, a);
                if (m == 0.0) continue;
                const auto A = adv.at(t, s, a);
                H.noalias() += m * A * A.transpose();
            }
    H /= point.beta;
    return 0.5 * (H + H.transpose());
}

Matrix hessian_J(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta) {
    return hessian_J(analyze_theta(mdp, features, theta, beta));
}

DerivativeBundle derivatives(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta) {
    const auto p = analyze_theta(mdp, features, theta, beta);
    return DerivativeBundle{p.soft.J_star, grad_J(p, features), hessian_J(p), beta};
}

Vector score(const SoftOptimalPoint& point, const Trajectory& tau) {
    const auto& adv = point.advantage;
    Vector z = Vector::Zero(adv.dim());
    for (int t = 0; t < adv.horizon(); ++t) z += adv.at(t, tau.states[t], tau.actions[t]);
    return z;
}

Vector score(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta, const Trajectory& tau) {
    check_trajectory(mdp, tau);
    return score(analyze_theta(mdp, features, theta, beta), tau);
}

double third_derivative(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                        const Vector& xi, const Vector& zeta, const Vector& omega, std::size_t cap) {
    const int d = features.dim();
    if (xi.size() != d || zeta.size() != d || omega.size() != d)
        throw DimensionError("third_derivative: direction dimension differs from d");
    const auto p = analyze_theta(mdp, features, theta, beta);
    double acc = 0.0;
    for_each_trajectory(
        mdp, p.soft.pi_star,
        [&](const Trajectory& tau, double prob) {
            const Vector z = score(p, tau);
            acc += prob * z.dot(xi) * z.dot(zeta) * z.dot(omega);
        },
        cap);
    return acc / (beta * beta);
}

double min_eigenvalue(const Matrix& H) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Matrix kernel_basis(const Matrix& H, double tol) {
    if (H.rows() != H.cols()) throw DimensionError("kernel_basis: matrix must be square");
    const Eigen::Index d = H.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
    const auto& ev = es.eigenvalues();
    const double lmax = d > 0 ? std::max(ev(d - 1), 0.0) : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < d; ++i)
        if (ev(i) <= tol * lmax) keep.push_back(i);
    Matrix K(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) K.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
    return K;
}

RewardTable potential_shaping(const Mdp& mdp, const StateTable& psi) {
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    if (psi.rows() < T || psi.n_states() != S) throw DimensionError("potential_shaping: psi must be [T(+1)][S]");
    RewardTable u(T, S, A);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                u(t, s, a) = psi(t, s) - (t + 1 < T ? mdp.expect_next(t, s, a, psi.row(t + 1)) : 0.0);
    return u;
}

RewardTable shaping_projector(const Mdp& mdp, const RewardTable& reward, const Policy& policy, double beta) {
    const auto ev = policy_evaluate(mdp, reward, policy, beta);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    RewardTable out(T, S, A);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double pv = t + 1 < T ? mdp.expect_next(t, s, a, ev.V.row(t + 1)) : 0.0;
                out(t, s, a) = reward(t, s, a) - ev.V(t, s) + pv;
            }
    return out;
}

EffectiveDimension effective_dimension(const Mdp& mdp, const FeatureMap& features, const Policy& expert,
                                       const Matrix& H_star, double beta, std::size_t cap) {
    check_shape(mdp, features);
    check_shape(mdp, expert);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions(), d = features.dim();
    if (H_star.rows() != d || H_star.cols() != d) throw DimensionError("effective_dimension: H_star must be d x d");
    if (!(beta > 0.0)) throw DomainError("effective_dimension: beta must be positive");
    if (!(min_eigenvalue(H_star) > 1e-10)) throw DomainError("effective_dimension: H_star is singular");

    const auto occ = forward_occupancy(mdp, expert);
    std::vector<PolicyEvaluation> evals;
    evals.reserve(d);
    for (int i = 0; i < d; ++i) evals.push_back(policy_evaluate(mdp, features.coordinate(i), expert, 0.0));

    EffectiveDimension out;
    Matrix AA = Matrix::Zero(d, d);
    Vector v(d);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double m = occ.mu(t, s, a);
                if (m == 0.0) continue;
                for (int i = 0; i < d; ++i) v(i) = evals[i].advantage(t, s, a);
                AA.noalias() += m * v * v.transpose();
            }
    out.H_part = AA / beta;

    Matrix M = Matrix::Zero(d, d);
    for (int s = 0; s < S; ++s) {
        const double p0 = mdp.initial_dist()[s];
        if (p0 == 0.0) continue;
        for (int i = 0; i < d; ++i) v(i) = evals[i].V(0, s) - evals[i].J;
        M.noalias() += p0 * v * v.transpose();
    }
    for (int t = 1; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double m = occ.mu(t - 1, s, a);
                if (m == 0.0) continue;
                const auto p = mdp.next_state_dist(t - 1, s, a);
                for (int n = 0; n < S; ++n) {
                    if (p[n] == 0.0) continue;
                    for (int i = 0; i < d; ++i)
                        v(i) = evals[i].V(t, n) - mdp.expect_next(t - 1, s, a, evals[i].V.row(t));
                    M.noalias() += m * p[n] * v * v.transpose();
                }
            }
    out.M_part = M;

    if (trajectory_record_count(mdp) <= cap) {
        Vector mean = Vector::Zero(d);
        for (int i = 0; i < d; ++i) mean(i) = evals[i].J;
        Matrix C = Matrix::Zero(d, d);
        for_each_trajectory(
            mdp, expert,
            [&](const Trajectory& tau, double prob) {
                const Vector g = feature_return(features, tau) - mean;
                C.noalias() += prob * g * g.transpose();
            },
            cap);
        out.Sigma_E = 0.5 * (C + C.transpose());
        out.sigma_enumerated = true;
    } else {
        out.Sigma_E = AA + M;
    }
    out.d_star = H_star.ldlt().solve(out.Sigma_E).trace();
    return out;
}

double max_feature_return_norm(const Mdp& mdp, const FeatureMap& features, std::size_t cap) {
    check_shape(mdp, features);
    const auto uniform = Policy::uniform(mdp.horizon(), mdp.n_states(), mdp.n_actions());
    const int T = mdp.horizon();
    double best = 0.0;
    for_each_trajectory(
        mdp, uniform,
        [&](const Trajectory& tau, double) {
            Vector suffix = Vector::Zero(features.dim());
            for (int t = T - 1; t >= 0; --t) {
                suffix += features.at(t, tau.states[t], tau.actions[t]);
                best = std::max(best, suffix.norm());
            }
        },
        cap);
    return best;
}

double max_score_norm(const Mdp& mdp, const FeatureMap& features, double beta, const std::vector<Vector>& theta_grid,
                      std::size_t cap) {
    check_enumerable(mdp, cap);
    double best = 0.0;
    for (const auto& theta : theta_grid) {
        const auto p = analyze_theta(mdp, features, theta, beta);
        for_each_trajectory(
            mdp, p.soft.pi_star, [&](const Trajectory& tau, double) { best = std::max(best, score(p, tau).norm()); },
            cap);
    }
    return best;
}

double feature_norm_bound(const FeatureMap& features) {
    double total = 0.0;
    for (int t = 0; t < features.horizon(); ++t) {
        double m = 0.0;
        for (int s = 0; s < features.n_states(); ++s)
            for (int a = 0; a < features.n_actions(); ++a) m = std::max(m, features.at(t, s, a).norm());
        total += m;
    }
    return total;
}

GeometryConstants geometry_constants(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta_ref,
                                     const std::vector<Vector>& theta_grid, GeometryMode mode,
                                     const std::optional<Policy>& expert, std::size_t cap) {
    GeometryConstants g;
    g.mode = mode;
    const auto ref_point = analyze_theta(mdp, features, theta_ref, beta);
    const Matrix H = hessian_J(ref_point);
    g.lambda_star = std::max(min_eigenvalue(H), 0.0);
    if (mode == GeometryMode::exact) {
        g.B_phi = max_feature_return_norm(mdp, features, cap);
        std::vector<Vector> grid = theta_grid;
        grid.push_back(theta_ref);
        g.B_A_phi = max_score_norm(mdp, features, beta, grid, cap);
    } else {
        g.B_phi = feature_norm_bound(features);
        g.B_A_phi = 2.0 * mdp.horizon() * g.B_phi;
    }
    g.rho_star = g.B_A_phi > 0.0 ? beta * std::sqrt(g.lambda_star) / g.B_A_phi
                                 : std::numeric_limits<double>::infinity();
    if (expert && g.lambda_star > 1e-10) g.d_star = effective_dimension(mdp, features, *expert, H, beta, cap).d_star;
    return g;
}

std::string to_string(GeometryMode mode) { return mode == GeometryMode::exact ? "exact" : "conservative"; }

} // namespace softirl
