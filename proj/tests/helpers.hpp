#pragma once

#include <cmath>
#include <functional>

#include "softirl/experiments.hpp"

namespace testing_support {

using namespace softirl;

inline RewardTable random_reward(int T, int S, int A, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    RewardTable r(T, S, A);
    for (auto& x : r.values()) x = scale * rng.normal();
    return r;
}

inline Vector random_vector(int d, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = scale * rng.normal();
    return v;
}

/// One-hot policy choosing action (t + s) mod A.
inline Policy deterministic_policy(int T, int S, int A) {
    StateActionTable p(T, S, A, 0.0);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) p(t, s, (t + s) % A) = 1.0;
    return Policy(std::move(p), "one-hot");
}

/// Feature map with every entry equal to c (all coordinates).
inline FeatureMap constant_features(int T, int S, int A, int d, double c) {
    return FeatureMap(T, S, A, d, std::vector<double>(static_cast<std::size_t>(T) * S * A * d, c));
}

inline double central_difference(const std::function<double(const Vector&)>& f, const Vector& x, int i, double h) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

inline double relative_error(const Vector& a, const Vector& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

/// Enumerated E[(beta^{-1} Z)(beta^{-1} Z)^T] under pi*_theta.
inline Matrix enumerated_fisher(const Mdp& mdp, const FeatureMap& phi, const Vector& theta, double beta) {
    const auto p = analyze_theta(mdp, phi, theta, beta);
    Matrix F = Matrix::Zero(phi.dim(), phi.dim());
    for_each_trajectory(mdp, p.soft.pi_star, [&](const Trajectory& tau, double prob) {
        const Vector z = score(p, tau) / beta;
        F += prob * z * z.transpose();
    });
    return F;
}

} // namespace testing_support
