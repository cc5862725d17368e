#pragma once

#include <optional>
#include <string>
#include <vector>

#include "softirl/soft_dp.hpp"

namespace softirl {

/// r_theta = <theta, phi> restricted to the ball ||theta|| <= B_theta.
struct LinearRewardModel {
    FeatureMap features;
    Vector theta;
    double B_theta = 1.0;

    /// Throws on dimension mismatch or ||theta|| > B_theta.
    void validate() const;
};

/// r(t, s, a) = <theta, phi_t(s, a)>.
RewardTable reward_of(const FeatureMap& features, const Vector& theta);
inline RewardTable reward_of(const LinearRewardModel& model) { return reward_of(model.features, model.theta); }

/// Everything the derivative formulas need at one parameter value: the soft
/// solution, the occupancy of pi*_theta, and the feature advantage tensor
/// A^{pi*_theta, 0}_{t, phi}.
struct SoftOptimalPoint {
    Vector theta;
    double beta = 0.0;
    SoftSolution soft;
    OccupancyMeasures occupancy;
    FeatureMap advantage;
};

SoftOptimalPoint analyze_theta(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta);

struct DerivativeBundle {
    double J_star = 0.0;
    Vector grad;
    Matrix hessian;
    double beta = 0.0;
};

double J_star(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta);

/// grad J*(theta) = sum_t <phi_t, mu_t^{pi*_theta}>.
Vector grad_J(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta);
Vector grad_J(const SoftOptimalPoint& point, const FeatureMap& features);

/// H(theta) = beta^{-1} sum_t E^{pi*_theta}[A_{t,phi} A_{t,phi}^T], symmetrized.
Matrix hessian_J(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta);
Matrix hessian_J(const SoftOptimalPoint& point);

DerivativeBundle derivatives(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta);

inline Vector grad_J(const Mdp& mdp, const LinearRewardModel& m, double beta) {
    return grad_J(mdp, m.features, m.theta, beta);
}
inline Matrix hessian_J(const Mdp& mdp, const LinearRewardModel& m, double beta) {
    return hessian_J(mdp, m.features, m.theta, beta);
}

/// Z^theta_phi(tau) = sum_t A^{pi*_theta,0}_{t,phi}(s_t, a_t). The trajectory
/// log-likelihood gradient is Z / beta.
Vector score(const SoftOptimalPoint& point, const Trajectory& tau);
Vector score(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta, const Trajectory& tau);

/// D^3 J*(theta)[xi, zeta, omega] = beta^{-2} E[Z_xi Z_zeta Z_omega], enumerated.
double third_derivative(const Mdp& mdp, const FeatureMap& features, const Vector& theta, double beta,
                        const Vector& xi, const Vector& zeta, const Vector& omega,
                        std::size_t cap = kDefaultEnumerationCap);

/// Orthonormal basis (columns) of the eigenvectors of symmetric H whose
/// eigenvalue is <= tol * lambda_max. Empty (d x 0) when H is well conditioned.
Matrix kernel_basis(const Matrix& H, double tol = 1e-8);

/// Potential-shaping reward u_t = psi_t - P_t psi_{t+1}; psi has T + 1 rows
/// and its last row is ignored (treated as zero).
RewardTable potential_shaping(const Mdp& mdp, const StateTable& psi);

/// Minimum-variance representative r_t - V^pi_t + P_t V^pi_{t+1} of r + U.
RewardTable shaping_projector(const Mdp& mdp, const RewardTable& reward, const Policy& policy, double beta);

struct EffectiveDimension {
    double d_star = 0.0;
    Matrix Sigma_E;  ///< covariance of the feature return under the expert
    Matrix H_part;   ///< beta^{-1} sum_t E[A A^T] under the expert
    Matrix M_part;   ///< sum_t E[delta delta^T] under the expert
    bool sigma_enumerated = false;
};

/// d* = tr(Sigma_E H_star^{-1}). Sigma_E is enumerated when the instance is
/// within `cap`, otherwise taken from the exact decomposition beta*H_part + M_part.
/// Throws DomainError when lambda_min(H_star) <= 1e-10.
EffectiveDimension effective_dimension(const Mdp& mdp, const FeatureMap& features, const Policy& expert,
                                       const Matrix& H_star, double beta,
                                       std::size_t cap = kDefaultEnumerationCap);

enum class GeometryMode { exact, conservative };

struct GeometryConstants {
    double B_phi = 0.0;
    double B_A_phi = 0.0;
    double lambda_star = 0.0;
    double d_star = 0.0;
    double rho_star = 0.0;
    GeometryMode mode = GeometryMode::exact;
};

/// max over dynamics-consistent trajectories and start steps t of
/// ||sum_{k >= t} phi_k||.
double max_feature_return_norm(const Mdp& mdp, const FeatureMap& features, std::size_t cap = kDefaultEnumerationCap);

/// max over the theta grid and all trajectories of ||Z^theta_phi(tau)||.
double max_score_norm(const Mdp& mdp, const FeatureMap& features, double beta, const std::vector<Vector>& theta_grid,
                      std::size_t cap = kDefaultEnumerationCap);

/// sum_t max_{s,a} ||phi_t(s,a)||, a bound on B_phi that needs no enumeration.
double feature_norm_bound(const FeatureMap& features);

/// Geometry constants at reference parameter theta_ref (lambda_star is
/// lambda_min(H(theta_ref))). In exact mode B_A_phi is maximized over
/// theta_grid (theta_ref is always included); conservative mode uses
/// B_A_phi = 2 T B_phi with the enumeration-free B_phi bound. d_star is filled
/// when an expert policy is supplied.
GeometryConstants geometry_constants(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta_ref,
                                     const std::vector<Vector>& theta_grid, GeometryMode mode,
                                     const std::optional<Policy>& expert = std::nullopt,
                                     std::size_t cap = kDefaultEnumerationCap);

std::string to_string(GeometryMode mode);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& H);

} // namespace softirl
