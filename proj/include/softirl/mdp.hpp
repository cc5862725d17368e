#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softirl/rng.hpp"
#include "softirl/tables.hpp"

namespace softirl {

/// Default limit on the number of (S*A)^T trajectory records visited by the
/// exact enumeration oracles.
inline constexpr std::size_t kDefaultEnumerationCap = 2'000'000;

/// Finite-horizon tabular MDP.
///
/// States are 0..S-1, actions 0..A-1, decision steps t = 0..T-1. The kernel
/// of step t (t = 0..T-2) maps (s_t, a_t) to the law of s_{t+1}. The
/// reference measure nu weights actions in entropies and policy densities;
/// all ones recovers the counting measure.
///
/// Immutable after construction; the constructor validates every invariant.
class Mdp {
public:
    Mdp(int horizon, int n_states, int n_actions, std::vector<double> initial_dist,
        std::vector<double> kernels, std::vector<double> ref_measure);

    int horizon() const noexcept { return horizon_; }
    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    std::span<const double> initial_dist() const noexcept { return initial_dist_; }
    std::span<const double> ref_measure() const noexcept { return ref_measure_; }
    double ref(int a) const noexcept { return ref_measure_[a]; }

    /// Law of s_{t+1} given (s_t, a_t) = (s, a); t in [0, T-2].
    std::span<const double> next_state_dist(int t, int s, int a) const noexcept {
        return {kernels_.data() + kernel_offset(t, s, a), static_cast<std::size_t>(n_states_)};
    }
    double transition(int t, int s, int a, int next) const noexcept {
        return kernels_[kernel_offset(t, s, a) + next];
    }

    /// Flat kernels, [t][s][a][s'] with t in [0, T-2].
    const std::vector<double>& kernels() const noexcept { return kernels_; }

    /// True when the initial distribution and every kernel row are point masses.
    bool is_deterministic() const noexcept;

    /// (P_t f)(s, a) for a state function f.
    double expect_next(int t, int s, int a, std::span<const double> f) const noexcept;

private:
    std::size_t kernel_offset(int t, int s, int a) const noexcept {
        return ((static_cast<std::size_t>(t) * n_states_ + s) * n_actions_ + a) * n_states_;
    }

    int horizon_;
    int n_states_;
    int n_actions_;
    std::vector<double> initial_dist_;
    std::vector<double> kernels_;
    std::vector<double> ref_measure_;
};

/// Time-indexed stochastic action kernels pi_t(a | s) (probabilities, not
/// nu-densities). The density w.r.t. nu is probs(t, s, a) / nu[a].
class Policy {
public:
    Policy() = default;
    /// Validates nonnegativity and unit row sums (1e-12).
    explicit Policy(StateActionTable probs, std::string label = {});

    static Policy uniform(int horizon, int n_states, int n_actions, std::string label = "uniform");

    int horizon() const noexcept { return probs_.horizon(); }
    int n_states() const noexcept { return probs_.n_states(); }
    int n_actions() const noexcept { return probs_.n_actions(); }

    double operator()(int t, int s, int a) const noexcept { return probs_(t, s, a); }
    std::span<const double> row(int t, int s) const noexcept { return probs_.row(t, s); }
    const StateActionTable& probs() const noexcept { return probs_; }
    const std::string& label() const noexcept { return label_; }

private:
    StateActionTable probs_;
    std::string label_;
};

struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::uint64_t seed = 0;
    std::string generator_label;

    std::size_t size() const noexcept { return trajectories.size(); }
};

/// Marginal laws of (s_t, a_t) and of s_t under a policy.
struct OccupancyMeasures {
    StateActionTable mu;     ///< mu(t, s, a)
    StateTable state;        ///< state(t, s) = sum_a mu(t, s, a)
};

/// Throws DimensionError unless the policy matches the MDP's (T, S, A).
void check_shape(const Mdp& mdp, const Policy& policy);
void check_shape(const Mdp& mdp, const StateActionTable& table);
void check_shape(const Mdp& mdp, const FeatureMap& features);
void check_trajectory(const Mdp& mdp, const Trajectory& tau);

/// Exact forward propagation of state-action marginals.
OccupancyMeasures forward_occupancy(const Mdp& mdp, const Policy& policy);

/// One trajectory drawn from the given RNG stream (s_1, a_1, s_2, ...).
Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy, Rng& rng);

/// n i.i.d. trajectories. Trajectory i uses the stream child_seed(seed, i),
/// so the dataset is independent of `threads`.
Dataset sample_trajectories(const Mdp& mdp, const Policy& policy, std::size_t n, std::uint64_t seed,
                            int threads = 1);

/// log P^pi(tau); -infinity when any factor vanishes.
double trajectory_log_prob(const Mdp& mdp, const Policy& policy, const Trajectory& tau);

/// Number of trajectory records (S*A)^T, saturated at SIZE_MAX.
std::size_t trajectory_record_count(const Mdp& mdp) noexcept;

/// Throws CapacityError if (S*A)^T exceeds cap.
void check_enumerable(const Mdp& mdp, std::size_t cap = kDefaultEnumerationCap);

/// Visits every positive-probability trajectory of P^pi with its probability,
/// depth-first in lexicographic (s_1, a_1, s_2, ...) order.
void for_each_trajectory(const Mdp& mdp, const Policy& policy,
                         const std::function<void(const Trajectory&, double)>& visit,
                         std::size_t cap = kDefaultEnumerationCap);

std::vector<std::pair<Trajectory, double>> enumerate_trajectories(const Mdp& mdp, const Policy& policy,
                                                                  std::size_t cap = kDefaultEnumerationCap);

/// (1/n) sum_i sum_t phi_t(s_t^i, a_t^i).
Vector empirical_feature_expectation(const Dataset& data, const FeatureMap& features);

/// Per-trajectory feature return sum_t phi_t(s_t, a_t).
Vector feature_return(const FeatureMap& features, const Trajectory& tau);

/// sum_t <phi_t, mu_t>, the exact feature expectation under an occupancy.
Vector expected_features(const FeatureMap& features, const OccupancyMeasures& occ);

} // namespace softirl
