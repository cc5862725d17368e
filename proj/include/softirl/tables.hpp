#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softirl/errors.hpp"

namespace softirl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense [T][S][A] table of reals, row-major with the action index fastest.
/// Time steps are zero-based throughout the library: t = 0 is the first
/// decision step.
class StateActionTable {
public:
    StateActionTable() = default;
    StateActionTable(int horizon, int n_states, int n_actions, double fill = 0.0)
        : horizon_(horizon), n_states_(n_states), n_actions_(n_actions),
          values_(static_cast<std::size_t>(horizon) * n_states * n_actions, fill) {
        if (horizon <= 0 || n_states <= 0 || n_actions <= 0)
            throw DimensionError("StateActionTable: all dimensions must be positive");
    }
    StateActionTable(int horizon, int n_states, int n_actions, std::vector<double> values)
        : horizon_(horizon), n_states_(n_states), n_actions_(n_actions), values_(std::move(values)) {
        if (horizon <= 0 || n_states <= 0 || n_actions <= 0)
            throw DimensionError("StateActionTable: all dimensions must be positive");
        if (values_.size() != static_cast<std::size_t>(horizon) * n_states * n_actions)
            throw DimensionError("StateActionTable: value count does not match T*S*A");
    }

    int horizon() const noexcept { return horizon_; }
    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }

    double& operator()(int t, int s, int a) noexcept { return values_[index(t, s, a)]; }
    double operator()(int t, int s, int a) const noexcept { return values_[index(t, s, a)]; }

    std::span<double> row(int t, int s) noexcept {
        return {values_.data() + index(t, s, 0), static_cast<std::size_t>(n_actions_)};
    }
    std::span<const double> row(int t, int s) const noexcept {
        return {values_.data() + index(t, s, 0), static_cast<std::size_t>(n_actions_)};
    }

    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    bool same_shape(const StateActionTable& o) const noexcept {
        return horizon_ == o.horizon_ && n_states_ == o.n_states_ && n_actions_ == o.n_actions_;
    }

private:
    std::size_t index(int t, int s, int a) const noexcept {
        return (static_cast<std::size_t>(t) * n_states_ + s) * n_actions_ + a;
    }

    int horizon_ = 0;
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> values_;
};

/// Dense [rows][S] table, used for state values with rows = T + 1 (the last
/// row is the terminal zero) and for state marginals with rows = T.
class StateTable {
public:
    StateTable() = default;
    StateTable(int rows, int n_states, double fill = 0.0)
        : rows_(rows), n_states_(n_states), values_(static_cast<std::size_t>(rows) * n_states, fill) {}

    int rows() const noexcept { return rows_; }
    int n_states() const noexcept { return n_states_; }

    double& operator()(int t, int s) noexcept { return values_[static_cast<std::size_t>(t) * n_states_ + s]; }
    double operator()(int t, int s) const noexcept { return values_[static_cast<std::size_t>(t) * n_states_ + s]; }

    std::span<const double> row(int t) const noexcept {
        return {values_.data() + static_cast<std::size_t>(t) * n_states_, static_cast<std::size_t>(n_states_)};
    }

    const std::vector<double>& values() const noexcept { return values_; }

private:
    int rows_ = 0;
    int n_states_ = 0;
    std::vector<double> values_;
};

/// Rewards r_t(s, a); entries must be finite.
using RewardTable = StateActionTable;

/// Per-step feature tensor phi_t(s, a) in R^d, stored [T][S][A][d].
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int horizon, int n_states, int n_actions, int dim, std::vector<double> values);
    FeatureMap(int horizon, int n_states, int n_actions, int dim)
        : FeatureMap(horizon, n_states, n_actions, dim,
                     std::vector<double>(static_cast<std::size_t>(horizon) * n_states * n_actions * dim, 0.0)) {}

    int horizon() const noexcept { return horizon_; }
    int n_states() const noexcept { return n_states_; }
    int n_actions() const noexcept { return n_actions_; }
    int dim() const noexcept { return dim_; }

    Eigen::Map<const Vector> at(int t, int s, int a) const noexcept {
        return Eigen::Map<const Vector>(values_.data() + offset(t, s, a), dim_);
    }
    Eigen::Map<Vector> at(int t, int s, int a) noexcept {
        return Eigen::Map<Vector>(values_.data() + offset(t, s, a), dim_);
    }

    /// Scalar reward table of coordinate i.
    RewardTable coordinate(int i) const;

    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t offset(int t, int s, int a) const noexcept {
        return ((static_cast<std::size_t>(t) * n_states_ + s) * n_actions_ + a) * dim_;
    }

    int horizon_ = 0;
    int n_states_ = 0;
    int n_actions_ = 0;
    int dim_ = 0;
    std::vector<double> values_;
};

} // namespace softirl
