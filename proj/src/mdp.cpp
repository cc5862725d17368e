#include "softirl/mdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace softirl {

namespace {

constexpr double kRowTol = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(what + ": negative or non-finite probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTol) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": probabilities sum to " << sum << ", expected 1";
        throw DomainError(os.str());
    }
}

} // namespace

FeatureMap::FeatureMap(int horizon, int n_states, int n_actions, int dim, std::vector<double> values)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions), dim_(dim), values_(std::move(values)) {
    if (horizon <= 0 || n_states <= 0 || n_actions <= 0 || dim <= 0)
        throw DimensionError("FeatureMap: all dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(horizon) * n_states * n_actions * dim)
        throw DimensionError("FeatureMap: value count does not match T*S*A*d");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("FeatureMap: non-finite feature value");
}

RewardTable FeatureMap::coordinate(int i) const {
    if (i < 0 || i >= dim_) throw DimensionError("FeatureMap::coordinate: index out of range");
    RewardTable r(horizon_, n_states_, n_actions_);
    for (int t = 0; t < horizon_; ++t)
        for (int s = 0; s < n_states_; ++s)
            for (int a = 0; a < n_actions_; ++a) r(t, s, a) = at(t, s, a)[i];
    return r;
}

Mdp::Mdp(int horizon, int n_states, int n_actions, std::vector<double> initial_dist,
         std::vector<double> kernels, std::vector<double> ref_measure)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions), initial_dist_(std::move(initial_dist)),
      kernels_(std::move(kernels)), ref_measure_(std::move(ref_measure)) {
    if (horizon_ <= 0 || n_states_ <= 0 || n_actions_ <= 0)
        throw DimensionError("Mdp: T, S and A must be positive");
    if (initial_dist_.size() != static_cast<std::size_t>(n_states_))
        throw DimensionError("Mdp: initial_dist must have length S");
    if (ref_measure_.size() != static_cast<std::size_t>(n_actions_))
        throw DimensionError("Mdp: ref_measure must have length A");
    const std::size_t expected = static_cast<std::size_t>(horizon_ - 1) * n_states_ * n_actions_ * n_states_;
    if (kernels_.size() != expected)
        throw DimensionError("Mdp: kernels must have (T-1)*S*A*S entries");

    check_distribution(initial_dist_, "Mdp initial_dist");
    for (double w : ref_measure_)
        if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("Mdp: ref_measure entries must be positive and finite");
    for (int t = 0; t + 1 < horizon_; ++t)
        for (int s = 0; s < n_states_; ++s)
            for (int a = 0; a < n_actions_; ++a) {
                std::ostringstream os;
                os << "Mdp kernel row (t=" << t << ", s=" << s << ", a=" << a << ")";
                check_distribution(next_state_dist(t, s, a), os.str());
            }
}

bool Mdp::is_deterministic() const noexcept {
    auto point_mass = [](std::span<const double> p) {
        for (double v : p)
            if (v != 0.0 && v != 1.0) return false;
        return true;
    };
    if (!point_mass(initial_dist_)) return false;
    for (int t = 0; t + 1 < horizon_; ++t)
        for (int s = 0; s < n_states_; ++s)
            for (int a = 0; a < n_actions_; ++a)
                if (!point_mass(next_state_dist(t, s, a))) return false;
    return true;
}

double Mdp::expect_next(int t, int s, int a, std::span<const double> f) const noexcept {
    const auto p = next_state_dist(t, s, a);
    double acc = 0.0;
    for (int n = 0; n < n_states_; ++n)
        if (p[n] != 0.0) acc += p[n] * f[n];
    return acc;
}

Policy::Policy(StateActionTable probs, std::string label) : probs_(std::move(probs)), label_(std::move(label)) {
    for (int t = 0; t < probs_.horizon(); ++t)
        for (int s = 0; s < probs_.n_states(); ++s) {
            std::ostringstream os;
            os << "Policy row (t=" << t << ", s=" << s << ")";
            check_distribution(probs_.row(t, s), os.str());
        }
}

Policy Policy::uniform(int horizon, int n_states, int n_actions, std::string label) {
    return Policy(StateActionTable(horizon, n_states, n_actions, 1.0 / n_actions), std::move(label));
}

void check_shape(const Mdp& mdp, const StateActionTable& table) {
    if (table.horizon() != mdp.horizon() || table.n_states() != mdp.n_states() ||
        table.n_actions() != mdp.n_actions()) {
        std::ostringstream os;
        os << "shape mismatch: table is [" << table.horizon() << "][" << table.n_states() << "]["
           << table.n_actions() << "], MDP is [" << mdp.horizon() << "][" << mdp.n_states() << "]["
           << mdp.n_actions() << "]";
        throw DimensionError(os.str());
    }
}

void check_shape(const Mdp& mdp, const Policy& policy) { check_shape(mdp, policy.probs()); }

void check_shape(const Mdp& mdp, const FeatureMap& features) {
    if (features.horizon() != mdp.horizon() || features.n_states() != mdp.n_states() ||
        features.n_actions() != mdp.n_actions())
        throw DimensionError("shape mismatch: feature map does not match the MDP's [T][S][A]");
}

void check_trajectory(const Mdp& mdp, const Trajectory& tau) {
    const auto T = static_cast<std::size_t>(mdp.horizon());
    if (tau.states.size() != T || tau.actions.size() != T)
        throw DimensionError("trajectory length differs from the horizon");
    for (std::size_t t = 0; t < T; ++t) {
        if (tau.states[t] < 0 || tau.states[t] >= mdp.n_states())
            throw DimensionError("trajectory state index out of range");
        if (tau.actions[t] < 0 || tau.actions[t] >= mdp.n_actions())
            throw DimensionError("trajectory action index out of range");
    }
}

OccupancyMeasures forward_occupancy(const Mdp& mdp, const Policy& policy) {
    check_shape(mdp, policy);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    OccupancyMeasures occ{StateActionTable(T, S, A), StateTable(T, S)};
    for (int s = 0; s < S; ++s) occ.state(0, s) = mdp.initial_dist()[s];
    for (int t = 0; t < T; ++t) {
        for (int s = 0; s < S; ++s) {
            const double ds = occ.state(t, s);
            for (int a = 0; a < A; ++a) occ.mu(t, s, a) = ds * policy(t, s, a);
        }
        if (t + 1 == T) break;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double m = occ.mu(t, s, a);
                if (m == 0.0) continue;
                const auto p = mdp.next_state_dist(t, s, a);
                for (int n = 0; n < S; ++n) occ.state(t + 1, n) += m * p[n];
            }
    }
    return occ;
}

Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy, Rng& rng) {
    const int T = mdp.horizon();
    Trajectory tau;
    tau.states.resize(T);
    tau.actions.resize(T);
    int s = static_cast<int>(rng.categorical(mdp.initial_dist()));
    for (int t = 0; t < T; ++t) {
        tau.states[t] = s;
        const int a = static_cast<int>(rng.categorical(policy.row(t, s)));
        tau.actions[t] = a;
        if (t + 1 < T) s = static_cast<int>(rng.categorical(mdp.next_state_dist(t, s, a)));
    }
    return tau;
}

Dataset sample_trajectories(const Mdp& mdp, const Policy& policy, std::size_t n, std::uint64_t seed, int threads) {
    if (n == 0) throw EmptyDatasetError("sample_trajectories: n must be at least 1");
    check_shape(mdp, policy);
    Dataset data;
    data.seed = seed;
    data.generator_label = policy.label();
    data.trajectories.resize(n);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(child_seed(seed, i));
            data.trajectories[i] = sample_trajectory(mdp, policy, rng);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads > 0 ? threads : 1, n));
    if (workers == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk, e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return data;
}

double trajectory_log_prob(const Mdp& mdp, const Policy& policy, const Trajectory& tau) {
    check_shape(mdp, policy);
    check_trajectory(mdp, tau);
    const int T = mdp.horizon();
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const double p0 = mdp.initial_dist()[tau.states[0]];
    if (p0 == 0.0) return neg_inf;
    double lp = std::log(p0);
    for (int t = 0; t < T; ++t) {
        const double pa = policy(t, tau.states[t], tau.actions[t]);
        if (pa == 0.0) return neg_inf;
        lp += std::log(pa);
        if (t + 1 < T) {
            const double pn = mdp.transition(t, tau.states[t], tau.actions[t], tau.states[t + 1]);
            if (pn == 0.0) return neg_inf;
            lp += std::log(pn);
        }
    }
    return lp;
}

std::size_t trajectory_record_count(const Mdp& mdp) noexcept {
    const std::size_t base = static_cast<std::size_t>(mdp.n_states()) * mdp.n_actions();
    std::size_t count = 1;
    for (int t = 0; t < mdp.horizon(); ++t) {
        if (count > std::numeric_limits<std::size_t>::max() / base) return std::numeric_limits<std::size_t>::max();
        count *= base;
    }
    return count;
}

void check_enumerable(const Mdp& mdp, std::size_t cap) {
    const std::size_t count = trajectory_record_count(mdp);
    if (count > cap) {
        std::ostringstream os;
        os << "trajectory enumeration capacity exceeded: (S*A)^T = (" << mdp.n_states() << "*" << mdp.n_actions()
           << ")^" << mdp.horizon() << " = ";
        if (count == std::numeric_limits<std::size_t>::max())
            os << "overflow";
        else
            os << count;
        os << " > cap " << cap;
        throw CapacityError(os.str());
    }
}

void for_each_trajectory(const Mdp& mdp, const Policy& policy,
                         const std::function<void(const Trajectory&, double)>& visit, std::size_t cap) {
    check_shape(mdp, policy);
    check_enumerable(mdp, cap);
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    Trajectory tau;
    tau.states.assign(T, 0);
    tau.actions.assign(T, 0);

    // Recursive descent over (s_t, a_t); `prob` is the probability of the prefix
    // up to and including s_t.
    std::function<void(int, double)> descend = [&](int t, double prob) {
        const int s = tau.states[t];
        for (int a = 0; a < A; ++a) {
            const double pa = policy(t, s, a);
            if (pa == 0.0) continue;
            tau.actions[t] = a;
            const double pta = prob * pa;
            if (t + 1 == T) {
                visit(tau, pta);
                continue;
            }
            const auto next = mdp.next_state_dist(t, s, a);
            for (int n = 0; n < S; ++n) {
                if (next[n] == 0.0) continue;
                tau.states[t + 1] = n;
                descend(t + 1, pta * next[n]);
            }
        }
    };
    for (int s = 0; s < S; ++s) {
        const double p0 = mdp.initial_dist()[s];
        if (p0 == 0.0) continue;
        tau.states[0] = s;
        descend(0, p0);
    }
}

std::vector<std::pair<Trajectory, double>> enumerate_trajectories(const Mdp& mdp, const Policy& policy,
                                                                  std::size_t cap) {
    std::vector<std::pair<Trajectory, double>> out;
    for_each_trajectory(
        mdp, policy, [&](const Trajectory& tau, double p) { out.emplace_back(tau, p); }, cap);
    return out;
}

Vector feature_return(const FeatureMap& features, const Trajectory& tau) {
    Vector g = Vector::Zero(features.dim());
    for (int t = 0; t < features.horizon(); ++t) g += features.at(t, tau.states[t], tau.actions[t]);
    return g;
}

Vector empirical_feature_expectation(const Dataset& data, const FeatureMap& features) {
    if (data.trajectories.empty()) throw EmptyDatasetError("empirical_feature_expectation: empty dataset");
    const int T = features.horizon(), S = features.n_states(), A = features.n_actions();
    // Visit counts per (t, s, a), then the same weighted sum as expected_features,
    // so a dataset that reproduces an occupancy exactly gives identical bits.
    std::vector<std::size_t> counts(static_cast<std::size_t>(T) * S * A, 0);
    for (const auto& tau : data.trajectories) {
        if (tau.states.size() != static_cast<std::size_t>(T) || tau.actions.size() != static_cast<std::size_t>(T))
            throw DimensionError("empirical_feature_expectation: trajectory length differs from feature horizon");
        for (int t = 0; t < T; ++t) {
            const int s = tau.states[t], a = tau.actions[t];
            if (s < 0 || s >= S || a < 0 || a >= A)
                throw DimensionError("empirical_feature_expectation: index out of range");
            ++counts[(static_cast<std::size_t>(t) * S + s) * A + a];
        }
    }
    const double n = static_cast<double>(data.trajectories.size());
    Vector acc = Vector::Zero(features.dim());
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const std::size_t c = counts[(static_cast<std::size_t>(t) * S + s) * A + a];
                if (c != 0) acc += (static_cast<double>(c) / n) * features.at(t, s, a);
            }
    return acc;
}

Vector expected_features(const FeatureMap& features, const OccupancyMeasures& occ) {
    Vector acc = Vector::Zero(features.dim());
    for (int t = 0; t < features.horizon(); ++t)
        for (int s = 0; s < features.n_states(); ++s)
            for (int a = 0; a < features.n_actions(); ++a) {
                const double m = occ.mu(t, s, a);
                if (m != 0.0) acc += m * features.at(t, s, a);
            }
    return acc;
}

} // namespace softirl
