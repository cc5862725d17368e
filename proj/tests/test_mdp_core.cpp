#include <doctest.h>

#include <map>
#include <set>

#include "helpers.hpp"
#include "softirl/io.hpp"

using namespace softirl;
using namespace testing_support;

namespace {

Mdp uniform_mdp(int S, int A, int T) {
    std::vector<double> k(static_cast<std::size_t>(T - 1) * S * A * S, 1.0 / S);
    return Mdp(T, S, A, std::vector<double>(S, 1.0 / S), k, std::vector<double>(A, 1.0));
}

} // namespace

TEST_CASE("Mdp constructor rejects broken invariants") {
    CHECK_THROWS_AS(Mdp(2, 2, 1, {0.5, 0.4}, {1, 0, 0, 1}, {1.0}), DomainError);
    CHECK_THROWS_AS(Mdp(2, 2, 1, {0.5, 0.5}, {1, 0, 0.3, 0.6}, {1.0}), DomainError);
    CHECK_THROWS_AS(Mdp(2, 2, 1, {0.5, 0.5}, {1, 0, 0, 1}, {0.0}), DomainError);
    CHECK_THROWS_AS(Mdp(2, 2, 1, {0.5, 0.5}, {1, 0, -0.5, 1.5}, {1.0}), DomainError);
    CHECK_THROWS_AS(Mdp(2, 2, 1, {0.5, 0.5}, {1, 0}, {1.0}), DimensionError);
    CHECK_THROWS_AS(Mdp(0, 2, 1, {0.5, 0.5}, {}, {1.0}), DimensionError);
    CHECK_NOTHROW(Mdp(1, 2, 1, {0.5, 0.5}, {}, {2.0}));
}

TEST_CASE("Policy rows must be distributions") {
    StateActionTable p(1, 1, 2);
    p(0, 0, 0) = 0.7;
    p(0, 0, 1) = 0.2;
    CHECK_THROWS_AS(Policy(p, "bad"), DomainError);
    p(0, 0, 1) = 0.3;
    CHECK_NOTHROW(Policy(p, "ok"));
}

TEST_CASE("forward_occupancy on a deterministic chain is a point mass") {
    const Mdp mdp = random_mdp(4, 3, 5, true, 11);
    const Policy pol = deterministic_policy(5, 4, 3);
    const auto occ = forward_occupancy(mdp, pol);
    for (int t = 0; t < 5; ++t) {
        int ones = 0;
        double total = 0.0;
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 3; ++a) {
                const double m = occ.mu(t, s, a);
                CHECK((m == 0.0 || m == 1.0));
                ones += m == 1.0;
                total += m;
            }
        CHECK(ones == 1);
        CHECK(total == 1.0);
    }
}

TEST_CASE("forward_occupancy is uniform under symmetric dynamics") {
    const Mdp mdp = uniform_mdp(2, 2, 2);
    const auto occ = forward_occupancy(mdp, Policy::uniform(2, 2, 2));
    for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(occ.mu(t, s, a) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("forward_occupancy marginals sum to one and propagate through the kernels") {
    const Mdp mdp = random_mdp(4, 3, 5, false, 21);
    const Policy pol = random_policy(5, 4, 3, 22);
    const auto occ = forward_occupancy(mdp, pol);
    for (int t = 0; t < 5; ++t) {
        double total = 0.0;
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 3; ++a) total += occ.mu(t, s, a);
        CHECK(std::abs(total - 1.0) <= 1e-10);
    }
    for (int t = 0; t + 1 < 5; ++t)
        for (int n = 0; n < 4; ++n) {
            double pushed = 0.0;
            for (int s = 0; s < 4; ++s)
                for (int a = 0; a < 3; ++a) pushed += occ.mu(t, s, a) * mdp.transition(t, s, a, n);
            CHECK(std::abs(pushed - occ.state(t + 1, n)) <= 1e-12);
        }
}

TEST_CASE("forward_occupancy agrees with 10^6 Monte Carlo trajectories") {
    const Mdp mdp = random_mdp(3, 2, 3, false, 31);
    const Policy pol = random_policy(3, 3, 2, 32);
    const auto occ = forward_occupancy(mdp, pol);
    const std::size_t n = 1'000'000;
    const auto data = sample_trajectories(mdp, pol, n, 33);
    std::vector<double> counts(3 * 3 * 2, 0.0);
    for (const auto& tau : data.trajectories)
        for (int t = 0; t < 3; ++t) counts[(t * 3 + tau.states[t]) * 2 + tau.actions[t]] += 1.0;
    for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                const double p = occ.mu(t, s, a);
                const double f = counts[(t * 3 + s) * 2 + a] / n;
                const double se = std::sqrt(p * (1 - p) / n);
                CHECK(std::abs(f - p) <= 3.0 * se + 1e-15);
            }
}

TEST_CASE("forward_occupancy rejects mismatched shapes") {
    const Mdp mdp = random_mdp(3, 2, 3, false, 1);
    CHECK_THROWS_AS(forward_occupancy(mdp, Policy::uniform(3, 2, 2)), DimensionError);
    CHECK_THROWS_AS(forward_occupancy(mdp, Policy::uniform(2, 3, 2)), DimensionError);
}

TEST_CASE("sample_trajectories: determinism, degenerate chains, errors") {
    const Mdp det = random_mdp(4, 2, 4, true, 41);
    const auto d1 = sample_trajectories(det, deterministic_policy(4, 4, 2), 50, 5);
    for (const auto& tau : d1.trajectories) CHECK(tau == d1.trajectories.front());

    const Mdp mdp = random_mdp(4, 3, 4, false, 42);
    const Policy pol = random_policy(4, 4, 3, 43);
    const auto a = sample_trajectories(mdp, pol, 200, 99);
    const auto b = sample_trajectories(mdp, pol, 200, 99);
    CHECK(dump(to_json(a)) == dump(to_json(b)));
    const auto c = sample_trajectories(mdp, pol, 200, 99, 3);
    CHECK(dump(to_json(a)) == dump(to_json(c)));
    const auto other = sample_trajectories(mdp, pol, 200, 100);
    CHECK(dump(to_json(a)) != dump(to_json(other)));

    CHECK_THROWS_AS(sample_trajectories(mdp, pol, 0, 1), EmptyDatasetError);
}

TEST_CASE("sample_trajectories frequencies match the occupancy within 4 standard errors") {
    const Mdp mdp = random_mdp(3, 3, 3, false, 51);
    const Policy pol = Policy::uniform(3, 3, 3);
    const std::size_t n = 100'000;
    const auto data = sample_trajectories(mdp, pol, n, 52);
    const auto occ = forward_occupancy(mdp, pol);
    std::vector<double> counts(27, 0.0);
    for (const auto& tau : data.trajectories)
        for (int t = 0; t < 3; ++t) counts[(t * 3 + tau.states[t]) * 3 + tau.actions[t]] += 1.0;
    for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 3; ++a) {
                const double p = occ.mu(t, s, a);
                const double se = std::sqrt(p * (1 - p) / n);
                CHECK(std::abs(counts[(t * 3 + s) * 3 + a] / n - p) <= 4.0 * se + 1e-15);
            }
}

TEST_CASE("enumerate_trajectories small closed cases") {
    const Mdp one_state(2, 1, 2, {1.0}, {1.0, 1.0}, {1.0, 1.0});
    const auto all = enumerate_trajectories(one_state, Policy::uniform(2, 1, 2));
    REQUIRE(all.size() == 4);
    for (const auto& [tau, p] : all) CHECK(p == 0.25);

    const Mdp det = random_mdp(3, 2, 4, true, 61);
    const auto single = enumerate_trajectories(det, deterministic_policy(4, 3, 2));
    REQUIRE(single.size() == 1);
    CHECK(single[0].second == 1.0);
}

TEST_CASE("enumerate_trajectories agrees with trajectory_log_prob") {
    const Mdp mdp = random_mdp(2, 2, 3, false, 71);
    const Policy pol = random_policy(3, 2, 2, 72);
    const auto all = enumerate_trajectories(mdp, pol);
    CHECK(all.size() == 64);
    double total = 0.0;
    for (const auto& [tau, p] : all) {
        total += p;
        CHECK(std::abs(std::exp(trajectory_log_prob(mdp, pol, tau)) - p) <= 1e-12);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("enumeration capacity error names (S*A)^T") {
    const Mdp mdp = random_mdp(10, 10, 4, false, 81);
    CHECK(trajectory_record_count(mdp) == 100'000'000);
    try {
        enumerate_trajectories(mdp, Policy::uniform(4, 10, 10));
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(std::string(e.what()).find("(S*A)^T") != std::string::npos);
    }
    CHECK_NOTHROW(check_enumerable(mdp, 100'000'000));
}

TEST_CASE("trajectory_log_prob edge values") {
    const Mdp one_state(2, 1, 1, {1.0}, {1.0}, {1.0});
    CHECK(trajectory_log_prob(one_state, Policy::uniform(2, 1, 1), Trajectory{{0, 0}, {0, 0}}) == 0.0);

    const Mdp det = random_mdp(3, 2, 3, true, 91);
    const Policy pol = deterministic_policy(3, 3, 2);
    const auto only = enumerate_trajectories(det, pol).front().first;
    Trajectory bad = only;
    bad.actions[1] = 1 - bad.actions[1];
    CHECK(std::isinf(trajectory_log_prob(det, pol, bad)));
    CHECK(trajectory_log_prob(det, pol, bad) < 0);

    CHECK_THROWS(trajectory_log_prob(det, pol, Trajectory{{0, 0}, {0, 0}}));
    CHECK_THROWS(trajectory_log_prob(det, pol, Trajectory{{0, 5, 0}, {0, 0, 0}}));
}

TEST_CASE("empirical_feature_expectation") {
    const Mdp mdp = random_mdp(3, 2, 4, false, 101);
    const Policy pol = random_policy(4, 3, 2, 102);
    const auto phi_c = constant_features(4, 3, 2, 3, 0.75);
    const auto data = sample_trajectories(mdp, pol, 37, 103);
    const Vector e = empirical_feature_expectation(data, phi_c);
    for (int i = 0; i < 3; ++i) CHECK(e(i) == doctest::Approx(4 * 0.75).epsilon(1e-14));

    const auto phi = random_features(4, 3, 2, 3, 104);
    Dataset one;
    one.trajectories = {data.trajectories[5]};
    CHECK((empirical_feature_expectation(one, phi) - feature_return(phi, data.trajectories[5])).norm() <= 1e-14);

    const std::size_t n = 200'000;
    const auto big = sample_trajectories(mdp, pol, n, 105);
    const Vector emp = empirical_feature_expectation(big, phi);
    const Vector exact = expected_features(phi, forward_occupancy(mdp, pol));
    // per-coordinate standard errors from the exact feature-return variance
    Vector var = Vector::Zero(3);
    for_each_trajectory(mdp, pol, [&](const Trajectory& tau, double p) {
        var += p * (feature_return(phi, tau) - exact).cwiseAbs2();
    });
    for (int i = 0; i < 3; ++i) CHECK(std::abs(emp(i) - exact(i)) <= 4.0 * std::sqrt(var(i) / n));

    CHECK_THROWS_AS(empirical_feature_expectation(Dataset{}, phi), EmptyDatasetError);
}

TEST_CASE("Gibbs policies have common trajectory support") {
    const Mdp mdp = random_mdp(3, 2, 3, false, 111);
    const auto p1 = soft_backward(mdp, random_reward(3, 3, 2, 112, 5.0), 0.3).pi_star;
    const auto p2 = soft_backward(mdp, random_reward(3, 3, 2, 113, 5.0), 2.0).pi_star;
    for (const auto& [tau, p] : enumerate_trajectories(mdp, p1)) {
        CHECK(p > 0.0);
        CHECK(std::isfinite(trajectory_log_prob(mdp, p2, tau)));
    }
    CHECK(enumerate_trajectories(mdp, p1).size() == enumerate_trajectories(mdp, p2).size());
}

TEST_CASE("Rng streams are reproducible and categorical respects zero mass") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(child_seed(42, i));
    CHECK(seeds.size() == 1000);

    Rng r(7);
    const std::vector<double> p = {0.0, 0.5, 0.0, 0.5, 0.0};
    std::map<std::size_t, int> hits;
    for (int i = 0; i < 10000; ++i) ++hits[r.categorical(p)];
    CHECK(hits.size() == 2);
    CHECK(hits.count(1) == 1);
    CHECK(hits.count(3) == 1);

    double mean = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        mean += z;
        sq += z * z;
    }
    mean /= n;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
