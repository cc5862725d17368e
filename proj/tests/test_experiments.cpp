#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "softirl/io.hpp"

using namespace softirl;
using namespace testing_support;

namespace {

RateConfig small_rates(std::uint64_t seed) {
    RateConfig cfg;
    cfg.instance.S = 3;
    cfg.instance.A = 2;
    cfg.instance.T = 3;
    cfg.instance.d = 3;
    cfg.instance.seed = seed;
    cfg.n_grid = {64, 256, 1024};
    cfg.replicates = 4;
    cfg.data_seed = seed + 1;
    return cfg;
}

const MetricSummary& summary(const RateReport& rep, const std::string& name) {
    for (const auto& s : rep.summaries)
        if (s.metric == name) return s;
    throw std::runtime_error("missing metric " + name);
}

} // namespace

TEST_CASE("generate_instance: determinism, one-hot kernels, kernel exclusion") {
    InstanceSpec spec;
    spec.deterministic = true;
    spec.seed = 3;
    const auto a = generate_instance(spec), b = generate_instance(spec);
    CHECK(dump(to_json(a.mdp)) == dump(to_json(b.mdp)));
    CHECK(dump(to_json(a.features)) == dump(to_json(b.features)));
    CHECK(dump(to_json(a.expert)) == dump(to_json(b.expert)));
    REQUIRE(a.theta_E.has_value());
    CHECK((*a.theta_E - *b.theta_E).norm() == 0.0);
    CHECK(std::abs(a.theta_E->norm() - spec.theta_norm) <= 1e-12);
    CHECK(a.mdp.is_deterministic());
    for (double p : a.mdp.kernels()) CHECK((p == 0.0 || p == 1.0));

    spec.seed = 4;
    CHECK(dump(to_json(generate_instance(spec).features)) != dump(to_json(a.features)));

    for (std::uint64_t k = 0; k < 5; ++k) {
        InstanceSpec s;
        s.seed = 10 + k;
        s.deterministic = k % 2 == 0;
        s.d = 6 + static_cast<int>(k);
        const auto inst = generate_instance(s);
        const Matrix H0 = hessian_J(inst.mdp, inst.features, Vector::Zero(s.d), s.beta);
        CHECK(min_eigenvalue(H0) > 1e-8);
        CHECK(kernel_basis(H0).cols() == 0);
    }

    InstanceSpec mis;
    mis.expert = ExpertKind::misspecified;
    const auto m = generate_instance(mis);
    CHECK_FALSE(m.theta_E.has_value());
    CHECK_FALSE(m.mdp.is_deterministic());
}

TEST_CASE("scalar helpers: psi, chi and the increasing function") {
    CHECK(psi(0.0) == 0.5);
    CHECK(chi(0.0) == 1.0);
    for (double x : {-1e-4, 1e-4, -2e-4, 2e-4}) {
        CHECK(std::abs(psi(x) - (std::expm1(x) - x) / (x * x)) <= 1e-7);
        CHECK(std::abs(chi(x) - std::expm1(x) / x) <= 1e-12);
    }
    // continuity across the series switch
    // (slopes at 0 are 1/6 and 1/2; the points are 2e-9 apart)
    CHECK(std::abs(psi(0.99999e-4) - psi(1.00001e-4)) <= 0.2 * 2e-9 + 1e-12);
    CHECK(std::abs(chi(-0.99999e-4) - chi(-1.00001e-4)) <= 0.51 * 2e-9 + 1e-15);
    for (int i = 0; i <= 500; ++i) {
        const double S = 0.1 * i;
        CHECK(chi(-S) >= 1.0 / (1.0 + S));
        CHECK(psi(-S) > 0.0);
    }
    for (double R : {0.1, 1.0, 7.5}) {
        // grid on R x in [0, 3], where 1 - R y stays well above rounding level
        const double dx = 3.0 / (200 * R);
        for (int i = 0; i <= 200; ++i) {
            const double x = dx * i;
            const double y = increasing_function(x, R);
            CHECK(std::abs(y - x * chi(-R * x)) <= 1e-14);
            CHECK(std::abs(increasing_function_inverse(y, R) - x) <= 1e-12 * std::max(1.0, x));
            if (i > 0) CHECK(y > increasing_function(dx * (i - 1), R));
        }
        for (int i = 0; i < 100; ++i) {
            const double y = 0.0099 * i / R;
            CHECK(std::abs(increasing_function(increasing_function_inverse(y, R), R) - y) <= 1e-12);
        }
    }
}

TEST_CASE("loglog_fit and median") {
    std::vector<double> x, y;
    for (int k = 6; k <= 14; ++k) {
        x.push_back(std::pow(2.0, k));
        y.push_back(3.5 * std::pow(2.0, -1.0 * k));
    }
    const auto [slope, intercept] = loglog_fit(x, y);
    CHECK(std::abs(slope + 1.0) <= 1e-12);
    CHECK(std::abs(intercept - std::log(3.5)) <= 1e-12);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("parallel_for visits every index exactly once") {
    for (int threads : {1, 2, 7}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("rate experiment: reproducibility and thread independence") {
    auto cfg = small_rates(5);
    const auto a = run_rate_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_rate_experiment(cfg);
    cfg.threads = 1;
    auto ja = to_json(a), jb = to_json(b);
    ja["config"].erase("threads");
    jb["config"].erase("threads");
    CHECK(dump(ja) == dump(jb));
    CHECK(rate_csv(a) == rate_csv(b));

    CHECK(a.cells.size() == 12);
    for (const auto& c : a.cells) {
        for (double v : c.metrics) CHECK(v >= 0.0);
        if (c.converged) CHECK(c.feature_match_error <= 1e-8);
    }
    std::set<std::uint64_t> seeds;
    for (const auto& c : a.cells) seeds.insert(c.seed);
    CHECK(seeds.size() == a.cells.size());
    for (const auto& s : a.summaries) {
        CHECK(std::isfinite(s.slope));
        CHECK(s.median.size() == 3);
    }
    CHECK(a.part3_values.size() == 5);

    cfg.data_seed += 1;
    CHECK(rate_csv(run_rate_experiment(cfg)) != rate_csv(a));
}

TEST_CASE("rate config validation") {
    auto cfg = small_rates(6);
    cfg.n_grid = {256, 64};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = small_rates(6);
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = small_rates(6);
    cfg.metrics = {"bogus"};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("well-specified deterministic d=4 rate: parameter error slope near -1") {
    RateConfig cfg;
    cfg.instance.deterministic = true;
    cfg.instance.d = 4;
    cfg.instance.seed = 11;
    for (int k = 6; k <= 14; ++k) cfg.n_grid.push_back(std::size_t{1} << k);
    cfg.replicates = 32;
    cfg.metrics = {"param_err_hess", "kl_expert"};
    const auto rep = run_rate_experiment(cfg);
    const double s = summary(rep, "param_err_hess").slope;
    CHECK(s >= -1.25);
    CHECK(s <= -0.75);
    // well-specified: the population fit recovers theta_E
    CHECK((rep.theta_star - *rep.theta_E).norm() <= 1e-7);
    CHECK(rep.kl_floor <= 1e-12);
}

TEST_CASE("misspecified rate: excess KL decays while raw KL plateaus") {
    RateConfig cfg;
    cfg.instance.expert = ExpertKind::misspecified;
    cfg.instance.seed = 12;
    for (int k = 6; k <= 14; k += 2) cfg.n_grid.push_back(std::size_t{1} << k);
    cfg.replicates = 16;
    cfg.metrics = {"kl_expert", "excess_kl"};
    const auto rep = run_rate_experiment(cfg);
    CHECK(rep.kl_floor > 1e-3);
    const double s = summary(rep, "excess_kl").slope;
    CHECK(s >= -1.25);
    CHECK(s <= -0.75);
    const auto& raw = summary(rep, "kl_expert");
    CHECK(raw.median.back() >= rep.kl_floor);
    CHECK(raw.median.back() <= rep.kl_floor * 1.01);
    CHECK(std::abs(raw.slope) < 0.1);
}

TEST_CASE("local geometry: zero step, Dikin boundary, far outside") {
    for (std::uint64_t k = 0; k < 5; ++k) {
        const Mdp mdp = random_mdp(3, 2, 3, k % 2 == 1, 20 + k);
        const auto phi = random_features(3, 3, 2, 3, 30 + k);
        const double beta = 0.3 + 0.4 * k;
        const Vector th0 = random_vector(3, 40 + k);

        const auto same = check_local_geometry(mdp, phi, beta, th0, th0);
        CHECK(same.inside);
        CHECK(same.all_passed);
        for (const auto& c : same.checks)
            if (c.name.rfind("hessian", 0) != 0) CHECK(std::abs(c.lhs) <= 1e-12);

        const Vector u = random_vector(3, 50 + k);
        const Vector th1 = dikin_point(mdp, phi, beta, th0, u);
        const auto on = check_local_geometry(mdp, phi, beta, th0, th1);
        CHECK(on.inside);
        CHECK(std::abs(on.delta_norm_H0 - on.rho0) <= 1e-9 * on.rho0);
        CHECK(on.checks.size() == 9);
        for (const auto& c : on.checks) {
            INFO(c.name, " lhs=", c.lhs, " rhs=", c.rhs);
            CHECK(c.passed);
        }

        const Vector far = dikin_point(mdp, phi, beta, th0, u, 10.0);
        const auto out = check_local_geometry(mdp, phi, beta, th0, far);
        CHECK_FALSE(out.inside);
        CHECK(out.all_passed);
        for (const auto& c : out.checks)
            if (c.name != "hellinger_kl" && c.name.rfind("hessian", 0) != 0)
                CHECK(c.name.find("_global") != std::string::npos);
    }
}

TEST_CASE("concentration coverage and sqrt(n) scaling") {
    InstanceSpec spec;
    spec.S = 4;
    spec.A = 3;
    spec.T = 3;
    spec.d = 4;
    spec.seed = 21;
    const auto inst = generate_instance(spec);
    FitConfig fc;
    const auto setup = concentration_setup(inst.mdp, inst.features, inst.beta, inst.expert, fc);
    CHECK(setup.lambda_star > 0.0);
    CHECK(setup.d_star > 0.0);
    const auto r256 = check_concentration(inst.mdp, inst.features, inst.expert, setup, 256, 0.1, 500, 77);
    CHECK(r256.passed);
    CHECK(r256.violation_freq <= 0.14);
    CHECK(std::abs(r256.allowed_freq - (0.1 + 2 * std::sqrt(0.09 / 500))) <= 1e-15);
    const auto r512 = check_concentration(inst.mdp, inst.features, inst.expert, setup, 512, 0.1, 500, 78);
    const double ratio = r512.median_eta / r256.median_eta;
    CHECK(ratio >= 0.6);
    CHECK(ratio <= 0.82);
    CHECK(r512.bound < r256.bound);

    const auto threaded = check_concentration(inst.mdp, inst.features, inst.expert, setup, 256, 0.1, 500, 77, 3);
    CHECK(threaded.eta == r256.eta);
}

TEST_CASE("concentration: deterministic expert on deterministic dynamics has eta = 0") {
    const Mdp mdp = random_mdp(4, 3, 3, true, 90);
    const auto phi = random_features(3, 4, 3, 3, 91);
    const auto expert = deterministic_policy(3, 4, 3);
    ConcentrationSetup setup;
    setup.H_star = hessian_J(mdp, phi, Vector::Zero(3), 1.0);
    setup.lambda_star = min_eigenvalue(setup.H_star);
    setup.d_star = 1.0;
    setup.B_phi = max_feature_return_norm(mdp, phi);
    setup.expert_features = expected_features(phi, forward_occupancy(mdp, expert));
    const auto rep = check_concentration(mdp, phi, expert, setup, 37, 0.1, 50, 5);
    for (double e : rep.eta) CHECK(e == 0.0);
    CHECK(rep.violations == 0);
}
