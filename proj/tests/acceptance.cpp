// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "softirl/experiments.hpp"

using namespace softirl;
using namespace testing_support;

namespace {

struct Outcome {
    bool ok = true;
    std::string note;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) note = what;
        ok = ok && cond;
    }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

bool run(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.ok = false;
        out.note = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.ok && secs > budget_s) {
        out.ok = false;
        out.note = "over time budget of " + std::to_string(budget_s) + " s";
    }
    std::printf("%s %d %s (%.2f s)%s%s\n", out.ok ? "PASS" : "FAIL", id, name, secs, out.note.empty() ? "" : ": ",
                out.note.c_str());
    std::fflush(stdout);
    return out.ok;
}

FeatureMap with_shaping_column(const Mdp& mdp, const FeatureMap& phi, std::uint64_t seed) {
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions(), d = phi.dim();
    StateTable psi(T + 1, S);
    Rng rng(seed);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) psi(t, s) = rng.normal();
    const auto u = potential_shaping(mdp, psi);
    FeatureMap out(T, S, A, d + 1);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                out.at(t, s, a).head(d) = phi.at(t, s, a);
                out.at(t, s, a)(d) = u(t, s, a);
            }
    return out;
}

Outcome counterexample() {
    Outcome o;
    const auto p = nonconvexity_probe();
    o.require(std::abs(p.f_r - 1.2919) <= 1e-3, "f(r) = " + std::to_string(p.f_r));
    o.require(std::abs(p.f_r_prime - 1.4802) <= 1e-3, "f(r') = " + std::to_string(p.f_r_prime));
    o.require(std::abs(p.f_mid - 1.6431) <= 1e-3, "f(mid) = " + std::to_string(p.f_mid));
    o.require(p.f_mid > std::max(p.f_r, p.f_r_prime), "midpoint not above endpoints");
    return o;
}

Outcome derivatives_check() {
    Outcome o;
    double worst_g = 0.0, worst_h = 0.0, worst_f = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const int S = 2 + static_cast<int>(k % 4), A = 2 + static_cast<int>(k % 2), T = 2 + static_cast<int>(k % 3);
        const int d = 2 + static_cast<int>(k % 7);
        const double beta = 0.3 + 0.1 * static_cast<double>(k % 8);
        const Mdp mdp = random_mdp(S, A, T, k % 5 == 0, 1000 + k);
        const auto phi = random_features(T, S, A, d, 2000 + k);
        const Vector th = random_vector(d, 3000 + k);

        const Vector g = grad_J(mdp, phi, th, beta);
        Vector g_fd(d);
        const auto J = [&](const Vector& x) { return J_star(mdp, phi, x, beta); };
        for (int i = 0; i < d; ++i) g_fd(i) = central_difference(J, th, i, 1e-5);
        worst_g = std::max(worst_g, relative_error(g, g_fd));

        const Matrix H = hessian_J(mdp, phi, th, beta);
        Matrix H_fd(d, d);
        for (int i = 0; i < d; ++i) {
            Vector up = th, dn = th;
            up(i) += 1e-5;
            dn(i) -= 1e-5;
            H_fd.col(i) = (grad_J(mdp, phi, up, beta) - grad_J(mdp, phi, dn, beta)) / 2e-5;
        }
        worst_h = std::max(worst_h, relative_error(H, H_fd));
        worst_f = std::max(worst_f, (H - beta * enumerated_fisher(mdp, phi, th, beta)).norm());
    }
    o.require(worst_g <= 1e-5, "gradient FD relative error " + std::to_string(worst_g));
    o.require(worst_h <= 1e-5, "Hessian FD relative error " + std::to_string(worst_h));
    o.require(worst_f <= 1e-9, "Hessian vs score covariance " + std::to_string(worst_f));
    return o;
}

Outcome equivalence_check() {
    Outcome o;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const int S = 3 + static_cast<int>(k % 3), A = 2 + static_cast<int>(k % 2), T = 3 + static_cast<int>(k % 2);
        const int d = 3;
        const double beta = 0.4 + 0.1 * static_cast<double>(k);
        const Mdp mdp = random_mdp(S, A, T, true, 100 + k);
        const auto phi = random_features(T, S, A, d, 200 + k);
        const auto data = sample_trajectories(mdp, random_policy(T, S, A, 300 + k), 50, 400 + k);
        double lo = INFINITY, hi = -INFINITY;
        for (std::uint64_t j = 0; j < 5; ++j) {
            const Vector th = random_vector(d, 500 + 10 * k + j, 2.0);
            const auto soft = soft_backward(mdp, reward_of(phi, th), beta);
            const double diff = beta * mle_loss(mdp, soft.pi_star, data) - irl_empirical_loss(mdp, phi, th, beta, data);
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
            o.require(residual_term(mdp, soft, data) == 0.0, "nonzero residual on a deterministic MDP");
        }
        o.require(hi - lo <= 1e-9, "deterministic difference varies by " + std::to_string(hi - lo));
    }
    for (std::uint64_t k = 0; k < 10; ++k) {
        const int S = 3 + static_cast<int>(k % 3), A = 2 + static_cast<int>(k % 2), T = 3 + static_cast<int>(k % 2);
        const int d = 3;
        const double beta = 0.4 + 0.1 * static_cast<double>(k);
        const Mdp mdp = random_mdp(S, A, T, false, 600 + k);
        const auto phi = random_features(T, S, A, d, 700 + k);
        const Vector th = random_vector(d, 800 + k);
        const auto expert = random_policy(T, S, A, 900 + k);
        const auto data = sample_trajectories(mdp, expert, 50, 1000 + k);
        const auto rep = equivalence_report(mdp, phi, th, beta, data, expert);
        o.require(std::abs(rep.equivalence_gap) <= 1e-9, "stochastic gap " + std::to_string(rep.equivalence_gap));
        o.require(std::abs(rep.residual_term) > 1e-8, "residual vanished on a stochastic MDP");
    }
    return o;
}

Outcome orthogonality_check() {
    Outcome o;
    double worst_gram = 0.0, worst_sum = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const int S = 2 + static_cast<int>(k % 3), A = 2 + static_cast<int>(k % 2), T = 2 + static_cast<int>(k % 3);
        const Mdp mdp = random_mdp(S, A, T, false, 40 + k);
        const auto r = random_reward(T, S, A, 50 + k);
        const auto pi = random_policy(T, S, A, 60 + k);
        const double beta = k % 3 == 0 ? 0.0 : 0.2 * static_cast<double>(k);
        const auto ev = policy_evaluate(mdp, r, pi, beta);
        const int m = 2 * T;
        Matrix gram = Matrix::Zero(m, m);
        for_each_trajectory(mdp, pi, [&](const Trajectory& tau, double p) {
            const auto dec = return_decomposition(mdp, r, pi, ev, tau);
            Vector z(m);
            for (int t = 0; t < T; ++t) {
                z(t) = dec.advantages[t];
                z(T + t) = dec.deltas[t];
            }
            gram += p * z * z.transpose();
        });
        gram.diagonal().setZero();
        worst_gram = std::max(worst_gram, gram.cwiseAbs().maxCoeff());
        const auto vd = variance_decomposition(mdp, r, pi, beta);
        worst_sum = std::max(worst_sum, std::abs(vd.total_var - vd.action_var - vd.dynamics_var));
    }
    o.require(worst_gram <= 1e-10, "largest cross inner product " + std::to_string(worst_gram));
    o.require(worst_sum <= 1e-9, "variance components off by " + std::to_string(worst_sum));
    return o;
}

Outcome identifiability_check() {
    Outcome o;
    for (std::uint64_t k = 0; k < 6; ++k) {
        const int S = 3 + static_cast<int>(k % 2), A = 2 + static_cast<int>(k % 2), T = 3;
        const Mdp mdp = random_mdp(S, A, T, k % 3 == 0, 40 + k);
        const auto shaped =
            with_shaping_column(mdp, with_shaping_column(mdp, random_features(T, S, A, 2, 50 + k), 60 + k), 70 + k);
        const double beta = 0.4 + 0.2 * static_cast<double>(k);
        const Vector t1 = random_vector(4, 80 + k, 2.0), t2 = random_vector(4, 90 + k, 2.0);
        const Matrix H1 = hessian_J(mdp, shaped, t1, beta);
        for (int i = 2; i < 4; ++i)
            o.require(H1.col(i).norm() <= 1e-8 * H1.norm(), "shaping direction outside ker H");
        const Matrix K1 = kernel_basis(H1), K2 = kernel_basis(hessian_J(mdp, shaped, t2, beta));
        o.require(K1.cols() == 2 && K2.cols() == 2, "kernel dimension is not 2");
        if (K1.cols() != 2 || K2.cols() != 2) continue;
        Eigen::SelfAdjointEigenSolver<Matrix> es(K1 * K1.transpose() - K2 * K2.transpose());
        o.require(es.eigenvalues().cwiseAbs().maxCoeff() <= 1e-6, "kernel moves with theta");
        const auto pi1 = soft_backward(mdp, reward_of(shaped, t1), beta).pi_star;
        for (int j = 0; j < 2; ++j) {
            const auto pi2 = soft_backward(mdp, reward_of(shaped, t1 + 3.0 * K1.col(j)), beta).pi_star;
            o.require(trajectory_kl(mdp, pi1, pi2) <= 1e-8, "law changes along a kernel direction");
        }
    }
    return o;
}

Outcome geometry_check() {
    Outcome o;
    int passed = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        InstanceSpec spec;
        spec.S = 3 + static_cast<int>(k % 3);
        spec.A = 2 + static_cast<int>(k % 2);
        spec.T = 3;
        spec.d = 3 + static_cast<int>(k % 3);
        spec.beta = 0.3 + 0.1 * static_cast<double>(k % 5);
        spec.deterministic = k % 4 == 0;
        spec.seed = child_seed(77, k);
        const auto inst = generate_instance(spec);
        const Vector theta0 = *inst.theta_E;
        Rng rng(child_seed(spec.seed, 100));
        Vector u(spec.d);
        for (int i = 0; i < spec.d; ++i) u(i) = rng.normal();
        const Vector theta1 = dikin_point(inst.mdp, inst.features, inst.beta, theta0, u);
        const auto rep = check_local_geometry(inst.mdp, inst.features, inst.beta, theta0, theta1);
        if (rep.all_passed) ++passed;
    }
    o.require(passed == 20, std::to_string(passed) + "/20 instances passed");

    InstanceSpec spec;
    spec.S = 4;
    spec.A = 3;
    spec.T = 3;
    spec.d = 4;
    spec.seed = 5;
    const auto inst = generate_instance(spec);
    Rng rng(6);
    int sc = 0;
    for (int k = 0; k < 50; ++k) {
        Vector xi(4), zeta(4);
        for (int i = 0; i < 4; ++i) xi(i) = rng.normal();
        for (int i = 0; i < 4; ++i) zeta(i) = rng.normal();
        if (check_self_concordance(inst.mdp, inst.features, inst.beta, *inst.theta_E, xi.normalized(), zeta.normalized())
                .passed)
            ++sc;
    }
    o.require(sc == 50, std::to_string(sc) + "/50 self-concordance pairs passed");
    return o;
}

RateReport default_rates() {
    RateConfig cfg;
    cfg.instance.S = 5;
    cfg.instance.A = 3;
    cfg.instance.T = 4;
    cfg.instance.d = 6;
    cfg.instance.beta = 0.5;
    cfg.instance.seed = 1;
    cfg.fit.ball_radius = 100.0;
    for (int k = 6; k <= 14; ++k) cfg.n_grid.push_back(std::size_t{1} << k);
    cfg.replicates = 32;
    cfg.data_seed = child_seed(1, 1);
    return run_rate_experiment(cfg);
}

Outcome rates_check(const RateReport& rep) {
    Outcome o;
    for (const auto& s : rep.summaries)
        if (s.metric == "kl_expert" || s.metric == "param_err_hess")
            o.require(s.slope >= -1.25 && s.slope <= -0.75, s.metric + " slope " + std::to_string(s.slope));
    o.require(rep.part3_values.size() >= 2 && rep.part3_spread <= 10.0,
              "part-3 spread " + std::to_string(rep.part3_spread));
    for (std::uint64_t k = 0; k < 3; ++k) {
        InstanceSpec spec;
        spec.S = 4;
        spec.A = 3;
        spec.T = 3;
        spec.d = 4;
        spec.beta = 0.5 + 0.25 * static_cast<double>(k);
        spec.deterministic = true;
        spec.seed = 40 + k;
        const auto inst = generate_instance(spec);
        const Matrix H = hessian_J(inst.mdp, inst.features, *inst.theta_E, inst.beta);
        const double ds = effective_dimension(inst.mdp, inst.features, inst.expert, H, inst.beta).d_star;
        const double want = inst.beta * spec.d;
        o.require(std::abs(ds - want) <= 1e-6 * want, "deterministic d* = " + std::to_string(ds));
    }
    if (o.ok) {
        for (const auto& s : rep.summaries)
            if (s.metric == "kl_expert" || s.metric == "param_err_hess") o.note += s.metric + " " + num(s.slope) + ", ";
        o.note += "part-3 spread " + num(rep.part3_spread);
    }
    return o;
}

Outcome feature_match_check(const RateReport& rep) {
    Outcome o;
    int converged = 0;
    double worst = 0.0;
    for (const auto& c : rep.cells)
        if (c.converged) {
            ++converged;
            worst = std::max(worst, c.feature_match_error);
        }
    o.require(converged > 0, "no converged interior fits");
    o.require(worst <= 1e-8, "feature match error " + std::to_string(worst));
    if (o.ok) o.note = std::to_string(converged) + " interior fits, worst " + num(worst);
    return o;
}

Outcome concentration_check() {
    Outcome o;
    InstanceSpec spec;
    spec.S = 5;
    spec.A = 3;
    spec.T = 4;
    spec.d = 6;
    spec.seed = 9;
    const auto inst = generate_instance(spec);
    FitConfig fc;
    fc.beta = inst.beta;
    const auto setup = concentration_setup(inst.mdp, inst.features, inst.beta, inst.expert, fc);
    const auto rep = check_concentration(inst.mdp, inst.features, inst.expert, setup, 256, 0.1, 500, 123);
    o.require(rep.violation_freq <= rep.allowed_freq, "violation frequency " + std::to_string(rep.violation_freq));
    const double allowed = 0.1 + 2.0 * std::sqrt(0.1 * 0.9 / 500.0);
    o.require(std::abs(rep.allowed_freq - allowed) <= 1e-12, "allowed frequency differs");
    return o;
}

} // namespace

int main() {
    bool all = true;
    all &= run(1, "counterexample reproduction", 1.0, counterexample);
    all &= run(2, "derivative oracles", 30.0, derivatives_check);
    all &= run(3, "structural equivalence", 10.0, equivalence_check);
    all &= run(4, "orthogonal decomposition", 10.0, orthogonality_check);
    all &= run(5, "identifiability", 10.0, identifiability_check);
    all &= run(6, "local geometry", 60.0, geometry_check);

    RateReport rep;
    double rate_secs = 0.0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            rep = default_rates();
        } catch (const std::exception& e) {
            std::printf("rate experiment failed: %s\n", e.what());
        }
        rate_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    all &= run(7, "fast-rate verification", 300.0 - rate_secs, [&] { return rates_check(rep); });
    all &= run(8, "concentration coverage", 60.0, concentration_check);
    all &= run(9, "optimizer feature matching", 300.0 - rate_secs, [&] { return feature_match_check(rep); });
    std::printf("rate experiment took %.2f s\n", rate_secs);
    return all ? 0 : 1;
}
