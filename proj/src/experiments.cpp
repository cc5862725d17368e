#include "softirl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace softirl {

namespace {

constexpr double kE = 2.718281828459045;
constexpr int kKernelRepairAttempts = 16;
constexpr double kLambdaFloor = 1e-8;
constexpr int kSegmentPoints = 21;

std::vector<double> dirichlet_one(Rng& rng, int k) {
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& x : w) total += (x = rng.exponential());
    for (auto& x : w) x /= total;
    return w;
}

std::vector<int> permutation(Rng& rng, int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(p[i], p[std::min(j, i)]);
    }
    return p;
}

// Eigenvectors of H with eigenvalue below the absolute floor or the relative
// kernel tolerance.
Matrix weak_directions(const Matrix& H) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const auto& ev = es.eigenvalues();
    const double lmax = std::max(ev(ev.size() - 1), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) <= kLambdaFloor || ev(i) <= 1e-8 * lmax) keep.push_back(i);
    Matrix K(H.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) K.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
    return K;
}

double max_eigenvalue(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double h_norm(const Vector& v, const Matrix& H) { return std::sqrt(std::max(v.dot(H * v), 0.0)); }

} // namespace

std::string to_string(ExpertKind kind) {
    return kind == ExpertKind::well_specified ? "well_specified" : "misspecified";
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

Mdp random_mdp(int S, int A, int T, bool deterministic, std::uint64_t seed) {
    if (S <= 0 || A <= 0 || T <= 0) throw DomainError("random_mdp: S, A, T must be positive");
    Rng rng(seed);
    std::vector<double> init(S, 0.0);
    std::vector<double> kernels(static_cast<std::size_t>(T - 1) * S * A * S, 0.0);
    auto at = [&](int t, int s, int a, int n) -> double& {
        return kernels[((static_cast<std::size_t>(t) * S + s) * A + a) * S + n];
    };
    if (deterministic) {
        init[std::min(static_cast<int>(rng.uniform() * S), S - 1)] = 1.0;
        for (int t = 0; t + 1 < T; ++t)
            for (int a = 0; a < A; ++a) {
                const auto p = permutation(rng, S);
                for (int s = 0; s < S; ++s) at(t, s, a, p[s]) = 1.0;
            }
    } else {
        init = dirichlet_one(rng, S);
        for (int t = 0; t + 1 < T; ++t)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const auto row = dirichlet_one(rng, S);
                    for (int n = 0; n < S; ++n) at(t, s, a, n) = row[n];
                }
    }
    return Mdp(T, S, A, std::move(init), std::move(kernels), std::vector<double>(A, 1.0));
}

FeatureMap random_features(int T, int S, int A, int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(T) * S * A * d);
    for (auto& x : v) x = rng.normal();
    return FeatureMap(T, S, A, d, std::move(v));
}

Policy random_policy(int T, int S, int A, std::uint64_t seed, std::string label) {
    Rng rng(seed);
    StateActionTable probs(T, S, A);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) {
            auto row = probs.row(t, s);
            double mx = -std::numeric_limits<double>::infinity();
            for (auto& x : row) mx = std::max(mx, x = rng.normal());
            double z = 0.0;
            for (auto& x : row) z += (x = std::exp(x - mx));
            for (auto& x : row) x /= z;
        }
    return Policy(std::move(probs), std::move(label));
}

Instance generate_instance(const InstanceSpec& spec) {
    if (spec.d <= 0) throw DomainError("generate_instance: d must be positive");
    if (!(spec.beta > 0.0)) throw DomainError("generate_instance: beta must be positive");
    Mdp mdp = random_mdp(spec.S, spec.A, spec.T, spec.deterministic, child_seed(spec.seed, 0));
    FeatureMap phi = random_features(spec.T, spec.S, spec.A, spec.d, child_seed(spec.seed, 1));

    if (spec.exclude_kernel) {
        Rng repair(child_seed(spec.seed, 3));
        const Vector zero = Vector::Zero(spec.d);
        bool ok = false;
        for (int attempt = 0; attempt <= kKernelRepairAttempts; ++attempt) {
            const Matrix H = hessian_J(mdp, phi, zero, spec.beta);
            const Matrix K = weak_directions(H);
            if (K.cols() == 0) {
                ok = true;
                break;
            }
            if (attempt == kKernelRepairAttempts) break;
            for (int t = 0; t < spec.T; ++t)
                for (int s = 0; s < spec.S; ++s)
                    for (int a = 0; a < spec.A; ++a) {
                        auto v = phi.at(t, s, a);
                        Vector z(K.cols());
                        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = repair.normal();
                        const Vector coef = K.transpose() * v;
                        v -= K * coef;
                        v += K * z;
                    }
        }
        if (!ok)
            throw DomainError("generate_instance: could not remove the identifiability kernel; "
                              "d is too large for this (S, A, T)");
    }

    std::optional<Vector> theta_E;
    Policy expert;
    if (spec.expert == ExpertKind::well_specified) {
        Rng rng(child_seed(spec.seed, 2));
        Vector th(spec.d);
        for (int i = 0; i < spec.d; ++i) th(i) = rng.normal();
        th *= spec.theta_norm / th.norm();
        expert = Policy(soft_backward(mdp, reward_of(phi, th), spec.beta).pi_star.probs(), "soft-optimal(theta_E)");
        theta_E = th;
    } else {
        expert = random_policy(spec.T, spec.S, spec.A, child_seed(spec.seed, 2));
    }
    return Instance{std::move(mdp), std::move(phi), std::move(expert), std::move(theta_E), spec.beta};
}

void RateConfig::validate() const {
    if (n_grid.empty()) throw DomainError("RateConfig: n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] == 0) throw DomainError("RateConfig: n_grid entries must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw DomainError("RateConfig: n_grid must be strictly increasing");
    }
    if (replicates < 1) throw DomainError("RateConfig: replicates must be at least 1");
    if (metrics.empty()) throw DomainError("RateConfig: no metrics selected");
    const auto& known = all_rate_metrics();
    for (const auto& m : metrics)
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw DomainError("RateConfig: unknown metric '" + m + "'");
    if (!(burn_in_delta > 0.0 && burn_in_delta < 1.0)) throw DomainError("RateConfig: burn_in_delta must be in (0, 1)");
    if (threads < 1) throw DomainError("RateConfig: threads must be at least 1");
}

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("loglog_fit: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

RateReport run_rate_experiment(const RateConfig& cfg) {
    cfg.validate();
    const Instance inst = generate_instance(cfg.instance);
    const double beta = inst.beta;
    FitConfig fc = cfg.fit;
    fc.beta = beta;

    const bool want_hellinger =
        std::find(cfg.metrics.begin(), cfg.metrics.end(), "hellinger") != cfg.metrics.end();
    if (want_hellinger) check_enumerable(inst.mdp);

    RateReport rep;
    rep.config = cfg;
    rep.theta_E = inst.theta_E;
    const auto pop = fit_population(inst.mdp, inst.features, inst.expert, fc);
    if (!pop.converged || pop.active_ball_constraint)
        throw DomainError("run_rate_experiment: population fit did not reach an interior optimum");
    rep.theta_star = pop.theta_hat;

    const auto star = analyze_theta(inst.mdp, inst.features, rep.theta_star, beta);
    const Matrix H_star = hessian_J(star);
    const Policy& pi_star = star.soft.pi_star;
    rep.kl_floor = trajectory_kl(inst.mdp, inst.expert, pi_star);

    const bool exact = trajectory_record_count(inst.mdp) <= kDefaultEnumerationCap;
    rep.geometry = geometry_constants(inst.mdp, inst.features, beta, rep.theta_star, {Vector::Zero(inst.features.dim())},
                                      exact ? GeometryMode::exact : GeometryMode::conservative, inst.expert);
    if (!(rep.geometry.lambda_star > kLambdaFloor))
        throw DomainError("run_rate_experiment: lambda_min(H*) is not above 1e-8");
    const double L = std::log(1.0 / cfg.burn_in_delta);
    rep.burn_in_n = rep.geometry.B_A_phi * rep.geometry.B_A_phi * rep.geometry.d_star * L /
                    (beta * beta * rep.geometry.lambda_star);

    const std::size_t G = cfg.n_grid.size(), R = static_cast<std::size_t>(cfg.replicates);
    const std::size_t M = cfg.metrics.size();
    rep.cells.resize(G * R);
    parallel_for(G * R, cfg.threads, [&](std::size_t idx) {
        const std::size_t gi = idx / R, r = idx % R;
        RateCell cell;
        cell.n = cfg.n_grid[gi];
        cell.replicate = static_cast<int>(r);
        cell.seed = child_seed(child_seed(cfg.data_seed, gi), r);
        const auto data = sample_trajectories(inst.mdp, inst.expert, cell.n, cell.seed);
        const Vector target = empirical_feature_expectation(data, inst.features);
        const auto fit = fit_to_target(inst.mdp, inst.features, target, fc);
        cell.theta_hat = fit.theta_hat;
        cell.converged = fit.converged && !fit.active_ball_constraint;
        cell.active_ball_constraint = fit.active_ball_constraint;
        cell.iterations = fit.iterations;

        const auto hat = analyze_theta(inst.mdp, inst.features, fit.theta_hat, beta);
        const Policy& pi_hat = hat.soft.pi_star;
        cell.feature_match_error = (grad_J(hat, inst.features) - target).lpNorm<Eigen::Infinity>();
        const Vector diff = fit.theta_hat - rep.theta_star;
        double kl_sh = -1.0, kl_hs = -1.0;
        auto kl_star_hat = [&] { return kl_sh >= 0.0 ? kl_sh : (kl_sh = trajectory_kl(inst.mdp, pi_star, pi_hat)); };
        auto kl_hat_star = [&] { return kl_hs >= 0.0 ? kl_hs : (kl_hs = trajectory_kl(inst.mdp, pi_hat, pi_star)); };
        cell.metrics.resize(M);
        for (std::size_t m = 0; m < M; ++m) {
            const auto& name = cfg.metrics[m];
            double v = 0.0;
            if (name == "kl_expert")
                v = trajectory_kl(inst.mdp, inst.expert, pi_hat);
            else if (name == "excess_kl")
                v = std::max(trajectory_kl(inst.mdp, inst.expert, pi_hat) - rep.kl_floor, 0.0);
            else if (name == "param_err_hess")
                v = std::max(diff.dot(H_star * diff), 0.0);
            else if (name == "kl_pistar_hat")
                v = kl_star_hat();
            else if (name == "kl_hat_pistar")
                v = kl_hat_star();
            else if (name == "kl_pistar_sym")
                v = kl_star_hat() + kl_hat_star();
            else if (name == "hellinger")
                v = trajectory_hellinger(inst.mdp, pi_star, pi_hat);
            cell.metrics[m] = v;
        }
        rep.cells[idx] = std::move(cell);
    });

    for (const auto& c : rep.cells)
        if (!c.converged) ++rep.nonconverged;

    std::vector<std::size_t> use;
    for (std::size_t gi = 0; gi < G; ++gi)
        if (static_cast<double>(cfg.n_grid[gi]) > rep.burn_in_n) use.push_back(gi);
    rep.burn_in_applied = use.size() >= 3;
    if (!rep.burn_in_applied) {
        use.resize(G);
        std::iota(use.begin(), use.end(), 0);
    }
    for (auto gi : use) rep.slope_n.push_back(cfg.n_grid[gi]);

    for (std::size_t m = 0; m < M; ++m) {
        MetricSummary sm;
        sm.metric = cfg.metrics[m];
        for (std::size_t gi = 0; gi < G; ++gi) {
            std::vector<double> vals;
            for (std::size_t r = 0; r < R; ++r) {
                const auto& c = rep.cells[gi * R + r];
                if (c.converged) vals.push_back(c.metrics[m]);
            }
            sm.median.push_back(median(vals));
            sm.mean.push_back(vals.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size());
        }
        std::vector<double> xs, ys;
        for (auto gi : use)
            if (sm.median[gi] > 0.0 && std::isfinite(sm.median[gi])) {
                xs.push_back(static_cast<double>(cfg.n_grid[gi]));
                ys.push_back(sm.median[gi]);
            }
        std::tie(sm.slope, sm.intercept) = loglog_fit(xs, ys);
        sm.points_used = static_cast<int>(xs.size());
        rep.summaries.push_back(std::move(sm));
    }

    auto last_median = [&](const std::string& name) -> std::optional<double> {
        for (const auto& sm : rep.summaries)
            if (sm.metric == name) return sm.median.back();
        return std::nullopt;
    };
    for (const char* name : {"hellinger", "kl_pistar_hat", "kl_hat_pistar", "kl_pistar_sym"})
        if (auto v = last_median(name)) rep.part3_values.emplace_back(name, *v);
    if (auto v = last_median("param_err_hess")) rep.part3_values.emplace_back("param_err_hess/beta", *v / beta);
    if (rep.part3_values.size() >= 2) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& [name, v] : rep.part3_values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rep.part3_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    }
    return rep;
}

double psi(double x) {
    if (std::abs(x) < 1e-4) return 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0;
    return (std::expm1(x) - x) / (x * x);
}

double chi(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
    return std::expm1(x) / x;
}

double increasing_function(double x, double R) {
    if (R == 0.0) return x;
    return -std::expm1(-R * x) / R;
}

double increasing_function_inverse(double y, double R) {
    if (R == 0.0) return y;
    if (R > 0.0 && !(y * R < 1.0)) throw DomainError("increasing_function_inverse: y must be below 1/R");
    return -std::log1p(-R * y) / R;
}

double segment_score_bound(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0,
                           const Vector& theta1, std::size_t cap) {
    std::vector<Vector> grid;
    grid.reserve(kSegmentPoints);
    for (int k = 0; k < kSegmentPoints; ++k)
        grid.push_back(theta0 + (static_cast<double>(k) / (kSegmentPoints - 1)) * (theta1 - theta0));
    return max_score_norm(mdp, features, beta, grid, cap);
}

Vector dikin_point(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0, const Vector& u,
                   double scale, std::size_t cap) {
    const Matrix H0 = hessian_J(mdp, features, theta0, beta);
    const double lambda0 = std::max(min_eigenvalue(H0), 0.0);
    const double uh = h_norm(u, H0);
    if (!(uh > 0.0)) throw DomainError("dikin_point: direction has zero H0-norm");
    const double B0 = max_score_norm(mdp, features, beta, {theta0}, cap);
    if (!(B0 > 0.0)) throw DomainError("dikin_point: score norm bound is zero");
    // Step length r (in H0-norm) solving r * B(r) = beta sqrt(lambda0), where
    // B(r) is the segment score bound; B is nondecreasing in r, so bisect on
    // [0, beta sqrt(lambda0) / B0] and keep the lower bracket (inside the ball).
    const double c = beta * std::sqrt(lambda0);
    const Vector dir = u / uh;
    auto excess = [&](double r) { return r * segment_score_bound(mdp, features, beta, theta0, theta0 + r * dir, cap) - c; };
    double lo = 0.0, hi = c / B0;
    if (excess(hi) <= 0.0) {
        lo = hi;
    } else {
        for (int it = 0; it < 80 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) <= 0.0 ? lo : hi) = mid;
        }
    }
    return theta0 + (scale * lo) * dir;
}

LocalGeometryReport check_local_geometry(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0,
                                         const Vector& theta1, std::size_t cap) {
    check_enumerable(mdp, cap);
    LocalGeometryReport rep;
    rep.beta = beta;
    const auto p0 = analyze_theta(mdp, features, theta0, beta);
    const auto p1 = analyze_theta(mdp, features, theta1, beta);
    const Matrix H0 = hessian_J(p0), H1 = hessian_J(p1);
    rep.lambda0 = std::max(min_eigenvalue(H0), 0.0);
    rep.B_A_phi = segment_score_bound(mdp, features, beta, theta0, theta1, cap);
    const Vector delta = theta1 - theta0;
    rep.delta_norm = delta.norm();
    rep.delta_norm_H0 = h_norm(delta, H0);
    rep.rho0 = rep.B_A_phi > 0.0 ? beta * std::sqrt(rep.lambda0) / rep.B_A_phi
                                 : std::numeric_limits<double>::infinity();
    rep.S = rep.B_A_phi * rep.delta_norm / beta;
    rep.inside = rep.delta_norm_H0 <= rep.rho0 * (1.0 + 1e-9);

    const Policy& pi0 = p0.soft.pi_star;
    const Policy& pi1 = p1.soft.pi_star;
    double max_log_ratio = 0.0;
    for_each_trajectory(
        mdp, pi0,
        [&](const Trajectory& tau, double) {
            const double lr = trajectory_log_prob(mdp, pi1, tau) - trajectory_log_prob(mdp, pi0, tau);
            max_log_ratio = std::max(max_log_ratio, std::abs(lr));
        },
        cap);
    const double kl01 = trajectory_kl(mdp, pi0, pi1);
    const double kl10 = trajectory_kl(mdp, pi1, pi0);
    const double h2 = trajectory_hellinger(mdp, pi0, pi1, cap);
    const double d2 = rep.delta_norm_H0 * rep.delta_norm_H0;
    const double breg = beta * kl01;
    const double sym = beta * (kl01 + kl10);
    const double eig_tol = 1e-9 * (1.0 + max_eigenvalue(H0));

    auto add = [&](std::string name, double lhs, double rhs) {
        const bool ok = lhs <= rhs + 1e-12 + 1e-9 * std::abs(rhs);
        rep.checks.push_back({std::move(name), lhs, rhs, ok});
    };
    auto sandwich = [&](double lo, double hi) {
        add("hessian_lower", max_eigenvalue(lo * H0 - H1), eig_tol);
        add("hessian_upper", max_eigenvalue(H1 - hi * H0), eig_tol);
    };

    if (rep.inside) {
        add("density_ratio", max_log_ratio, 1.0);
        sandwich(1.0 / kE, kE);
        add("bregman_lower", d2 / kE, breg);
        add("bregman_upper", breg, (kE - 2.0) * d2);
        add("symmetric_lower", (1.0 - 1.0 / kE) * d2, sym);
        add("symmetric_upper", sym, (kE - 1.0) * d2);
        add("hellinger_kl", h2, kl01);
        add("kl_hellinger", kl01, 3.0 * h2);
    } else {
        const double S = rep.S;
        add("density_ratio_global", max_log_ratio, S);
        sandwich(std::exp(-S), std::exp(S));
        add("bregman_lower_global", psi(-S) * d2, breg);
        add("bregman_upper_global", breg, psi(S) * d2);
        add("symmetric_lower_global", chi(-S) * d2, sym);
        add("symmetric_upper_global", sym, chi(S) * d2);
        add("hellinger_kl", h2, kl01);
    }
    rep.all_passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.passed; });
    return rep;
}

InequalityCheck check_self_concordance(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta,
                                       const Vector& xi, const Vector& zeta, std::size_t cap) {
    const double B = max_score_norm(mdp, features, beta, {theta}, cap);
    const Matrix H = hessian_J(mdp, features, theta, beta);
    InequalityCheck c;
    c.name = "pseudo_self_concordance";
    c.lhs = std::abs(third_derivative(mdp, features, theta, beta, xi, xi, zeta, cap));
    c.rhs = B * zeta.norm() * xi.dot(H * xi) / beta + 1e-9;
    c.passed = c.lhs <= c.rhs;
    return c;
}

ConcentrationSetup concentration_setup(const Mdp& mdp, const FeatureMap& features, double beta, const Policy& expert,
                                       const FitConfig& cfg, std::size_t cap) {
    FitConfig fc = cfg;
    fc.beta = beta;
    ConcentrationSetup s;
    const auto fit = fit_population(mdp, features, expert, fc);
    s.theta_star = fit.theta_hat;
    s.H_star = hessian_J(mdp, features, s.theta_star, beta);
    s.lambda_star = std::max(min_eigenvalue(s.H_star), 0.0);
    if (s.lambda_star > 1e-10) s.d_star = effective_dimension(mdp, features, expert, s.H_star, beta, cap).d_star;
    if (trajectory_record_count(mdp) <= cap) {
        s.B_phi = max_feature_return_norm(mdp, features, cap);
        s.mode = GeometryMode::exact;
    } else {
        s.B_phi = feature_norm_bound(features);
        s.mode = GeometryMode::conservative;
    }
    s.expert_features = expected_features(features, forward_occupancy(mdp, expert));
    return s;
}

ConcentrationReport check_concentration(const Mdp& mdp, const FeatureMap& features, const Policy& expert,
                                        const ConcentrationSetup& setup, std::size_t n, double delta, int trials,
                                        std::uint64_t seed, int threads) {
    if (!(setup.lambda_star > 0.0)) throw DomainError("check_concentration: lambda_min(H*) must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("check_concentration: delta must be in (0, 1)");
    if (trials < 1) throw DomainError("check_concentration: trials must be at least 1");
    if (n == 0) throw EmptyDatasetError("check_concentration: n must be at least 1");

    ConcentrationReport rep;
    rep.n = n;
    rep.delta = delta;
    rep.trials = trials;
    rep.d_star = setup.d_star;
    rep.lambda_star = setup.lambda_star;
    rep.B_phi = setup.B_phi;
    const double L = std::log(1.0 / delta);
    const double nn = static_cast<double>(n);
    rep.bound = std::sqrt(2.0 * setup.d_star * L / nn) + 4.0 * setup.B_phi * L / (std::sqrt(setup.lambda_star) * nn);

    const Eigen::LDLT<Matrix> ldlt(setup.H_star);
    rep.eta.assign(static_cast<std::size_t>(trials), 0.0);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t k) {
        const auto data = sample_trajectories(mdp, expert, n, child_seed(seed, k));
        const Vector v = empirical_feature_expectation(data, features) - setup.expert_features;
        rep.eta[k] = std::sqrt(std::max(v.dot(ldlt.solve(v)), 0.0));
    });
    for (double e : rep.eta)
        if (e > rep.bound) ++rep.violations;
    rep.violation_freq = static_cast<double>(rep.violations) / trials;
    rep.allowed_freq = delta + 2.0 * std::sqrt(delta * (1.0 - delta) / trials);
    rep.median_eta = median(rep.eta);
    rep.max_eta = *std::max_element(rep.eta.begin(), rep.eta.end());
    rep.passed = rep.violation_freq <= rep.allowed_freq;
    return rep;
}

} // namespace softirl
