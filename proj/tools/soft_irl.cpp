// soft_irl: command-line front end for the softirl library.
//
// Exit codes: 0 success / all checks passed, 1 an assertion failed, 2 bad input.

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "softirl/io.hpp"

namespace fs = std::filesystem;
using namespace softirl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitInput = 2;

struct Options {
    std::string config;
    std::string builtin;
    std::string output;
    int threads = 1;
    bool emit_plots = false;
    // validate
    std::string input;
    std::string kind;
    std::string mdp_path;
};

struct Globals {
    std::uint64_t seed = 1;
    bool seed_from_env = false;
    fs::path output_dir = "out";
    bool emit_plots = false;
    int threads = 1;
    fs::path base_dir = ".";
    json cfg = json::object();
    std::string where = "<config>";
};

const std::initializer_list<const char*> kGlobalKeys = {"seed", "output_dir", "emit_plots"};

std::vector<const char*> with_globals(std::initializer_list<const char*> keys) {
    std::vector<const char*> all(kGlobalKeys);
    all.insert(all.end(), keys.begin(), keys.end());
    return all;
}

void reject_unknown(const json& j, const std::vector<const char*>& allowed, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
    std::string bad;
    for (const auto& [key, _] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            bad += (bad.empty() ? "'" : ", '") + key + "'";
    if (!bad.empty()) throw InputError(where + ": unknown key(s) " + bad);
}

Globals load_globals(const Options& opt, const std::vector<const char*>& allowed) {
    Globals g;
    if (!opt.config.empty()) {
        g.cfg = read_json_file(opt.config);
        g.where = opt.config;
        g.base_dir = fs::path(opt.config).parent_path();
    }
    reject_unknown(g.cfg, allowed, g.where);
    if (g.cfg.contains("seed")) {
        if (!g.cfg["seed"].is_number_integer()) throw InputError(g.where + "/seed: expected an integer");
        g.seed = g.cfg["seed"].get<std::uint64_t>();
    }
    if (const char* env = std::getenv("SOFT_IRL_SEED")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw InputError("SOFT_IRL_SEED: expected an unsigned integer");
        g.seed = v;
        g.seed_from_env = true;
    }
    if (g.cfg.contains("output_dir")) g.output_dir = g.base_dir / g.cfg["output_dir"].get<std::string>();
    if (!opt.output.empty()) g.output_dir = opt.output;
    if (g.cfg.contains("emit_plots")) g.emit_plots = g.cfg["emit_plots"].get<bool>();
    if (opt.emit_plots) g.emit_plots = true;
    if (opt.threads < 1) throw InputError("--threads must be at least 1");
    g.threads = opt.threads;
    return g;
}

// A config entry that is either a path (relative to the config file) or an inline value.
std::pair<json, std::string> resolve(const Globals& g, const char* key) {
    const json& v = g.cfg.at(key);
    if (v.is_string()) {
        const fs::path p = g.base_dir / v.get<std::string>();
        return {read_json_file(p), p.string()};
    }
    return {v, g.where + "/" + key};
}

double get_double(const Globals& g, const char* key, double fallback) {
    if (!g.cfg.contains(key)) return fallback;
    if (!g.cfg[key].is_number()) throw InputError(g.where + "/" + key + ": expected a number");
    return g.cfg[key].get<double>();
}

long long get_int(const Globals& g, const char* key, long long fallback) {
    if (!g.cfg.contains(key)) return fallback;
    if (!g.cfg[key].is_number_integer()) throw InputError(g.where + "/" + key + ": expected an integer");
    return g.cfg[key].get<long long>();
}

void write_json(const Globals& g, const std::string& name, const json& j) {
    write_text_file(g.output_dir / name, dump(j));
    std::cout << "wrote " << (g.output_dir / name).string() << "\n";
}

InstanceSpec instance_from(const Globals& g) {
    InstanceSpec spec;
    spec.seed = g.seed;
    spec = instance_spec_from_json(g.cfg.at("instance"), g.where + "/instance", spec);
    if (g.seed_from_env) spec.seed = g.seed;
    return spec;
}

struct Problem {
    std::optional<Mdp> mdp;
    FeatureMap features;
    double beta = 1.0;
    std::optional<Policy> expert;
    std::optional<Vector> theta_E;
    bool from_instance = false;
};

const std::vector<const char*> kProblemKeys = {"instance", "mdp", "features", "beta", "expert"};

// Either {"instance": spec} or {"mdp", "features", "beta", "expert"?}; the
// expert is a policy (path or inline) or {"theta": [...]} for pi*_theta.
Problem load_problem(const Globals& g) {
    Problem p;
    if (g.cfg.contains("instance")) {
        for (const char* k : {"mdp", "features", "beta", "expert"})
            if (g.cfg.contains(k)) throw InputError(g.where + ": '" + k + "' cannot be combined with 'instance'");
        auto inst = generate_instance(instance_from(g));
        p.mdp.emplace(std::move(inst.mdp));
        p.features = std::move(inst.features);
        p.beta = inst.beta;
        p.expert = std::move(inst.expert);
        p.theta_E = inst.theta_E;
        p.from_instance = true;
        return p;
    }
    for (const char* k : {"mdp", "features", "beta"})
        if (!g.cfg.contains(k)) throw InputError(g.where + ": missing field '" + k + "' (or give 'instance')");
    {
        auto [j, w] = resolve(g, "mdp");
        p.mdp.emplace(mdp_from_json(j, w));
    }
    {
        auto [j, w] = resolve(g, "features");
        p.features = features_from_json(j, w);
    }
    try {
        check_shape(*p.mdp, p.features);
    } catch (const DimensionError& e) {
        throw InputError(g.where + "/features: " + e.what());
    }
    p.beta = get_double(g, "beta", 1.0);
    if (!(p.beta > 0.0)) throw InputError(g.where + "/beta: must be positive");
    if (g.cfg.contains("expert")) {
        auto [j, w] = resolve(g, "expert");
        if (j.is_object() && j.contains("theta") && !j.contains("probs")) {
            reject_unknown_keys(j, {"theta"}, w);
            const Vector th = vector_from_json(j["theta"], w + "/theta");
            if (th.size() != p.features.dim()) throw InputError(w + "/theta: dimension differs from features");
            p.expert = Policy(soft_backward(*p.mdp, reward_of(p.features, th), p.beta).pi_star.probs(),
                              "soft-optimal(theta_E)");
            p.theta_E = th;
        } else {
            p.expert = policy_from_json(j, w);
            try {
                check_shape(*p.mdp, *p.expert);
            } catch (const DimensionError& e) {
                throw InputError(w + ": " + e.what());
            }
        }
    }
    return p;
}

// "data": path | dataset object | {"n": N} sampled from the expert.
std::optional<Dataset> load_data(const Globals& g, const Problem& p) {
    if (!g.cfg.contains("data")) return std::nullopt;
    auto [j, w] = resolve(g, "data");
    Dataset data;
    if (j.is_object() && j.contains("n") && !j.contains("trajectories")) {
        reject_unknown_keys(j, {"n"}, w);
        if (!j["n"].is_number_integer() || j["n"].get<long long>() < 1) throw InputError(w + "/n: expected n >= 1");
        if (!p.expert) throw InputError(w + ": sampling data needs an expert");
        data = sample_trajectories(*p.mdp, *p.expert, j["n"].get<std::size_t>(), child_seed(g.seed, 11), g.threads);
    } else {
        data = dataset_from_json(j, w);
    }
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        try {
            check_trajectory(*p.mdp, data.trajectories[i]);
        } catch (const std::exception& e) {
            throw InputError(w + "/trajectories/" + std::to_string(i) + ": " + e.what());
        }
    }
    return data;
}

FitConfig fit_config(const Globals& g, double beta) {
    FitConfig cfg;
    cfg.beta = beta;
    if (g.cfg.contains("fit")) {
        json f = g.cfg["fit"];
        if (f.is_object() && f.contains("beta")) throw InputError(g.where + "/fit/beta: beta is set by the problem");
        cfg = fit_config_from_json(f, g.where + "/fit", cfg);
    }
    return cfg;
}

std::string fixed(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

// ---------------------------------------------------------------- commands

int cmd_solve(const Options& opt) {
    const auto g = load_globals(opt, with_globals({"mdp", "reward", "beta"}));
    std::optional<Mdp> mdp;
    std::optional<RewardTable> reward;
    double beta = 1.0;
    if (!opt.builtin.empty()) {
        if (opt.builtin != "appendix-e") throw InputError("--builtin: unknown instance '" + opt.builtin + "'");
        auto inst = appendix_e_instance();
        reward = reward_of(inst.features, inst.theta_r);
        mdp.emplace(std::move(inst.mdp));
        beta = inst.beta;
    } else {
        for (const char* k : {"mdp", "reward"})
            if (!g.cfg.contains(k)) throw InputError(g.where + ": missing field '" + k + "'");
        auto [jm, wm] = resolve(g, "mdp");
        mdp.emplace(mdp_from_json(jm, wm));
        auto [jr, wr] = resolve(g, "reward");
        reward = table_from_json(jr, wr);
        try {
            check_shape(*mdp, *reward);
        } catch (const DimensionError& e) {
            throw InputError(wr + ": " + e.what());
        }
        beta = get_double(g, "beta", 1.0);
        if (!(beta > 0.0)) throw InputError(g.where + "/beta: must be positive (hard DP is not exposed here)");
    }
    const auto sol = soft_backward(*mdp, *reward, beta);
    write_json(g, "solve.json", json{{"mdp", to_json(*mdp)}, {"solution", to_json(sol)}});
    std::cout << "J_star = " << std::setprecision(12) << sol.J_star << "\n";
    return kExitOk;
}

int cmd_fit(const Options& opt) {
    auto keys = with_globals({"data", "fit"});
    keys.insert(keys.end(), kProblemKeys.begin(), kProblemKeys.end());
    const auto g = load_globals(opt, keys);
    const auto p = load_problem(g);
    const auto cfg = fit_config(g, p.beta);
    const auto data = load_data(g, p);
    Vector target;
    std::string kind;
    if (data) {
        target = empirical_feature_expectation(*data, p.features);
        kind = "empirical";
    } else {
        if (!p.expert) throw InputError(g.where + ": give 'data' or an 'expert'");
        target = expected_features(p.features, forward_occupancy(*p.mdp, *p.expert));
        kind = "population";
    }
    const auto res = fit_to_target(*p.mdp, p.features, target, cfg);
    const double match =
        (grad_J(*p.mdp, p.features, res.theta_hat, p.beta) - target).lpNorm<Eigen::Infinity>();
    json out{{"kind", kind}, {"fit_config", to_json(cfg)}, {"result", to_json(res)}, {"feature_match_error", match}};
    if (p.theta_E) out["theta_E"] = to_json(*p.theta_E);
    write_json(g, "fit.json", out);
    std::cout << "converged = " << (res.converged ? "true" : "false") << ", iterations = " << res.iterations
              << ", feature_match_error = " << match << "\n";
    return res.converged ? kExitOk : kExitAssert;
}

int cmd_rates(const Options& opt) {
    const auto g = load_globals(opt, with_globals({"instance", "fit", "n_grid", "replicates", "metrics",
                                                   "burn_in_delta", "assert"}));
    RateConfig rc;
    if (!g.cfg.contains("instance")) throw InputError(g.where + ": missing field 'instance'");
    rc.instance = instance_from(g);
    rc.fit = fit_config(g, rc.instance.beta);
    rc.data_seed = child_seed(g.seed, 1);
    if (g.cfg.contains("n_grid")) {
        rc.n_grid.clear();
        for (const auto& v : g.cfg["n_grid"]) {
            if (!v.is_number_integer() || v.get<long long>() < 1)
                throw InputError(g.where + "/n_grid: entries must be positive integers");
            rc.n_grid.push_back(v.get<std::size_t>());
        }
    } else {
        for (int k = 6; k <= 14; ++k) rc.n_grid.push_back(std::size_t{1} << k);
    }
    rc.replicates = static_cast<int>(get_int(g, "replicates", 32));
    if (g.cfg.contains("metrics")) rc.metrics = g.cfg["metrics"].get<std::vector<std::string>>();
    rc.burn_in_delta = get_double(g, "burn_in_delta", 0.1);
    rc.threads = g.threads;
    try {
        rc.validate();
    } catch (const DomainError& e) {
        throw InputError(g.where + ": " + e.what());
    }

    std::vector<std::string> slope_metrics =
        rc.instance.expert == ExpertKind::well_specified ? std::vector<std::string>{"kl_expert", "param_err_hess"}
                                                         : std::vector<std::string>{"excess_kl", "param_err_hess"};
    double lo = -1.25, hi = -0.75, spread_max = 10.0, match_tol = 1e-8;
    if (g.cfg.contains("assert")) {
        const auto& a = g.cfg["assert"];
        const std::string w = g.where + "/assert";
        reject_unknown_keys(a, {"slope_metrics", "slope_range", "part3_spread_max", "feature_match_tol"}, w);
        if (a.contains("slope_metrics")) slope_metrics = a["slope_metrics"].get<std::vector<std::string>>();
        if (a.contains("slope_range")) {
            const auto r = a["slope_range"].get<std::vector<double>>();
            if (r.size() != 2 || !(r[0] < r[1])) throw InputError(w + "/slope_range: expected [lo, hi]");
            lo = r[0], hi = r[1];
        }
        if (a.contains("part3_spread_max")) spread_max = a["part3_spread_max"].get<double>();
        if (a.contains("feature_match_tol")) match_tol = a["feature_match_tol"].get<double>();
    }
    for (const auto& m : slope_metrics)
        if (std::find(rc.metrics.begin(), rc.metrics.end(), m) == rc.metrics.end())
            throw InputError(g.where + "/assert/slope_metrics: metric '" + m + "' is not computed");

    const auto rep = run_rate_experiment(rc);
    write_json(g, "rates.json", to_json(rep));
    write_text_file(g.output_dir / "rates.csv", rate_csv(rep));
    std::cout << "wrote " << (g.output_dir / "rates.csv").string() << "\n";
    if (g.emit_plots)
        for (const auto& s : rep.summaries) {
            const auto path = g.output_dir / ("rates_" + s.metric + ".svg");
            write_text_file(path, loglog_svg(s, rc.n_grid));
            std::cout << "wrote " << path.string() << "\n";
        }

    bool ok = true;
    for (const auto& s : rep.summaries) {
        const bool checked = std::find(slope_metrics.begin(), slope_metrics.end(), s.metric) != slope_metrics.end();
        const bool in = std::isfinite(s.slope) && s.slope >= lo && s.slope <= hi;
        std::cout << "slope " << s.metric << " = " << fixed(s.slope, 4) << (checked ? (in ? "  [ok]" : "  [FAIL]") : "")
                  << "\n";
        if (checked && !in) ok = false;
    }
    if (!rep.part3_values.empty()) {
        const bool in = rep.part3_spread <= spread_max;
        std::cout << "part3 spread = " << fixed(rep.part3_spread, 4) << (in ? "  [ok]" : "  [FAIL]") << "\n";
        ok = ok && in;
    }
    double worst = 0.0;
    for (const auto& c : rep.cells)
        if (c.converged) worst = std::max(worst, c.feature_match_error);
    std::cout << "max feature match error = " << worst << (worst <= match_tol ? "  [ok]" : "  [FAIL]") << "\n";
    std::cout << "non-converged fits = " << rep.nonconverged << "\n";
    ok = ok && worst <= match_tol;
    return ok ? kExitOk : kExitAssert;
}

int cmd_equivalence(const Options& opt) {
    auto keys = with_globals({"theta", "data", "tol"});
    keys.insert(keys.end(), kProblemKeys.begin(), kProblemKeys.end());
    const auto g = load_globals(opt, keys);
    auto p = load_problem(g);
    Vector theta;
    if (g.cfg.contains("theta"))
        theta = vector_from_json(g.cfg["theta"], g.where + "/theta");
    else if (p.theta_E)
        theta = *p.theta_E;
    else
        throw InputError(g.where + ": missing field 'theta'");
    if (theta.size() != p.features.dim()) throw InputError(g.where + "/theta: dimension differs from features");
    if (!p.expert)
        p.expert = Policy(soft_backward(*p.mdp, reward_of(p.features, theta), p.beta).pi_star.probs(), "soft-optimal");
    auto data = load_data(g, p);
    if (!data) data = sample_trajectories(*p.mdp, *p.expert, 100, child_seed(g.seed, 11), g.threads);
    const double tol = get_double(g, "tol", 1e-9);
    const auto rep = equivalence_report(*p.mdp, p.features, theta, p.beta, *data, *p.expert, tol);
    json out = to_json(rep);
    out["deterministic_mdp"] = p.mdp->is_deterministic();
    out["n"] = data->size();
    write_json(g, "equivalence.json", out);
    std::cout << std::setprecision(6) << "equivalence_gap = " << rep.equivalence_gap
              << ", population_gap = " << rep.population_gap << ", residual_term = " << rep.residual_term << "\n";
    return rep.passed ? kExitOk : kExitAssert;
}

int cmd_counterexample(const Options& opt) {
    const auto p = nonconvexity_probe();
    std::cout << "f(r)    = " << fixed(p.f_r, 4) << "\n";
    std::cout << "f(r')   = " << fixed(p.f_r_prime, 4) << "\n";
    std::cout << "f(mid)  = " << fixed(p.f_mid, 4) << "\n";
    std::cout << "non-quasiconvex: " << (p.non_quasiconvex ? "yes" : "no") << "\n";
    if (!opt.output.empty()) {
        Globals g;
        g.output_dir = opt.output;
        write_json(g, "counterexample.json", to_json(p));
    }
    return p.non_quasiconvex ? kExitOk : kExitAssert;
}

int cmd_geometry(const Options& opt) {
    const auto g = load_globals(opt, with_globals({"instance", "count", "scale", "self_concordance_pairs"}));
    if (!g.cfg.contains("instance")) throw InputError(g.where + ": missing field 'instance'");
    const InstanceSpec base = instance_from(g);
    const auto count = get_int(g, "count", 20);
    const double scale = get_double(g, "scale", 1.0);
    const auto pairs = get_int(g, "self_concordance_pairs", 50);
    if (count < 1 || pairs < 0 || !(scale >= 0.0)) throw InputError(g.where + ": count, scale or pairs out of range");

    json reports = json::array();
    std::vector<json> slots(static_cast<std::size_t>(count));
    std::vector<int> passed(static_cast<std::size_t>(count), 0);
    parallel_for(static_cast<std::size_t>(count), g.threads, [&](std::size_t i) {
        InstanceSpec spec = base;
        spec.seed = child_seed(base.seed, i);
        const auto inst = generate_instance(spec);
        const Vector theta0 = inst.theta_E ? *inst.theta_E : Vector::Zero(inst.features.dim());
        Rng rng(child_seed(spec.seed, 100));
        Vector u(inst.features.dim());
        for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = rng.normal();
        const Vector theta1 = dikin_point(inst.mdp, inst.features, inst.beta, theta0, u, scale);
        const auto rep = check_local_geometry(inst.mdp, inst.features, inst.beta, theta0, theta1);
        json j = to_json(rep);
        j["seed"] = spec.seed;
        slots[i] = std::move(j);
        passed[i] = rep.all_passed ? 1 : 0;
    });
    for (auto& j : slots) reports.push_back(std::move(j));

    json sc = json::array();
    bool sc_ok = true;
    if (pairs > 0) {
        const auto inst = generate_instance(base);
        const Vector theta = inst.theta_E ? *inst.theta_E : Vector::Zero(inst.features.dim());
        Rng rng(child_seed(base.seed, 200));
        for (long long k = 0; k < pairs; ++k) {
            Vector xi(inst.features.dim()), zeta(inst.features.dim());
            for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
            for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta(i) = rng.normal();
            xi.normalize();
            zeta.normalize();
            const auto c = check_self_concordance(inst.mdp, inst.features, inst.beta, theta, xi, zeta);
            sc_ok = sc_ok && c.passed;
            sc.push_back(to_json(c));
        }
    }
    const int n_pass = std::accumulate(passed.begin(), passed.end(), 0);
    const bool ok = n_pass == count && sc_ok;
    write_json(g, "geometry.json",
               json{{"instances", reports},
                    {"passed_instances", n_pass},
                    {"self_concordance", sc},
                    {"self_concordance_passed", sc_ok},
                    {"all_passed", ok}});
    std::cout << "local geometry: " << n_pass << "/" << count << " instances passed; self-concordance pairs "
              << (sc_ok ? "passed" : "FAILED") << "\n";
    return ok ? kExitOk : kExitAssert;
}

int cmd_concentration(const Options& opt) {
    auto keys = with_globals({"n", "delta", "trials", "fit"});
    keys.insert(keys.end(), kProblemKeys.begin(), kProblemKeys.end());
    const auto g = load_globals(opt, keys);
    const auto p = load_problem(g);
    if (!p.expert) throw InputError(g.where + ": concentration needs an expert");
    const auto n = get_int(g, "n", 256);
    const double delta = get_double(g, "delta", 0.1);
    const auto trials = get_int(g, "trials", 500);
    if (n < 1 || trials < 1 || !(delta > 0.0 && delta < 1.0))
        throw InputError(g.where + ": need n >= 1, trials >= 1, 0 < delta < 1");
    const auto setup = concentration_setup(*p.mdp, p.features, p.beta, *p.expert, fit_config(g, p.beta));
    if (!(setup.lambda_star > 0.0)) throw InputError(g.where + ": lambda_min(H*) is zero; features are not identifiable");
    const auto rep = check_concentration(*p.mdp, p.features, *p.expert, setup, static_cast<std::size_t>(n), delta,
                                         static_cast<int>(trials), child_seed(g.seed, 21), g.threads);
    json out = to_json(rep);
    out["geometry_mode"] = to_string(setup.mode);
    write_json(g, "concentration.json", out);
    std::cout << "violation frequency = " << rep.violation_freq << " (allowed " << rep.allowed_freq << ")\n";
    return rep.passed ? kExitOk : kExitAssert;
}

std::string detect_kind(const json& j) {
    if (j.is_object()) {
        if (j.contains("solution") && j.contains("mdp")) return "solution";
        if (j.contains("kernels")) return "mdp";
        if (j.contains("trajectories")) return "dataset";
        if (j.contains("probs")) return "policy";
    }
    if (j.is_array()) {
        int depth = 0;
        const json* cur = &j;
        while (cur->is_array() && !cur->empty()) {
            ++depth;
            cur = &(*cur)[0];
        }
        if (depth == 3) return "reward";
        if (depth == 4) return "features";
    }
    return "";
}

int cmd_validate(const Options& opt) {
    if (opt.input.empty()) throw InputError("validate: --input PATH is required");
    const json j = read_json_file(opt.input);
    std::string kind = opt.kind.empty() ? detect_kind(j) : opt.kind;
    if (kind.empty()) throw InputError(opt.input + ": cannot tell what kind of file this is; pass --kind");
    std::optional<Mdp> mdp;
    if (!opt.mdp_path.empty()) mdp.emplace(mdp_from_json(read_json_file(opt.mdp_path), opt.mdp_path));
    auto shape = [&](auto&& check) {
        if (!mdp) return;
        try {
            check();
        } catch (const std::exception& e) {
            throw InputError(opt.input + ": " + e.what());
        }
    };
    if (kind == "mdp") {
        mdp_from_json(j, opt.input);
    } else if (kind == "policy") {
        const auto p = policy_from_json(j, opt.input);
        shape([&] { check_shape(*mdp, p); });
    } else if (kind == "reward") {
        const auto r = table_from_json(j, opt.input);
        for (double v : r.values())
            if (!std::isfinite(v)) throw InputError(opt.input + ": reward entries must be finite");
        shape([&] { check_shape(*mdp, r); });
    } else if (kind == "features") {
        const auto f = features_from_json(j, opt.input);
        shape([&] { check_shape(*mdp, f); });
    } else if (kind == "dataset") {
        const auto d = dataset_from_json(j, opt.input);
        shape([&] {
            for (const auto& tau : d.trajectories) check_trajectory(*mdp, tau);
        });
    } else if (kind == "solution") {
        if (!j.is_object() || !j.contains("mdp") || !j.contains("solution"))
            throw InputError(opt.input + ": expected {\"mdp\", \"solution\"}");
        const auto m = mdp_from_json(j["mdp"], opt.input + "/mdp");
        const auto sol = soft_solution_from_json(j["solution"], opt.input + "/solution");
        const auto problems = check_soft_solution(m, sol);
        if (!problems.empty()) {
            std::string msg = opt.input + ": invalid soft solution";
            for (const auto& pr : problems) msg += "\n  " + pr;
            throw InputError(msg);
        }
    } else {
        throw InputError("--kind: unknown kind '" + kind + "'");
    }
    std::cout << "valid " << kind << ": " << opt.input << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-regularized inverse reinforcement learning in tabular finite-horizon MDPs"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config, "JSON configuration file");
    app.add_option("--builtin", opt.builtin, "builtin instance (solve: appendix-e)");
    app.add_option("--output", opt.output, "output directory");
    app.add_option("--threads", opt.threads, "worker threads (outputs do not depend on it)");
    app.add_flag("--emit-plots", opt.emit_plots, "write SVG log-log plots (rates)");

    auto* solve = app.add_subcommand("solve", "soft backward recursion on an MDP and reward");
    auto* fit = app.add_subcommand("fit", "Min-Max-IRL fit by damped Newton");
    auto* rates = app.add_subcommand("rates", "statistical rate experiment");
    auto* equivalence = app.add_subcommand("equivalence", "IRL/MLE risk equivalence report");
    auto* counterexample = app.add_subcommand("counterexample", "non-quasiconvexity of the MLE loss");
    auto* geometry = app.add_subcommand("geometry", "local geometry and self-concordance checks");
    auto* concentration = app.add_subcommand("concentration", "feature concentration coverage");
    auto* validate = app.add_subcommand("validate", "check an input file against its invariants");
    validate->add_option("--input", opt.input, "file to check")->required();
    validate->add_option("--kind", opt.kind, "mdp | policy | reward | features | dataset | solution");
    validate->add_option("--mdp", opt.mdp_path, "MDP file for shape checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*solve) return cmd_solve(opt);
        if (*fit) return cmd_fit(opt);
        if (*rates) return cmd_rates(opt);
        if (*equivalence) return cmd_equivalence(opt);
        if (*counterexample) return cmd_counterexample(opt);
        if (*geometry) return cmd_geometry(opt);
        if (*concentration) return cmd_concentration(opt);
        if (*validate) return cmd_validate(opt);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const CapacityError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
