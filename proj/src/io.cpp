#include "softirl/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace softirl {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw InputError(where + ": " + what); }

json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

double as_double(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    fail(where, "expected a number");
}

int as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
}

const json& array_of(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
    if (j.size() != n) fail(where, "expected " + std::to_string(n) + " entries, found " + std::to_string(j.size()));
    return j;
}

std::vector<double> doubles(const json& j, std::size_t n, const std::string& where) {
    array_of(j, n, where);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = as_double(j[i], where + "/" + std::to_string(i));
    return v;
}

std::string sub(const std::string& where, const std::string& key) { return where + "/" + key; }

// Depth of nested arrays along the first element.
int array_depth(const json& j) {
    int depth = 0;
    const json* cur = &j;
    while (cur->is_array()) {
        ++depth;
        if (cur->empty()) break;
        cur = &(*cur)[0];
    }
    return depth;
}

template <class F>
auto wrap_domain(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        fail(where, e.what());
    } catch (const DimensionError& e) {
        fail(where, e.what());
    }
}

std::string fmt(double x, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << x;
    return os.str();
}

} // namespace

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    std::string bad;
    for (const auto& [key, _] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) bad += (bad.empty() ? "" : ", ") + ("'" + key + "'");
    }
    if (!bad.empty()) fail(where, "unknown key(s) " + bad);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path.string(), "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path.string(), std::string("malformed JSON: ") + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const Mdp& mdp) {
    const int T = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
    json kernels = json::array();
    for (int t = 0; t + 1 < T; ++t) {
        json kt = json::array();
        for (int s = 0; s < S; ++s) {
            json ks = json::array();
            for (int a = 0; a < A; ++a) {
                const auto p = mdp.next_state_dist(t, s, a);
                ks.push_back(std::vector<double>(p.begin(), p.end()));
            }
            kt.push_back(std::move(ks));
        }
        kernels.push_back(std::move(kt));
    }
    const auto init = mdp.initial_dist();
    const auto ref = mdp.ref_measure();
    return json{{"T", T},
                {"S", S},
                {"A", A},
                {"initial_dist", std::vector<double>(init.begin(), init.end())},
                {"kernels", kernels},
                {"ref_measure", std::vector<double>(ref.begin(), ref.end())}};
}

Mdp mdp_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"T", "S", "A", "initial_dist", "kernels", "ref_measure"}, where);
    const int T = as_int(field(j, "T", where), sub(where, "T"));
    const int S = as_int(field(j, "S", where), sub(where, "S"));
    const int A = as_int(field(j, "A", where), sub(where, "A"));
    if (T <= 0 || S <= 0 || A <= 0) fail(where, "T, S and A must be positive");
    auto init = doubles(field(j, "initial_dist", where), S, sub(where, "initial_dist"));
    std::vector<double> ref(A, 1.0);
    if (j.contains("ref_measure")) ref = doubles(j["ref_measure"], A, sub(where, "ref_measure"));
    const auto& K = array_of(field(j, "kernels", where), static_cast<std::size_t>(T - 1), sub(where, "kernels"));
    std::vector<double> kernels;
    kernels.reserve(static_cast<std::size_t>(T - 1) * S * A * S);
    for (int t = 0; t + 1 < T; ++t) {
        const std::string wt = sub(sub(where, "kernels"), std::to_string(t));
        array_of(K[t], S, wt);
        for (int s = 0; s < S; ++s) {
            const std::string ws = sub(wt, std::to_string(s));
            array_of(K[t][s], A, ws);
            for (int a = 0; a < A; ++a) {
                const auto row = doubles(K[t][s][a], S, sub(ws, std::to_string(a)));
                kernels.insert(kernels.end(), row.begin(), row.end());
            }
        }
    }
    return wrap_domain(where, [&] { return Mdp(T, S, A, std::move(init), std::move(kernels), std::move(ref)); });
}

json to_json(const StateActionTable& table) {
    json out = json::array();
    for (int t = 0; t < table.horizon(); ++t) {
        json jt = json::array();
        for (int s = 0; s < table.n_states(); ++s) {
            json row = json::array();
            for (double x : table.row(t, s)) row.push_back(num(x));
            jt.push_back(std::move(row));
        }
        out.push_back(std::move(jt));
    }
    return out;
}

StateActionTable table_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty() || !j[0][0].is_array() || j[0][0].empty())
        fail(where, "expected a non-empty [t][s][a] array");
    const auto T = j.size(), S = j[0].size(), A = j[0][0].size();
    std::vector<double> v;
    v.reserve(T * S * A);
    for (std::size_t t = 0; t < T; ++t) {
        const std::string wt = sub(where, std::to_string(t));
        array_of(j[t], S, wt);
        for (std::size_t s = 0; s < S; ++s) {
            const auto row = doubles(j[t][s], A, sub(wt, std::to_string(s)));
            v.insert(v.end(), row.begin(), row.end());
        }
    }
    return StateActionTable(static_cast<int>(T), static_cast<int>(S), static_cast<int>(A), std::move(v));
}

json to_json(const Policy& policy) { return json{{"label", policy.label()}, {"probs", to_json(policy.probs())}}; }

Policy policy_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"label", "probs"}, where);
    auto probs = table_from_json(field(j, "probs", where), sub(where, "probs"));
    std::string label;
    if (j.contains("label")) {
        if (!j["label"].is_string()) fail(sub(where, "label"), "expected a string");
        label = j["label"].get<std::string>();
    }
    return wrap_domain(where, [&] { return Policy(std::move(probs), label); });
}

json to_json(const FeatureMap& features) {
    json out = json::array();
    for (int t = 0; t < features.horizon(); ++t) {
        json jt = json::array();
        for (int s = 0; s < features.n_states(); ++s) {
            json js = json::array();
            for (int a = 0; a < features.n_actions(); ++a) {
                const auto v = features.at(t, s, a);
                js.push_back(std::vector<double>(v.data(), v.data() + v.size()));
            }
            jt.push_back(std::move(js));
        }
        out.push_back(std::move(jt));
    }
    return out;
}

FeatureMap features_from_json(const json& j, const std::string& where) {
    if (array_depth(j) != 4 || j[0].empty() || j[0][0].empty() || j[0][0][0].empty())
        fail(where, "expected a non-empty [t][s][a][d] array");
    const auto T = j.size(), S = j[0].size(), A = j[0][0].size(), d = j[0][0][0].size();
    std::vector<double> v;
    v.reserve(T * S * A * d);
    for (std::size_t t = 0; t < T; ++t) {
        const std::string wt = sub(where, std::to_string(t));
        array_of(j[t], S, wt);
        for (std::size_t s = 0; s < S; ++s) {
            const std::string ws = sub(wt, std::to_string(s));
            array_of(j[t][s], A, ws);
            for (std::size_t a = 0; a < A; ++a) {
                const auto row = doubles(j[t][s][a], d, sub(ws, std::to_string(a)));
                v.insert(v.end(), row.begin(), row.end());
            }
        }
    }
    return wrap_domain(where, [&] {
        return FeatureMap(static_cast<int>(T), static_cast<int>(S), static_cast<int>(A), static_cast<int>(d),
                          std::move(v));
    });
}

json to_json(const Trajectory& tau) { return json{{"states", tau.states}, {"actions", tau.actions}}; }

json to_json(const Dataset& data) {
    json trajs = json::array();
    for (const auto& tau : data.trajectories) trajs.push_back(to_json(tau));
    return json{{"seed", data.seed}, {"generator_label", data.generator_label}, {"trajectories", trajs}};
}

Dataset dataset_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"seed", "generator_label", "trajectories"}, where);
    Dataset data;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            fail(sub(where, "seed"), "expected an integer");
        data.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("generator_label")) data.generator_label = j["generator_label"].get<std::string>();
    const auto& trajs = field(j, "trajectories", where);
    if (!trajs.is_array()) fail(sub(where, "trajectories"), "expected an array");
    if (trajs.empty()) fail(sub(where, "trajectories"), "dataset must contain at least one trajectory");
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const std::string wi = sub(sub(where, "trajectories"), std::to_string(i));
        reject_unknown_keys(trajs[i], {"states", "actions"}, wi);
        Trajectory tau;
        for (const char* key : {"states", "actions"}) {
            const auto& arr = field(trajs[i], key, wi);
            if (!arr.is_array()) fail(sub(wi, key), "expected an array");
            auto& dst = std::string(key) == "states" ? tau.states : tau.actions;
            for (std::size_t k = 0; k < arr.size(); ++k) dst.push_back(as_int(arr[k], sub(sub(wi, key), std::to_string(k))));
        }
        if (tau.states.size() != tau.actions.size() || tau.states.empty())
            fail(wi, "states and actions must be non-empty and of equal length");
        if (!data.trajectories.empty() && tau.states.size() != data.trajectories.front().states.size())
            fail(wi, "trajectory length differs from the first trajectory");
        data.trajectories.push_back(std::move(tau));
    }
    return data;
}

json to_json(const StateTable& table) {
    json out = json::array();
    for (int t = 0; t < table.rows(); ++t) {
        json row = json::array();
        for (double x : table.row(t)) row.push_back(num(x));
        out.push_back(std::move(row));
    }
    return out;
}

json to_json(const SoftSolution& sol) {
    return json{{"beta", sol.beta},
                {"J_star", num(sol.J_star)},
                {"V", to_json(sol.V)},
                {"Q", to_json(sol.Q)},
                {"pi_star", to_json(sol.pi_star.probs())}};
}

SoftSolution soft_solution_from_json(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"beta", "J_star", "V", "Q", "pi_star"}, where);
    SoftSolution sol;
    sol.beta = as_double(field(j, "beta", where), sub(where, "beta"));
    sol.J_star = as_double(field(j, "J_star", where), sub(where, "J_star"));
    sol.Q = table_from_json(field(j, "Q", where), sub(where, "Q"));
    auto pi = table_from_json(field(j, "pi_star", where), sub(where, "pi_star"));
    if (!pi.same_shape(sol.Q)) fail(sub(where, "pi_star"), "shape differs from Q");
    sol.pi_star = wrap_domain(sub(where, "pi_star"), [&] { return Policy(std::move(pi), "soft-optimal"); });
    const int T = sol.Q.horizon(), S = sol.Q.n_states();
    const auto& V = array_of(field(j, "V", where), static_cast<std::size_t>(T + 1), sub(where, "V"));
    sol.V = StateTable(T + 1, S);
    for (int t = 0; t <= T; ++t) {
        const auto row = doubles(V[t], S, sub(sub(where, "V"), std::to_string(t)));
        for (int s = 0; s < S; ++s) sol.V(t, s) = row[s];
    }
    return sol;
}

json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
    return out;
}

json to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
    return out;
}

Vector vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(j[i], sub(where, std::to_string(i)));
    return v;
}

json to_json(const FitConfig& cfg) {
    return json{{"beta", cfg.beta},         {"tol_decrement", cfg.tol_decrement}, {"max_iters", cfg.max_iters},
                {"ball_radius", cfg.ball_radius}, {"ridge", cfg.ridge},       {"backtrack", cfg.backtrack},
                {"armijo", cfg.armijo}};
}

FitConfig fit_config_from_json(const json& j, const std::string& where, FitConfig cfg) {
    reject_unknown_keys(j, {"beta", "tol_decrement", "max_iters", "ball_radius", "ridge", "backtrack", "armijo"}, where);
    if (j.contains("beta")) cfg.beta = as_double(j["beta"], sub(where, "beta"));
    if (j.contains("tol_decrement")) cfg.tol_decrement = as_double(j["tol_decrement"], sub(where, "tol_decrement"));
    if (j.contains("max_iters")) cfg.max_iters = as_int(j["max_iters"], sub(where, "max_iters"));
    if (j.contains("ball_radius")) cfg.ball_radius = as_double(j["ball_radius"], sub(where, "ball_radius"));
    if (j.contains("ridge")) cfg.ridge = as_double(j["ridge"], sub(where, "ridge"));
    if (j.contains("backtrack")) cfg.backtrack = as_double(j["backtrack"], sub(where, "backtrack"));
    if (j.contains("armijo")) cfg.armijo = as_double(j["armijo"], sub(where, "armijo"));
    wrap_domain(where, [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

json to_json(const IrlFitResult& res) {
    json trace = json::array();
    for (const auto& e : res.trace)
        trace.push_back({{"loss", num(e.loss)},
                         {"decrement", num(e.decrement)},
                         {"step_size", num(e.step_size)},
                         {"ridge_used", e.ridge_used}});
    return json{{"theta_hat", to_json(res.theta_hat)},
                {"final_loss", num(res.final_loss)},
                {"iterations", res.iterations},
                {"final_decrement", num(res.final_decrement)},
                {"gradient_norm", num(res.gradient_norm)},
                {"hessian_at_solution", to_json(res.hessian_at_solution)},
                {"active_ball_constraint", res.active_ball_constraint},
                {"converged", res.converged},
                {"trace", trace}};
}

json to_json(const RiskReport& r) {
    return json{{"beta", r.beta},
                {"irl_empirical", num(r.irl_empirical)},
                {"irl_population", num(r.irl_population)},
                {"mle_empirical", num(r.mle_empirical)},
                {"mle_population", num(r.mle_population)},
                {"residual_term", num(r.residual_term)},
                {"equivalence_gap", num(r.equivalence_gap)},
                {"population_gap", num(r.population_gap)},
                {"passed", r.passed}};
}

json to_json(const NonconvexityProbe& p) {
    return json{{"f_r", p.f_r}, {"f_r_prime", p.f_r_prime}, {"f_mid", p.f_mid}, {"non_quasiconvex", p.non_quasiconvex}};
}

json to_json(const GeometryConstants& g) {
    return json{{"B_phi", num(g.B_phi)},         {"B_A_phi", num(g.B_A_phi)},   {"lambda_star", num(g.lambda_star)},
                {"d_star", num(g.d_star)},       {"rho_star", num(g.rho_star)}, {"mode", to_string(g.mode)}};
}

json to_json(const InstanceSpec& spec) {
    return json{{"S", spec.S},
                {"A", spec.A},
                {"T", spec.T},
                {"deterministic", spec.deterministic},
                {"seed", spec.seed},
                {"d", spec.d},
                {"exclude_kernel", spec.exclude_kernel},
                {"beta", spec.beta},
                {"expert", to_string(spec.expert)},
                {"theta_norm", spec.theta_norm}};
}

InstanceSpec instance_spec_from_json(const json& j, const std::string& where, InstanceSpec spec) {
    reject_unknown_keys(j, {"S", "A", "T", "deterministic", "seed", "d", "exclude_kernel", "beta", "expert", "theta_norm"},
                        where);
    if (j.contains("S")) spec.S = as_int(j["S"], sub(where, "S"));
    if (j.contains("A")) spec.A = as_int(j["A"], sub(where, "A"));
    if (j.contains("T")) spec.T = as_int(j["T"], sub(where, "T"));
    if (j.contains("d")) spec.d = as_int(j["d"], sub(where, "d"));
    if (j.contains("deterministic")) {
        if (!j["deterministic"].is_boolean()) fail(sub(where, "deterministic"), "expected a boolean");
        spec.deterministic = j["deterministic"].get<bool>();
    }
    if (j.contains("exclude_kernel")) {
        if (!j["exclude_kernel"].is_boolean()) fail(sub(where, "exclude_kernel"), "expected a boolean");
        spec.exclude_kernel = j["exclude_kernel"].get<bool>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) fail(sub(where, "seed"), "expected an integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("beta")) spec.beta = as_double(j["beta"], sub(where, "beta"));
    if (j.contains("theta_norm")) spec.theta_norm = as_double(j["theta_norm"], sub(where, "theta_norm"));
    if (j.contains("expert")) {
        const auto e = j["expert"].is_string() ? j["expert"].get<std::string>() : std::string();
        if (e == "well_specified")
            spec.expert = ExpertKind::well_specified;
        else if (e == "misspecified")
            spec.expert = ExpertKind::misspecified;
        else
            fail(sub(where, "expert"), "expected \"well_specified\" or \"misspecified\"");
    }
    if (spec.S <= 0 || spec.A <= 0 || spec.T <= 0 || spec.d <= 0) fail(where, "S, A, T and d must be positive");
    if (!(spec.beta > 0.0)) fail(sub(where, "beta"), "must be positive");
    if (!(spec.theta_norm > 0.0)) fail(sub(where, "theta_norm"), "must be positive");
    return spec;
}

json to_json(const RateConfig& cfg) {
    json fit = to_json(cfg.fit);
    fit.erase("beta");
    return json{{"instance", to_json(cfg.instance)}, {"fit", fit},
                {"n_grid", cfg.n_grid},              {"replicates", cfg.replicates},
                {"data_seed", cfg.data_seed},        {"metrics", cfg.metrics},
                {"burn_in_delta", cfg.burn_in_delta}};
}

json to_json(const RateReport& rep) {
    json cells = json::array();
    for (const auto& c : rep.cells) {
        json m = json::object();
        for (std::size_t i = 0; i < c.metrics.size(); ++i) m[rep.config.metrics[i]] = num(c.metrics[i]);
        cells.push_back({{"n", c.n},
                         {"replicate", c.replicate},
                         {"seed", c.seed},
                         {"theta_hat", to_json(c.theta_hat)},
                         {"converged", c.converged},
                         {"active_ball_constraint", c.active_ball_constraint},
                         {"iterations", c.iterations},
                         {"feature_match_error", num(c.feature_match_error)},
                         {"metrics", m}});
    }
    json summaries = json::array();
    for (const auto& s : rep.summaries) {
        json med = json::array(), mean = json::array();
        for (double x : s.median) med.push_back(num(x));
        for (double x : s.mean) mean.push_back(num(x));
        summaries.push_back({{"metric", s.metric},
                             {"median", med},
                             {"mean", mean},
                             {"slope", num(s.slope)},
                             {"intercept", num(s.intercept)},
                             {"points_used", s.points_used}});
    }
    json part3 = json::object();
    for (const auto& [name, v] : rep.part3_values) part3[name] = num(v);
    json out{{"config", to_json(rep.config)},
             {"theta_star", to_json(rep.theta_star)},
             {"kl_floor", num(rep.kl_floor)},
             {"geometry", to_json(rep.geometry)},
             {"burn_in_n", num(rep.burn_in_n)},
             {"burn_in_applied", rep.burn_in_applied},
             {"slope_n", rep.slope_n},
             {"nonconverged", rep.nonconverged},
             {"summaries", summaries},
             {"part3_values", part3},
             {"part3_spread", num(rep.part3_spread)},
             {"cells", cells}};
    out["theta_E"] = rep.theta_E ? to_json(*rep.theta_E) : json(nullptr);
    return out;
}

std::string rate_csv(const RateReport& rep) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "metric,n,replicate,value,converged,median,slope,intercept\n";
    const std::size_t R = static_cast<std::size_t>(rep.config.replicates);
    for (std::size_t m = 0; m < rep.summaries.size(); ++m) {
        const auto& s = rep.summaries[m];
        for (std::size_t gi = 0; gi < rep.config.n_grid.size(); ++gi)
            for (std::size_t r = 0; r < R; ++r) {
                const auto& c = rep.cells[gi * R + r];
                os << s.metric << ',' << c.n << ',' << c.replicate << ',' << c.metrics[m] << ','
                   << (c.converged ? 1 : 0) << ',' << s.median[gi] << ',' << s.slope << ',' << s.intercept << '\n';
            }
    }
    return os.str();
}

std::string loglog_svg(const MetricSummary& summary, const std::vector<std::size_t>& n_grid) {
    constexpr double W = 640, H = 420, L = 70, Rm = 20, Tm = 40, B = 50;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n_grid.size() && i < summary.median.size(); ++i)
        if (summary.median[i] > 0.0 && std::isfinite(summary.median[i]))
            pts.emplace_back(std::log10(static_cast<double>(n_grid[i])), std::log10(summary.median[i]));
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!pts.empty()) {
        x0 = x1 = pts[0].first;
        y0 = y1 = pts[0].second;
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
        if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
        if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad, y1 += pad;
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << summary.metric << " (median), slope " << fmt(summary.slope, 4) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 n</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 median</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(xv, 3) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 3
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(yv, 3) << "</text>\n";
    }
    if (!pts.empty()) {
        os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) os << px(x) << ',' << py(y) << ' ';
        os << "\"/>\n";
        for (const auto& [x, y] : pts)
            os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        if (std::isfinite(summary.slope)) {
            // fitted line, natural-log fit converted to log10 axes
            auto fy = [&](double x) { return (summary.intercept + summary.slope * x * std::log(10.0)) / std::log(10.0); };
            os << "<line x1=\"" << px(x0) << "\" y1=\"" << py(fy(x0)) << "\" x2=\"" << px(x1) << "\" y2=\""
               << py(fy(x1)) << "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

json to_json(const InequalityCheck& c) {
    return json{{"name", c.name}, {"lhs", num(c.lhs)}, {"rhs", num(c.rhs)}, {"passed", c.passed}};
}

json to_json(const LocalGeometryReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return json{{"beta", r.beta},
                {"lambda0", num(r.lambda0)},
                {"B_A_phi", num(r.B_A_phi)},
                {"rho0", num(r.rho0)},
                {"delta_norm", num(r.delta_norm)},
                {"delta_norm_H0", num(r.delta_norm_H0)},
                {"S", num(r.S)},
                {"inside", r.inside},
                {"checks", checks},
                {"all_passed", r.all_passed}};
}

json to_json(const ConcentrationReport& r) {
    return json{{"n", r.n},
                {"delta", r.delta},
                {"trials", r.trials},
                {"bound", num(r.bound)},
                {"violations", r.violations},
                {"violation_freq", num(r.violation_freq)},
                {"allowed_freq", num(r.allowed_freq)},
                {"median_eta", num(r.median_eta)},
                {"max_eta", num(r.max_eta)},
                {"d_star", num(r.d_star)},
                {"lambda_star", num(r.lambda_star)},
                {"B_phi", num(r.B_phi)},
                {"passed", r.passed}};
}

} // namespace softirl
