#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softirl/losses.hpp"
#include "softirl/opt.hpp"

namespace softirl {

enum class ExpertKind { well_specified, misspecified };

/// Random instance recipe. Sub-streams of `seed`: 0 dynamics, 1 features,
/// 2 expert, 3 kernel repair draws.
struct InstanceSpec {
    int S = 5;
    int A = 3;
    int T = 4;
    bool deterministic = false;
    std::uint64_t seed = 1;
    int d = 6;
    bool exclude_kernel = true;
    double beta = 0.5;
    ExpertKind expert = ExpertKind::well_specified;
    double theta_norm = 1.0;  ///< ||theta_E|| for well-specified experts
};

struct Instance {
    Mdp mdp;
    FeatureMap features;
    Policy expert;
    std::optional<Vector> theta_E;
    double beta;
};

/// Dirichlet(1) kernel rows and initial distribution, or per-(t, a) random
/// permutation maps with a one-hot start state when `deterministic`; i.i.d.
/// standard normal features; the expert is pi*_{theta_E} (theta_E uniform on
/// the sphere of radius theta_norm) or a softmax of standard normal logits.
/// With exclude_kernel the kernel components of the features are redrawn
/// until lambda_min(H(0)) > 1e-8 (DomainError after 16 attempts).
Instance generate_instance(const InstanceSpec& spec);

/// Random Mdp alone, using the dynamics sub-stream rules above.
Mdp random_mdp(int S, int A, int T, bool deterministic, std::uint64_t seed);
FeatureMap random_features(int T, int S, int A, int d, std::uint64_t seed);
/// Softmax policy with standard normal logits.
Policy random_policy(int T, int S, int A, std::uint64_t seed, std::string label = "random-softmax");

inline const std::vector<std::string>& all_rate_metrics() {
    static const std::vector<std::string> names = {"kl_expert",     "excess_kl",     "param_err_hess", "kl_pistar_hat",
                                                   "kl_hat_pistar", "kl_pistar_sym", "hellinger"};
    return names;
}

struct RateConfig {
    InstanceSpec instance;
    FitConfig fit;  ///< beta is taken from the instance
    std::vector<std::size_t> n_grid;
    int replicates = 32;
    std::uint64_t data_seed = 7;
    std::vector<std::string> metrics = all_rate_metrics();
    double burn_in_delta = 0.1;
    int threads = 1;

    void validate() const;
};

struct RateCell {
    std::size_t n = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    Vector theta_hat;
    bool converged = false;
    bool active_ball_constraint = false;
    int iterations = 0;
    double feature_match_error = 0.0;  ///< max_i |E^{pi_hat} phi_i - empirical phi_i|
    std::vector<double> metrics;       ///< aligned with RateConfig::metrics
};

struct MetricSummary {
    std::string metric;
    std::vector<double> median;  ///< aligned with n_grid
    std::vector<double> mean;
    double slope = 0.0;
    double intercept = 0.0;
    int points_used = 0;
};

struct RateReport {
    RateConfig config;
    Vector theta_star;
    std::optional<Vector> theta_E;
    double kl_floor = 0.0;  ///< D_KL(P^E, P^{pi*_{theta*}})
    GeometryConstants geometry;
    double burn_in_n = 0.0;
    bool burn_in_applied = false;
    std::vector<std::size_t> slope_n;
    int nonconverged = 0;
    std::vector<RateCell> cells;  ///< n-major, then replicate
    std::vector<MetricSummary> summaries;
    /// Medians at the largest n of D_H^2, KL(pi*, pi_hat), KL(pi_hat, pi*),
    /// symmetric KL and beta^{-1}||theta_hat - theta*||^2_{H*} (those available),
    /// and the max/min spread among them.
    std::vector<std::pair<std::string, double>> part3_values;
    double part3_spread = 0.0;
};

RateReport run_rate_experiment(const RateConfig& cfg);

/// Least-squares fit of log y against log x.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> values);

/// psi(x) = (e^x - x - 1) / x^2, chi(x) = (e^x - 1) / x, with Taylor series
/// below |x| = 1e-4.
double psi(double x);
double chi(double x);
/// f(x) = x chi(-R x) = (1 - e^{-R x}) / R and its inverse on [0, 1/R).
double increasing_function(double x, double R);
double increasing_function_inverse(double y, double R);

struct InequalityCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

struct LocalGeometryReport {
    double beta = 0.0;
    double lambda0 = 0.0;     ///< lambda_min(H(theta0))
    double B_A_phi = 0.0;     ///< max score norm on a 21-point grid of the segment
    double rho0 = 0.0;
    double delta_norm = 0.0;  ///< ||theta1 - theta0||
    double delta_norm_H0 = 0.0;
    double S = 0.0;           ///< beta^{-1} B_A_phi ||theta1 - theta0||
    bool inside = false;      ///< delta_norm_H0 <= rho0
    std::vector<InequalityCheck> checks;
    bool all_passed = false;
};

/// Inside the Dikin ball: density ratio, Hessian sandwich, Bregman, symmetric
/// Bregman and Hellinger/KL bounds with their local constants. Outside: the
/// global psi/chi forms with S.
LocalGeometryReport check_local_geometry(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0,
                                         const Vector& theta1, std::size_t cap = kDefaultEnumerationCap);

/// theta0 + scale * rho0 * u / ||u||_{H0}, where rho0 uses the segment score
/// bound of the resulting segment itself (found by bisection on the step length).
Vector dikin_point(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0, const Vector& u,
                   double scale = 1.0, std::size_t cap = kDefaultEnumerationCap);

/// max score norm over theta0 + k/20 (theta1 - theta0), k = 0..20.
double segment_score_bound(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta0,
                           const Vector& theta1, std::size_t cap = kDefaultEnumerationCap);

/// |D^3 J[xi, xi, zeta]| <= beta^{-1} B_A_phi ||zeta|| xi^T H xi at theta, with
/// B_A_phi the exact max score norm at theta.
InequalityCheck check_self_concordance(const Mdp& mdp, const FeatureMap& features, double beta, const Vector& theta,
                                       const Vector& xi, const Vector& zeta,
                                       std::size_t cap = kDefaultEnumerationCap);

struct ConcentrationSetup {
    Vector theta_star;
    Matrix H_star;
    double lambda_star = 0.0;
    double d_star = 0.0;
    double B_phi = 0.0;
    GeometryMode mode = GeometryMode::exact;
    Vector expert_features;
};

ConcentrationSetup concentration_setup(const Mdp& mdp, const FeatureMap& features, double beta, const Policy& expert,
                                       const FitConfig& cfg, std::size_t cap = kDefaultEnumerationCap);

struct ConcentrationReport {
    std::size_t n = 0;
    double delta = 0.0;
    int trials = 0;
    double bound = 0.0;
    int violations = 0;
    double violation_freq = 0.0;
    double allowed_freq = 0.0;  ///< delta + 2 sqrt(delta (1 - delta) / trials)
    double median_eta = 0.0;
    double max_eta = 0.0;
    double d_star = 0.0;
    double lambda_star = 0.0;
    double B_phi = 0.0;
    std::vector<double> eta;
    bool passed = false;
};

/// eta_n = ||phi_hat_n - phi(pi_E)||_{H*^{-1}} over `trials` datasets of size n
/// (dataset k uses child_seed(seed, k)) against
/// sqrt(2 d* log(1/delta) / n) + 4 B_phi log(1/delta) / (sqrt(lambda*) n).
ConcentrationReport check_concentration(const Mdp& mdp, const FeatureMap& features, const Policy& expert,
                                        const ConcentrationSetup& setup, std::size_t n, double delta, int trials,
                                        std::uint64_t seed, int threads = 1);

/// Runs job(i) for i in [0, count) on `threads` workers. Jobs must write only
/// to their own output slot.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job);

std::string to_string(ExpertKind kind);

} // namespace softirl
