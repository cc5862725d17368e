#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "softirl/experiments.hpp"

namespace softirl {

using json = nlohmann::json;

/// Parses a JSON file; InputError names the path on failure.
json read_json_file(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories first.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Pretty-printed JSON with a trailing newline (stable byte output).
std::string dump(const json& j);

// Each *_from_json throws InputError whose message starts with `where` (a file
// path or a JSON pointer) and names the offending field.

json to_json(const Mdp& mdp);
Mdp mdp_from_json(const json& j, const std::string& where);

json to_json(const StateActionTable& table);
StateActionTable table_from_json(const json& j, const std::string& where);

json to_json(const Policy& policy);
Policy policy_from_json(const json& j, const std::string& where);

json to_json(const FeatureMap& features);
FeatureMap features_from_json(const json& j, const std::string& where);

json to_json(const Trajectory& tau);
json to_json(const Dataset& data);
Dataset dataset_from_json(const json& j, const std::string& where);

json to_json(const StateTable& table);
json to_json(const SoftSolution& sol);
SoftSolution soft_solution_from_json(const json& j, const std::string& where);

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& where);

json to_json(const FitConfig& cfg);
/// Unknown keys are rejected.
FitConfig fit_config_from_json(const json& j, const std::string& where, FitConfig defaults = {});
json to_json(const IrlFitResult& res);

json to_json(const RiskReport& r);
json to_json(const NonconvexityProbe& p);
json to_json(const GeometryConstants& g);

json to_json(const InstanceSpec& spec);
/// Unknown keys are rejected.
InstanceSpec instance_spec_from_json(const json& j, const std::string& where, InstanceSpec defaults = {});

json to_json(const RateConfig& cfg);
json to_json(const RateReport& rep);
/// Long format: metric,n,replicate,value,converged,median,slope,intercept.
std::string rate_csv(const RateReport& rep);
/// Log-log line chart of the per-n medians with the fitted slope annotated.
std::string loglog_svg(const MetricSummary& summary, const std::vector<std::size_t>& n_grid);

json to_json(const InequalityCheck& c);
json to_json(const LocalGeometryReport& r);
json to_json(const ConcentrationReport& r);

/// Throws InputError listing every key of `j` outside `allowed`.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

} // namespace softirl
