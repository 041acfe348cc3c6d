#pragma once

#include "bdsoc/core.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bdsoc {

struct Tolerances {
    Scalar epsilon = 0.05;         ///< epsilon of the attainment inequality and of the epsilon-optimal certificate
    Scalar slope = 0.2;            ///< relative slack of fitted stability exponents
    Scalar continuity = 0.25;      ///< slack of the continuity slopes
    Scalar variation = 2.0;        ///< max/min factor of bounded ratio ladders
    Scalar z = 0.1;                ///< relative Z error of the representation check
    Scalar norm_lower = 0.5;
    Scalar norm_upper = 2.0;
    Scalar lipschitz_slack = 1.05;
    Scalar agreement = 1.0;        ///< constant of the backend budget (dt + cell)
};

/// Everything a run needs. Seeds have no defaults: a config without them is
/// rejected.
struct ExperimentConfig {
    std::string pipeline = "verify-all";
    std::string model = "zero";
    std::map<std::string, Scalar> parameters;
    Scalar t0 = 0.0;
    Scalar horizon = 1.0;
    Index steps = 50;
    Scalar lower = -3.0;
    Scalar upper = 3.0;
    Index points = 601;   ///< grid-DP nodes
    Index mc_points = 61; ///< hat-basis nodes of the regression-MC backend
    Index paths = 10000;
    std::optional<Seed> master_seed;
    std::optional<Seed> b_seed;
    Scalar start = 0.0;
    Index control = 0;             ///< constant control for simulate / solve-bdsde
    std::vector<Scalar> controls;  ///< replaces the model's control set when non-empty
    std::vector<Scalar> penalty_levels;
    Index replicas = 8;
    Index continuity_fields = 64;
    Scalar continuity_probe = 1.0; ///< offset of the continuity probe from start
    Index comparison_instances = 20;
    Tolerances tol;
    std::string output = "out";
    unsigned workers = 0;          ///< 0: hardware concurrency
};

std::vector<std::string> pipeline_names();

/// The defaults as a JSON document; its key set is the schema.
nlohmann::json default_config_json();
/// Rejects unknown keys (listing the valid ones), wrong types, unknown
/// pipelines and missing seeds.
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Defaults merged with the file's content.
nlohmann::json load_config_json(const std::string& path);
/// Applies "a.b.c=value"; the value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct CheckResult {
    std::string criterion; ///< "C1" .. "C12", or "model" / "aux"
    std::string name;
    Scalar value = 0.0;
    Scalar tolerance = 0.0;
    std::string relation;  ///< how value is compared with tolerance
    bool pass = true;
    Seed master_seed = 0;
    Seed b_seed = 0;
};

struct RunResult {
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;
    bool pass = true;
};

/// Executes the configured pipeline, writing CSVs, checks.csv and
/// summary.json into config.output.
RunResult run(const ExperimentConfig& config);

/// Table of every check recorded in a run directory. Throws Error naming the
/// expected files when the directory holds no run.
std::string report(const std::string& directory);

} // namespace bdsoc
