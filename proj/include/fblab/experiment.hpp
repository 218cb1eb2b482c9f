#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fblab/io.hpp"

namespace fblab {

/// Process exit codes of `fblab run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitSolverFailed = 2;
inline constexpr int kExitUsage = 64;

/// Library version string ("major.minor.patch").
const char* version();

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct ExperimentReport {
    std::string name;
    std::string kind;
    /// kExitOk, kExitCheckFailed or kExitSolverFailed.
    int status = kExitOk;
    std::string error;
    double wall_time = 0.0;
    /// Paths relative to the output root, in write order.
    std::vector<std::string> files;
    std::vector<PgmImage> images;
    std::vector<CheckResult> checks;
    nlohmann::json summary = nlohmann::json::object();

    bool checks_pass() const noexcept;
};

/// Reads and parses a JSON file. Throws ConfigError with an empty field path
/// on I/O or syntax errors.
nlohmann::json load_config(const std::filesystem::path& path);

/// Experiment objects of a config: {"experiment": {...}} or
/// {"experiments": [...]}. Every experiment is validated before returning;
/// ConfigError carries the field path ("body.radius", or
/// "experiments[2].body.radius" inside a batch).
std::vector<nlohmann::json> experiments_of(const nlohmann::json& config);

/// Validates one experiment object; throws ConfigError.
void validate_experiment(const nlohmann::json& experiment);

/// Runs one validated experiment, writing into out_root / name. Solver
/// failures are caught: the report then has status kExitSolverFailed, an
/// error message and a failure.json next to whatever diagnostics exist.
/// Built-in checks run only when check is true.
ExperimentReport run_experiment(const nlohmann::json& experiment, const std::filesystem::path& out_root, bool check);

struct SuiteResult {
    std::vector<ExperimentReport> reports;
    int status = kExitOk;
    std::filesystem::path manifest;
};

/// Validates the whole config, runs every experiment in order and writes
/// out_root / manifest.json. The status is the worst experiment status
/// (solver failure over check failure).
SuiteResult run_suite(const nlohmann::json& config, const std::filesystem::path& out_root, bool check,
                      const std::string& config_path = {});

}  // namespace fblab
