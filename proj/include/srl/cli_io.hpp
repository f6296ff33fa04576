#pragma once

#include "srl/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace srl::io {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

const std::vector<std::string>& actions();

struct ExperimentConfig {
    std::string action;
    nlohmann::json model_json;
    RecursionModel model;
    /// Action parameters with defaults filled in.
    nlohmann::json params;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out_dir;
};

/// Top-level keys: model, params, seed, action (optional; must match). Unknown keys
/// anywhere are rejected with ConfigError. `seed` overrides the document's seed.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& action, std::optional<std::uint64_t> seed,
                              unsigned workers, const std::string& out_dir);

/// Hash of the canonical config (model, action, filled params, seed); workers and
/// the output directory are excluded.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hex(std::uint64_t h);

struct Stage {
    std::string name;
    double seconds = 0;
};

struct RunManifest {
    std::string action;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string status = "ok";
    int exit_code = 0;
    std::string error;
    std::string failed_hypothesis;
    double wall_seconds = 0;
    std::vector<Stage> stages;
    std::vector<std::string> outputs;
    nlohmann::json results = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Runs the action and writes its outputs; throws srl errors. The manifest is not written here.
RunManifest run(const ExperimentConfig& cfg);

/// Writes via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);

/// Full CLI flow: parse, run, always write manifest.json. Returns the exit code
/// (0 ok, 2 schema, 3 hypothesis refusal, 4 numeric fault, 1 other).
int run_cli(const std::string& action, const std::string& config_path, std::optional<std::uint64_t> seed,
            unsigned workers, const std::string& out_dir);

}  // namespace srl::io
