#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qdc {

/// Bad scenario input; `field` is the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field.empty() ? what : "field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

const std::vector<std::string>& experiment_names();

/// Parses a scenario file; malformed JSON is a ConfigError.
nlohmann::json load_scenario_file(const std::string& path);

/// Merges the experiment defaults under the raw scenario, applies `key=value`
/// overrides (dotted paths, array indices as numbers) and the seed override,
/// then fills in values that depend on other fields. Unknown keys and type
/// mismatches are ConfigErrors.
nlohmann::json resolve_scenario(const nlohmann::json& raw, const std::vector<std::string>& overrides = {},
                                std::optional<std::uint64_t> seed = std::nullopt);

/// FNV-1a 64 of the compact dump of the resolved scenario, as 16 hex digits.
std::string scenario_hash(const nlohmann::json& resolved);

struct ExperimentReport {
    /// Everything except the timestamp.
    nlohmann::json summary;
    /// CSV detail files by file name.
    std::vector<std::pair<std::string, std::string>> files;
    bool pass = false;
};

/// Runs a resolved scenario. Throws ConfigError for parameters that only turn
/// out invalid when the experiment is set up.
ExperimentReport run_experiment(const nlohmann::json& resolved);

struct RunOptions {
    std::string path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool force = false;
    int threads = 0;  // 0 keeps the runtime default
};

/// Full CLI flow. Returns 0 when every check passes, 1 when a check fails
/// and 2 for configuration errors. Existing reports are kept unless force.
int run_scenario(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace qdc
