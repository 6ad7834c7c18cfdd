#pragma once

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace pgmt::cli {

// Invalid configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& command_names();

// Fills defaults and validates; throws ConfigError.
nlohmann::json normalize_config(const nlohmann::json& config);

// Runs the experiment described by a normalized config and returns the report:
// {command, config, config_hash, seed, results, checks: [{name, value, tolerance, pass}], pass, partial}.
nlohmann::json run(const nlohmann::json& config);

// One line per check, for standard output.
std::string summary_table(const nlohmann::json& report);

} // namespace pgmt::cli
