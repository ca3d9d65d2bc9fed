// JSON configuration parsing for the CLI. Time-valued keys carry a _us
// suffix and are converted to seconds here.

#pragma once

#include <filesystem>

#include "ptpsync/harness.hpp"

namespace ptpsync {

ExperimentSpec parse_experiment_file(const std::filesystem::path& file);
ExperimentSpec parse_experiment_json(const std::string& text);

}  // namespace ptpsync
