#pragma once

#include <json.hpp>

#include "mvinfo/config.hpp"

namespace mvinfo::cli {

struct RunOutcome {
    int exit_code = 0; // 0 ok, 1 a check failed, 2 invalid configuration or I/O
    nlohmann::ordered_json manifest;
};

// Executes the configured mode, writes reports and the run manifest under
// config.out_dir (manifest last, atomically), and returns the exit code.
RunOutcome run(const ExperimentConfig& config);

} // namespace mvinfo::cli
