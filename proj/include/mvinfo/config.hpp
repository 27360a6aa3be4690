#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvinfo/common.hpp"

namespace mvinfo::cli {

// Configuration problems exit with code 2; check failures with code 1.
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

struct ExperimentConfig {
    std::string mode; // verify-theorems | bounds | train | eval | mi-convergence | gen-data
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir;
    nlohmann::json raw; // full parsed config, echoed into reports

    std::uint64_t config_hash() const; // FNV-1a over the canonical dump
};

// Reads and validates a config file; field problems name the offending path.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j);

} // namespace mvinfo::cli
