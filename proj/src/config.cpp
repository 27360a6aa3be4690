#include "mvinfo/config.hpp"

#include <fstream>

namespace mvinfo::cli {

namespace {

const char* kModes[] = {"verify-theorems", "bounds", "train", "eval", "mi-convergence",
                        "gen-data"};

void require_block(const nlohmann::json& j, const char* field, const std::string& mode) {
    if (!j.contains(field)) {
        throw config_error("config: mode '" + mode + "' requires a '" + field + "' block");
    }
}

} // namespace

std::uint64_t ExperimentConfig::config_hash() const {
    // The hash identifies the experiment, not its output location.
    nlohmann::json canonical_json = raw;
    canonical_json.erase("out_dir");
    const std::string canonical = canonical_json.dump(); // nlohmann::json orders keys
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot read " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config: top level must be an object");

    ExperimentConfig config;
    config.raw = j;
    if (!j.contains("mode") || !j.at("mode").is_string()) {
        throw config_error("config: missing string field 'mode'");
    }
    config.mode = j.at("mode").get<std::string>();
    bool known = false;
    for (const char* m : kModes) known = known || config.mode == m;
    if (!known) throw config_error("config: unknown mode '" + config.mode + "'");

    if (j.contains("seeds")) {
        if (!j.at("seeds").is_array() || j.at("seeds").empty()) {
            throw config_error("config: 'seeds' must be a non-empty array");
        }
        for (const auto& s : j.at("seeds")) {
            if (!s.is_number_unsigned() && !s.is_number_integer()) {
                throw config_error("config: 'seeds' entries must be integers");
            }
            config.seeds.push_back(s.get<std::uint64_t>());
        }
    } else {
        config.seeds.push_back(1);
    }

    config.out_dir = j.value("out_dir", std::string("out"));

    if (config.mode == "train") {
        require_block(j, "loss", config.mode);
        require_block(j, "optimizer", config.mode);
        require_block(j, "data", config.mode);
    } else if (config.mode == "eval") {
        require_block(j, "data", config.mode);
        require_block(j, "encoder", config.mode);
    } else if (config.mode == "mi-convergence") {
        require_block(j, "mi", config.mode);
    } else if (config.mode == "gen-data") {
        if (!j.contains("data") && !j.contains("discrete")) {
            throw config_error("config: gen-data needs a 'data' or 'discrete' block");
        }
    }
    return config;
}

} // namespace mvinfo::cli
