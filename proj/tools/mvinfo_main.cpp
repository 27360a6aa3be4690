#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mvinfo/config.hpp"
#include "mvinfo/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mvinfo: exact information-theory lab for multi-view self-supervision"};
    app.footer("modes: verify-theorems | bounds | train | eval | mi-convergence | gen-data");

    std::string mode;
    std::string config_path;
    std::string out_dir;
    std::string seeds_csv;
    app.add_option("mode", mode, "execution mode")->required();
    app.add_option("--config", config_path, "JSON experiment configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--seeds", seeds_csv, "comma-separated seed list (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        auto config = mvinfo::cli::load_config(config_path);
        if (config.mode != mode) {
            std::fprintf(stderr, "mvinfo: config mode '%s' does not match requested '%s'\n",
                         config.mode.c_str(), mode.c_str());
            return 2;
        }
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!seeds_csv.empty()) {
            config.seeds.clear();
            std::size_t pos = 0;
            while (pos < seeds_csv.size()) {
                const auto comma = seeds_csv.find(',', pos);
                const auto token = seeds_csv.substr(
                    pos, comma == std::string::npos ? std::string::npos : comma - pos);
                config.seeds.push_back(std::stoull(token));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (config.seeds.empty()) {
                std::fprintf(stderr, "mvinfo: --seeds produced an empty list\n");
                return 2;
            }
        }

        const auto outcome = mvinfo::cli::run(config);
        std::printf("%s: %s (manifest: %s)\n", config.mode.c_str(),
                    outcome.exit_code == 0 ? "ok" : "CHECK FAILED",
                    (config.out_dir / "manifest.json").c_str());
        return outcome.exit_code;
    } catch (const mvinfo::cli::config_error& e) {
        std::fprintf(stderr, "mvinfo: %s\n", e.what());
        return 2;
    } catch (const mvinfo::io_error& e) {
        std::fprintf(stderr, "mvinfo: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mvinfo: error: %s\n", e.what());
        return 2;
    }
}
