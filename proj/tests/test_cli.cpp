#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mvinfo/config.hpp"
#include "mvinfo/datagen.hpp"
#include "mvinfo/nn_core.hpp"
#include "mvinfo/runner.hpp"

using namespace mvinfo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

nlohmann::json tiny_train_config(const fs::path& out) {
    return {{"mode", "train"},
            {"seeds", {1, 2}},
            {"out_dir", out.string()},
            {"data",
             {{"classes", 6},
              {"dim", 8},
              {"mean_scale", 1.0},
              {"style_dim", 4},
              {"x_style_scale", 1.0},
              {"s_style_scale", 1.0},
              {"noise_scale", 0.3},
              {"per_class", 8},
              {"seed", 3}}},
            {"loss", {{"cl", {{"weight", 1.0}, {"kind", "cpc"}}}}},
            {"optimizer",
             {{"kind", "adam"}, {"lr", 0.002}, {"steps", 40}, {"batch_size", 16}}},
            {"encoder", {{"hidden", {16}}, {"emb_dim", 8}}},
            {"eval", {{"labeled_per_class", 5}, {"eval_every", 20}}}};
}

} // namespace

TEST_CASE("config validation catches the documented failure modes") {
    CHECK_THROWS_AS(cli::parse_config(nlohmann::json::array()), cli::config_error);
    CHECK_THROWS_AS(cli::parse_config({{"mode", "unknown"}}), cli::config_error);
    CHECK_THROWS_AS(cli::parse_config({{"seeds", {1}}}), cli::config_error);
    CHECK_THROWS_AS(
        cli::parse_config({{"mode", "train"}, {"seeds", nlohmann::json::array()}}),
        cli::config_error);

    // Train without a loss block.
    nlohmann::json no_loss{{"mode", "train"},
                           {"data", {{"classes", 4}}},
                           {"optimizer", {{"steps", 10}}}};
    CHECK_THROWS_AS(cli::parse_config(no_loss), cli::config_error);

    const auto ok = cli::parse_config({{"mode", "bounds"}});
    CHECK(ok.seeds == std::vector<std::uint64_t>{1});
    CHECK(ok.out_dir == "out");

    // The hash is stable across an insertion-order change of the same config.
    const auto a = cli::parse_config({{"mode", "bounds"}, {"seeds", {7}}});
    const auto b = cli::parse_config({{"seeds", {7}}, {"mode", "bounds"}});
    CHECK(a.config_hash() == b.config_hash());
}

TEST_CASE("verify-theorems mode writes a passing report") {
    const auto out = fresh_dir("mvinfo_cli_vt");
    auto config = cli::parse_config({{"mode", "verify-theorems"},
                                     {"seeds", {4}},
                                     {"out_dir", out.string()},
                                     {"tables",
                                      {{"count", 15}, {"family", "structured"},
                                       {"lemma1_count", 10}}}});
    const auto outcome = cli::run(config);
    CHECK(outcome.exit_code == 0);
    REQUIRE(fs::exists(out / "theorems_seed4.json"));
    const auto report = nlohmann::json::parse(slurp(out / "theorems_seed4.json"));
    CHECK(report.at("pass").get<bool>());
    CHECK(report.at("checks").size() >= 10);
    REQUIRE(fs::exists(out / "manifest.json"));
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.at("pass").get<bool>());
    CHECK(manifest.at("mode") == "verify-theorems");
    // Every report carries the config hash for auditability.
    CHECK(report.at("config_hash") == manifest.at("config_hash"));
    fs::remove_all(out);
}

TEST_CASE("bounds mode emits the documented csv schema") {
    const auto out = fresh_dir("mvinfo_cli_bounds");
    auto config = cli::parse_config({{"mode", "bounds"},
                                     {"seeds", {2}},
                                     {"out_dir", out.string()},
                                     {"tables", {{"count", 10}}}});
    CHECK(cli::run(config).exit_code == 0);
    const auto csv = slurp(out / "bounds_seed2.csv");
    CHECK(csv.rfind("table_id,exact_pe,loose_lower,tight_lower,tight_upper,loose_upper\n", 0) ==
          0);
    // One ssl and one ssl_min row per table.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
    fs::remove_all(out);
}

TEST_CASE("train mode: csv, checkpoints, and reuse through eval mode") {
    const auto out = fresh_dir("mvinfo_cli_train");
    auto config = cli::parse_config(tiny_train_config(out));
    CHECK(cli::run(config).exit_code == 0);

    const auto csv = slurp(out / "train.csv");
    CHECK(csv.rfind("seed,step,loss_cl,loss_fp,loss_ip,eval_acc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5); // header + 2 rows x 2 seeds

    REQUIRE(fs::exists(out / "checkpoint_seed1" / "manifest.json"));
    const auto [spec, params] = nn::load_checkpoint(out / "checkpoint_seed1");
    CHECK(spec.input_dim == 8);
    CHECK(params.scalar_count() > 0);

    // The checkpoint drives eval mode.
    const auto eval_out = fresh_dir("mvinfo_cli_eval");
    auto eval_config = cli::parse_config(
        {{"mode", "eval"},
         {"seeds", {1}},
         {"out_dir", eval_out.string()},
         {"data", tiny_train_config(out).at("data")},
         {"encoder", {{"checkpoint", (out / "checkpoint_seed1").string()}}},
         {"eval", {{"labeled_per_class", 5}, {"linear", false}}}});
    CHECK(cli::run(eval_config).exit_code == 0);
    const auto report = nlohmann::json::parse(slurp(eval_out / "eval_seed1.json"));
    CHECK(report.at("knn").at("accuracy").get<double>() >= 0.0);
    fs::remove_all(out);
    fs::remove_all(eval_out);
}

TEST_CASE("gen-data mode produces loadable artifacts") {
    const auto out = fresh_dir("mvinfo_cli_gen");
    auto config = cli::parse_config(
        {{"mode", "gen-data"},
         {"seeds", {6}},
         {"out_dir", out.string()},
         {"data", {{"classes", 4}, {"dim", 5}, {"per_class", 6}}},
         {"discrete", {{"t_size", 2}, {"x_style", 2}, {"s_style", 2}, {"corrupt_p", 0.2}}}});
    CHECK(cli::run(config).exit_code == 0);

    const auto ds = datagen::load_dataset(out / "dataset_seed6");
    CHECK(ds.x.rows() == 24);
    const auto table =
        info::JointTable::from_json(nlohmann::json::parse(slurp(out / "table_seed6.json")));
    CHECK(table.axis_size(0) == 2);
    CHECK(table.axis_size(1) == 4);
    const auto side = nlohmann::json::parse(slurp(out / "table_seed6_info.json"));
    CHECK(side.at("eps_info").get<double>() > 0.0);
    fs::remove_all(out);
}

TEST_CASE("reruns with the same config and seed are byte identical") {
    // Training twice.
    const auto out1 = fresh_dir("mvinfo_det_a");
    const auto out2 = fresh_dir("mvinfo_det_b");
    CHECK(cli::run(cli::parse_config(tiny_train_config(out1))).exit_code == 0);
    CHECK(cli::run(cli::parse_config(tiny_train_config(out2))).exit_code == 0);
    CHECK(slurp(out1 / "train.csv") == slurp(out2 / "train.csv"));
    CHECK(slurp(out1 / "eval_seed1.json") == slurp(out2 / "eval_seed1.json"));
    CHECK(slurp(out1 / "checkpoint_seed1" / "weight_0.f64") ==
          slurp(out2 / "checkpoint_seed1" / "weight_0.f64"));

    // The estimator experiment twice.
    auto mi_config = [&](const fs::path& out) {
        return cli::parse_config(
            {{"mode", "mi-convergence"},
             {"seeds", {3}},
             {"out_dir", out.string()},
             {"mi",
              {{"flip_prob", 0.1},
               {"n_grid", {64, 128}},
               {"repeats", 2},
               {"critic",
                {{"hidden", {8}}, {"emb_dim", 4}, {"train_steps", 80}, {"lr", 0.02}}}}}});
    };
    const auto mi1 = fresh_dir("mvinfo_det_mi_a");
    const auto mi2 = fresh_dir("mvinfo_det_mi_b");
    CHECK(cli::run(mi_config(mi1)).exit_code == 0);
    CHECK(cli::run(mi_config(mi2)).exit_code == 0);
    CHECK(slurp(mi1 / "mi_convergence_seed3.json") == slurp(mi2 / "mi_convergence_seed3.json"));
    CHECK(slurp(mi1 / "mi_convergence_seed3.csv") == slurp(mi2 / "mi_convergence_seed3.csv"));

    for (const auto& d : {out1, out2, mi1, mi2}) fs::remove_all(d);
}
