#include "mvinfo/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mvinfo/bounds.hpp"
#include "mvinfo/datagen.hpp"
#include "mvinfo/eval_protocols.hpp"
#include "mvinfo/info_engine.hpp"
#include "mvinfo/repr_search.hpp"
#include "mvinfo/rng.hpp"
#include "mvinfo/trainer.hpp"

namespace mvinfo::cli {

namespace {

constexpr const char* kArtifactVersion = "0.1.0";
constexpr const char* kPrngId = "xoshiro256ss+boxmuller";

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << content;
    if (!out) throw io_error("short write to " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string hash_string(const ExperimentConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config.config_hash()));
    return buf;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// A structured table spec whose alphabet sizes stay within the enumeration
// budget (|T| <= 3, |X| <= 5, |S| <= 5, |Z| = |X|).
datagen::DiscreteSpec random_structured_spec(Rng& rng) {
    datagen::DiscreteSpec spec;
    spec.t_size = rng.range_int(2, 3);
    spec.x_style = 1;
    spec.s_style = 1;
    spec.shared_style = 1;
    if (spec.t_size == 2) {
        switch (rng.range_int(0, 2)) {
            case 0: spec.x_style = 2; break;
            case 1: spec.shared_style = 2; break;
            default: break;
        }
        if (spec.shared_style == 1) spec.s_style = rng.range_int(1, 2);
    }
    const double grid[] = {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    spec.corrupt_p = grid[rng.below(7)];
    spec.weight_resolution = 24;
    spec.seed = rng.next_u64();
    return spec;
}

datagen::DiscreteTable random_unstructured_table(Rng& rng, int x_max = 4, int s_max = 4) {
    return datagen::random_discrete(
        {rng.range_int(2, 3), rng.range_int(2, x_max), rng.range_int(2, s_max)}, 89,
        rng.next_u64());
}

// ---------------------------------------------------------------------------
// verify-theorems
// ---------------------------------------------------------------------------

struct CheckAggregate {
    std::string kind;
    double worst = 0.0; // min slack for "ge", max residual for "eq"
    std::size_t tables = 0;
    bool pass = true;
};

void fold_report(std::map<std::string, CheckAggregate>& agg, const repr::TheoremReport& report) {
    for (const auto& check : report.checks) {
        auto& a = agg[report.name + ": " + check.name];
        if (a.tables == 0) {
            a.kind = check.kind;
            a.worst = check.value;
        } else {
            a.worst = check.kind == "ge" ? std::min(a.worst, check.value)
                                         : std::max(a.worst, check.value);
        }
        ++a.tables;
        a.pass = a.pass && check.pass;
    }
}

int run_verify_theorems(const ExperimentConfig& config, std::vector<std::string>& results) {
    const auto tables_cfg = config.raw.value("tables", nlohmann::json::object());
    const int count = tables_cfg.value("count", 500);
    const std::string family = tables_cfg.value("family", std::string("structured"));
    const int lemma1_count = tables_cfg.value("lemma1_count", 100);
    if (family != "structured" && family != "random") {
        throw config_error("config: tables.family must be 'structured' or 'random'");
    }
    // The compression-gap equalities need the multi-view factor structure;
    // unstructured tables only support the task-information chain.
    const bool run_theorem2 = tables_cfg.value("theorem2", family == "structured");

    bool all_pass = true;
    for (std::uint64_t seed : config.seeds) {
        std::map<std::string, CheckAggregate> agg;
        for (int i = 0; i < count; ++i) {
            Rng rng(substream_seed(seed, "tables", static_cast<std::uint64_t>(i)));
            const auto dt = family == "structured"
                                ? datagen::gen_discrete(random_structured_spec(rng))
                                : random_unstructured_table(rng);
            const auto reprs = repr::find_optimal_reprs(dt.table);
            fold_report(agg, repr::verify_theorem1(dt.table, reprs));
            if (run_theorem2) fold_report(agg, repr::verify_theorem2(dt.table, reprs));
            fold_report(agg, repr::verify_interchangeability(dt.table, reprs));
        }
        for (int i = 0; i < lemma1_count; ++i) {
            Rng rng(substream_seed(seed, "lemma1", static_cast<std::uint64_t>(i)));
            const auto dt = random_unstructured_table(rng, 5, 4);
            const int xs = dt.table.axis_size(1);
            const int zs = rng.range_int(2, xs);
            const auto map =
                repr::map_from_rank(rng.below(repr::map_space_size(xs, zs)), xs, zs);
            fold_report(agg, repr::verify_lemma1(dt.table, map));
        }

        nlohmann::ordered_json report;
        report["config_hash"] = hash_string(config);
        report["seed"] = seed;
        report["family"] = family;
        report["tables"] = count;
        report["lemma1_pairs"] = lemma1_count;
        bool seed_pass = true;
        report["checks"] = nlohmann::ordered_json::array();
        for (const auto& [name, a] : agg) {
            report["checks"].push_back({{"name", name},
                                        {"kind", a.kind},
                                        {a.kind == "ge" ? "min_slack" : "max_residual", a.worst},
                                        {"tables", a.tables},
                                        {"pass", a.pass}});
            seed_pass = seed_pass && a.pass;
        }
        report["pass"] = seed_pass;
        all_pass = all_pass && seed_pass;
        const std::string name = "theorems_seed" + std::to_string(seed) + ".json";
        write_json(config.out_dir / name, report);
        results.push_back(name);
    }
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

int run_bounds(const ExperimentConfig& config, std::vector<std::string>& results) {
    const auto tables_cfg = config.raw.value("tables", nlohmann::json::object());
    const int count = tables_cfg.value("count", 200);
    const std::vector<int> t_ax{0}, x_ax{1}, s_ax{2};

    bool all_pass = true;
    for (std::uint64_t seed : config.seeds) {
        std::ostringstream csv;
        csv << "table_id,exact_pe,loose_lower,tight_lower,tight_upper,loose_upper\n";
        nlohmann::ordered_json reports = nlohmann::ordered_json::array();
        int violations = 0;

        for (int i = 0; i < count; ++i) {
            Rng rng(substream_seed(seed, "bounds_tables", static_cast<std::uint64_t>(i)));
            const auto dt = random_unstructured_table(rng);
            const auto& table = dt.table;
            const int t_size = table.axis_size(0);
            const double h_t = info::entropy(table, t_ax);
            const double i_xs_t = info::conditional_mutual_info(table, x_ax, s_ax, t_ax);
            const double eps = info::conditional_mutual_info(table, x_ax, t_ax, s_ax);

            const auto reprs = repr::find_optimal_reprs(table);
            const double pe_sup = reprs.sup.achieved.pe;

            const auto ssl_rep = repr::map_from_rank(reprs.ssl.members.front(), reprs.x_size,
                                                     reprs.z_size);
            const auto ssl_info = repr::member_info(table, ssl_rep);
            auto report = bounds::compute_bounds_report(h_t, i_xs_t, ssl_info.i_zx_given_st,
                                                        reprs.ssl.achieved.i_zs, 0.0, t_size,
                                                        eps, pe_sup);
            reports.push_back(report.to_json());

            const struct {
                const char* tag;
                const repr::OptimalSet* set;
            } rows[] = {{"ssl", &reprs.ssl}, {"ssl_min", &reprs.ssl_min}};
            for (const auto& row : rows) {
                const double pe =
                    reprs.scan[static_cast<std::size_t>(row.set->members.front())].pe;
                csv << "t" << i << "_" << row.tag << "," << fmt(pe) << ","
                    << fmt(report.loose_lower) << "," << fmt(report.tight_lower) << ","
                    << fmt(report.tight_upper) << "," << fmt(report.loose_upper) << "\n";
                for (auto rank : row.set->members) {
                    const double member_pe = reprs.scan[static_cast<std::size_t>(rank)].pe;
                    const bool ok = member_pe >= report.loose_lower - kTieTol &&
                                    member_pe <= report.loose_upper + kTieTol &&
                                    member_pe >= report.tight_lower - kTieTol &&
                                    member_pe <= report.tight_upper + kTieTol;
                    if (!ok) ++violations;
                }
            }

            // Upper bound for every enumerated representation, exact
            // quantities, zero estimation slack.
            const auto count_maps = reprs.scan.size();
            std::vector<int> bad(count_maps, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (long long r = 0; r < static_cast<long long>(count_maps); ++r) {
                const auto m =
                    repr::map_from_rank(static_cast<std::uint64_t>(r), reprs.x_size, reprs.z_size);
                const auto mi = repr::member_info(table, m);
                const double upper =
                    bounds::thm3_upper(h_t, i_xs_t, mi.i_zx_given_st,
                                       reprs.scan[static_cast<std::size_t>(r)].i_zs, 0.0, t_size);
                if (reprs.scan[static_cast<std::size_t>(r)].pe > upper + kTieTol) {
                    bad[static_cast<std::size_t>(r)] = 1;
                }
            }
            for (int b : bad) violations += b;
        }

        const std::string csv_name = "bounds_seed" + std::to_string(seed) + ".csv";
        write_text(config.out_dir / csv_name, csv.str());
        results.push_back(csv_name);

        nlohmann::ordered_json summary;
        summary["config_hash"] = hash_string(config);
        summary["seed"] = seed;
        summary["tables"] = count;
        summary["violations"] = violations;
        summary["pass"] = violations == 0;
        summary["reports"] = reports;
        const std::string json_name = "bounds_seed" + std::to_string(seed) + ".json";
        write_json(config.out_dir / json_name, summary);
        results.push_back(json_name);
        all_pass = all_pass && violations == 0;
    }
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

trainer::TrainConfig parse_train_config(const nlohmann::json& j) {
    trainer::TrainConfig tc;
    tc.data = datagen::continuous_spec_from_json(j.at("data"));
    tc.strategy = datagen::pair_strategy_from_string(
        j.value("strategy", std::string("same_class")));

    const auto& loss = j.at("loss");
    if (loss.contains("cl")) {
        tc.loss.lambda_cl = loss.at("cl").value("weight", 1.0);
        tc.loss.cl_kind = loss.at("cl").value("kind", std::string("cpc"));
    } else {
        tc.loss.lambda_cl = 0.0;
    }
    if (loss.contains("fp")) {
        tc.loss.lambda_fp = loss.at("fp").value("weight", 0.0);
        tc.loss.fp_flavor =
            obj::fp_flavor_from_string(loss.at("fp").value("flavor", std::string("mse")));
    } else {
        tc.loss.lambda_fp = 0.0;
    }
    if (loss.contains("ip")) {
        if (loss.at("ip").value("auto_tenth", false)) {
            tc.ip_auto_tenth = true;
            tc.loss.lambda_ip = 1.0; // realized on the first batch
        } else {
            tc.loss.lambda_ip = loss.at("ip").value("weight", 0.0);
        }
    }

    const auto& opt = j.at("optimizer");
    tc.optim.kind = opt.value("kind", std::string("adam"));
    tc.optim.lr = opt.value("lr", 1e-3);
    tc.optim.steps = opt.value("steps", 1500);
    tc.optim.batch_size = opt.value("batch_size", 128);

    const auto enc = j.value("encoder", nlohmann::json::object());
    tc.encoder_hidden = enc.value("hidden", std::vector<std::size_t>{128});
    tc.emb_dim = enc.value("emb_dim", 64);

    const auto ev = j.value("eval", nlohmann::json::object());
    tc.labeled_per_class = ev.value("labeled_per_class", 5);
    tc.eval_every = ev.value("eval_every", 0);
    return tc;
}

int run_train(const ExperimentConfig& config, std::vector<std::string>& results,
              nlohmann::ordered_json& summary) {
    trainer::TrainConfig tc;
    try {
        tc = parse_train_config(config.raw);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: train: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: train: ") + e.what());
    }

    std::ostringstream csv;
    csv << "seed,step,loss_cl,loss_fp,loss_ip,eval_acc\n";
    double mean_acc = 0.0;
    summary["per_seed"] = nlohmann::ordered_json::array();
    for (std::uint64_t seed : config.seeds) {
        const auto result = trainer::train_one_seed(tc, seed);
        for (const auto& log : result.logs) {
            csv << seed << "," << log.step << "," << fmt(log.cl_value) << ","
                << fmt(log.fp_value) << "," << fmt(log.ip_value) << "," << fmt(log.eval_acc)
                << "\n";
        }
        mean_acc += result.final_eval.accuracy;

        nlohmann::ordered_json eval_report;
        eval_report["config_hash"] = hash_string(config);
        eval_report["seed"] = seed;
        eval_report["realized_lambda_ip"] = result.realized_lambda_ip;
        eval_report["knn"] = result.final_eval.to_json();
        const std::string eval_name = "eval_seed" + std::to_string(seed) + ".json";
        write_json(config.out_dir / eval_name, eval_report);
        results.push_back(eval_name);

        const std::string ckpt_dir = "checkpoint_seed" + std::to_string(seed);
        nn::save_checkpoint(config.out_dir / ckpt_dir, result.encoder_spec,
                            result.encoder_params, seed);
        results.push_back(ckpt_dir + "/manifest.json");

        summary["per_seed"].push_back({{"seed", seed},
                                       {"accuracy", result.final_eval.accuracy},
                                       {"chance", result.final_eval.chance},
                                       {"realized_lambda_ip", result.realized_lambda_ip}});
    }
    mean_acc /= static_cast<double>(config.seeds.size());
    summary["mean_accuracy"] = mean_acc;

    write_text(config.out_dir / "train.csv", csv.str());
    results.push_back("train.csv");
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval(const ExperimentConfig& config, std::vector<std::string>& results) {
    const auto& j = config.raw;
    const auto data = datagen::continuous_spec_from_json(j.at("data"));
    const auto strategy =
        datagen::pair_strategy_from_string(j.value("strategy", std::string("same_class")));
    const auto& enc_cfg = j.at("encoder");
    const auto ev = j.value("eval", nlohmann::json::object());
    const int labeled_per_class = ev.value("labeled_per_class", 5);
    const bool with_linear = ev.value("linear", false);

    for (std::uint64_t seed : config.seeds) {
        auto data_spec = data;
        data_spec.seed = substream_seed(seed ^ data.seed, "dataset");
        const auto ds = datagen::gen_continuous(data_spec, strategy);

        nn::EncoderSpec spec;
        nn::Params params;
        if (enc_cfg.contains("checkpoint")) {
            std::tie(spec, params) =
                nn::load_checkpoint(enc_cfg.at("checkpoint").get<std::string>());
            if (spec.input_dim != static_cast<std::size_t>(data.dim)) {
                throw config_error("config: eval: checkpoint input dim does not match the data");
            }
        } else if (enc_cfg.value("random_init", false)) {
            spec = nn::EncoderSpec{static_cast<std::size_t>(data.dim),
                                   enc_cfg.value("hidden", std::vector<std::size_t>{128}),
                                   enc_cfg.value("emb_dim", std::size_t{64}), true};
            params = nn::init_params(spec, substream_seed(seed, "encoder"));
        } else {
            throw config_error("config: eval: encoder needs 'checkpoint' or 'random_init'");
        }

        const auto emb = trainer::embed_rows(spec, params, ds.x, ds.test_rows);
        std::vector<int> labels;
        for (auto r : ds.test_rows) labels.push_back(ds.labels[r]);
        const auto knn = eval::knn_cosine_eval(emb, labels, labeled_per_class,
                                               substream_seed(seed, "eval_split"));

        nlohmann::ordered_json report;
        report["config_hash"] = hash_string(config);
        report["seed"] = seed;
        report["knn"] = knn.to_json();

        if (with_linear) {
            // Disjoint train/test class sets rule out fitting on the train
            // split; the linear probe fits on half of each test class.
            std::map<int, std::vector<std::size_t>> by_label;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                by_label[labels[i]].push_back(i);
            }
            Rng split_rng(substream_seed(seed, "linear_split"));
            std::vector<std::size_t> fit_rows, holdout_rows;
            for (auto& [label, rows] : by_label) {
                auto shuffled = rows;
                split_rng.shuffle(shuffled);
                for (std::size_t k = 0; k < shuffled.size(); ++k) {
                    (k < shuffled.size() / 2 ? fit_rows : holdout_rows).push_back(shuffled[k]);
                }
            }
            auto subset = [&](const std::vector<std::size_t>& rows) {
                nn::Tensor out = nn::Tensor::zeros({rows.size(), emb.cols()});
                std::vector<int> out_labels;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    for (std::size_t k = 0; k < emb.cols(); ++k) {
                        out.at(i, k) = emb.at(rows[i], k);
                    }
                    out_labels.push_back(labels[rows[i]]);
                }
                return std::pair{std::move(out), std::move(out_labels)};
            };
            const auto [fit_emb, fit_labels] = subset(fit_rows);
            const auto [hold_emb, hold_labels] = subset(holdout_rows);
            report["linear"] =
                eval::linear_eval(fit_emb, fit_labels, hold_emb, hold_labels).to_json();
        }

        const std::string name = "eval_seed" + std::to_string(seed) + ".json";
        write_json(config.out_dir / name, report);
        results.push_back(name);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// mi-convergence
// ---------------------------------------------------------------------------

int run_mi_convergence(const ExperimentConfig& config, std::vector<std::string>& results) {
    const auto& mi_cfg = config.raw.at("mi");
    info::JointTable table = eval::binary_symmetric_pair(mi_cfg.value("flip_prob", 0.1));
    if (mi_cfg.contains("table")) {
        std::ifstream in(mi_cfg.at("table").get<std::string>());
        if (!in) throw config_error("config: mi.table file not readable");
        table = info::JointTable::from_json(nlohmann::json::parse(in));
    }
    const auto n_grid =
        mi_cfg.value("n_grid", std::vector<std::size_t>{256, 1024, 4096, 16384});
    const int repeats = mi_cfg.value("repeats", 10);

    eval::CriticSpec critic;
    const auto critic_cfg = mi_cfg.value("critic", nlohmann::json::object());
    critic.hidden = critic_cfg.value("hidden", critic.hidden);
    critic.emb_dim = critic_cfg.value("emb_dim", critic.emb_dim);
    critic.train_steps = critic_cfg.value("train_steps", critic.train_steps);
    critic.lr = critic_cfg.value("lr", critic.lr);

    for (std::uint64_t seed : config.seeds) {
        const auto report = eval::mi_convergence(table, n_grid, repeats, critic, seed);
        auto report_json = report.to_json();
        report_json["config_hash"] = hash_string(config);
        const std::string json_name = "mi_convergence_seed" + std::to_string(seed) + ".json";
        write_json(config.out_dir / json_name, report_json);
        results.push_back(json_name);
        const std::string csv_name = "mi_convergence_seed" + std::to_string(seed) + ".csv";
        write_text(config.out_dir / csv_name, report.to_csv());
        results.push_back(csv_name);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

int run_gen_data(const ExperimentConfig& config, std::vector<std::string>& results) {
    const auto& j = config.raw;
    for (std::uint64_t seed : config.seeds) {
        if (j.contains("data")) {
            auto spec = datagen::continuous_spec_from_json(j.at("data"));
            spec.seed = seed;
            const auto strategy = datagen::pair_strategy_from_string(
                j.value("strategy", std::string("same_class")));
            const auto ds = datagen::gen_continuous(spec, strategy);
            const std::string dir = "dataset_seed" + std::to_string(seed);
            datagen::save_dataset(config.out_dir / dir, ds, spec, strategy);
            results.push_back(dir + "/manifest.json");
        }
        if (j.contains("discrete")) {
            auto spec = datagen::discrete_spec_from_json(j.at("discrete"));
            spec.seed = seed;
            const auto dt = datagen::gen_discrete(spec);
            const std::string table_name = "table_seed" + std::to_string(seed) + ".json";
            write_json(config.out_dir / table_name, dt.table.to_json());
            results.push_back(table_name);

            nlohmann::ordered_json side;
            side["config_hash"] = hash_string(config);
            side["spec"] = datagen::discrete_spec_to_json(spec);
            side["eps_info"] = datagen::measure_epsilon_info(dt.table);
            const std::vector<int> t_ax{0}, x_ax{1}, s_ax{2};
            const std::string table_id = "table_seed" + std::to_string(seed);
            info::InfoReport quantities;
            quantities.add("H(T)", info::entropy(dt.table, t_ax), table_id + " axis T");
            quantities.add("I(X;T)", info::mutual_info(dt.table, x_ax, t_ax),
                           table_id + " axes (X,T)");
            quantities.add("I(X;S|T)",
                           info::conditional_mutual_info(dt.table, x_ax, s_ax, t_ax),
                           table_id + " axes (X,S|T)");
            quantities.add("I(X;T|S)",
                           info::conditional_mutual_info(dt.table, x_ax, t_ax, s_ax),
                           table_id + " axes (X,T|S)");
            quantities.add("bayes_error(T|X)", info::bayes_error(dt.table, 0, x_ax),
                           table_id + " label T, features X");
            side["quantities"] = quantities.to_json();
            const std::string side_name = "table_seed" + std::to_string(seed) + "_info.json";
            write_json(config.out_dir / side_name, side);
            results.push_back(side_name);
        }
    }
    return 0;
}

} // namespace

RunOutcome run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + config.out_dir.string());

    std::vector<std::string> results;
    nlohmann::ordered_json summary;
    int code = 0;
    if (config.mode == "verify-theorems") {
        code = run_verify_theorems(config, results);
    } else if (config.mode == "bounds") {
        code = run_bounds(config, results);
    } else if (config.mode == "train") {
        code = run_train(config, results, summary);
    } else if (config.mode == "eval") {
        code = run_eval(config, results);
    } else if (config.mode == "mi-convergence") {
        code = run_mi_convergence(config, results);
    } else if (config.mode == "gen-data") {
        code = run_gen_data(config, results);
    } else {
        throw config_error("config: unknown mode '" + config.mode + "'");
    }

    RunOutcome outcome;
    outcome.exit_code = code;
    auto& manifest = outcome.manifest;
    manifest["mode"] = config.mode;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["prng"] = kPrngId;
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(config.config_hash()));
    manifest["config_hash"] = hash_buf;
    manifest["seeds"] = config.seeds;
    manifest["pass"] = code == 0;
    if (!summary.empty()) manifest["summary"] = summary;
    manifest["results"] = results;
    manifest["config"] = config.raw;
    manifest["wall_clock_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // Atomic finish: the manifest appears only once fully written.
    const auto tmp = config.out_dir / "manifest.json.tmp";
    write_json(tmp, manifest);
    std::filesystem::rename(tmp, config.out_dir / "manifest.json");
    return outcome;
}

} // namespace mvinfo::cli
