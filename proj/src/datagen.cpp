#include "mvinfo/datagen.hpp"

#include <cmath>
#include <fstream>

#include "mvinfo/common.hpp"
#include "mvinfo/raw_io.hpp"
#include "mvinfo/rng.hpp"

namespace mvinfo::datagen {

namespace {

// Corruption probabilities are realized as integer fractions over this
// denominator so generated tables stay exactly rational.
constexpr std::uint64_t kProbDenom = 1000;

void check_discrete_spec(const DiscreteSpec& spec) {
    if (spec.t_size < 2) throw std::invalid_argument("gen_discrete: t_size must be >= 2");
    if (spec.x_style < 1 || spec.s_style < 1 || spec.shared_style < 1) {
        throw std::invalid_argument("gen_discrete: style cardinalities must be >= 1");
    }
    if (spec.corrupt_p < 0.0 || spec.corrupt_p > 1.0) {
        throw std::invalid_argument("gen_discrete: corrupt_p must lie in [0, 1]");
    }
    if (spec.weight_resolution < 1) {
        throw std::invalid_argument("gen_discrete: weight_resolution must be >= 1");
    }
}

std::vector<std::uint64_t> random_factor(int size, int max_weight, Rng& rng) {
    std::vector<std::uint64_t> w(static_cast<std::size_t>(size));
    for (auto& v : w) v = 1 + rng.below(static_cast<std::uint64_t>(max_weight));
    return w;
}

} // namespace

DiscreteTable gen_discrete(const DiscreteSpec& spec) {
    check_discrete_spec(spec);
    Rng rng(substream_seed(spec.seed, "gen_discrete"));

    const int nt = spec.t_size, nu = spec.x_style, nv = spec.s_style, nw = spec.shared_style;
    const auto wt = random_factor(nt, spec.weight_resolution, rng);
    const auto wu = random_factor(nu, spec.weight_resolution, rng);
    const auto wv = random_factor(nv, spec.weight_resolution, rng);
    const auto ww = random_factor(nw, spec.weight_resolution, rng);

    const auto pn = static_cast<std::uint64_t>(std::llround(spec.corrupt_p * kProbDenom));
    // P(c|t) = ((kProbDenom - pn) * nt * [c==t] + pn) / (nt * kProbDenom)
    auto content_weight = [&](int c, int t) -> std::uint64_t {
        return (kProbDenom - pn) * static_cast<std::uint64_t>(nt) * (c == t ? 1 : 0) + pn;
    };

    const int x_size = nt * nu * nw;
    const int s_size = nt * nv * nw;
    std::vector<std::uint64_t> weights(
        static_cast<std::size_t>(nt) * static_cast<std::size_t>(x_size) *
        static_cast<std::size_t>(s_size), 0);

    for (int t = 0; t < nt; ++t) {
        for (int u = 0; u < nu; ++u) {
            for (int w = 0; w < nw; ++w) {
                const int x = (t * nu + u) * nw + w;
                for (int c = 0; c < nt; ++c) {
                    for (int v = 0; v < nv; ++v) {
                        const int s = (c * nv + v) * nw + w; // shared style must agree
                        const std::uint64_t cell =
                            wt[static_cast<std::size_t>(t)] * wu[static_cast<std::size_t>(u)] *
                            wv[static_cast<std::size_t>(v)] * ww[static_cast<std::size_t>(w)] *
                            content_weight(c, t);
                        weights[(static_cast<std::size_t>(t) * static_cast<std::size_t>(x_size) +
                                 static_cast<std::size_t>(x)) * static_cast<std::size_t>(s_size) +
                                static_cast<std::size_t>(s)] = cell;
                    }
                }
            }
        }
    }

    auto table = info::JointTable::from_weights(
        {{"T", nt}, {"X", x_size}, {"S", s_size}}, weights);
    return DiscreteTable{std::move(table), std::move(weights)};
}

DiscreteTable random_discrete(const std::vector<int>& sizes, int max_weight, std::uint64_t seed) {
    if (sizes.size() != 3) {
        throw std::invalid_argument("random_discrete: expected (T, X, S) sizes");
    }
    Rng rng(substream_seed(seed, "random_discrete"));
    std::size_t cells = 1;
    for (int s : sizes) cells *= static_cast<std::size_t>(s);
    std::vector<std::uint64_t> weights(cells);
    for (auto& w : weights) w = 1 + rng.below(static_cast<std::uint64_t>(max_weight));
    auto table = info::JointTable::from_weights(
        {{"T", sizes[0]}, {"X", sizes[1]}, {"S", sizes[2]}}, weights);
    return DiscreteTable{std::move(table), std::move(weights)};
}

double measure_epsilon_info(const info::JointTable& table) {
    const std::vector<int> x{table.axis_index("X")};
    const std::vector<int> t{table.axis_index("T")};
    const std::vector<int> s{table.axis_index("S")};
    return info::conditional_mutual_info(table, x, t, s);
}

PairStrategy pair_strategy_from_string(const std::string& s) {
    if (s == "same_class") return PairStrategy::SameClass;
    if (s == "same_instance_augmented") return PairStrategy::SameInstanceAugmented;
    throw std::invalid_argument("unknown pair strategy '" + s + "'");
}

std::string to_string(PairStrategy s) {
    return s == PairStrategy::SameClass ? "same_class" : "same_instance_augmented";
}

namespace {

void check_continuous_spec(const ContinuousSpec& spec) {
    if (spec.classes < 2) throw std::invalid_argument("gen_continuous: classes must be >= 2");
    if (spec.dim < 2) throw std::invalid_argument("gen_continuous: dim must be >= 2");
    if (spec.style_dim < 1) throw std::invalid_argument("gen_continuous: style_dim must be >= 1");
    if (spec.per_class < 6) {
        throw std::invalid_argument(
            "gen_continuous: per_class must be >= 6 (5 labeled + at least one query)");
    }
    if (spec.mean_scale < 0 || spec.x_style_scale < 0 || spec.s_style_scale < 0 ||
        spec.noise_scale < 0) {
        throw std::invalid_argument("gen_continuous: scales must be nonnegative");
    }
}

} // namespace

MultiViewDataset gen_continuous(const ContinuousSpec& spec, PairStrategy strategy) {
    check_continuous_spec(spec);
    const auto d = static_cast<std::size_t>(spec.dim);
    const auto k = static_cast<std::size_t>(spec.style_dim);
    const auto n = static_cast<std::size_t>(spec.classes) * static_cast<std::size_t>(spec.per_class);

    Rng rng_means(substream_seed(spec.seed, "means"));
    Rng rng_maps(substream_seed(spec.seed, "view_maps"));
    Rng rng_styles(substream_seed(spec.seed, "styles"));
    Rng rng_noise(substream_seed(spec.seed, "noise"));
    Rng rng_signal(substream_seed(spec.seed, "signal"));

    std::vector<double> means(static_cast<std::size_t>(spec.classes) * d);
    for (auto& v : means) v = spec.mean_scale * rng_means.gaussian();

    // Style-to-observation maps, one per view; per-coordinate style variance
    // equals the configured scale squared.
    const double col_scale = 1.0 / std::sqrt(static_cast<double>(k));
    std::vector<double> map_x(d * k), map_s(d * k);
    for (auto& v : map_x) v = col_scale * rng_maps.gaussian();
    for (auto& v : map_s) v = col_scale * rng_maps.gaussian();

    std::vector<double> styles(n * k);
    for (auto& v : styles) v = rng_styles.gaussian();

    MultiViewDataset ds;
    ds.x = nn::Tensor::zeros({n, d});
    ds.s = nn::Tensor::zeros({n, d});
    ds.labels.resize(n);
    ds.train_classes = spec.classes / 2;
    ds.test_classes = spec.classes - ds.train_classes;

    auto emit_view = [&](double* out, const double* mu, const double* style, const double* vmap,
                         double style_scale, Rng& noise_rng) {
        for (std::size_t i = 0; i < d; ++i) {
            double v = mu[i];
            for (std::size_t j = 0; j < k; ++j) v += style_scale * vmap[i * k + j] * style[j];
            v += spec.noise_scale * noise_rng.gaussian();
            out[i] = v;
        }
    };

    std::vector<double> fresh_style(k);
    for (int c = 0; c < spec.classes; ++c) {
        for (int e = 0; e < spec.per_class; ++e) {
            const std::size_t row =
                static_cast<std::size_t>(c) * static_cast<std::size_t>(spec.per_class) +
                static_cast<std::size_t>(e);
            ds.labels[row] = c;
            const double* mu = means.data() + static_cast<std::size_t>(c) * d;
            emit_view(ds.x.row(row), mu, styles.data() + row * k, map_x.data(),
                      spec.x_style_scale, rng_noise);

            const double* signal_style = nullptr;
            if (strategy == PairStrategy::SameClass) {
                // A different example of the same class supplies the style.
                auto sib = static_cast<int>(rng_signal.below(
                    static_cast<std::uint64_t>(spec.per_class - 1)));
                if (sib >= e) ++sib;
                const std::size_t sib_row =
                    static_cast<std::size_t>(c) * static_cast<std::size_t>(spec.per_class) +
                    static_cast<std::size_t>(sib);
                signal_style = styles.data() + sib_row * k;
            } else {
                for (auto& v : fresh_style) v = rng_signal.gaussian();
                signal_style = fresh_style.data();
            }
            emit_view(ds.s.row(row), mu, signal_style, map_s.data(), spec.s_style_scale,
                      rng_noise);
        }
    }

    for (std::size_t row = 0; row < n; ++row) {
        if (ds.labels[row] < ds.train_classes) {
            ds.train_rows.push_back(row);
        } else {
            ds.test_rows.push_back(row);
        }
    }
    return ds;
}

void save_dataset(const std::filesystem::path& dir, const MultiViewDataset& ds,
                  const ContinuousSpec& spec, PairStrategy strategy) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["format"] = "mvinfo-dataset-v1";
    manifest["spec"] = continuous_spec_to_json(spec);
    manifest["strategy"] = to_string(strategy);
    manifest["rows"] = ds.x.rows();
    manifest["dim"] = ds.x.cols();
    manifest["train_classes"] = ds.train_classes;
    manifest["test_classes"] = ds.test_classes;
    manifest["files"] = {{"x", "x.f64"}, {"s", "s.f64"}, {"labels", "labels.i64"}};

    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw io_error("cannot write manifest in " + dir.string());
    mf << manifest.dump(2) << "\n";

    write_raw(dir / "x.f64", ds.x.data.data(), ds.x.data.size() * sizeof(double));
    write_raw(dir / "s.f64", ds.s.data.data(), ds.s.data.size() * sizeof(double));
    std::vector<std::int64_t> labels64(ds.labels.begin(), ds.labels.end());
    write_raw(dir / "labels.i64", labels64.data(), labels64.size() * sizeof(std::int64_t));
}

MultiViewDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw io_error("cannot read manifest in " + dir.string());
    nlohmann::json manifest = nlohmann::json::parse(mf);

    const auto n = manifest.at("rows").get<std::size_t>();
    const auto d = manifest.at("dim").get<std::size_t>();

    MultiViewDataset ds;
    ds.x = nn::Tensor::zeros({n, d});
    ds.s = nn::Tensor::zeros({n, d});
    ds.train_classes = manifest.at("train_classes").get<int>();
    ds.test_classes = manifest.at("test_classes").get<int>();

    const auto files = manifest.at("files");
    read_raw(dir / files.at("x").get<std::string>(), ds.x.data.data(), n * d * sizeof(double));
    read_raw(dir / files.at("s").get<std::string>(), ds.s.data.data(), n * d * sizeof(double));
    std::vector<std::int64_t> labels64(n);
    read_raw(dir / files.at("labels").get<std::string>(), labels64.data(),
             n * sizeof(std::int64_t));
    ds.labels.assign(labels64.begin(), labels64.end());

    for (std::size_t row = 0; row < n; ++row) {
        if (ds.labels[row] < ds.train_classes) {
            ds.train_rows.push_back(row);
        } else {
            ds.test_rows.push_back(row);
        }
    }
    return ds;
}

nlohmann::ordered_json continuous_spec_to_json(const ContinuousSpec& spec) {
    return {{"classes", spec.classes},
            {"dim", spec.dim},
            {"mean_scale", spec.mean_scale},
            {"style_dim", spec.style_dim},
            {"x_style_scale", spec.x_style_scale},
            {"s_style_scale", spec.s_style_scale},
            {"noise_scale", spec.noise_scale},
            {"per_class", spec.per_class},
            {"seed", spec.seed}};
}

ContinuousSpec continuous_spec_from_json(const nlohmann::json& j) {
    ContinuousSpec spec;
    spec.classes = j.value("classes", spec.classes);
    spec.dim = j.value("dim", spec.dim);
    spec.mean_scale = j.value("mean_scale", spec.mean_scale);
    spec.style_dim = j.value("style_dim", spec.style_dim);
    spec.x_style_scale = j.value("x_style_scale", spec.x_style_scale);
    spec.s_style_scale = j.value("s_style_scale", spec.s_style_scale);
    spec.noise_scale = j.value("noise_scale", spec.noise_scale);
    spec.per_class = j.value("per_class", spec.per_class);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

nlohmann::ordered_json discrete_spec_to_json(const DiscreteSpec& spec) {
    return {{"t_size", spec.t_size},
            {"x_style", spec.x_style},
            {"s_style", spec.s_style},
            {"shared_style", spec.shared_style},
            {"corrupt_p", spec.corrupt_p},
            {"weight_resolution", spec.weight_resolution},
            {"seed", spec.seed}};
}

DiscreteSpec discrete_spec_from_json(const nlohmann::json& j) {
    DiscreteSpec spec;
    spec.t_size = j.value("t_size", spec.t_size);
    spec.x_style = j.value("x_style", spec.x_style);
    spec.s_style = j.value("s_style", spec.s_style);
    spec.shared_style = j.value("shared_style", spec.shared_style);
    spec.corrupt_p = j.value("corrupt_p", spec.corrupt_p);
    spec.weight_resolution = j.value("weight_resolution", spec.weight_resolution);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

} // namespace mvinfo::datagen
