#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mvinfo/datagen.hpp"
#include "mvinfo/eval_protocols.hpp"
#include "mvinfo/rng.hpp"

using namespace mvinfo;

TEST_CASE("redundancy tracks the corruption probability") {
    datagen::DiscreteSpec spec;
    spec.t_size = 2;
    spec.x_style = 2;
    spec.s_style = 2;
    spec.seed = 5;

    spec.corrupt_p = 0.0;
    const auto clean = datagen::gen_discrete(spec);
    CHECK(datagen::measure_epsilon_info(clean.table) == doctest::Approx(0.0).epsilon(1e-12));

    spec.corrupt_p = 1.0;
    const auto broken = datagen::gen_discrete(spec);
    const std::vector<int> t{0}, x{1};
    const double i_xt = info::mutual_info(broken.table, x, t);
    CHECK(datagen::measure_epsilon_info(broken.table) == doctest::Approx(i_xt).epsilon(1e-10));
    // X carries T exactly by construction.
    CHECK(i_xt == doctest::Approx(info::entropy(broken.table, t)).epsilon(1e-12));

    spec.corrupt_p = 0.1;
    const auto partial = datagen::gen_discrete(spec);
    const double eps = datagen::measure_epsilon_info(partial.table);
    CHECK(eps > 1e-6);
    CHECK(eps < info::mutual_info(partial.table, x, t) - 1e-6);

    // Monotone nondecreasing along a corruption grid with fixed weights.
    double prev = -1.0;
    for (double p : {0.0, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        spec.corrupt_p = p;
        const double e = datagen::measure_epsilon_info(datagen::gen_discrete(spec).table);
        CHECK(e >= prev - 1e-12);
        prev = e;
    }
}

TEST_CASE("generated tables are valid and exactly rational") {
    datagen::DiscreteSpec spec;
    spec.t_size = 3;
    spec.x_style = 1;
    spec.s_style = 2;
    spec.shared_style = 1;
    spec.corrupt_p = 0.3;
    spec.seed = 6;
    const auto dt = datagen::gen_discrete(spec);

    CHECK(dt.table.axis_size(0) == 3);
    CHECK(dt.table.axis_size(1) == 3);
    CHECK(dt.table.axis_size(2) == 6);
    std::uint64_t total = 0;
    for (auto w : dt.weights) total += w;
    REQUIRE(total > 0);
    for (std::size_t i = 0; i < dt.weights.size(); ++i) {
        CHECK(dt.table.probs()[i] ==
              doctest::Approx(static_cast<double>(dt.weights[i]) / static_cast<double>(total))
                  .epsilon(1e-15));
    }

    CHECK_THROWS_AS(datagen::gen_discrete(datagen::DiscreteSpec{2, 2, 2, 1, -0.1, 30, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(datagen::gen_discrete(datagen::DiscreteSpec{1, 2, 2, 1, 0.1, 30, 1}),
                    std::invalid_argument);

    info::JointTable unnamed({{"A", 2}, {"B", 2}}, {0.25, 0.25, 0.25, 0.25});
    CHECK_THROWS_AS(datagen::measure_epsilon_info(unnamed), std::invalid_argument);
}

TEST_CASE("style relabeling leaves class structure untouched") {
    datagen::DiscreteSpec spec;
    spec.t_size = 2;
    spec.x_style = 2;
    spec.s_style = 2;
    spec.corrupt_p = 0.25;
    spec.seed = 7;
    const auto dt = datagen::gen_discrete(spec);

    // Swap the two style values of X: a bijective relabeling of the X axis.
    const auto& axes = dt.table.axes();
    const int nx = axes[1].size, ns = axes[2].size;
    std::vector<double> permuted(dt.table.probs().size());
    for (int t = 0; t < 2; ++t) {
        for (int x = 0; x < nx; ++x) {
            const int content = x / 2, style = x % 2;
            const int x2 = content * 2 + (1 - style);
            for (int s = 0; s < ns; ++s) {
                permuted[static_cast<std::size_t>((t * nx + x2) * ns + s)] =
                    dt.table.probs()[static_cast<std::size_t>((t * nx + x) * ns + s)];
            }
        }
    }
    info::JointTable relabeled(axes, permuted);
    const std::vector<int> t{0};
    for (int i = 0; i < 2; ++i) {
        CHECK(relabeled.marginal(t)[static_cast<std::size_t>(i)] ==
              doctest::Approx(dt.table.marginal(t)[static_cast<std::size_t>(i)]).epsilon(1e-15));
    }
    CHECK(datagen::measure_epsilon_info(relabeled) ==
          doctest::Approx(datagen::measure_epsilon_info(dt.table)).epsilon(1e-12));
}

TEST_CASE("noise-free same-instance pairs collapse onto the class mean") {
    datagen::ContinuousSpec spec;
    spec.classes = 4;
    spec.dim = 6;
    spec.x_style_scale = 0.0;
    spec.s_style_scale = 0.0;
    spec.noise_scale = 0.0;
    spec.per_class = 6;
    spec.seed = 8;
    const auto ds = datagen::gen_continuous(spec, datagen::PairStrategy::SameInstanceAugmented);
    for (std::size_t r = 0; r < ds.x.rows(); ++r) {
        for (std::size_t k = 0; k < ds.x.cols(); ++k) {
            CHECK(ds.x.at(r, k) == ds.s.at(r, k)); // exact equality
        }
    }
    // Rows of the same class coincide exactly at the mean.
    CHECK(ds.x.at(0, 0) == ds.x.at(1, 0));
}

TEST_CASE("well separated classes are trivial for raw 1-NN") {
    datagen::ContinuousSpec spec;
    spec.classes = 2;
    spec.dim = 16;
    spec.mean_scale = 10.0;
    spec.x_style_scale = 0.1;
    spec.s_style_scale = 0.1;
    spec.noise_scale = 0.05;
    spec.per_class = 10;
    spec.seed = 9;
    const auto ds = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    const auto report = eval::knn_cosine_eval(ds.x, ds.labels, 5, 3);
    CHECK(report.accuracy == doctest::Approx(1.0));
}

TEST_CASE("splits: disjoint class sets with enough probes per test class") {
    datagen::ContinuousSpec spec;
    spec.classes = 9;
    spec.per_class = 7;
    spec.seed = 10;
    const auto ds = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    CHECK(ds.train_classes == 4);
    CHECK(ds.test_classes == 5);
    std::map<int, int> test_counts;
    for (auto r : ds.train_rows) CHECK(ds.labels[r] < ds.train_classes);
    for (auto r : ds.test_rows) {
        CHECK(ds.labels[r] >= ds.train_classes);
        ++test_counts[ds.labels[r]];
    }
    CHECK(test_counts.size() == 5);
    for (const auto& [cls, count] : test_counts) CHECK(count >= 6);
    CHECK(ds.train_rows.size() + ds.test_rows.size() == ds.x.rows());

    datagen::ContinuousSpec tiny = spec;
    tiny.per_class = 5;
    CHECK_THROWS_AS(datagen::gen_continuous(tiny, datagen::PairStrategy::SameClass),
                    std::invalid_argument);
}

TEST_CASE("generation is seed reproducible and strategy sensitive") {
    datagen::ContinuousSpec spec;
    spec.classes = 6;
    spec.dim = 8;
    spec.per_class = 6;
    spec.seed = 11;
    const auto a = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    const auto b = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    CHECK(a.x.data == b.x.data);
    CHECK(a.s.data == b.s.data);
    CHECK(a.labels == b.labels);

    const auto c = datagen::gen_continuous(spec, datagen::PairStrategy::SameInstanceAugmented);
    CHECK(a.x.data == c.x.data); // input view does not depend on the strategy
    CHECK(a.s.data != c.s.data);

    spec.seed = 12;
    const auto d = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    CHECK(a.x.data != d.x.data);
}

TEST_CASE("dataset files round trip") {
    datagen::ContinuousSpec spec;
    spec.classes = 4;
    spec.dim = 5;
    spec.per_class = 6;
    spec.seed = 13;
    const auto ds = datagen::gen_continuous(spec, datagen::PairStrategy::SameClass);
    const auto dir = std::filesystem::temp_directory_path() / "mvinfo_dataset_test";
    std::filesystem::remove_all(dir);
    datagen::save_dataset(dir, ds, spec, datagen::PairStrategy::SameClass);
    const auto loaded = datagen::load_dataset(dir);
    CHECK(loaded.x.data == ds.x.data);
    CHECK(loaded.s.data == ds.s.data);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.train_rows == ds.train_rows);
    CHECK(loaded.test_rows == ds.test_rows);
    std::filesystem::remove_all(dir);
}
