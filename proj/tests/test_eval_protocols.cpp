#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mvinfo/eval_protocols.hpp"
#include "mvinfo/objectives.hpp"
#include "mvinfo/rng.hpp"

using namespace mvinfo;
using nn::Tensor;

namespace {

// Orthogonal class directions plus small noise: 1-NN is trivially perfect.
std::pair<Tensor, std::vector<int>> separable_embeddings(int classes, int per_class, double noise,
                                                         Rng& rng) {
    const auto n = static_cast<std::size_t>(classes * per_class);
    const auto d = static_cast<std::size_t>(classes);
    Tensor emb = Tensor::zeros({n, d});
    std::vector<int> labels(n);
    for (int c = 0; c < classes; ++c) {
        for (int e = 0; e < per_class; ++e) {
            const auto row = static_cast<std::size_t>(c * per_class + e);
            labels[row] = c;
            emb.at(row, static_cast<std::size_t>(c)) = 1.0;
            for (std::size_t k = 0; k < d; ++k) emb.at(row, k) += noise * rng.gaussian();
        }
    }
    return {std::move(emb), std::move(labels)};
}

} // namespace

TEST_CASE("knn: separable classes are classified perfectly") {
    Rng rng(61);
    auto [emb, labels] = separable_embeddings(8, 9, 0.05, rng);
    const auto report = eval::knn_cosine_eval(emb, labels, 5, 123);
    CHECK(report.accuracy == doctest::Approx(1.0));
    CHECK(report.chance == doctest::Approx(1.0 / 8.0));
    CHECK(report.per_class_accuracy.size() == 8);
}

TEST_CASE("knn: exact duplicates take the class of the lowest labeled row") {
    // Every row of both classes sits on the same point, so each query ties
    // with every labeled row at cosine 1. The lowest labeled row index always
    // belongs to class 0: class 0 queries are right, class 1 queries wrong.
    Tensor emb = Tensor::zeros({12, 2});
    std::vector<int> labels(12);
    for (std::size_t i = 0; i < 12; ++i) {
        emb.at(i, 0) = 1.0;
        labels[i] = i < 6 ? 0 : 1;
    }
    const auto report = eval::knn_cosine_eval(emb, labels, 5, 7);
    CHECK(report.accuracy == doctest::Approx(0.5));
    for (const auto& [label, acc] : report.per_class_accuracy) {
        CHECK(acc == doctest::Approx(label == 0 ? 1.0 : 0.0));
    }
}

TEST_CASE("knn: random embeddings score near chance") {
    Rng rng(62);
    const int classes = 20, per_class = 20;
    const auto n = static_cast<std::size_t>(classes * per_class);
    Tensor emb = Tensor::zeros({n, 16});
    for (auto& v : emb.data) v = rng.gaussian();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % classes;

    const auto report = eval::knn_cosine_eval(emb, labels, 5, 9);
    const double chance = 1.0 / classes;
    const auto queries = static_cast<double>(n - 5 * classes);
    const double sigma = std::sqrt(chance * (1 - chance) / queries);
    CHECK(std::abs(report.accuracy - chance) <= 3.0 * sigma);
}

TEST_CASE("knn: invariant to positive per-row rescaling") {
    Rng rng(63);
    auto [emb, labels] = separable_embeddings(6, 8, 0.4, rng);
    const auto base = eval::knn_cosine_eval(emb, labels, 5, 3);
    Tensor scaled = emb;
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        const double c = std::exp(rng.uniform(-2, 2));
        for (std::size_t k = 0; k < scaled.cols(); ++k) scaled.at(r, k) *= c;
    }
    const auto rescaled = eval::knn_cosine_eval(scaled, labels, 5, 3);
    CHECK(rescaled.accuracy == doctest::Approx(base.accuracy));
}

TEST_CASE("knn: a class without enough examples is named in the error") {
    Tensor emb = Tensor::zeros({8, 2});
    std::vector<int> labels{0, 0, 0, 0, 0, 0, 3, 3};
    try {
        eval::knn_cosine_eval(emb, labels, 5, 0);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("class 3") != std::string::npos);
    }
}

TEST_CASE("linear eval: separable, constant, and shuffled embeddings") {
    Rng rng(64);
    auto [emb, labels] = separable_embeddings(2, 40, 0.2, rng);
    const auto report = eval::linear_eval(emb, labels, emb, labels);
    CHECK(report.accuracy >= 0.99);

    // Constant embeddings: every prediction collapses to the majority class.
    Tensor constant = Tensor::zeros({30, 4});
    for (auto& v : constant.data) v = 0.5;
    std::vector<int> unbalanced(30);
    for (std::size_t i = 0; i < 30; ++i) unbalanced[i] = i < 18 ? 1 : 0; // majority class 1
    const auto const_report = eval::linear_eval(constant, unbalanced, constant, unbalanced);
    CHECK(const_report.accuracy == doctest::Approx(18.0 / 30.0));

    // Shuffled labels: accuracy within 3 binomial deviations of chance.
    auto shuffled = labels;
    Rng shuffle_rng(65);
    shuffle_rng.shuffle(shuffled);
    const auto rand_report = eval::linear_eval(emb, shuffled, emb, shuffled);
    const double chance = 0.5;
    const double sigma = std::sqrt(chance * (1 - chance) / static_cast<double>(labels.size()));
    CHECK(std::abs(rand_report.accuracy - chance) <= 3.0 * sigma);

    std::vector<int> single(emb.rows(), 0);
    CHECK_THROWS_AS(eval::linear_eval(emb, single, emb, single), std::invalid_argument);
}

TEST_CASE("linear eval leaves the frozen embeddings untouched") {
    Rng rng(67);
    auto [emb, labels] = separable_embeddings(3, 10, 0.3, rng);
    const auto before = emb.data;
    eval::linear_eval(emb, labels, emb, labels);
    CHECK(emb.data == before);
}

TEST_CASE("grouped batch contrast equals the per-sample objective") {
    Rng rng(66);
    const std::size_t A = 3, B = 4, e = 5;
    Tensor fa = Tensor::zeros({A, e});
    Tensor gb = Tensor::zeros({B, e});
    for (auto& v : fa.data) v = rng.gaussian();
    for (auto& v : gb.data) v = rng.gaussian();

    // Random counts with every a and b represented.
    std::vector<int> counts(A * B);
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] = static_cast<int>(rng.below(5)) + (i % 5 == 0 ? 1 : 0);
        n += static_cast<std::size_t>(counts[i]);
    }

    std::vector<double> p_ab(A * B), p_a(A, 0.0), p_b(B, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
            p_ab[a * B + b] = static_cast<double>(counts[a * B + b]) / static_cast<double>(n);
            p_a[a] += p_ab[a * B + b];
            p_b[b] += p_ab[a * B + b];
        }
    }
    Tensor scores = Tensor::zeros({A, B});
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < e; ++k) acc += fa.at(a, k) * gb.at(b, k);
            scores.at(a, b) = acc;
        }
    }
    const double grouped = eval::batch_contrast_from_counts(p_ab, p_a, p_b, scores, nullptr);

    // Expand to one row per sample and run the literal batch objective.
    obj::PairBatch batch{Tensor::zeros({n, e}), Tensor::zeros({n, e})};
    std::size_t row = 0;
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
            for (int c = 0; c < counts[a * B + b]; ++c) {
                for (std::size_t k = 0; k < e; ++k) {
                    batch.zx.at(row, k) = fa.at(a, k);
                    batch.zs.at(row, k) = gb.at(b, k);
                }
                ++row;
            }
        }
    }
    CHECK(grouped == doctest::Approx(obj::cpc_loss(batch).value).epsilon(1e-12));
}

TEST_CASE("binary symmetric pair has the analytic mutual information") {
    for (double q : {0.0, 0.1, 0.25, 0.5}) {
        const auto table = eval::binary_symmetric_pair(q);
        const std::vector<int> a{0}, b{1};
        double expected = std::log(2.0);
        if (q > 0.0 && q < 1.0) expected += q * std::log(q) + (1 - q) * std::log(1 - q);
        if (q == 0.5) expected = 0.0;
        CHECK(info::mutual_info(table, a, b) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("estimator convergence smoke run") {
    eval::CriticSpec critic;
    critic.hidden = {16};
    critic.emb_dim = 4;
    critic.train_steps = 400;
    critic.lr = 0.02;

    const auto table = eval::binary_symmetric_pair(0.1);
    const auto report = eval::mi_convergence(table, {64, 256}, 3, critic, 71);
    CHECK(report.true_mi == doctest::Approx(std::log(2.0) + 0.1 * std::log(0.1) +
                                            0.9 * std::log(0.9)));
    CHECK(report.critic_param_count > 0);
    REQUIRE(report.points.size() == 2);
    for (const auto& point : report.points) {
        CHECK(point.estimates.size() == 3);
        for (double est : point.estimates) {
            CHECK(est <= std::log(static_cast<double>(point.n)) + 1e-9);
        }
        CHECK(point.mean_abs_error >= 0.0);
    }

    // Determinism: same seed, same numbers.
    const auto report2 = eval::mi_convergence(table, {64, 256}, 3, critic, 71);
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        CHECK(report.points[i].estimates == report2.points[i].estimates);
    }

    // The ceiling precondition: ln 2 MI cannot be estimated with n = 2.
    CHECK_THROWS_AS(eval::mi_convergence(eval::binary_symmetric_pair(0.0), {2, 4}, 1, critic, 1),
                    std::invalid_argument);
}
