#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvinfo/info_engine.hpp"
#include "mvinfo/nn_core.hpp"
#include "mvinfo/tensor.hpp"

namespace mvinfo::eval {

struct EvalReport {
    std::string protocol;
    double accuracy = 0.0;
    std::vector<std::pair<int, double>> per_class_accuracy; // (label, accuracy)
    int labeled_per_class = -1;
    std::uint64_t seed = 0;
    double chance = 0.0; // 1 / number of classes present

    nlohmann::ordered_json to_json() const;
};

// Few-shot evaluation of frozen embeddings: labeled_per_class examples per
// class are chosen by a seeded shuffle, every remaining example is classified
// by the label of its highest-cosine labeled neighbor. Ties go to the lowest
// labeled row index.
EvalReport knn_cosine_eval(const nn::Tensor& embeddings, const std::vector<int>& labels,
                           int labeled_per_class = 5, std::uint64_t seed = 0);

// Multinomial logistic regression on frozen features: full-batch gradient
// descent, 2000 steps, learning rate 0.1, no regularization. Reports test
// accuracy.
EvalReport linear_eval(const nn::Tensor& embeddings_train, const std::vector<int>& labels_train,
                       const nn::Tensor& embeddings_test, const std::vector<int>& labels_test);

// ---------------------------------------------------------------------------
// Convergence of the batch-contrast mutual information estimator.
// ---------------------------------------------------------------------------

struct CriticSpec {
    std::vector<std::size_t> hidden{64, 64};
    std::size_t emb_dim = 8;
    int train_steps = 3000;
    double lr = 0.01;
};

struct ConvergencePoint {
    std::size_t n = 0;
    double mean_abs_error = 0.0;
    double std_dev = 0.0;
    std::vector<double> estimates; // one per repeat
};

struct ConvergenceReport {
    double true_mi = 0.0;
    std::size_t critic_param_count = 0;
    std::vector<ConvergencePoint> points;
    double slope = 0.0; // least-squares slope of ln(mean error) vs ln(n)

    nlohmann::ordered_json to_json() const;
    std::string to_csv() const; // columns: n, mean_error, std
};

// For each n: draw n paired samples from the table, train a two-tower critic
// on them to convergence, and record |estimate - true MI|. The estimate is
// the batch-contrast value over all n samples, which never exceeds ln n.
// Requires true MI < ln(min n).
ConvergenceReport mi_convergence(const info::JointTable& pair_table,
                                 const std::vector<std::size_t>& n_grid, int repeats,
                                 const CriticSpec& critic, std::uint64_t seed);

// Batch-contrast value of n samples grouped by symbol: exactly the per-sample
// batch objective when tied samples share an embedding, at cost O(|A||B|).
// p_ab/p_a/p_b are empirical frequencies; dscore, when given, receives the
// value's gradient with respect to the scores.
double batch_contrast_from_counts(const std::vector<double>& p_ab, const std::vector<double>& p_a,
                                  const std::vector<double>& p_b, const nn::Tensor& scores,
                                  nn::Tensor* dscore = nullptr);

// Pair of symbols equal with probability 1 - flip_prob, marginals uniform.
// Its mutual information is ln 2 - H(flip_prob), in nats.
info::JointTable binary_symmetric_pair(double flip_prob);

} // namespace mvinfo::eval
