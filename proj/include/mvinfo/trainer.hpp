#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvinfo/datagen.hpp"
#include "mvinfo/eval_protocols.hpp"
#include "mvinfo/nn_core.hpp"
#include "mvinfo/objectives.hpp"

namespace mvinfo::trainer {

struct OptimConfig {
    std::string kind = "adam"; // "adam" or "sgd"
    double lr = 1e-3;
    int steps = 1500;
    int batch_size = 128;
};

struct TrainConfig {
    datagen::ContinuousSpec data;
    datagen::PairStrategy strategy = datagen::PairStrategy::SameClass;
    obj::CompositeSpec loss;
    bool ip_auto_tenth = false; // scale the inverse-predictive weight off the first batch
    std::vector<std::size_t> encoder_hidden{128};
    std::size_t emb_dim = 64;
    OptimConfig optim;
    int labeled_per_class = 5;
    int eval_every = 0; // 0: evaluate only at the end
};

struct StepLog {
    int step = 0;
    double cl_value = 0.0;
    double fp_value = 0.0;
    double ip_value = 0.0;
    double eval_acc = 0.0;
};

struct TrainResult {
    eval::EvalReport final_eval;
    std::vector<StepLog> logs;
    double realized_lambda_ip = 0.0;
    nn::EncoderSpec encoder_spec;
    nn::Params encoder_params;
    std::uint64_t seed = 0;
};

// One seeded training run: generate the dataset, train the shared encoder
// F_X = F_S with the composite objective, evaluate the frozen embeddings on
// the held-out class split with the 1-NN cosine protocol. The dataset stream
// depends on (seed, data.seed) only, so loss variants see identical data.
TrainResult train_one_seed(const TrainConfig& config, std::uint64_t seed);

// Embeds the given rows with the encoder, preserving row order.
nn::Tensor embed_rows(const nn::EncoderSpec& spec, const nn::Params& params,
                      const nn::Tensor& data, const std::vector<std::size_t>& rows);

} // namespace mvinfo::trainer
