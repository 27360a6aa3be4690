#include "mvinfo/trainer.hpp"

#include <cmath>

#include "mvinfo/common.hpp"
#include "mvinfo/rng.hpp"

namespace mvinfo::trainer {

namespace {

nn::Tensor gather_rows(const nn::Tensor& data, const std::vector<std::size_t>& rows) {
    nn::Tensor out = nn::Tensor::zeros({rows.size(), data.cols()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = data.row(rows[i]);
        double* dst = out.row(i);
        for (std::size_t k = 0; k < data.cols(); ++k) dst[k] = src[k];
    }
    return out;
}

void add_params(nn::Params& into, const nn::Params& from) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        for (std::size_t i = 0; i < into.weights[l].data.size(); ++i) {
            into.weights[l].data[i] += from.weights[l].data[i];
        }
        for (std::size_t i = 0; i < into.biases[l].data.size(); ++i) {
            into.biases[l].data[i] += from.biases[l].data[i];
        }
    }
}

void negate_params(nn::Params& p) {
    for (auto& w : p.weights) {
        for (auto& v : w.data) v = -v;
    }
    for (auto& b : p.biases) {
        for (auto& v : b.data) v = -v;
    }
}

nn::Tensor negated(const nn::Tensor& t) {
    nn::Tensor out = t;
    for (auto& v : out.data) v = -v;
    return out;
}

} // namespace

nn::Tensor embed_rows(const nn::EncoderSpec& spec, const nn::Params& params,
                      const nn::Tensor& data, const std::vector<std::size_t>& rows) {
    return nn::forward(spec, params, gather_rows(data, rows));
}

TrainResult train_one_seed(const TrainConfig& config, std::uint64_t seed) {
    obj::validate_composite_spec(config.loss);
    if (config.optim.steps < 1 || config.optim.batch_size < 2) {
        throw std::invalid_argument("train: need at least 1 step and batches of 2");
    }
    if (config.optim.kind != "adam" && config.optim.kind != "sgd") {
        throw std::invalid_argument("train: optimizer kind must be 'adam' or 'sgd'");
    }

    auto data_spec = config.data;
    data_spec.seed = substream_seed(seed ^ config.data.seed, "dataset");
    const auto ds = datagen::gen_continuous(data_spec, config.strategy);

    TrainResult result;
    result.seed = seed;
    result.encoder_spec = nn::EncoderSpec{static_cast<std::size_t>(config.data.dim),
                                          config.encoder_hidden, config.emb_dim, true};
    result.encoder_params = nn::init_params(result.encoder_spec, substream_seed(seed, "encoder"));

    const bool use_fp = config.loss.lambda_fp > 0.0;
    // Decoder mirrors the encoder back into observation space.
    std::vector<std::size_t> dec_hidden(config.encoder_hidden.rbegin(),
                                        config.encoder_hidden.rend());
    nn::EncoderSpec dec_spec{config.emb_dim, dec_hidden,
                             static_cast<std::size_t>(config.data.dim), false};
    nn::Params dec_params;
    if (use_fp) dec_params = nn::init_params(dec_spec, substream_seed(seed, "decoder"));

    nn::AdamOptimizer enc_adam(config.optim.lr), dec_adam(config.optim.lr);
    nn::SgdOptimizer enc_sgd(config.optim.lr), dec_sgd(config.optim.lr);

    Rng batch_rng(substream_seed(seed, "batches"));
    const auto batch_size =
        std::min<std::size_t>(static_cast<std::size_t>(config.optim.batch_size),
                              ds.train_rows.size());

    auto loss_spec = config.loss;
    auto eval_now = [&]() {
        const auto emb = embed_rows(result.encoder_spec, result.encoder_params, ds.x, ds.test_rows);
        std::vector<int> labels;
        labels.reserve(ds.test_rows.size());
        for (auto r : ds.test_rows) labels.push_back(ds.labels[r]);
        return eval::knn_cosine_eval(emb, labels, config.labeled_per_class,
                                     substream_seed(seed, "eval_split"));
    };

    std::vector<std::size_t> batch_rows(batch_size);
    for (int step = 0; step < config.optim.steps; ++step) {
        for (auto& r : batch_rows) {
            r = ds.train_rows[batch_rng.below(ds.train_rows.size())];
        }
        const auto xb = gather_rows(ds.x, batch_rows);
        const auto sb = gather_rows(ds.s, batch_rows);

        nn::ForwardCache cache_x, cache_s;
        obj::PairBatch batch{
            nn::forward(result.encoder_spec, result.encoder_params, xb, &cache_x),
            nn::forward(result.encoder_spec, result.encoder_params, sb, &cache_s)};

        if (step == 0 && config.ip_auto_tenth) {
            // Pin the inverse-predictive weight so its first-batch magnitude is
            // one tenth of the contrastive/predictive part.
            auto probe_spec = loss_spec;
            probe_spec.lambda_ip = 0.0;
            const auto probe = obj::composite_loss(
                probe_spec, batch, use_fp ? &sb : nullptr, use_fp ? &dec_spec : nullptr,
                use_fp ? &dec_params : nullptr);
            const double ip_mag = std::abs(obj::ip_loss(batch).value);
            loss_spec.lambda_ip = 0.1 * std::abs(probe.value) / std::max(ip_mag, 1e-12);
        }

        const auto loss = obj::composite_loss(loss_spec, batch, use_fp ? &sb : nullptr,
                                              use_fp ? &dec_spec : nullptr,
                                              use_fp ? &dec_params : nullptr);

        // Maximization objective: negate once at the optimizer boundary.
        auto enc_grads = nn::backward_from_cache(result.encoder_spec, result.encoder_params,
                                                 cache_x, negated(loss.grad_zx));
        const auto s_grads = nn::backward_from_cache(result.encoder_spec, result.encoder_params,
                                                     cache_s, negated(loss.grad_zs));
        add_params(enc_grads.params, s_grads.params);
        if (config.optim.kind == "adam") {
            enc_adam.step(result.encoder_params, enc_grads.params);
        } else {
            enc_sgd.step(result.encoder_params, enc_grads.params);
        }
        if (use_fp) {
            auto dec_grads = loss.grad_decoder;
            negate_params(dec_grads);
            if (config.optim.kind == "adam") {
                dec_adam.step(dec_params, dec_grads);
            } else {
                dec_sgd.step(dec_params, dec_grads);
            }
        }

        const bool last = step + 1 == config.optim.steps;
        if (last || (config.eval_every > 0 && (step + 1) % config.eval_every == 0)) {
            StepLog log;
            log.step = step + 1;
            log.cl_value = loss.cl_value;
            log.fp_value = loss.fp_value;
            log.ip_value = loss.ip_value;
            log.eval_acc = eval_now().accuracy;
            result.logs.push_back(log);
        }
    }

    result.realized_lambda_ip = loss_spec.lambda_ip;
    result.final_eval = eval_now();
    return result;
}

} // namespace mvinfo::trainer
