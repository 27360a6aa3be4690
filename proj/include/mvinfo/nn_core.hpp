#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvinfo/tensor.hpp"

namespace mvinfo::nn {

// MLP encoder with rectifier hidden layers and optional unit-normalized
// output rows, with hand-rolled reverse-mode gradients. 64-bit floats
// throughout so finite-difference checks are meaningful.

struct EncoderSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t emb_dim = 2;
    bool unit_norm = true;
};

std::vector<std::size_t> layer_widths(const EncoderSpec& spec);

struct Params {
    std::vector<Tensor> weights; // [fan_in x fan_out] per layer
    std::vector<Tensor> biases;  // [fan_out] per layer

    std::size_t scalar_count() const;
};

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
Params init_params(const EncoderSpec& spec, std::uint64_t seed);
Params zeros_like(const Params& params);

// Rows whose pre-normalization norm falls below this are passed through
// unscaled and flagged.
inline constexpr double kNormFloor = 1e-12;

struct ForwardCache {
    std::vector<Tensor> inputs; // inputs[l] feeds layer l; inputs[0] is the batch
    std::vector<Tensor> pre;    // pre-activation of each layer
    Tensor pre_norm;            // embedding before unit normalization
    std::vector<std::size_t> unnormalized_rows;
};

Tensor forward(const EncoderSpec& spec, const Params& params, const Tensor& batch,
               ForwardCache* cache = nullptr);

struct Gradients {
    Params params;
    Tensor input; // gradient with respect to the batch
};

// Gradients of the scalar <upstream_grad, forward(batch)>.
Gradients backward(const EncoderSpec& spec, const Params& params, const Tensor& batch,
                   const Tensor& upstream_grad);

// Same, reusing an existing forward pass.
Gradients backward_from_cache(const EncoderSpec& spec, const Params& params,
                              const ForwardCache& cache, const Tensor& upstream_grad);

// Unit normalization of a single vector, shared with evaluation code.
void normalize_rows(Tensor& t, std::vector<std::size_t>* unnormalized_rows = nullptr);

class SgdOptimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) { check(); }
    void step(Params& params, const Params& grads);
    long steps_taken() const { return t_; }

private:
    void check() const;
    double lr_;
    long t_ = 0;
};

class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(Params& params, const Params& grads); // throws training_error on non-finite grads
    long steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    Params m_, v_;
    bool initialized_ = false;
};

// JSON manifest plus one raw little-endian float64 file per parameter tensor.
void save_checkpoint(const std::filesystem::path& dir, const EncoderSpec& spec,
                     const Params& params, std::uint64_t seed);
std::pair<EncoderSpec, Params> load_checkpoint(const std::filesystem::path& dir);

nlohmann::ordered_json encoder_spec_to_json(const EncoderSpec& spec);
EncoderSpec encoder_spec_from_json(const nlohmann::json& j);

} // namespace mvinfo::nn
