#pragma once

#include <optional>
#include <string>

#include "mvinfo/nn_core.hpp"
#include "mvinfo/tensor.hpp"

namespace mvinfo::obj {

// Self-supervised objectives over paired embedding batches. All values use
// the maximization convention (larger is better); trainers negate once at
// the optimizer boundary. Every loss returns exact gradients with respect to
// its embedding inputs.

struct PairBatch {
    nn::Tensor zx; // [n x d] input-view embeddings
    nn::Tensor zs; // [n x d] signal-view embeddings, row i paired with row i
};

// Optional linear projection applied to both sides before scoring.
struct ProjectionHead {
    nn::Tensor w; // [d x p]
};

struct LossOutput {
    double value = 0.0;
    nn::Tensor grad_zx;
    nn::Tensor grad_zs;
    nn::Tensor grad_head; // same shape as the head, empty without one
    bool clamped = false;
};

// Batch softmax contrast: mean_i ln( e^{<g(zx_i),g(zs_i)>} /
// ((1/n) sum_j e^{<g(zx_i),g(zs_j)>}) ), the denominator including j = i.
// Bounded above by ln n; log-sum-exp stabilized.
LossOutput cpc_loss(const PairBatch& batch, const ProjectionHead* head = nullptr);

// E_pairs[-softplus(-score)] - E_{i != j}[softplus(score)].
LossOutput js_loss(const PairBatch& batch, const ProjectionHead* head = nullptr);

enum class FpFlavor { Mse, Bce, RevBce };
FpFlavor fp_flavor_from_string(const std::string& s);
std::string to_string(FpFlavor flavor);

struct FpLossOutput {
    double value = 0.0;
    nn::Tensor grad_zx;
    nn::Params grad_decoder;
    bool clamped = false; // a log argument was clamped at 1e-12
};

// Reconstruction of the signal from the representation through a decoder
// network R. Mse scores -|s - R(zx)|^2; Bce treats sigmoid(R(zx)) as
// factorized Bernoulli parameters for targets in [0,1]; RevBce swaps the
// roles of target and reconstruction inside the sum (targets are squashed).
FpLossOutput fp_loss(const nn::Tensor& zx, const nn::Tensor& s_target,
                     const nn::EncoderSpec& decoder_spec, const nn::Params& decoder_params,
                     FpFlavor flavor);

// mean_i -|zx_i - zs_i|^2, gradients to both sides. Maximizing this alone is
// degenerate; composite_loss refuses that configuration.
LossOutput ip_loss(const PairBatch& batch);

struct CompositeSpec {
    double lambda_cl = 1.0;
    std::string cl_kind = "cpc"; // "cpc" or "js"
    double lambda_fp = 0.0;
    FpFlavor fp_flavor = FpFlavor::Mse;
    double lambda_ip = 0.0;
};

void validate_composite_spec(const CompositeSpec& spec);

struct CompositeOutput {
    double value = 0.0;
    double cl_value = 0.0; // unweighted component values
    double fp_value = 0.0;
    double ip_value = 0.0;
    nn::Tensor grad_zx;
    nn::Tensor grad_zs;
    nn::Params grad_decoder;
    nn::Tensor grad_head;
    bool clamped = false;
};

CompositeOutput composite_loss(const CompositeSpec& spec, const PairBatch& batch,
                               const nn::Tensor* s_target = nullptr,
                               const nn::EncoderSpec* decoder_spec = nullptr,
                               const nn::Params* decoder_params = nullptr,
                               const ProjectionHead* head = nullptr);

} // namespace mvinfo::obj
