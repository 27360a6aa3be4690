#include "mvinfo/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "mvinfo/common.hpp"

namespace mvinfo::obj {

namespace {

constexpr double kLogClamp = 1e-12;

void check_pair_batch(const PairBatch& batch, const char* who, std::size_t min_rows) {
    if (batch.zx.shape != batch.zs.shape) {
        throw std::invalid_argument(std::string(who) + ": zx and zs shapes differ");
    }
    if (batch.zx.shape.size() != 2) {
        throw std::invalid_argument(std::string(who) + ": expected [n x d] batches");
    }
    if (batch.zx.rows() < min_rows) {
        throw std::invalid_argument(std::string(who) + ": needs at least " +
                                    std::to_string(min_rows) + " pairs, got " +
                                    std::to_string(batch.zx.rows()));
    }
}

nn::Tensor Tensor_zeros(std::size_t n, std::size_t d) { return nn::Tensor::zeros({n, d}); }

nn::Tensor project(const nn::Tensor& z, const ProjectionHead* head) {
    if (!head) return z;
    const std::size_t n = z.rows(), d = z.cols(), p = head->w.cols();
    if (head->w.rows() != d) {
        throw std::invalid_argument("projection head: weight rows do not match embedding dim");
    }
    nn::Tensor out = Tensor_zeros(n, p);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            const double zv = z.at(r, i);
            for (std::size_t j = 0; j < p; ++j) out.at(r, j) += zv * head->w.at(i, j);
        }
    }
    return out;
}

// Scores s_ij = <gx_i, gs_j>.
nn::Tensor score_matrix(const nn::Tensor& gx, const nn::Tensor& gs) {
    const std::size_t n = gx.rows(), d = gx.cols();
    nn::Tensor s = Tensor_zeros(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const double* xi = gx.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < n; ++j) {
            const double* sj = gs.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += xi[k] * sj[k];
            s.at(static_cast<std::size_t>(i), j) = acc;
        }
    }
    return s;
}

// Backpropagates dL/dscore into the embeddings (and head, if any).
void scores_backward(const PairBatch& batch, const ProjectionHead* head, const nn::Tensor& gx,
                     const nn::Tensor& gs, const nn::Tensor& dscore, LossOutput& out) {
    const std::size_t n = gx.rows(), p = gx.cols();
    nn::Tensor dgx = Tensor_zeros(n, p);
    nn::Tensor dgs = Tensor_zeros(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dscore.at(i, j);
            if (d == 0.0) continue;
            for (std::size_t k = 0; k < p; ++k) {
                dgx.at(i, k) += d * gs.at(j, k);
                dgs.at(j, k) += d * gx.at(i, k);
            }
        }
    }
    if (!head) {
        out.grad_zx = std::move(dgx);
        out.grad_zs = std::move(dgs);
        return;
    }
    const std::size_t d_in = batch.zx.cols();
    out.grad_zx = Tensor_zeros(n, d_in);
    out.grad_zs = Tensor_zeros(n, d_in);
    out.grad_head = nn::Tensor::zeros(head->w.shape);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d_in; ++i) {
            double ax = 0.0, as = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                ax += dgx.at(r, j) * head->w.at(i, j);
                as += dgs.at(r, j) * head->w.at(i, j);
                out.grad_head.at(i, j) +=
                    batch.zx.at(r, i) * dgx.at(r, j) + batch.zs.at(r, i) * dgs.at(r, j);
            }
            out.grad_zx.at(r, i) = ax;
            out.grad_zs.at(r, i) = as;
        }
    }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace

LossOutput cpc_loss(const PairBatch& batch, const ProjectionHead* head) {
    check_pair_batch(batch, "cpc_loss", 2);
    const auto gx = project(batch.zx, head);
    const auto gs = project(batch.zs, head);
    const std::size_t n = gx.rows();
    const auto scores = score_matrix(gx, gs);

    double value = 0.0;
    nn::Tensor dscore = Tensor_zeros(n, n);
    std::vector<double> softmax(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = scores.row(i);
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            softmax[j] = std::exp(row[j] - mx);
            denom += softmax[j];
        }
        const double lse = mx + std::log(denom);
        value += row[i] - lse + std::log(static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            dscore.at(i, j) = ((i == j ? 1.0 : 0.0) - softmax[j] / denom) /
                              static_cast<double>(n);
        }
    }
    LossOutput out;
    out.value = value / static_cast<double>(n);
    scores_backward(batch, head, gx, gs, dscore, out);
    return out;
}

LossOutput js_loss(const PairBatch& batch, const ProjectionHead* head) {
    check_pair_batch(batch, "js_loss", 2);
    const auto gx = project(batch.zx, head);
    const auto gs = project(batch.zs, head);
    const std::size_t n = gx.rows();
    const auto scores = score_matrix(gx, gs);

    const double inv_pairs = 1.0 / static_cast<double>(n);
    const double inv_marg = 1.0 / static_cast<double>(n * (n - 1));
    double value = 0.0;
    nn::Tensor dscore = Tensor_zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double s = scores.at(i, j);
            if (i == j) {
                value -= inv_pairs * softplus(-s);
                dscore.at(i, j) = inv_pairs * sigmoid(-s);
            } else {
                value -= inv_marg * softplus(s);
                dscore.at(i, j) = -inv_marg * sigmoid(s);
            }
        }
    }
    LossOutput out;
    out.value = value;
    scores_backward(batch, head, gx, gs, dscore, out);
    return out;
}

FpFlavor fp_flavor_from_string(const std::string& s) {
    if (s == "mse") return FpFlavor::Mse;
    if (s == "bce") return FpFlavor::Bce;
    if (s == "revbce") return FpFlavor::RevBce;
    throw std::invalid_argument("unknown forward-predictive flavor '" + s + "'");
}

std::string to_string(FpFlavor flavor) {
    switch (flavor) {
        case FpFlavor::Mse: return "mse";
        case FpFlavor::Bce: return "bce";
        default: return "revbce";
    }
}

FpLossOutput fp_loss(const nn::Tensor& zx, const nn::Tensor& s_target,
                     const nn::EncoderSpec& decoder_spec, const nn::Params& decoder_params,
                     FpFlavor flavor) {
    if (zx.rows() != s_target.rows()) {
        throw std::invalid_argument("fp_loss: embedding and target batch sizes differ");
    }
    const std::size_t n = zx.rows(), sd = s_target.cols();

    nn::ForwardCache cache;
    const nn::Tensor u = nn::forward(decoder_spec, decoder_params, zx, &cache);
    if (u.cols() != sd) {
        throw std::invalid_argument("fp_loss: decoder output dim " + std::to_string(u.cols()) +
                                    " != target dim " + std::to_string(sd));
    }

    FpLossOutput out;
    const double inv_n = 1.0 / static_cast<double>(n);
    nn::Tensor du = Tensor_zeros(n, sd); // dvalue / d(decoder output)

    // Log arguments are clamped at 1e-12 for evaluation; gradients follow the
    // unclamped objective.
    auto safe_log = [&](double v) {
        if (v < kLogClamp) {
            out.clamped = true;
            v = kLogClamp;
        }
        return std::log(v);
    };

    double value = 0.0;
    switch (flavor) {
        case FpFlavor::Mse:
            for (std::size_t i = 0; i < u.data.size(); ++i) {
                const double diff = s_target.data[i] - u.data[i];
                value -= inv_n * diff * diff;
                du.data[i] = 2.0 * inv_n * diff;
            }
            break;
        case FpFlavor::Bce:
            for (double s : s_target.data) {
                if (s < 0.0 || s > 1.0) {
                    throw std::invalid_argument("fp_loss: bce targets must lie in [0, 1]");
                }
            }
            for (std::size_t i = 0; i < u.data.size(); ++i) {
                const double s = s_target.data[i];
                const double r = sigmoid(u.data[i]);
                value += inv_n * (s * safe_log(r) + (1.0 - s) * safe_log(1.0 - r));
                du.data[i] = inv_n * (s - r);
            }
            break;
        case FpFlavor::RevBce:
            for (std::size_t i = 0; i < u.data.size(); ++i) {
                const double st = sigmoid(s_target.data[i]); // targets squashed
                const double r = sigmoid(u.data[i]);
                const double log_st = safe_log(st);
                const double log_1mst = safe_log(1.0 - st);
                value += inv_n * (r * log_st + (1.0 - r) * log_1mst);
                du.data[i] = inv_n * (log_st - log_1mst) * r * (1.0 - r);
            }
            break;
    }

    auto grads = nn::backward_from_cache(decoder_spec, decoder_params, cache, du);
    out.value = value;
    out.grad_zx = std::move(grads.input);
    out.grad_decoder = std::move(grads.params);
    return out;
}

LossOutput ip_loss(const PairBatch& batch) {
    check_pair_batch(batch, "ip_loss", 1);
    const std::size_t n = batch.zx.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    LossOutput out;
    out.grad_zx = nn::Tensor::zeros(batch.zx.shape);
    out.grad_zs = nn::Tensor::zeros(batch.zs.shape);
    for (std::size_t i = 0; i < batch.zx.data.size(); ++i) {
        const double diff = batch.zx.data[i] - batch.zs.data[i];
        out.value -= inv_n * diff * diff;
        out.grad_zx.data[i] = -2.0 * inv_n * diff;
        out.grad_zs.data[i] = 2.0 * inv_n * diff;
    }
    return out;
}

void validate_composite_spec(const CompositeSpec& spec) {
    if (spec.lambda_cl < 0 || spec.lambda_fp < 0 || spec.lambda_ip < 0) {
        throw std::invalid_argument("composite_loss: weights must be nonnegative");
    }
    if (spec.lambda_cl == 0 && spec.lambda_fp == 0 && spec.lambda_ip == 0) {
        throw std::invalid_argument("composite_loss: at least one weight must be positive");
    }
    if (spec.lambda_cl == 0 && spec.lambda_fp == 0 && spec.lambda_ip > 0) {
        throw std::invalid_argument(
            "composite_loss: the inverse-predictive term alone is degenerate (constant "
            "embeddings maximize it); combine it with a contrastive or predictive term");
    }
    if (spec.cl_kind != "cpc" && spec.cl_kind != "js") {
        throw std::invalid_argument("composite_loss: cl_kind must be 'cpc' or 'js'");
    }
}

CompositeOutput composite_loss(const CompositeSpec& spec, const PairBatch& batch,
                               const nn::Tensor* s_target, const nn::EncoderSpec* decoder_spec,
                               const nn::Params* decoder_params, const ProjectionHead* head) {
    validate_composite_spec(spec);
    CompositeOutput out;
    out.grad_zx = nn::Tensor::zeros(batch.zx.shape);
    out.grad_zs = nn::Tensor::zeros(batch.zs.shape);

    auto accumulate = [](nn::Tensor& into, const nn::Tensor& from, double w) {
        for (std::size_t i = 0; i < into.data.size(); ++i) into.data[i] += w * from.data[i];
    };

    if (spec.lambda_cl > 0) {
        const auto cl = spec.cl_kind == "cpc" ? cpc_loss(batch, head) : js_loss(batch, head);
        out.cl_value = cl.value;
        out.value += spec.lambda_cl * cl.value;
        accumulate(out.grad_zx, cl.grad_zx, spec.lambda_cl);
        accumulate(out.grad_zs, cl.grad_zs, spec.lambda_cl);
        if (head) {
            out.grad_head = nn::Tensor::zeros(head->w.shape);
            accumulate(out.grad_head, cl.grad_head, spec.lambda_cl);
        }
    }
    if (spec.lambda_fp > 0) {
        if (!s_target || !decoder_spec || !decoder_params) {
            throw std::invalid_argument(
                "composite_loss: forward-predictive term needs a target and a decoder");
        }
        auto fp = fp_loss(batch.zx, *s_target, *decoder_spec, *decoder_params, spec.fp_flavor);
        out.fp_value = fp.value;
        out.clamped = out.clamped || fp.clamped;
        out.value += spec.lambda_fp * fp.value;
        accumulate(out.grad_zx, fp.grad_zx, spec.lambda_fp);
        out.grad_decoder = nn::zeros_like(*decoder_params);
        for (std::size_t l = 0; l < out.grad_decoder.weights.size(); ++l) {
            accumulate(out.grad_decoder.weights[l], fp.grad_decoder.weights[l], spec.lambda_fp);
            accumulate(out.grad_decoder.biases[l], fp.grad_decoder.biases[l], spec.lambda_fp);
        }
    }
    if (spec.lambda_ip > 0) {
        const auto ip = ip_loss(batch);
        out.ip_value = ip.value;
        out.value += spec.lambda_ip * ip.value;
        accumulate(out.grad_zx, ip.grad_zx, spec.lambda_ip);
        accumulate(out.grad_zs, ip.grad_zs, spec.lambda_ip);
    }
    return out;
}

} // namespace mvinfo::obj
