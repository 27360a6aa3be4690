#include "mvinfo/nn_core.hpp"

#include <cmath>
#include <fstream>

#include "mvinfo/common.hpp"
#include "mvinfo/raw_io.hpp"
#include "mvinfo/rng.hpp"

namespace mvinfo::nn {

namespace {

void check_spec(const EncoderSpec& spec) {
    if (spec.input_dim < 1) throw std::invalid_argument("EncoderSpec: input_dim must be >= 1");
    if (spec.emb_dim < 2) throw std::invalid_argument("EncoderSpec: emb_dim must be >= 2");
    for (std::size_t w : spec.hidden) {
        if (w < 1) throw std::invalid_argument("EncoderSpec: hidden widths must be >= 1");
    }
}

// y[n x out] = x[n x in] * W + b, rows in parallel.
void linear_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    const std::size_t n = x.rows(), in = x.cols(), out = w.cols();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long r = 0; r < static_cast<long long>(n); ++r) {
        const double* xr = x.row(static_cast<std::size_t>(r));
        double* yr = y.row(static_cast<std::size_t>(r));
        for (std::size_t j = 0; j < out; ++j) yr[j] = b.data[j];
        for (std::size_t i = 0; i < in; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            const double* wrow = w.data.data() + i * out;
            for (std::size_t j = 0; j < out; ++j) yr[j] += xv * wrow[j];
        }
    }
}

} // namespace

std::vector<std::size_t> layer_widths(const EncoderSpec& spec) {
    std::vector<std::size_t> widths;
    widths.push_back(spec.input_dim);
    widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
    widths.push_back(spec.emb_dim);
    return widths;
}

std::size_t Params::scalar_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

Params init_params(const EncoderSpec& spec, std::uint64_t seed) {
    check_spec(spec);
    Rng rng(substream_seed(seed, "encoder_init"));
    const auto widths = layer_widths(spec);
    Params p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor w = Tensor::zeros({fan_in, fan_out});
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor::zeros({fan_out}));
    }
    return p;
}

Params zeros_like(const Params& params) {
    Params z;
    for (const auto& w : params.weights) z.weights.push_back(Tensor::zeros(w.shape));
    for (const auto& b : params.biases) z.biases.push_back(Tensor::zeros(b.shape));
    return z;
}

void normalize_rows(Tensor& t, std::vector<std::size_t>* unnormalized_rows) {
    const std::size_t n = t.rows(), d = t.cols();
    for (std::size_t r = 0; r < n; ++r) {
        double* row = t.row(r);
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += row[j] * row[j];
        const double norm = std::sqrt(sq);
        if (norm < kNormFloor) {
            if (unnormalized_rows) unnormalized_rows->push_back(r);
            continue;
        }
        const double inv = 1.0 / norm;
        for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
    }
}

Tensor forward(const EncoderSpec& spec, const Params& params, const Tensor& batch,
               ForwardCache* cache) {
    check_spec(spec);
    if (batch.cols() != spec.input_dim) {
        throw std::invalid_argument("forward: batch width " + std::to_string(batch.cols()) +
                                    " != input_dim " + std::to_string(spec.input_dim));
    }
    const std::size_t layers = params.weights.size();
    if (layers != spec.hidden.size() + 1) {
        throw std::invalid_argument("forward: params do not match the encoder layout");
    }

    Tensor act = batch;
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
        cache->unnormalized_rows.clear();
    }
    for (std::size_t l = 0; l < layers; ++l) {
        if (cache) cache->inputs.push_back(act);
        Tensor next = Tensor::zeros({act.rows(), params.weights[l].cols()});
        linear_forward(act, params.weights[l], params.biases[l], next);
        if (cache) cache->pre.push_back(next);
        if (l + 1 < layers) {
            for (auto& v : next.data) v = v > 0.0 ? v : 0.0;
        }
        act = std::move(next);
    }
    if (spec.unit_norm) {
        if (cache) cache->pre_norm = act;
        normalize_rows(act, cache ? &cache->unnormalized_rows : nullptr);
    }
    return act;
}

Gradients backward_from_cache(const EncoderSpec& spec, const Params& params,
                              const ForwardCache& cache, const Tensor& upstream_grad) {
    const std::size_t layers = params.weights.size();
    const std::size_t n = cache.inputs[0].rows();

    Tensor delta = upstream_grad; // d<upstream, out> / d(current activation)
    if (spec.unit_norm) {
        const Tensor& v = cache.pre_norm;
        const std::size_t d = v.cols();
        Tensor dv = Tensor::zeros(v.shape);
        for (std::size_t r = 0; r < n; ++r) {
            const double* vr = v.row(r);
            const double* du = delta.row(r);
            double* out = dv.row(r);
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) sq += vr[j] * vr[j];
            const double norm = std::sqrt(sq);
            if (norm < kNormFloor) {
                for (std::size_t j = 0; j < d; ++j) out[j] = du[j];
                continue;
            }
            // d(v/|v|) pulls out the component of the upstream along the output.
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += du[j] * vr[j] / norm;
            const double inv = 1.0 / norm;
            for (std::size_t j = 0; j < d; ++j) {
                out[j] = (du[j] - dot * vr[j] * inv) * inv;
            }
        }
        delta = std::move(dv);
    }

    Gradients g;
    g.params = zeros_like(params);
    for (std::size_t li = layers; li-- > 0;) {
        if (li + 1 < layers) { // rectifier between layers
            const Tensor& pre = cache.pre[li];
            for (std::size_t i = 0; i < delta.data.size(); ++i) {
                if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
            }
        }
        const Tensor& input = cache.inputs[li];
        const std::size_t in = input.cols(), out = delta.cols();
        Tensor& dw = g.params.weights[li];
        Tensor& db = g.params.biases[li];
        for (std::size_t r = 0; r < n; ++r) {
            const double* xr = input.row(r);
            const double* dr = delta.row(r);
            for (std::size_t j = 0; j < out; ++j) db.data[j] += dr[j];
            for (std::size_t i = 0; i < in; ++i) {
                const double xv = xr[i];
                if (xv == 0.0) continue;
                double* dwrow = dw.data.data() + i * out;
                for (std::size_t j = 0; j < out; ++j) dwrow[j] += xv * dr[j];
            }
        }
        Tensor prev = Tensor::zeros({n, in});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (long long r = 0; r < static_cast<long long>(n); ++r) {
            const double* dr = delta.row(static_cast<std::size_t>(r));
            double* pr = prev.row(static_cast<std::size_t>(r));
            const auto& w = params.weights[li];
            for (std::size_t i = 0; i < in; ++i) {
                const double* wrow = w.data.data() + i * out;
                double acc = 0.0;
                for (std::size_t j = 0; j < out; ++j) acc += wrow[j] * dr[j];
                pr[i] = acc;
            }
        }
        delta = std::move(prev);
    }
    g.input = std::move(delta);
    return g;
}

Gradients backward(const EncoderSpec& spec, const Params& params, const Tensor& batch,
                   const Tensor& upstream_grad) {
    ForwardCache cache;
    const Tensor out = forward(spec, params, batch, &cache);
    if (upstream_grad.shape != out.shape) {
        throw std::invalid_argument("backward: upstream gradient shape mismatch");
    }
    return backward_from_cache(spec, params, cache, upstream_grad);
}

void SgdOptimizer::check() const {
    if (lr_ <= 0.0) throw std::invalid_argument("SgdOptimizer: learning rate must be positive");
}

namespace {

void check_finite(const Params& grads, long step) {
    for (const auto& t : grads.weights) {
        for (double v : t.data) {
            if (!std::isfinite(v)) throw training_error("non-finite weight gradient", step);
        }
    }
    for (const auto& t : grads.biases) {
        for (double v : t.data) {
            if (!std::isfinite(v)) throw training_error("non-finite bias gradient", step);
        }
    }
}

} // namespace

void SgdOptimizer::step(Params& params, const Params& grads) {
    ++t_;
    check_finite(grads, t_);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (std::size_t i = 0; i < params.weights[l].data.size(); ++i) {
            params.weights[l].data[i] -= lr_ * grads.weights[l].data[i];
        }
        for (std::size_t i = 0; i < params.biases[l].data.size(); ++i) {
            params.biases[l].data[i] -= lr_ * grads.biases[l].data[i];
        }
    }
}

void AdamOptimizer::step(Params& params, const Params& grads) {
    if (lr_ <= 0.0) throw std::invalid_argument("AdamOptimizer: learning rate must be positive");
    if (!initialized_) {
        m_ = zeros_like(params);
        v_ = zeros_like(params);
        initialized_ = true;
    }
    ++t_;
    check_finite(grads, t_);
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

    auto update = [&](Tensor& p, Tensor& m, Tensor& v, const Tensor& g) {
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g.data[i];
            v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l], m_.weights[l], v_.weights[l], grads.weights[l]);
        update(params.biases[l], m_.biases[l], v_.biases[l], grads.biases[l]);
    }
}

nlohmann::ordered_json encoder_spec_to_json(const EncoderSpec& spec) {
    return {{"input_dim", spec.input_dim},
            {"hidden", spec.hidden},
            {"emb_dim", spec.emb_dim},
            {"unit_norm", spec.unit_norm}};
}

EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
    EncoderSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden = j.value("hidden", std::vector<std::size_t>{});
    spec.emb_dim = j.at("emb_dim").get<std::size_t>();
    spec.unit_norm = j.value("unit_norm", true);
    return spec;
}

void save_checkpoint(const std::filesystem::path& dir, const EncoderSpec& spec,
                     const Params& params, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["format"] = "mvinfo-checkpoint-v1";
    manifest["spec"] = encoder_spec_to_json(spec);
    manifest["seed"] = seed;
    manifest["tensors"] = nlohmann::ordered_json::array();

    auto dump_tensor = [&](const Tensor& t, const std::string& name) {
        manifest["tensors"].push_back({{"file", name + ".f64"}, {"shape", t.shape}});
        write_raw(dir / (name + ".f64"), t.data.data(), t.data.size() * sizeof(double));
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        dump_tensor(params.weights[l], "weight_" + std::to_string(l));
        dump_tensor(params.biases[l], "bias_" + std::to_string(l));
    }
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw io_error("cannot write checkpoint manifest in " + dir.string());
    mf << manifest.dump(2) << "\n";
}

std::pair<EncoderSpec, Params> load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw io_error("cannot read checkpoint manifest in " + dir.string());
    const nlohmann::json manifest = nlohmann::json::parse(mf);
    const auto spec = encoder_spec_from_json(manifest.at("spec"));

    Params params;
    const auto& tensors = manifest.at("tensors");
    for (std::size_t i = 0; i < tensors.size(); i += 2) {
        auto load_tensor = [&](const nlohmann::json& tj) {
            Tensor t = Tensor::zeros(tj.at("shape").get<std::vector<std::size_t>>());
            read_raw(dir / tj.at("file").get<std::string>(), t.data.data(),
                     t.data.size() * sizeof(double));
            return t;
        };
        params.weights.push_back(load_tensor(tensors[i]));
        params.biases.push_back(load_tensor(tensors[i + 1]));
    }
    return {spec, std::move(params)};
}

} // namespace mvinfo::nn
