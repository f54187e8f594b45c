#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/nnet/model_spec.hpp"
#include "safbage/nnet/tensor.hpp"
#include "safbage/rng.hpp"

namespace safbage::nnet {

template <typename T>
struct LayerParams {
    Tensor<T> weight;  ///< conv: [out, in, k, k]; fc: [units, in]; empty otherwise
    Tensor<T> bias;
    bool trainable = true;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Learnable tensors, one entry per spec layer (empty for parameter-free layers).
template <typename T>
struct ModelParams {
    std::vector<LayerParams<T>> layers;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

    /// Mark exactly the named layers trainable; an empty list unfreezes all.
    void set_trainable(const ModelSpec& spec, const std::vector<std::string>& names) {
        for (auto& l : layers) l.trainable = names.empty();
        for (const auto& n : names) {
            const std::size_t i = spec.index_of(n);
            if (!spec.layers[i].has_params())
                throw ConfigError("layer '" + n + "' has no parameters to train");
            layers[i].trainable = true;
        }
    }
};

template <typename T>
using Gradients = ModelParams<T>;

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
template <typename T>
ModelParams<T> build(const ModelSpec& spec, std::uint64_t seed) {
    const auto shapes = spec.infer_shapes();
    ModelParams<T> p;
    p.layers.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (!l.has_params()) continue;
        const Shape in = shapes[i];
        std::vector<std::size_t> wshape;
        std::size_t fan_in = 0;
        if (l.kind == LayerKind::Conv) {
            wshape = {std::size_t(l.channels), std::size_t(in.c), std::size_t(l.kernel), std::size_t(l.kernel)};
            fan_in = std::size_t(in.c) * l.kernel * l.kernel;
        } else {
            wshape = {std::size_t(l.units), in.size()};
            fan_in = in.size();
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(derive_seed(seed, i));
        auto& lp = p.layers[i];
        lp.weight = Tensor<T>(wshape);
        for (auto& w : lp.weight.data) w = static_cast<T>(rng.uniform(-bound, bound));
        lp.bias = Tensor<T>({wshape[0]});
    }
    return p;
}

enum class Mode { Train, Eval };

/// Per-layer state kept by forward() for backward().
template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> activations;          ///< [0] = input, [i+1] = output of layer i
    std::vector<std::vector<std::uint32_t>> argmax;  ///< maxpool routing per layer
    std::vector<std::vector<T>> masks;           ///< dropout scale per element (train mode)
    std::vector<Shape> shapes;
    std::size_t batch = 0;

    const Tensor<T>& logits() const { return activations[activations.size() - 2]; }
    const Tensor<T>& probs() const { return activations.back(); }
};

namespace detail {

/// Unfold one sample into a [C*k*k, oh*ow] matrix so convolution becomes a
/// matrix product with contiguous inner loops.
template <typename T>
void im2col(const T* src, const Shape& is, const Shape& os, int k, int s, std::vector<T>& col) {
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    col.resize(static_cast<std::size_t>(is.c) * k * k * plane);
    T* dst = col.data();
    for (int c = 0; c < is.c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* sp = src + static_cast<std::size_t>(c) * is.h * is.w + kx;
                for (int y = 0; y < os.h; ++y) {
                    const T* row = sp + static_cast<std::size_t>(y * s + ky) * is.w;
                    for (int x = 0; x < os.w; ++x) *dst++ = row[x * s];
                }
            }
}

template <typename T>
void col2im_add(const std::vector<T>& col, const Shape& is, const Shape& os, int k, int s, T* dst) {
    const T* src = col.data();
    for (int c = 0; c < is.c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* dp = dst + static_cast<std::size_t>(c) * is.h * is.w + kx;
                for (int y = 0; y < os.h; ++y) {
                    T* row = dp + static_cast<std::size_t>(y * s + ky) * is.w;
                    for (int x = 0; x < os.w; ++x) row[x * s] += *src++;
                }
            }
}

template <typename T>
void conv_forward(const Tensor<T>& in, const Shape& is, const Shape& os, const LayerSpec& l,
                  const LayerParams<T>& p, Tensor<T>& out, std::size_t n) {
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    const std::size_t depth = static_cast<std::size_t>(is.c) * l.kernel * l.kernel;
    std::vector<T> col;
    for (std::size_t b = 0; b < n; ++b) {
        im2col(in.data.data() + b * is.size(), is, os, l.kernel, l.stride, col);
        T* dst = out.data.data() + b * os.size();
        for (int o = 0; o < os.c; ++o) {
            T* drow = dst + static_cast<std::size_t>(o) * plane;
            std::fill(drow, drow + plane, p.bias[o]);
            const T* w = p.weight.data.data() + static_cast<std::size_t>(o) * depth;
            for (std::size_t d = 0; d < depth; ++d) {
                const T wd = w[d];
                const T* crow = col.data() + d * plane;
                for (std::size_t j = 0; j < plane; ++j) drow[j] += wd * crow[j];
            }
        }
    }
}

template <typename T>
void conv_backward(const Tensor<T>& in, const Shape& is, const Shape& os, const LayerSpec& l,
                   const LayerParams<T>& p, const Tensor<T>& dout, LayerParams<T>* grad, Tensor<T>* din,
                   std::size_t n) {
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    const std::size_t depth = static_cast<std::size_t>(is.c) * l.kernel * l.kernel;
    std::vector<T> col, dcol;
    for (std::size_t b = 0; b < n; ++b) {
        const T* g = dout.data.data() + b * os.size();
        if (grad) {
            im2col(in.data.data() + b * is.size(), is, os, l.kernel, l.stride, col);
            for (int o = 0; o < os.c; ++o) {
                const T* grow = g + static_cast<std::size_t>(o) * plane;
                T acc = 0;
                for (std::size_t j = 0; j < plane; ++j) acc += grow[j];
                grad->bias[o] += acc;
                T* gw = grad->weight.data.data() + static_cast<std::size_t>(o) * depth;
                for (std::size_t d = 0; d < depth; ++d) {
                    const T* crow = col.data() + d * plane;
                    T dot = 0;
                    for (std::size_t j = 0; j < plane; ++j) dot += grow[j] * crow[j];
                    gw[d] += dot;
                }
            }
        }
        if (din) {
            dcol.assign(depth * plane, T(0));
            for (int o = 0; o < os.c; ++o) {
                const T* grow = g + static_cast<std::size_t>(o) * plane;
                const T* w = p.weight.data.data() + static_cast<std::size_t>(o) * depth;
                for (std::size_t d = 0; d < depth; ++d) {
                    const T wd = w[d];
                    T* drow = dcol.data() + d * plane;
                    for (std::size_t j = 0; j < plane; ++j) drow[j] += wd * grow[j];
                }
            }
            col2im_add(dcol, is, os, l.kernel, l.stride, din->data.data() + b * is.size());
        }
    }
}

template <typename T>
void softmax_rows(const Tensor<T>& logits, Tensor<T>& probs, std::size_t n, std::size_t k) {
    for (std::size_t b = 0; b < n; ++b) {
        const T* z = logits.data.data() + b * k;
        T* p = probs.data.data() + b * k;
        const T zmax = *std::max_element(z, z + k);
        T sum = 0;
        for (std::size_t j = 0; j < k; ++j) sum += (p[j] = std::exp(z[j] - zmax));
        for (std::size_t j = 0; j < k; ++j) p[j] /= sum;
    }
}

} // namespace detail

/// Run the network on a batch shaped [N, C, H, W] (or [N, F] for flat input).
/// Dropout is active only in train mode and scales kept units by 1/keep.
template <typename T>
ForwardCache<T> forward(const ModelParams<T>& params, const ModelSpec& spec, const Tensor<T>& batch, Mode mode,
                        std::uint64_t seed = 0) {
    const auto shapes = spec.infer_shapes();
    if (batch.shape.empty() || batch.size() != batch.shape[0] * shapes[0].size())
        throw ShapeError("batch shape " + shape_string(batch.shape) + " does not match model input " +
                         std::to_string(shapes[0].c) + "x" + std::to_string(shapes[0].h) + "x" +
                         std::to_string(shapes[0].w));
    if (params.layers.size() != spec.layers.size()) throw ShapeError("params do not match spec layer count");
    const std::size_t n = batch.shape[0];
    ForwardCache<T> cache;
    cache.batch = n;
    cache.shapes = shapes;
    cache.activations.reserve(spec.layers.size() + 1);
    cache.activations.push_back(batch);
    cache.argmax.resize(spec.layers.size());
    cache.masks.resize(spec.layers.size());

    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const Shape is = shapes[i], os = shapes[i + 1];
        const Tensor<T>& in = cache.activations.back();
        Tensor<T> out(os.flat ? std::vector<std::size_t>{n, std::size_t(os.c)}
                              : std::vector<std::size_t>{n, std::size_t(os.c), std::size_t(os.h), std::size_t(os.w)});
        switch (l.kind) {
        case LayerKind::Conv: detail::conv_forward(in, is, os, l, params.layers[i], out, n); break;
        case LayerKind::Relu:
            for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > T(0) ? in[j] : T(0);
            break;
        case LayerKind::MaxPool: {
            auto& arg = cache.argmax[i];
            arg.resize(out.size());
            for (std::size_t b = 0; b < n; ++b)
                for (int c = 0; c < os.c; ++c)
                    for (int y = 0; y < os.h; ++y)
                        for (int x = 0; x < os.w; ++x) {
                            const std::size_t base = b * is.size() + static_cast<std::size_t>(c) * is.h * is.w;
                            std::size_t best = base + static_cast<std::size_t>(y * l.stride) * is.w + x * l.stride;
                            for (int ky = 0; ky < l.kernel; ++ky)
                                for (int kx = 0; kx < l.kernel; ++kx) {
                                    const std::size_t idx =
                                        base + static_cast<std::size_t>(y * l.stride + ky) * is.w + x * l.stride + kx;
                                    if (in[idx] > in[best]) best = idx;
                                }
                            const std::size_t o = b * os.size() + (static_cast<std::size_t>(c) * os.h + y) * os.w + x;
                            out[o] = in[best];
                            arg[o] = static_cast<std::uint32_t>(best);
                        }
            break;
        }
        case LayerKind::Fc: {
            const auto& p = params.layers[i];
            const std::size_t fin = is.size(), fout = os.size();
            for (std::size_t b = 0; b < n; ++b) {
                const T* x = in.data.data() + b * fin;
                for (std::size_t u = 0; u < fout; ++u) {
                    const T* w = p.weight.data.data() + u * fin;
                    T acc = p.bias[u];
                    for (std::size_t j = 0; j < fin; ++j) acc += w[j] * x[j];
                    out[b * fout + u] = acc;
                }
            }
            break;
        }
        case LayerKind::Dropout:
            if (mode == Mode::Train && l.keep < 1.0) {
                Rng rng(derive_seed(seed, i));
                auto& mask = cache.masks[i];
                mask.resize(in.size());
                const T scale = static_cast<T>(1.0 / l.keep);
                for (std::size_t j = 0; j < in.size(); ++j) {
                    mask[j] = rng.bernoulli(l.keep) ? scale : T(0);
                    out[j] = in[j] * mask[j];
                }
            } else {
                out.data = in.data;
            }
            break;
        case LayerKind::Flatten: out.data = in.data; break;
        case LayerKind::Gap: {
            const std::size_t plane = static_cast<std::size_t>(is.h) * is.w;
            for (std::size_t b = 0; b < n; ++b)
                for (int c = 0; c < is.c; ++c) {
                    const T* src = in.data.data() + b * is.size() + c * plane;
                    T acc = 0;
                    for (std::size_t j = 0; j < plane; ++j) acc += src[j];
                    out[b * is.c + c] = acc / static_cast<T>(plane);
                }
            break;
        }
        case LayerKind::Softmax: detail::softmax_rows(in, out, n, os.size()); break;
        }
        cache.activations.push_back(std::move(out));
    }
    return cache;
}

/// Class-weighted cross-entropy over softmax outputs. Returns the mean of
/// w_y * -ln(max(p_y, 1e-12)) and writes w_y * (p - onehot(y)) / N, the
/// gradient with respect to the logits.
template <typename T>
double weighted_ce(const Tensor<T>& probs, const std::vector<int>& labels, const std::vector<double>& class_weights,
                   Tensor<T>& dlogits) {
    if (probs.shape.size() != 2) throw ShapeError("probabilities must be [N, K]");
    const std::size_t n = probs.shape[0], k = probs.shape[1];
    if (labels.size() != n) throw ShapeError("label count does not match batch size");
    if (!class_weights.empty() && class_weights.size() != k) throw ShapeError("class weight count != classes");
    dlogits = Tensor<T>(probs.shape);
    double loss = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k) throw ShapeError("label out of range: " + std::to_string(y));
        const double w = class_weights.empty() ? 1.0 : class_weights[y];
        if (!(w > 0.0)) throw ConfigError("class weights must be > 0");
        const double py = std::max(static_cast<double>(probs[b * k + y]), 1e-12);
        loss += -w * std::log(py);
        for (std::size_t j = 0; j < k; ++j) {
            const double onehot = static_cast<int>(j) == y ? 1.0 : 0.0;
            dlogits[b * k + j] = static_cast<T>(w * (static_cast<double>(probs[b * k + j]) - onehot) / n);
        }
    }
    return loss / static_cast<double>(n);
}

template <typename T>
Gradients<T> zero_gradients(const ModelParams<T>& params) {
    Gradients<T> g;
    g.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (!params.layers[i].weight.empty()) {
            g.layers[i].weight = Tensor<T>(params.layers[i].weight.shape);
            g.layers[i].bias = Tensor<T>(params.layers[i].bias.shape);
        }
        g.layers[i].trainable = params.layers[i].trainable;
    }
    return g;
}

/// Backpropagate from d(loss)/d(logits). Frozen layers pass gradients
/// through to earlier layers but their own parameter gradients stay zero.
/// Propagation stops below the lowest trainable layer, where nothing
/// further would receive a gradient.
template <typename T>
Gradients<T> backward(const ModelParams<T>& params, const ModelSpec& spec, const ForwardCache<T>& cache,
                      const Tensor<T>& dlogits) {
    Gradients<T> grads = zero_gradients(params);
    const std::size_t L = spec.layers.size();
    std::size_t lowest = L;
    for (std::size_t i = 0; i < L; ++i)
        if (spec.layers[i].has_params() && params.layers[i].trainable) {
            lowest = i;
            break;
        }
    if (lowest == L) return grads;
    if (dlogits.size() != cache.logits().size()) throw ShapeError("dlogits shape does not match logits");

    const std::size_t n = cache.batch;
    Tensor<T> g = dlogits;  // gradient w.r.t. the output of layer i
    for (std::size_t i = L; i-- > lowest;) {
        const LayerSpec& l = spec.layers[i];
        const Shape is = cache.shapes[i], os = cache.shapes[i + 1];
        const Tensor<T>& in = cache.activations[i];
        const bool need_input_grad = i > lowest;
        Tensor<T> gin(in.shape);
        switch (l.kind) {
        case LayerKind::Conv:
            detail::conv_backward(in, is, os, l, params.layers[i], g,
                                  params.layers[i].trainable ? &grads.layers[i] : nullptr,
                                  need_input_grad ? &gin : nullptr, n);
            break;
        case LayerKind::Relu:
            for (std::size_t j = 0; j < in.size(); ++j) gin[j] = in[j] > T(0) ? g[j] : T(0);
            break;
        case LayerKind::MaxPool: {
            const auto& arg = cache.argmax[i];
            for (std::size_t j = 0; j < g.size(); ++j) gin[arg[j]] += g[j];
            break;
        }
        case LayerKind::Fc: {
            const auto& p = params.layers[i];
            const std::size_t fin = is.size(), fout = os.size();
            auto& gp = grads.layers[i];
            for (std::size_t b = 0; b < n; ++b) {
                const T* x = in.data.data() + b * fin;
                const T* gy = g.data.data() + b * fout;
                T* gx = gin.data.data() + b * fin;
                for (std::size_t u = 0; u < fout; ++u) {
                    const T gu = gy[u];
                    if (p.trainable) {
                        gp.bias[u] += gu;
                        T* gw = gp.weight.data.data() + u * fin;
                        for (std::size_t j = 0; j < fin; ++j) gw[j] += gu * x[j];
                    }
                    if (need_input_grad) {
                        const T* w = p.weight.data.data() + u * fin;
                        for (std::size_t j = 0; j < fin; ++j) gx[j] += gu * w[j];
                    }
                }
            }
            break;
        }
        case LayerKind::Dropout:
            if (!cache.masks[i].empty())
                for (std::size_t j = 0; j < g.size(); ++j) gin[j] = g[j] * cache.masks[i][j];
            else
                gin.data = g.data;
            break;
        case LayerKind::Flatten: gin.data = g.data; break;
        case LayerKind::Gap: {
            const std::size_t plane = static_cast<std::size_t>(is.h) * is.w;
            const T inv = T(1) / static_cast<T>(plane);
            for (std::size_t b = 0; b < n; ++b)
                for (int c = 0; c < is.c; ++c) {
                    const T gv = g[b * is.c + c] * inv;
                    T* dst = gin.data.data() + b * is.size() + c * plane;
                    for (std::size_t j = 0; j < plane; ++j) dst[j] = gv;
                }
            break;
        }
        case LayerKind::Softmax: gin.data = g.data; break;  // chain starts at the logits
        }
        if (i == lowest) break;
        g = std::move(gin);
    }
    return grads;
}

/// p <- p - lr * g on trainable layers.
template <typename T>
void sgd_step(ModelParams<T>& params, const Gradients<T>& grads, double lr) {
    const T step = static_cast<T>(lr);
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& p = params.layers[i];
        if (!p.trainable || p.weight.empty()) continue;
        const auto& g = grads.layers[i];
        for (std::size_t j = 0; j < p.weight.size(); ++j) p.weight[j] -= step * g.weight[j];
        for (std::size_t j = 0; j < p.bias.size(); ++j) p.bias[j] -= step * g.bias[j];
    }
}

/// Index of the largest value; ties go to the lowest index.
template <typename T>
int argmax_row(const T* row, std::size_t k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (row[j] > row[best]) best = j;
    return static_cast<int>(best);
}

} // namespace safbage::nnet
