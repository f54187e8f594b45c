#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"
#include "safbage/nnet/network.hpp"
#include "safbage/rng.hpp"

namespace safbage::nnet {

/// Contiguous block of preprocessed samples sharing one input shape.
template <typename T>
struct LabeledSet {
    Shape shape;
    std::vector<T> pixels;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }

    void add(const Image& img, int label) {
        const Shape s{img.channels, img.height, img.width, false};
        if (labels.empty()) shape = s;
        else if (!(s == shape)) throw ShapeError("sample shape differs from the rest of the set");
        pixels.insert(pixels.end(), img.data.begin(), img.data.end());
        labels.push_back(label);
    }

    Tensor<T> batch(std::span<const std::size_t> idx) const {
        Tensor<T> t({idx.size(), std::size_t(shape.c), std::size_t(shape.h), std::size_t(shape.w)});
        const std::size_t sz = shape.size();
        for (std::size_t b = 0; b < idx.size(); ++b)
            std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(idx[b] * sz), sz,
                        t.data.begin() + static_cast<std::ptrdiff_t>(b * sz));
        return t;
    }
};

struct TrainConfig {
    double learning_rate = 0.001;
    std::optional<int> lr_drop_epoch;  ///< lr /= 10 for epochs after this one
    int epochs = 30;
    int batch_size = 128;
    std::optional<double> dropout_keep;  ///< overrides every dropout layer when set
    std::uint64_t seed = 0;
    std::vector<std::string> trainable_layers;  ///< empty = all
    std::vector<double> class_weights;          ///< empty = uniform

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (dropout_keep && !(*dropout_keep > 0.0 && *dropout_keep <= 1.0))
            throw ConfigError("dropout_keep must be in (0, 1]");
    }

    /// Learning rate in effect during 1-based `epoch`.
    double lr_at(int epoch) const {
        return lr_drop_epoch && epoch > *lr_drop_epoch ? learning_rate / 10.0 : learning_rate;
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_accuracy;
    double lr = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;

    /// First epoch whose mean training loss is below `threshold`.
    std::optional<int> epochs_to_loss(double threshold) const {
        for (const auto& e : epochs)
            if (e.train_loss < threshold) return e.epoch;
        return std::nullopt;
    }

    friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

template <typename T>
struct TrainResult {
    ModelParams<T> params;
    TrainLog log;
};

inline ModelSpec with_dropout_keep(ModelSpec spec, std::optional<double> keep) {
    if (keep)
        for (auto& l : spec.layers)
            if (l.kind == LayerKind::Dropout) l.keep = *keep;
    return spec;
}

/// Eval-mode predictions in batches.
template <typename T>
std::vector<int> predict(const ModelParams<T>& params, const ModelSpec& spec, const LabeledSet<T>& set,
                         std::size_t batch_size = 64) {
    std::vector<int> out;
    out.reserve(set.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i) idx.push_back(i);
        const auto cache = forward(params, spec, set.batch(idx), Mode::Eval);
        const auto& probs = cache.probs();
        const std::size_t k = probs.shape[1];
        for (std::size_t b = 0; b < idx.size(); ++b) out.push_back(argmax_row(probs.data.data() + b * k, k));
    }
    return out;
}

template <typename T>
double accuracy(const ModelParams<T>& params, const ModelSpec& spec, const LabeledSet<T>& set) {
    if (set.empty()) throw EvaluationError("empty evaluation set");
    const auto pred = predict(params, spec, set);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == set.labels[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

/// Minibatch SGD. Each epoch reshuffles with a stream derived from
/// (seed, epoch); dropout masks derive from (seed, epoch, step). Aborts with
/// DivergedError on a non-finite loss.
template <typename T>
TrainResult<T> train(const ModelSpec& base_spec, ModelParams<T> params, const LabeledSet<T>& data,
                     const TrainConfig& cfg, const LabeledSet<T>* validation = nullptr) {
    cfg.validate();
    if (data.empty()) throw ConfigError("training set is empty");
    const ModelSpec spec = with_dropout_keep(base_spec, cfg.dropout_keep);
    const auto shapes = spec.infer_shapes();
    if (!(data.shape == shapes[0])) throw ShapeError("training samples do not match the model input shape");
    if (!cfg.trainable_layers.empty()) params.set_trainable(spec, cfg.trainable_layers);

    TrainLog log;
    std::vector<std::size_t> order(data.size());
    std::size_t step = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffler(derive_seed(cfg.seed, 0x5348u, epoch));
        shuffler.shuffle(std::span<std::size_t>(order));
        const double lr = cfg.lr_at(epoch);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            std::vector<int> labels(idx.size());
            for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = data.labels[idx[b]];
            const auto cache = forward(params, spec, data.batch(idx), Mode::Train,
                                       derive_seed(cfg.seed, 0x4452u, epoch, step));
            Tensor<T> dlogits;
            const double loss = weighted_ce(cache.probs(), labels, cfg.class_weights, dlogits);
            if (!std::isfinite(loss))
                throw DivergedError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                                    std::to_string(epoch) + ")");
            sgd_step(params, backward(params, spec, cache, dlogits), lr);
            loss_sum += loss * static_cast<double>(idx.size());
            ++step;
        }
        EpochRecord rec{epoch, loss_sum / static_cast<double>(data.size()), std::nullopt, lr};
        if (validation && !validation->empty()) rec.val_accuracy = accuracy(params, spec, *validation);
        log.epochs.push_back(rec);
    }
    return {std::move(params), std::move(log)};
}

} // namespace safbage::nnet
