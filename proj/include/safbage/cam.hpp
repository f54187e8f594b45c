#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"
#include "safbage/nnet/network.hpp"
#include "safbage/nnet/train.hpp"
#include "safbage/saliency.hpp"

namespace safbage {

template <typename T>
nnet::Tensor<T> image_tensor(const Image& img, const nnet::ModelSpec& spec) {
    if (img.channels != spec.in_channels || img.height != spec.in_height || img.width != spec.in_width)
        throw ShapeError("image " + std::to_string(img.channels) + "x" + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " does not match model input " +
                         std::to_string(spec.in_channels) + "x" + std::to_string(spec.in_height) + "x" +
                         std::to_string(spec.in_width));
    nnet::Tensor<T> t({1, std::size_t(img.channels), std::size_t(img.height), std::size_t(img.width)});
    for (std::size_t i = 0; i < img.data.size(); ++i) t[i] = static_cast<T>(img.data[i]);
    return t;
}

/// Convolutional trunk of a trained classifier followed by global average
/// pooling, one fc layer and softmax. Head weights read out class evidence
/// per feature map.
template <typename T>
struct CamModel {
    nnet::ModelSpec spec;
    nnet::ModelParams<T> params;
    std::size_t trunk_size = 0;  ///< number of trunk layers; spec.layers[trunk_size] is the GAP
    int feature_channels = 0;
    bool trunk_frozen = true;

    static constexpr const char* kHeadName = "cam_fc";

    std::size_t head_index() const { return trunk_size + 1; }
    const nnet::Tensor<T>& head_weight() const { return params.layers[head_index()].weight; }
    nnet::Tensor<T>& head_weight() { return params.layers[head_index()].weight; }
    nnet::Tensor<T>& head_bias() { return params.layers[head_index()].bias; }
    int num_classes() const { return static_cast<int>(head_weight().shape[0]); }
};

/// Keep the layers up to the last convolution (and its ReLU, when one
/// follows), then attach GAP -> fc(num_classes) -> softmax. Trunk parameters
/// are copied (frozen unless `freeze_trunk` is false); the head is freshly
/// initialized from `seed`.
template <typename T>
CamModel<T> build_cam_head(const nnet::ModelSpec& spec, const nnet::ModelParams<T>& params, int num_classes,
                           std::uint64_t seed, bool freeze_trunk = true) {
    using nnet::LayerKind;
    using nnet::LayerSpec;
    spec.validate();
    if (num_classes < 1) throw BuildError("CAM head needs at least one class");
    std::size_t last_conv = spec.layers.size();
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::Conv) last_conv = i;
    if (last_conv == spec.layers.size()) throw BuildError("CAM needs a model with at least one conv layer");
    std::size_t end = last_conv + 1;
    if (end < spec.layers.size() && spec.layers[end].kind == LayerKind::Relu) ++end;

    CamModel<T> cam;
    cam.trunk_size = end;
    cam.trunk_frozen = freeze_trunk;
    cam.spec.in_channels = spec.in_channels;
    cam.spec.in_height = spec.in_height;
    cam.spec.in_width = spec.in_width;
    cam.spec.layers.assign(spec.layers.begin(), spec.layers.begin() + static_cast<std::ptrdiff_t>(end));
    for (const char* n : {"cam_gap", CamModel<T>::kHeadName, "cam_prob"})
        for (const auto& l : cam.spec.layers)
            if (l.name == n) throw BuildError(std::string("trunk already has a layer named '") + n + "'");
    cam.spec.layers.push_back(LayerSpec::gap("cam_gap"));
    cam.spec.layers.push_back(LayerSpec::fc(CamModel<T>::kHeadName, num_classes));
    cam.spec.layers.push_back(LayerSpec::softmax("cam_prob"));
    const auto shapes = cam.spec.infer_shapes();
    cam.feature_channels = shapes[end].c;

    cam.params = nnet::build<T>(cam.spec, seed);
    for (std::size_t i = 0; i < end; ++i) {
        cam.params.layers[i] = params.layers[i];
        cam.params.layers[i].trainable = !freeze_trunk;
    }
    cam.params.layers[cam.head_index()].trainable = true;
    return cam;
}

/// Wrap a model that already ends in GAP -> fc -> softmax, such as a saved
/// CAM model, without touching its parameters.
template <typename T>
CamModel<T> as_cam_model(nnet::ModelSpec spec, nnet::ModelParams<T> params) {
    using nnet::LayerKind;
    spec.validate();
    const std::size_t n = spec.layers.size();
    if (n < 4 || spec.layers[n - 3].kind != LayerKind::Gap || spec.layers[n - 2].kind != LayerKind::Fc ||
        spec.layers[n - 1].kind != LayerKind::Softmax)
        throw BuildError("model does not end in gap -> fc -> softmax");
    bool has_conv = false;
    for (std::size_t i = 0; i + 3 < n; ++i) has_conv |= spec.layers[i].kind == LayerKind::Conv;
    if (!has_conv) throw BuildError("CAM needs a model with at least one conv layer");
    CamModel<T> cam;
    cam.trunk_size = n - 3;
    cam.feature_channels = spec.infer_shapes()[n - 3].c;
    cam.spec = std::move(spec);
    cam.params = std::move(params);
    return cam;
}

/// Train the head, and the trunk too when it was not frozen.
template <typename T>
nnet::TrainLog train_cam_head(CamModel<T>& cam, const nnet::LabeledSet<T>& data, nnet::TrainConfig cfg,
                              const nnet::LabeledSet<T>* validation = nullptr) {
    cfg.trainable_layers.clear();
    if (cam.trunk_frozen) cfg.trainable_layers = {cam.spec.layers[cam.head_index()].name};
    auto result = nnet::train(cam.spec, std::move(cam.params), data, cfg, validation);
    cam.params = std::move(result.params);
    return std::move(result.log);
}

/// Last-conv feature maps for one image, shape [C, h, w] (leading batch dim 1).
template <typename T>
nnet::Tensor<T> cam_features(const CamModel<T>& cam, const Image& img) {
    auto cache = nnet::forward(cam.params, cam.spec, image_tensor<T>(img, cam.spec), nnet::Mode::Eval);
    return std::move(cache.activations[cam.trunk_size]);
}

/// Class probabilities of the CAM classifier for one image.
template <typename T>
std::vector<double> cam_classify(const CamModel<T>& cam, const Image& img) {
    const auto cache = nnet::forward(cam.params, cam.spec, image_tensor<T>(img, cam.spec), nnet::Mode::Eval);
    const auto& p = cache.probs();
    return {p.data.begin(), p.data.end()};
}

/// sum_k weight[class, k] * features[k] at feature-map resolution, before
/// any normalization. Negative evidence is kept.
template <typename T>
SaliencyMap cam_raw(const nnet::Tensor<T>& features, const nnet::Tensor<T>& head_weight, int class_idx) {
    if (features.shape.size() != 4 || features.shape[0] != 1) throw ShapeError("features must be [1, C, h, w]");
    const std::size_t c = features.shape[1], h = features.shape[2], w = features.shape[3];
    if (head_weight.shape.size() != 2 || head_weight.shape[1] != c)
        throw ShapeError("head weight does not match feature channels");
    if (class_idx < 0 || static_cast<std::size_t>(class_idx) >= head_weight.shape[0])
        throw ConfigError("class index " + std::to_string(class_idx) + " out of range");
    SaliencyMap raw(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t k = 0; k < c; ++k) {
        const double wk = static_cast<double>(head_weight[static_cast<std::size_t>(class_idx) * c + k]);
        for (std::size_t p = 0; p < h * w; ++p) raw.values[p] += wk * static_cast<double>(features[k * h * w + p]);
    }
    return raw;
}

/// Where feature cell i sits in input pixels: offset + i * stride is the
/// center of its receptive field. Valid convs and pools shrink the map from
/// both sides, so the feature grid does not span the input corner to corner.
struct FeatureGrid {
    double offset = 0.0;
    double stride = 1.0;
};

inline FeatureGrid feature_grid(const nnet::ModelSpec& spec, std::size_t layers) {
    FeatureGrid g;
    for (std::size_t i = 0; i < layers && i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        if (l.kind != nnet::LayerKind::Conv && l.kind != nnet::LayerKind::MaxPool) continue;
        g.offset += (l.kernel - 1) / 2.0 * g.stride;
        g.stride *= l.stride;
    }
    return g;
}

/// Bilinear upsample of a feature-resolution map to w x h input pixels,
/// sampling each pixel at its position on the feature grid (clamped at the
/// border cells).
inline SaliencyMap upsample_to_input(const SaliencyMap& m, const FeatureGrid& g, int w, int h) {
    const Image src = m.to_image();
    Image out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        const double sy = std::clamp((y - g.offset) / g.stride, 0.0, m.height - 1.0);
        for (int x = 0; x < w; ++x) {
            const double sx = std::clamp((x - g.offset) / g.stride, 0.0, m.width - 1.0);
            out.at(0, y, x) = sample_bilinear(src, 0, sx, sy);
        }
    }
    return SaliencyMap::from_image(out);
}

/// Heatmap for `class_idx`: raw class map, min-max normalized, bilinearly
/// upsampled to the input size.
template <typename T>
SaliencyMap compute_cam(const CamModel<T>& cam, const Image& img, int class_idx) {
    const SaliencyMap norm = normalize(cam_raw(cam_features(cam, img), cam.head_weight(), class_idx));
    return upsample_to_input(norm, feature_grid(cam.spec, cam.trunk_size), img.width, img.height);
}

/// Location of the heatmap maximum. Border clamping in the upsample leaves a
/// flat run of tied maxima reaching out to the image edge; ties go to the
/// tied pixel nearest the image center (the inner end of that run), then to
/// the lowest index.
struct HeatmapPeak {
    int x = 0;
    int y = 0;
};

inline HeatmapPeak heatmap_peak(const SaliencyMap& m) {
    if (m.values.empty()) throw ShapeError("empty heatmap");
    const double top = *std::max_element(m.values.begin(), m.values.end());
    const double cx = (m.width - 1) / 2.0, cy = (m.height - 1) / 2.0;
    HeatmapPeak best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (m.at(y, x) != top) continue;
            const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (d < best_d) best_d = d, best = {x, y};
        }
    return best;
}

} // namespace safbage
