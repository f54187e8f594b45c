#pragma once

#include <string>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"
#include "safbage/saliency.hpp"

namespace safbage {

struct BlendConfig {
    double alpha = 0.30;  ///< reweighted saliency ratio

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    }
};

/// Convex weight map M = (1 - alpha) + alpha * S. alpha = 0 gives M == 1
/// exactly; alpha = 1 gives M == S.
inline SaliencyMap reweight_map(const SaliencyMap& map, double alpha) {
    BlendConfig{alpha}.validate();
    SaliencyMap m = map;
    for (double& v : m.values) v = clamp01((1.0 - alpha) + alpha * v);
    return m;
}

/// Multiply every channel of `img` by the single-channel weight map.
inline Image apply(const Image& img, const SaliencyMap& weights) {
    if (img.width != weights.width || img.height != weights.height)
        throw ShapeError("weight map " + std::to_string(weights.width) + "x" + std::to_string(weights.height) +
                         " does not match image " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
    Image out = img;
    const std::size_t plane = img.plane_size();
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t p = 0; p < plane; ++p) out.data[c * plane + p] = clamp01(img.data[c * plane + p] * weights.values[p]);
    return out;
}

inline Image blend(const Image& img, const SaliencyMap& saliency, double alpha) {
    return apply(img, reweight_map(saliency, alpha));
}

} // namespace safbage
