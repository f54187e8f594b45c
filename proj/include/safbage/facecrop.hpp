#pragma once

#include <cmath>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"

namespace safbage {

struct CropConfig {
    double margin = 0.30;  ///< total growth of width and height, center preserved
    int out_size = 224;

    void validate() const {
        if (!(margin >= 0.0)) throw ConfigError("crop margin must be >= 0");
        if (out_size < 8) throw ConfigError("crop out_size must be >= 8");
    }
};

/// Grow a box by `margin` of its width and height (so 0.30 means 30% larger
/// overall, 15% per side), keeping the center. Coordinates round half away
/// from zero; the result may extend outside the image.
inline BBox expand_bbox(const BBox& box, double margin) {
    if (!(margin >= 0.0)) throw ConfigError("bbox margin must be >= 0");
    if (box.w < 1 || box.h < 1) throw ShapeError("bbox must be at least 1x1");
    BBox out;
    out.x = static_cast<int>(std::lround(box.x - margin * box.w / 2.0));
    out.y = static_cast<int>(std::lround(box.y - margin * box.h / 2.0));
    out.w = static_cast<int>(std::lround(box.w * (1.0 + margin)));
    out.h = static_cast<int>(std::lround(box.h * (1.0 + margin)));
    return out;
}

/// expand -> edge-padded crop -> square bilinear rescale.
inline Image prepare_face(const Image& img, const BBox& box, const CropConfig& cfg = {}) {
    cfg.validate();
    const BBox grown = expand_bbox(box, cfg.margin);
    return resize_bilinear(crop_with_edge_pad(img, grown), cfg.out_size, cfg.out_size);
}

} // namespace safbage
