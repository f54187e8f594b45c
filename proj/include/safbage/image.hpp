#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "safbage/errors.hpp"

namespace safbage {

/// Planar raster with values in [0, 1]. Storage is channel-major, then
/// row-major inside each channel, so a gray image and a saliency map share
/// the same layout.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0) : width(w), height(h), channels(c) {
        if (w < 1 || h < 1) throw ShapeError("image dimensions must be >= 1");
        if (c != 1 && c != 3) throw ShapeError("image must have 1 or 3 channels");
        data.assign(static_cast<std::size_t>(w) * h * c, fill);
    }

    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int c, int y, int x) const noexcept {
        return static_cast<std::size_t>(c) * plane_size() + static_cast<std::size_t>(y) * width + x;
    }
    double& at(int c, int y, int x) noexcept { return data[index(c, y, x)]; }
    double at(int c, int y, int x) const noexcept { return data[index(c, y, x)]; }

    /// Value at (x, y) with coordinates clamped into the image.
    double clamped(int c, int y, int x) const noexcept {
        return at(c, std::clamp(y, 0, height - 1), std::clamp(x, 0, width - 1));
    }

    bool same_shape(const Image& o) const noexcept {
        return width == o.width && height == o.height && channels == o.channels;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

inline double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

/// Bilinear read at a real-valued position. Coordinates are clamped to the
/// pixel-center grid first, so reads beyond the border return edge values.
inline double sample_bilinear(const Image& img, int c, double sx, double sy) noexcept {
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const double top = img.at(c, y0, x0) * (1.0 - fx) + img.at(c, y0, x1) * fx;
    const double bottom = img.at(c, y1, x0) * (1.0 - fx) + img.at(c, y1, x1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

namespace detail {
inline double aligned_source(int dst, int src_dim, int dst_dim) noexcept {
    if (dst_dim == 1) return (src_dim - 1) / 2.0;
    return static_cast<double>(dst) * (src_dim - 1) / (dst_dim - 1);
}
} // namespace detail

/// Corner-aligned bilinear resize: output index i samples the source at
/// i * (src - 1) / (dst - 1); a single-pixel axis samples the source center.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ShapeError("resize target must be >= 1x1");
    Image out(out_w, out_h, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const double sy = detail::aligned_source(y, img.height, out_h);
            for (int x = 0; x < out_w; ++x) {
                const double sx = detail::aligned_source(x, img.width, out_w);
                out.at(c, y, x) = clamp01(sample_bilinear(img, c, sx, sy));
            }
        }
    }
    return out;
}

/// Integer pixel rectangle. May lie partly or wholly outside an image.
struct BBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Crop `box` out of `img`; pixels outside the source take the value of the
/// nearest in-bounds pixel.
inline Image crop_with_edge_pad(const Image& img, const BBox& box) {
    if (box.w < 1 || box.h < 1) throw ShapeError("crop box must be at least 1x1");
    Image out(box.w, box.h, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < box.h; ++y)
            for (int x = 0; x < box.w; ++x)
                out.at(c, y, x) = img.clamped(c, box.y + y, box.x + x);
    return out;
}

inline Image flip_horizontal(const Image& img) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

/// Rotate about the image center by `degrees` (positive turns content
/// counter-clockwise on screen). Bilinear sampling, edge-clamped reads,
/// output dimensions unchanged.
inline Image rotate(const Image& img, double degrees) {
    if (std::abs(degrees) > 45.0) throw ConfigError("rotation angle must satisfy |degrees| <= 45");
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        const double dy = y - cy;
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx;
            // inverse map: rotate the destination offset by -angle (y axis points down)
            const double sx = cx + cs * dx - sn * dy;
            const double sy = cy + sn * dx + cs * dy;
            for (int c = 0; c < img.channels; ++c)
                out.at(c, y, x) = clamp01(sample_bilinear(img, c, sx, sy));
        }
    }
    return out;
}

inline Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(0, y, x) = clamp01(0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                                      0.114 * img.at(2, y, x));
    return out;
}

} // namespace safbage
