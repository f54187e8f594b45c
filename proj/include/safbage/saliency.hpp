#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"
#include "safbage/pnm.hpp"

namespace safbage {

/// Single-channel attention map, row-major, values in [0, 1].
struct SaliencyMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    SaliencyMap() = default;
    SaliencyMap(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w < 1 || h < 1) throw ShapeError("saliency map dimensions must be >= 1");
        values.assign(static_cast<std::size_t>(w) * h, fill);
    }

    double& at(int y, int x) noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }

    Image to_image() const {
        Image img(width, height, 1);
        img.data = values;
        return img;
    }

    /// Takes the luminance of a 3-channel image.
    static SaliencyMap from_image(const Image& img) {
        const Image g = to_grayscale(img);
        SaliencyMap m(g.width, g.height);
        m.values = g.data;
        return m;
    }

    friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;
};

enum class SaliencyBackend { FrequencyTuned, CenterSurround, External };

inline SaliencyBackend parse_saliency_backend(std::string_view s) {
    if (s == "ftuned") return SaliencyBackend::FrequencyTuned;
    if (s == "csurround") return SaliencyBackend::CenterSurround;
    if (s == "external") return SaliencyBackend::External;
    throw ConfigError("unknown saliency backend '" + std::string(s) + "' (expected ftuned|csurround|external)");
}

inline std::string to_string(SaliencyBackend b) {
    switch (b) {
    case SaliencyBackend::FrequencyTuned: return "ftuned";
    case SaliencyBackend::CenterSurround: return "csurround";
    case SaliencyBackend::External: return "external";
    }
    return "?";
}

/// Spread below which a map counts as constant. Blurs of flat images leave
/// round-off at the 1e-16 level that min-max would otherwise blow up.
inline constexpr double kConstantMapRange = 1e-12;

/// Min-max rescale to [0, 1]; a constant map becomes all zeros.
inline SaliencyMap normalize(SaliencyMap map) {
    if (map.values.empty()) return map;
    const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (!(range > kConstantMapRange)) {
        std::fill(map.values.begin(), map.values.end(), 0.0);
        return map;
    }
    for (double& v : map.values) v = clamp01((v - lo) / range);
    return map;
}

/// Normalized 5-tap Gaussian, sigma = 1. The 5x5 kernel is its outer product.
inline std::array<double, 5> gaussian_taps() {
    std::array<double, 5> k{};
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double d = i - 2;
        k[i] = std::exp(-d * d / 2.0);
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// 5x5 Gaussian blur (sigma 1), edge-clamped borders, applied per channel.
inline Image gaussian_blur(const Image& img) {
    const auto k = gaussian_taps();
    Image tmp(img.width, img.height, img.channels);
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double s = 0.0;
                for (int i = -2; i <= 2; ++i) s += k[i + 2] * img.clamped(c, y, x + i);
                tmp.at(c, y, x) = s;
            }
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double s = 0.0;
                for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.clamped(c, y + i, x);
                out.at(c, y, x) = s;
            }
    }
    return out;
}

/// Un-normalized frequency-tuned map: Euclidean distance between each
/// blurred pixel's color and the global mean color.
inline SaliencyMap frequency_tuned_raw(const Image& img) {
    const Image blurred = gaussian_blur(img);
    const std::size_t plane = img.plane_size();
    SaliencyMap raw(img.width, img.height);
    for (int c = 0; c < img.channels; ++c) {
        const auto first = img.data.begin() + static_cast<std::ptrdiff_t>(c * plane);
        double mean = 0.0;
        for (auto it = first; it != first + static_cast<std::ptrdiff_t>(plane); ++it) mean += *it;
        mean /= static_cast<double>(plane);
        for (std::size_t p = 0; p < plane; ++p) {
            const double d = mean - blurred.data[c * plane + p];
            raw.values[p] += d * d;
        }
    }
    for (double& v : raw.values) v = std::sqrt(v);
    return raw;
}

inline SaliencyMap frequency_tuned(const Image& img) { return normalize(frequency_tuned_raw(img)); }

namespace detail {
inline Image decimate(const Image& img) {
    const Image b = gaussian_blur(img);
    Image out(std::max(1, img.width / 2), std::max(1, img.height / 2), img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) out.at(c, y, x) = b.at(c, 2 * y, 2 * x);
    return out;
}
} // namespace detail

/// Luminance Gaussian pyramid with `levels` decimations.
inline std::vector<Image> gaussian_pyramid(const Image& img, int levels) {
    std::vector<Image> pyr{to_grayscale(img)};
    for (int l = 0; l < levels; ++l) pyr.push_back(detail::decimate(pyr.back()));
    return pyr;
}

/// Center-surround contrast: |level l - upsampled level l+2| for every valid
/// pair, each brought to full resolution, averaged, normalized.
inline SaliencyMap center_surround(const Image& img, int levels = 3) {
    if (levels < 2 || levels > 5) throw ConfigError("center_surround levels must be in [2, 5]");
    const int need = 1 << levels;
    if (img.width < need || img.height < need)
        throw ConfigError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          " too small for " + std::to_string(levels) + " pyramid levels (need >= " +
                          std::to_string(need) + ")");
    const auto pyr = gaussian_pyramid(img, levels);
    SaliencyMap acc(img.width, img.height);
    int pairs = 0;
    for (int l = 0; l + 2 <= levels; ++l) {
        const Image& fine = pyr[l];
        const Image coarse = resize_bilinear(pyr[l + 2], fine.width, fine.height);
        Image diff(fine.width, fine.height, 1);
        for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] = std::abs(fine.data[i] - coarse.data[i]);
        const Image full = resize_bilinear(diff, img.width, img.height);
        for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += full.data[i];
        ++pairs;
    }
    for (double& v : acc.values) v /= pairs;
    return normalize(std::move(acc));
}

/// Resample an arbitrary map to the target size and normalize it.
inline SaliencyMap fit_external_map(const Image& map, int target_w, int target_h) {
    return normalize(SaliencyMap::from_image(resize_bilinear(to_grayscale(map), target_w, target_h)));
}

/// Import a precomputed map (P5 PGM) from an external saliency predictor.
inline SaliencyMap load_external_map(std::span<const std::uint8_t> bytes, int target_w, int target_h) {
    const Image img = load_pnm(bytes);
    if (img.channels != 1) throw DecodeError("external saliency map must be a P5 (grayscale) PGM");
    return fit_external_map(img, target_w, target_h);
}

} // namespace safbage
