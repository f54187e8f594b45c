#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/eval/source.hpp"
#include "safbage/image.hpp"
#include "safbage/pnm.hpp"
#include "safbage/rng.hpp"
#include "safbage/saliency.hpp"

namespace safbage::eval {

/// Procedural stand-in for a face dataset: each image shows one
/// class-specific shape on a noisy background, optionally with distractor
/// shapes, and ships a ground-truth saliency mask covering the shape.
/// A subject has one label and one color tint across all its images.
struct SyntheticConfig {
    int num_classes = 2;
    int size = 32;
    int subjects = 40;
    int images_per_subject = 5;
    double noise_sigma = 0.10;  ///< per-pixel Gaussian background noise
    int distractors = 0;        ///< low-contrast shapes of random class placed off-target
    double distractor_contrast = 0.6;
    double shape_radius = 0.22;  ///< fraction of image size
    double context_contrast = 0.0;  ///< amplitude of class-oriented background stripes (outside the mask)
    double target_dropout = 0.0;    ///< probability that an image omits the target shape
    /// Shape drawn for each class; empty means class i draws shape i, and
    /// -1 draws nothing (a presence/absence task).
    std::vector<int> class_shapes;

    int shape_of(int label) const {
        return class_shapes.empty() ? label : class_shapes[static_cast<std::size_t>(label)];
    }
    Task task = Task::Gender;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_classes < 2 || num_classes > 8) throw ConfigError("synthetic num_classes must be in [2, 8]");
        if (size < 16) throw ConfigError("synthetic image size must be >= 16");
        if (subjects < 1 || images_per_subject < 1) throw ConfigError("synthetic set needs subjects and images");
        if (noise_sigma < 0.0 || distractors < 0) throw ConfigError("synthetic noise/distractors must be >= 0");
        if (context_contrast < 0.0) throw ConfigError("synthetic context_contrast must be >= 0");
        if (target_dropout < 0.0 || target_dropout >= 1.0) throw ConfigError("synthetic target_dropout must be in [0, 1)");
        if (!class_shapes.empty()) {
            if (class_shapes.size() != static_cast<std::size_t>(num_classes))
                throw ConfigError("synthetic class_shapes needs one entry per class");
            for (int sh : class_shapes)
                if (sh < -1 || sh > 7) throw ConfigError("synthetic class_shapes entries must be in [-1, 7]");
        }
        if (num_classes > eval::num_classes(task))
            throw ConfigError("synthetic num_classes exceeds the class count of task " + to_string(task));
    }
};

/// Membership test for the class-`cls` shape centred at the origin with
/// radius r, evaluated at offset (dx, dy).
inline bool inside_shape(int cls, double dx, double dy, double r) {
    const double ax = std::abs(dx), ay = std::abs(dy);
    const double d = std::hypot(dx, dy);
    switch (cls) {
    case 0: return d <= r;                                          // disk
    case 1: return ax <= r && (std::abs(dy - 0.45 * r) <= 0.22 * r || std::abs(dy + 0.45 * r) <= 0.22 * r);  // two bars
    case 2: return (ax <= 0.3 * r && ay <= r) || (ay <= 0.3 * r && ax <= r);  // plus
    case 3: return d <= r && d >= 0.55 * r;                         // ring
    case 4: return dy <= 0.8 * r && dy >= -r + 2.0 * ax;            // triangle
    case 5: return ax <= 0.8 * r && ay <= 0.8 * r;                  // square
    case 6: return ax + ay <= r;                                    // diamond
    case 7: return std::abs(ax - ay) <= 0.3 * r && d <= r;          // X
    default: return false;
    }
}

struct SyntheticSample {
    Image image;
    Image mask;  ///< gray, 1 on the shape (softened edge), 0 elsewhere
    double cx = 0, cy = 0, radius = 0;
};

inline SyntheticSample render_synthetic(const SyntheticConfig& cfg, int label, const std::array<double, 3>& tint,
                                        Rng& rng) {
    const int n = cfg.size;
    SyntheticSample s;
    s.image = Image(n, n, 3);
    s.mask = Image(n, n, 1);
    const double r = cfg.shape_radius * n;
    const double lo = r + 1.0, hi = n - 1.0 - r - 1.0;
    s.cx = rng.uniform(lo, hi);
    s.cy = rng.uniform(lo, hi);
    s.radius = r;

    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) s.image.at(c, y, x) = 0.35 + 0.1 * tint[c] + cfg.noise_sigma * rng.normal();

    if (cfg.context_contrast > 0.0) {
        const double theta = std::numbers::pi * label / cfg.num_classes;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double kx = std::cos(theta) * 2.0 * std::numbers::pi / 6.0, ky = std::sin(theta) * 2.0 * std::numbers::pi / 6.0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double v = cfg.context_contrast * std::sin(kx * x + ky * y + phase);
                for (int c = 0; c < 3; ++c) s.image.at(c, y, x) += v;
            }
    }
    const int shape = cfg.shape_of(label);
    const bool has_target = shape >= 0 && !(cfg.target_dropout > 0.0 && rng.bernoulli(cfg.target_dropout));

    for (int d = 0; d < cfg.distractors; ++d) {
        const int cls = cfg.shape_of(static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.num_classes))));
        const double dr = r * rng.uniform(0.6, 1.0);
        double dx = 0, dy = 0;
        for (int tries = 0; tries < 32; ++tries) {
            dx = rng.uniform(dr, n - 1.0 - dr);
            dy = rng.uniform(dr, n - 1.0 - dr);
            if (std::hypot(dx - s.cx, dy - s.cy) > r + dr + 1.0) break;
        }
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                if (inside_shape(cls, x - dx, y - dy, dr))
                    for (int c = 0; c < 3; ++c)
                        s.image.at(c, y, x) = 0.35 + cfg.distractor_contrast * (0.55 + 0.1 * tint[c]) +
                                              cfg.noise_sigma * rng.normal();
    }

    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (has_target && inside_shape(shape, x - s.cx, y - s.cy, r)) {
                s.mask.at(0, y, x) = 1.0;
                for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = 0.9 + 0.05 * tint[c] + 0.5 * cfg.noise_sigma * rng.normal();
            }
    for (double& v : s.image.data) v = clamp01(v);
    // soften the mask edge, then rescale so the shape interior stays at 1
    s.mask = normalize(SaliencyMap::from_image(gaussian_blur(s.mask))).to_image();
    return s;
}

struct SyntheticDataset {
    std::vector<ManifestRecord> records;
    MemoryImageSource source;
    std::vector<SyntheticSample> samples;  ///< geometry, parallel to records
};

inline SyntheticDataset make_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticDataset ds;
    Rng rng(derive_seed(cfg.seed, 0x53594eu));
    const int margin_box = static_cast<int>(std::lround(cfg.size / 1.3));
    const int off = (cfg.size - margin_box) / 2;
    for (int s = 0; s < cfg.subjects; ++s) {
        const int label = s % cfg.num_classes;
        const std::array<double, 3> tint{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        char sid[32];
        std::snprintf(sid, sizeof sid, "s%04d", s);
        for (int i = 0; i < cfg.images_per_subject; ++i) {
            SyntheticSample sample = render_synthetic(cfg, label, tint, rng);
            ManifestRecord rec;
            char path[64];
            std::snprintf(path, sizeof path, "%s_%02d.ppm", sid, i);
            rec.image_path = path;
            rec.bbox = {off, off, margin_box, margin_box};
            rec.subject_id = sid;
            rec.label = label;
            rec.task = cfg.task;
            ds.source.put(rec.image_path, sample.image, sample.mask);
            ds.records.push_back(rec);
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

/// Write images, masks (`*.sal.pgm`) and `manifest.csv` under `dir`.
inline void export_synthetic(const SyntheticDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [path, entry] : ds.source.entries()) {
        const std::string full = (std::filesystem::path(dir) / path).string();
        write_pnm_file(full, entry.first);
        write_pnm_file(saliency_path_for(full), entry.second);
    }
    const std::string text = format_manifest(ds.records);
    write_file_bytes((std::filesystem::path(dir) / "manifest.csv").string(),
                     std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace safbage::eval
