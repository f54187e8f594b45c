#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "safbage/errors.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/image.hpp"
#include "safbage/pnm.hpp"

namespace safbage::eval {

/// Where pipeline inputs come from: the raw image of a record and, for the
/// external saliency backend, a precomputed map in the same pixel frame.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual Image load_image(const ManifestRecord& r) const = 0;
    virtual Image load_saliency(const ManifestRecord& r) const = 0;
};

/// External maps live next to the image: `face.ppm` -> `face.sal.pgm`.
inline std::string saliency_path_for(const std::string& image_path) {
    std::filesystem::path p(image_path);
    p.replace_extension(".sal.pgm");
    return p.string();
}

class FileImageSource final : public ImageSource {
public:
    Image load_image(const ManifestRecord& r) const override { return read_pnm_file(r.image_path); }
    Image load_saliency(const ManifestRecord& r) const override {
        const Image m = read_pnm_file(saliency_path_for(r.image_path));
        if (m.channels != 1) throw DecodeError(saliency_path_for(r.image_path) + ": saliency map must be P5");
        return m;
    }
};

/// In-memory source keyed by image path; used by the synthetic generator.
class MemoryImageSource final : public ImageSource {
public:
    void put(const std::string& path, Image image, Image saliency) {
        entries_[path] = {std::move(image), std::move(saliency)};
    }

    Image load_image(const ManifestRecord& r) const override { return find(r).first; }
    Image load_saliency(const ManifestRecord& r) const override { return find(r).second; }

    const std::map<std::string, std::pair<Image, Image>>& entries() const { return entries_; }

private:
    const std::pair<Image, Image>& find(const ManifestRecord& r) const {
        auto it = entries_.find(r.image_path);
        if (it == entries_.end()) throw IoError("no in-memory image for '" + r.image_path + "'");
        return it->second;
    }

    std::map<std::string, std::pair<Image, Image>> entries_;
};

} // namespace safbage::eval
