#pragma once

#include <vector>

#include "safbage/image.hpp"

namespace safbage::eval {

inline constexpr double kAugmentRotationDegrees = 3.0;

/// Training-time variants: original, mirrored, rotated +3 and -3 degrees.
inline std::vector<Image> augment(const Image& img) {
    return {img, flip_horizontal(img), rotate(img, kAugmentRotationDegrees), rotate(img, -kAugmentRotationDegrees)};
}

} // namespace safbage::eval
