#pragma once

#include <cstddef>
#include <variant>

#include "bstd/image.hpp"

namespace bstd {

struct OtsuThreshold {};

struct FixedThreshold {
    double value = 0.5;
};

using ThresholdMode = std::variant<OtsuThreshold, FixedThreshold>;

/// Knobs for the threshold + morphology mask generator.
/// The mask only needs to cover the bright structures, so the defaults
/// err toward a generous region.
struct MaskParams {
    ThresholdMode threshold = OtsuThreshold{};
    int close_radius = 3;
    int dilate_radius = 5;
    bool fill_holes = true;
    std::size_t min_component_area = 64;

    void validate() const;
};

/// Otsu's threshold over a 256-bin histogram (bin = round(v * 255)).
/// When several cut points share the maximal between-class variance the
/// middle of that run is used. With a single occupied bin the largest pixel
/// value is returned, so the resulting mask is empty.
double otsu_threshold(const Image& img);

/// True where img > t.
Mask threshold_mask(const Image& img, double t);

/// Square (Chebyshev) dilation, clipped at the frame. Radius 0 is the identity.
Mask dilate(const Mask& mask, int radius);

/// Square erosion. Pixels outside the frame count as inside the mask, so the
/// frame itself never erodes anything.
Mask erode(const Mask& mask, int radius);

/// Dilation followed by erosion with the same radius.
Mask close(const Mask& mask, int radius);

/// Sets every false pixel that is not 4-connected to the frame.
Mask fill_holes(const Mask& mask);

/// Clears 8-connected true components with fewer than `min_area` pixels.
Mask remove_small_components(const Mask& mask, std::size_t min_area);

/// threshold -> small-component removal -> close -> fill holes -> dilate.
Mask auto_mask(const Image& img, const MaskParams& params);

} // namespace bstd
