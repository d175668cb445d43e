#pragma once

#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/otsu.hpp"

namespace cellseg {

/// Basins, minima and components are all 8-connected.
inline constexpr int kConnectivity = 8;

/// true = watershed background (darkest Otsu class).
struct BackgroundMask {
    int cols = 0;
    int rows = 0;
    std::vector<bool> mask;

    int width() const { return cols; }
    int height() const { return rows; }
    bool operator[](std::size_t i) const { return mask[i]; }
    std::size_t count() const;
};

/// mask(p) = img(p) < levels.t1 (pixels exactly at t1 stay foreground).
BackgroundMask compute_background_mask(const GrayImage& img, const OtsuLevels& levels);

/// 1 - img outside the mask, 0 (the global minimum elevation) inside it.
GrayImage invert_and_enforce(const GrayImage& img, const BackgroundMask& mask);

/// Plain inversion, 1 - img.
GrayImage invert(const GrayImage& img);

/// Labels each regional minimum (8-connected plateau with no lower neighbor) in raster
/// order of its first pixel; other pixels are 0.
LabelMatrix regional_minima(const GrayImage& elev);

/// Meyer flooding from the regional minima with a priority queue ordered by
/// (elevation, insertion sequence). A popped pixel whose already-labeled neighbors
/// carry two or more distinct labels becomes a ridge pixel (label 0); otherwise it
/// takes the label of the neighbor that enqueued it.
LabelMatrix watershed_flood(const GrayImage& elev);

/// Zeroes every label whose pixels touch the mask, then renumbers 1..n in raster order.
LabelMatrix discard_background_regions(const LabelMatrix& lm, const BackgroundMask& mask);

/// Drops labels with area outside [min_area, max_area] or mean raw intensity below
/// min_signal, then renumbers.
LabelMatrix apply_limits(const LabelMatrix& lm, const GrayImage& raw_gray, long min_area,
                         long max_area, double min_signal);

/// 8-connected components of `foreground`, labeled in raster order.
LabelMatrix connected_components(int width, int height, const std::vector<bool>& foreground);

}  // namespace cellseg
