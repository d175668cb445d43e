#pragma once

#include <cstddef>
#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/region_table.hpp"

namespace cellseg {

/// Per-label area, unweighted centroid (x right, y down, origin at the top-left pixel
/// center), per-channel means and the raw pixel lists used for classification.
RegionTable extract_regions(const LabelMatrix& lm, const RgbImage& raw);

/// Rebuilds a label matrix from the pixel lists of an extracted table.
LabelMatrix paint_regions(const RegionTable& rt);

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

std::vector<Point> centroids(const RegionTable& rt);

enum class Axis { X, Y };

struct BinCounts {
    std::vector<long> counts;
    long dropped = 0;  // centroids outside [lo, hi]
};

inline constexpr int kDefaultDepthBins = 20;

/// Equal-width bins over [lo, hi) along `axis`; the last bin also takes hi.
BinCounts bin_centroids(const std::vector<Point>& points, Axis axis, int n_bins, double lo, double hi);

}  // namespace cellseg
