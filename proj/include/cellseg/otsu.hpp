#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cellseg/image.hpp"

namespace cellseg {

inline constexpr int kOtsuBins = 256;

/// Candidates whose between-class variance is within this relative distance of the
/// maximum count as tied; the lexicographically smallest tied candidate wins.
inline constexpr double kOtsuTieTolerance = 1e-12;

/// Raised when a histogram has too few occupied bins to split into the requested
/// number of classes.
class DegenerateHistogram : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Single-level split on a 256-bin histogram: returns k such that bins 0..k form the
/// lower class. k ranges over 0..254.
int otsu_split_bin(std::span<const std::uint64_t> hist);

/// Two-level split: returns (k1, k2), k1 < k2 <= 254, classes 0..k1, k1+1..k2, k2+1..255.
/// Requires at least 3 occupied bins.
std::pair<int, int> otsu_two_level_bins(std::span<const std::uint64_t> hist);

/// Bin of a [0,1] intensity in the 256-bin histogram: floor(v * 256), capped at 255.
/// The upper edge of bin k is exactly (k + 1) / 256.
int unit_intensity_bin(double v);

std::vector<std::uint64_t> unit_histogram(const GrayImage& img);

struct OtsuLevels {
    double t1 = 0.0;
    double t2 = 0.0;
};

/// Two-level Otsu thresholds of an image; pixels below t1 form the darkest class.
/// Throws DegenerateHistogram when fewer than 3 intensity bins are occupied.
OtsuLevels otsu_two_level(const GrayImage& img);

/// Single-level Otsu threshold of an image (pixels >= threshold form the bright class).
double otsu_threshold_image(const GrayImage& img);

/// Single-level Otsu over a 256-bin histogram spanning [min, max] of `values`.
/// Returns the upper edge of the last bin of the lower class.
/// Throws DegenerateHistogram when all values are identical, InvalidArgument on
/// non-finite input or an empty list.
double otsu_threshold_1d(std::span<const double> values);

}  // namespace cellseg
