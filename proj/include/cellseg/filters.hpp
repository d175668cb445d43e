#pragma once

#include <optional>
#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/params.hpp"

namespace cellseg {

/// BT.601 luma weights applied by to_grayscale.
inline constexpr double kGrayWeightR = 0.2989;
inline constexpr double kGrayWeightG = 0.5870;
inline constexpr double kGrayWeightB = 0.1140;

/// CLAHE geometry: fixed 8x8 tile grid over a 256-bin histogram.
inline constexpr int kClaheTiles = 8;
inline constexpr int kClaheBins = 256;

GrayImage to_grayscale(const RgbImage& img);

/// Contrast-limited adaptive histogram equalization.
///
/// The image is covered by an 8x8 grid of equal-sized tiles (edge tiles read
/// replicate-padded pixels). Each tile's 256-bin histogram is clipped at
///   ceil(n/256) + round(clip_limit * (n - ceil(n/256)))
/// counts, n being the tile pixel count, and the excess is spread evenly over all
/// bins. Pixel outputs interpolate bilinearly between the four nearest tile
/// mappings. clip_limit 1 disables clipping; clip_limit 0 gives a near-identity map.
///
/// Images under 16 pixels in either dimension cannot hold 2x2-pixel tiles; they are
/// equalized with a single global mapping and a warning is appended to `warnings`.
GrayImage equalize_adaptive(const GrayImage& img, double clip_limit, Warnings* warnings = nullptr);

/// Windows up to this size use a direct selection; larger ones a sliding rank count.
inline constexpr int kDirectMedianMaxSize = 9;

/// Square-window median with replicate padding. `size` must be odd and >= 1.
GrayImage median_filter(const GrayImage& img, int size);

/// img - median_filter(img, background_size), clamped at 0.
/// Throws InvalidArgument if background_size exceeds both image dimensions.
GrayImage subtract_background(const GrayImage& img, int background_size);

/// Second median pass of the smoothing step; size 1 is the identity.
GrayImage median_smooth(const GrayImage& img, int median_size);

/// Normalized Gaussian, sigma = radius / 2, half-width ceil(2 * sigma), replicate padding.
GrayImage gaussian_smooth(const GrayImage& img, double radius);

/// 1-D kernel used by gaussian_smooth (length 2 * half_width + 1, sums to 1).
std::vector<double> gaussian_kernel(double radius);

/// Filtered image plus whichever intermediate stages ran.
struct FilterStages {
    GrayImage grayscale;
    std::optional<GrayImage> equalized;
    std::optional<GrayImage> background;
    std::optional<GrayImage> background_subtracted;
    std::optional<GrayImage> median_smoothed;
    std::optional<GrayImage> smoothed;
    GrayImage filtered;
};

/// Grayscale conversion always; equalization, background subtraction and smoothing
/// only when enabled in `p`. Intermediates are kept when `keep_intermediates` is set.
FilterStages run_filter_pipeline(const RgbImage& img, const PipelineParams& p,
                                 bool keep_intermediates = false, Warnings* warnings = nullptr);

}  // namespace cellseg
