#include "cellseg/segment.hpp"

#include <algorithm>

namespace cellseg {

OtsuLevels background_levels(const GrayImage& filtered) {
    const auto hist = unit_histogram(filtered);
    std::vector<int> occupied;
    for (int b = 0; b < kOtsuBins; ++b) {
        if (hist[static_cast<std::size_t>(b)] > 0) occupied.push_back(b);
    }
    if (occupied.size() >= 3) return otsu_two_level(filtered);
    if (occupied.size() == 2) {
        const double t = (occupied[0] + 1.0) / kOtsuBins;
        return {t, t};
    }
    // Nothing to separate: every pixel falls below t1.
    return {2.0, 2.0};
}

Segmentation segment(const RgbImage& img, const PipelineParams& p, bool keep_intermediates) {
    validate(p);
    Segmentation s;
    s.filters = run_filter_pipeline(img, p, keep_intermediates, &s.warnings);
    const GrayImage& filtered = s.filters.filtered;

    s.levels = background_levels(filtered);
    s.mask = compute_background_mask(filtered, s.levels);
    if (keep_intermediates) s.inverted = invert(filtered);
    s.enforced = invert_and_enforce(filtered, s.mask);
    s.watershed = watershed_flood(s.enforced);
    s.foreground = discard_background_regions(s.watershed, s.mask);
    s.labels = apply_limits(s.foreground, s.filters.grayscale, p.min_area, p.max_area, p.min_signal);
    return s;
}

std::vector<StepInfo> pipeline_steps(const PipelineParams& p) {
    return {
        {"grayscale", 'D', "Grayscale conversion", false},
        {"equalized", 'E', "Adaptive histogram equalization", !p.enable_equalization},
        {"background", 'F', "Background estimate", !p.enable_background_subtraction},
        {"background_subtracted", 'G', "Background subtracted", !p.enable_background_subtraction},
        {"smoothed", 'H', "Median and Gaussian smoothing", !p.enable_smoothing},
        {"background_mask", 'I', "Watershed background (darkest Otsu class)", false},
        {"inverted", 'J', "Inverted filtered image", false},
        {"enforced", 'K', "Background enforced", false},
        {"watershed", 'L', "Watershed basins", false},
        {"final", 'M', "Realistic limits applied", false},
    };
}

}  // namespace cellseg
