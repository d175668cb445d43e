#pragma once

#include <map>
#include <string>

#include "cellseg/image.hpp"
#include "cellseg/region_table.hpp"
#include "cellseg/segment.hpp"

namespace cellseg {

struct Rgb {
    double r, g, b;
};

inline constexpr Rgb kOutlineGray{0.5, 0.5, 0.5};
inline constexpr Rgb kStateOneMagenta{1.0, 0.0, 1.0};
inline constexpr Rgb kStateTwoCyan{0.0, 1.0, 1.0};

/// True for labeled pixels with a differently labeled 4-neighbor or on the image edge.
bool is_boundary(const LabelMatrix& lm, int x, int y);

/// Raw image with every object outlined in `color`.
RgbImage boundary_overlay(const RgbImage& raw, const LabelMatrix& lm, Rgb color = kOutlineGray);

/// State 1 outlines in magenta, state 2 in cyan; unclassified objects in gray.
RgbImage state_overlay(const RgbImage& raw, const LabelMatrix& lm, const std::map<Label, State>& states);

/// Deterministic pseudo-color per label, background black.
RgbImage label_colormap(const LabelMatrix& lm);

/// Display image for one of the keys returned by pipeline_steps(). Disabled filter
/// steps repeat the preceding stage.
RgbImage render_step(const Segmentation& s, const std::string& key);

}  // namespace cellseg
