#pragma once

#include <string>
#include <vector>

#include "cellseg/filters.hpp"
#include "cellseg/params.hpp"
#include "cellseg/watershed.hpp"

namespace cellseg {

/// Final label matrix plus every stage needed to display the pipeline step by step.
struct Segmentation {
    LabelMatrix labels;        // after background discard and realistic limits
    FilterStages filters;
    OtsuLevels levels;
    BackgroundMask mask;
    GrayImage inverted;
    GrayImage enforced;
    LabelMatrix watershed;     // raw flooding result, background basins included
    LabelMatrix foreground;    // background basins discarded, limits not yet applied
    Warnings warnings;
};

/// Background threshold for the filtered image. Falls back gracefully when the
/// histogram is too narrow for a two-level split: one occupied bin makes everything
/// background, two occupied bins put the darker one in the background.
OtsuLevels background_levels(const GrayImage& filtered);

/// Filter pipeline followed by watershed steps 1-5.
Segmentation segment(const RgbImage& img, const PipelineParams& p, bool keep_intermediates = true);

/// One displayable pipeline stage.
struct StepInfo {
    std::string key;
    char panel;          // display panel letter, D..M
    std::string title;
    bool skipped;        // step disabled in the parameters; image repeats the previous stage
};

/// Grayscale through final result, in pipeline order (always 10 entries).
std::vector<StepInfo> pipeline_steps(const PipelineParams& p);

}  // namespace cellseg
