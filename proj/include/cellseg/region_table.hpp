#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cellseg/image.hpp"

namespace cellseg {

/// Classification outcome of one object. Unclassified until a classifier has run.
enum class State : std::uint8_t { Unclassified = 0, One = 1, Two = 2 };

struct Region {
    Label label = 0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    std::size_t area = 0;
    double mean_r = 0.0;
    double mean_g = 0.0;
    double mean_b = 0.0;
    std::optional<double> f_value;
    State state = State::Unclassified;

    // Raster-ordered pixel indices and the raw channel values at those pixels.
    // Not serialized; present when the row came from extract_regions().
    std::vector<std::uint32_t> pixels;
    std::vector<double> red;
    std::vector<double> green;
    std::vector<double> blue;
};

/// One row per positive label of the companion LabelMatrix, ordered by label.
struct RegionTable {
    int width = 0;
    int height = 0;
    std::vector<Region> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

}  // namespace cellseg
