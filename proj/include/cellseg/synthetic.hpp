#pragma once

#include <cstdint>
#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/render.hpp"

namespace cellseg {

/// Gaussian spot: amplitude * color * exp(-d^2 / (2 (radius/2)^2)).
struct Blob {
    double x = 0.0;
    double y = 0.0;
    double radius = 5.0;
    double amplitude = 1.0;
    Rgb color{1.0, 1.0, 1.0};
};

struct SyntheticSpec {
    int width = 256;
    int height = 256;
    int min_blobs = 25;
    int max_blobs = 25;
    double min_radius = 5.0;
    double max_radius = 5.0;
    double min_gap = 6.0;          // edge-to-edge spacing between blob radii
    double min_amplitude = 0.6;
    double max_amplitude = 0.9;
    double background = 0.04;
    double gradient = 0.0;         // illumination falls linearly by this fraction across x
    double peak_photons = 0.0;     // Poisson noise scale; 0 disables noise
    bool quantize_8bit = false;
    std::uint64_t seed = 1;
};

struct SyntheticImage {
    RgbImage image;
    std::vector<Blob> blobs;
};

/// Places non-overlapping blobs at random (rejection sampling) and renders them.
/// Fewer than min_blobs may be placed if the image is too crowded.
SyntheticImage make_blob_image(const SyntheticSpec& spec);

/// Renders an explicit blob list with the background, gradient and noise of `spec`.
RgbImage render_blobs(const SyntheticSpec& spec, const std::vector<Blob>& blobs);

}  // namespace cellseg
