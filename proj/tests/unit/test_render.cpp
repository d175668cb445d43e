#include <doctest.h>

#include "cellseg/render.hpp"
#include "cellseg/synthetic.hpp"

using namespace cellseg;

namespace {

// 6x6 with a 4x4 square of label 1 at (1..4, 1..4).
LabelMatrix square() {
    std::vector<Label> l(36, 0);
    for (int y = 1; y <= 4; ++y) {
        for (int x = 1; x <= 4; ++x) l[static_cast<std::size_t>(y * 6 + x)] = 1;
    }
    return LabelMatrix(6, 6, l);
}

bool pixel_is(const RgbImage& img, int x, int y, Rgb c) {
    return img.at(x, y, Channel::Red) == c.r && img.at(x, y, Channel::Green) == c.g &&
           img.at(x, y, Channel::Blue) == c.b;
}

}  // namespace

TEST_CASE("boundary pixels are the labeled pixels with a different 4-neighbor") {
    const LabelMatrix lm = square();
    CHECK(is_boundary(lm, 1, 1));
    CHECK(is_boundary(lm, 4, 2));
    CHECK_FALSE(is_boundary(lm, 2, 2));
    CHECK_FALSE(is_boundary(lm, 0, 0));
    const LabelMatrix full(2, 2, std::vector<Label>{1, 1, 1, 1});
    CHECK(is_boundary(full, 0, 0));
}

TEST_CASE("overlays color outlines and leave interiors untouched") {
    const LabelMatrix lm = square();
    const RgbImage raw = RgbImage::from_gray(GrayImage(6, 6, 0.2));
    const RgbImage gray = boundary_overlay(raw, lm);
    CHECK(pixel_is(gray, 1, 1, kOutlineGray));
    CHECK(pixel_is(gray, 2, 2, Rgb{0.2, 0.2, 0.2}));
    CHECK(pixel_is(gray, 0, 0, Rgb{0.2, 0.2, 0.2}));

    CHECK(pixel_is(state_overlay(raw, lm, {{1, State::One}}), 1, 1, kStateOneMagenta));
    CHECK(pixel_is(state_overlay(raw, lm, {{1, State::Two}}), 1, 1, kStateTwoCyan));
    CHECK(pixel_is(state_overlay(raw, lm, {}), 1, 1, kOutlineGray));
    CHECK_THROWS_AS(boundary_overlay(RgbImage(3, 3), lm), InvalidArgument);
}

TEST_CASE("label colormap is deterministic and keeps background black") {
    const LabelMatrix lm = square();
    const RgbImage a = label_colormap(lm);
    CHECK(a == label_colormap(lm));
    CHECK(pixel_is(a, 0, 0, Rgb{0, 0, 0}));
    CHECK(a.at(2, 2, Channel::Red) >= 0.25);
}

TEST_CASE("every pipeline step renders at image size") {
    SyntheticSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.min_blobs = spec.max_blobs = 3;
    const auto img = make_blob_image(spec);
    PipelineParams p;
    p.enable_smoothing = false;
    const Segmentation s = segment(img.image, p);
    for (const auto& step : pipeline_steps(p)) {
        CAPTURE(step.key);
        const RgbImage r = render_step(s, step.key);
        CHECK(r.width() == 64);
        CHECK(r.height() == 48);
    }
    // A disabled step repeats the preceding stage.
    CHECK(render_step(s, "smoothed") == render_step(s, "background_subtracted"));
    CHECK_THROWS_AS(render_step(s, "nope"), InvalidArgument);
}

TEST_CASE("synthetic images are reproducible from the seed") {
    SyntheticSpec spec;
    spec.peak_photons = 50;
    spec.gradient = 0.3;
    spec.seed = 21;
    const auto a = make_blob_image(spec);
    const auto b = make_blob_image(spec);
    CHECK(a.image == b.image);
    CHECK(a.blobs.size() == 25);
    spec.seed = 22;
    CHECK_FALSE(make_blob_image(spec).image == a.image);
    // Blobs respect the requested spacing.
    for (std::size_t i = 0; i < a.blobs.size(); ++i) {
        for (std::size_t j = i + 1; j < a.blobs.size(); ++j) {
            const double d = std::hypot(a.blobs[i].x - a.blobs[j].x, a.blobs[i].y - a.blobs[j].y);
            CHECK(d >= a.blobs[i].radius + a.blobs[j].radius + spec.min_gap);
        }
    }
}
