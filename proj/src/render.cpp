#include "cellseg/render.hpp"

namespace cellseg {

namespace {

RgbImage outlined(const RgbImage& raw, const LabelMatrix& lm, auto color_of) {
    require_same_shape(raw, lm, "overlay");
    std::vector<double> data(raw.data().begin(), raw.data().end());
    for (int y = 0; y < lm.height(); ++y) {
        for (int x = 0; x < lm.width(); ++x) {
            if (!is_boundary(lm, x, y)) continue;
            const Rgb c = color_of(lm(x, y));
            const std::size_t p = lm.index(x, y) * 3;
            data[p] = c.r;
            data[p + 1] = c.g;
            data[p + 2] = c.b;
        }
    }
    return RgbImage(raw.width(), raw.height(), std::move(data), raw.source_bit_depth());
}

RgbImage from_mask(const BackgroundMask& m) {
    GrayImage g(m.width(), m.height());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = m[i] ? 1.0 : 0.0;
    return RgbImage::from_gray(g);
}

}  // namespace

bool is_boundary(const LabelMatrix& lm, int x, int y) {
    const Label l = lm(x, y);
    if (l == 0) return false;
    if (x == 0 || y == 0 || x == lm.width() - 1 || y == lm.height() - 1) return true;
    return lm(x - 1, y) != l || lm(x + 1, y) != l || lm(x, y - 1) != l || lm(x, y + 1) != l;
}

RgbImage boundary_overlay(const RgbImage& raw, const LabelMatrix& lm, Rgb color) {
    return outlined(raw, lm, [&](Label) { return color; });
}

RgbImage state_overlay(const RgbImage& raw, const LabelMatrix& lm, const std::map<Label, State>& states) {
    return outlined(raw, lm, [&](Label l) {
        auto it = states.find(l);
        if (it == states.end() || it->second == State::Unclassified) return kOutlineGray;
        return it->second == State::One ? kStateOneMagenta : kStateTwoCyan;
    });
}

RgbImage label_colormap(const LabelMatrix& lm) {
    RgbImage out(lm.width(), lm.height());
    for (int y = 0; y < lm.height(); ++y) {
        for (int x = 0; x < lm.width(); ++x) {
            const Label l = lm(x, y);
            if (l == 0) continue;
            // Integer hash spread over three channels; kept away from black.
            std::uint32_t h = l * 2654435761u;
            h ^= h >> 15;
            const double r = 0.25 + 0.75 * ((h & 0xff) / 255.0);
            const double g = 0.25 + 0.75 * (((h >> 8) & 0xff) / 255.0);
            const double b = 0.25 + 0.75 * (((h >> 16) & 0xff) / 255.0);
            out.set(x, y, r, g, b);
        }
    }
    return out;
}

RgbImage render_step(const Segmentation& s, const std::string& key) {
    const FilterStages& f = s.filters;
    const GrayImage* equalized = f.equalized ? &*f.equalized : &f.grayscale;
    const GrayImage* subtracted = f.background_subtracted ? &*f.background_subtracted : equalized;
    const GrayImage* background = f.background ? &*f.background : equalized;
    const GrayImage* smoothed = f.smoothed ? &*f.smoothed : subtracted;

    if (key == "grayscale") return RgbImage::from_gray(f.grayscale);
    if (key == "equalized") return RgbImage::from_gray(*equalized);
    if (key == "background") return RgbImage::from_gray(*background);
    if (key == "background_subtracted") return RgbImage::from_gray(*subtracted);
    if (key == "smoothed") return RgbImage::from_gray(*smoothed);
    if (key == "background_mask") return from_mask(s.mask);
    if (key == "inverted") {
        return RgbImage::from_gray(s.inverted.empty() ? invert(f.filtered) : s.inverted);
    }
    if (key == "enforced") return RgbImage::from_gray(s.enforced);
    if (key == "watershed") return label_colormap(s.watershed);
    if (key == "final") return label_colormap(s.labels);
    throw InvalidArgument("unknown pipeline step \"" + key + "\"");
}

}  // namespace cellseg
