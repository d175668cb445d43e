#include "cellseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cellseg {

RgbImage render_blobs(const SyntheticSpec& spec, const std::vector<Blob>& blobs) {
    const int w = spec.width;
    const int h = spec.height;
    std::vector<double> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, spec.background);
    for (const Blob& b : blobs) {
        const double sigma = b.radius / 2.0;
        const int reach = static_cast<int>(std::ceil(4.0 * sigma));
        const int x0 = std::max(0, static_cast<int>(std::floor(b.x)) - reach);
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(b.x)) + reach);
        const int y0 = std::max(0, static_cast<int>(std::floor(b.y)) - reach);
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(b.y)) + reach);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
                const double v = b.amplitude * std::exp(-d2 / (2.0 * sigma * sigma));
                const std::size_t p = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                       static_cast<std::size_t>(x)) * 3;
                data[p] += v * b.color.r;
                data[p + 1] += v * b.color.g;
                data[p + 2] += v * b.color.b;
            }
        }
    }
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double illum = 1.0 - spec.gradient * (w > 1 ? static_cast<double>(x) / (w - 1) : 0.0);
            for (int c = 0; c < 3; ++c) {
                double& v = data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                  static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
                v *= illum;
                if (spec.peak_photons > 0.0) {
                    std::poisson_distribution<long> poisson(std::max(v, 0.0) * spec.peak_photons);
                    v = static_cast<double>(poisson(rng)) / spec.peak_photons;
                }
                v = std::clamp(v, 0.0, 1.0);
                if (spec.quantize_8bit) v = std::round(v * 255.0) / 255.0;
            }
        }
    }
    return RgbImage(w, h, std::move(data), 8);
}

SyntheticImage make_blob_image(const SyntheticSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw InvalidArgument("synthetic image must be non-empty");
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> count(spec.min_blobs, std::max(spec.min_blobs, spec.max_blobs));
    std::uniform_real_distribution<double> radius(spec.min_radius, std::max(spec.min_radius, spec.max_radius));
    std::uniform_real_distribution<double> amplitude(spec.min_amplitude,
                                                     std::max(spec.min_amplitude, spec.max_amplitude));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticImage out;
    const int target = count(rng);
    const int max_attempts = 2000 * std::max(1, target);
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.blobs.size()) < target; ++attempt) {
        Blob b;
        b.radius = radius(rng);
        b.amplitude = amplitude(rng);
        const double margin = b.radius + 2.0;
        if (spec.width <= 2 * margin || spec.height <= 2 * margin) break;
        b.x = margin + unit(rng) * (spec.width - 1 - 2 * margin);
        b.y = margin + unit(rng) * (spec.height - 1 - 2 * margin);
        const bool clear = std::none_of(out.blobs.begin(), out.blobs.end(), [&](const Blob& o) {
            return std::hypot(o.x - b.x, o.y - b.y) < o.radius + b.radius + spec.min_gap;
        });
        if (clear) out.blobs.push_back(b);
    }
    out.image = render_blobs(spec, out.blobs);
    return out;
}

}  // namespace cellseg
