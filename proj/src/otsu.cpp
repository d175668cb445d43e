#include "cellseg/otsu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cellseg {

namespace {

int occupied_bins(std::span<const std::uint64_t> hist) {
    return static_cast<int>(std::count_if(hist.begin(), hist.end(), [](std::uint64_t c) { return c > 0; }));
}

void check_length(std::span<const std::uint64_t> hist) {
    if (hist.size() != static_cast<std::size_t>(kOtsuBins)) {
        throw InvalidArgument("Otsu histogram must have 256 bins");
    }
}

struct Prefix {
    std::vector<double> count;  // sum of h[b] for b <= k
    std::vector<double> moment; // sum of b*h[b] for b <= k
};

Prefix prefix_sums(std::span<const std::uint64_t> hist) {
    Prefix p;
    p.count.resize(hist.size());
    p.moment.resize(hist.size());
    double c = 0.0, m = 0.0;
    for (std::size_t b = 0; b < hist.size(); ++b) {
        c += static_cast<double>(hist[b]);
        m += static_cast<double>(b) * static_cast<double>(hist[b]);
        p.count[b] = c;
        p.moment[b] = m;
    }
    return p;
}

double class_term(double weight, double moment) {
    return weight > 0.0 ? moment * moment / weight : 0.0;
}

}  // namespace

int otsu_split_bin(std::span<const std::uint64_t> hist) {
    check_length(hist);
    if (occupied_bins(hist) < 2) throw DegenerateHistogram("fewer than 2 occupied histogram bins");
    const Prefix p = prefix_sums(hist);
    const double n = p.count.back();
    const double total = p.moment.back();
    std::vector<double> score(kOtsuBins - 1);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        const double w0 = p.count[static_cast<std::size_t>(k)];
        const double m0 = p.moment[static_cast<std::size_t>(k)];
        const double s = (class_term(w0, m0) + class_term(n - w0, total - m0) - total * total / n) / n;
        score[static_cast<std::size_t>(k)] = s;
        best = std::max(best, s);
    }
    const double floor = best - kOtsuTieTolerance * std::abs(best);
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        if (score[static_cast<std::size_t>(k)] >= floor) return k;
    }
    return 0;
}

std::pair<int, int> otsu_two_level_bins(std::span<const std::uint64_t> hist) {
    check_length(hist);
    if (occupied_bins(hist) < 3) {
        throw DegenerateHistogram(
            "fewer than 3 distinct intensity levels; treat the image as entirely "
            "background or entirely foreground");
    }
    const Prefix p = prefix_sums(hist);
    const double n = p.count.back();
    const double total = p.moment.back();
    const double mean_term = total * total / n;
    const int last = kOtsuBins - 1;

    auto score = [&](int k1, int k2) {
        const double w0 = p.count[static_cast<std::size_t>(k1)];
        const double m0 = p.moment[static_cast<std::size_t>(k1)];
        const double w1 = p.count[static_cast<std::size_t>(k2)] - w0;
        const double m1 = p.moment[static_cast<std::size_t>(k2)] - m0;
        const double w2 = n - p.count[static_cast<std::size_t>(k2)];
        const double m2 = total - p.moment[static_cast<std::size_t>(k2)];
        return (class_term(w0, m0) + class_term(w1, m1) + class_term(w2, m2) - mean_term) / n;
    };

    double best = -std::numeric_limits<double>::infinity();
    for (int k1 = 0; k1 < last - 1; ++k1) {
        for (int k2 = k1 + 1; k2 < last; ++k2) best = std::max(best, score(k1, k2));
    }
    const double floor = best - kOtsuTieTolerance * std::abs(best);
    for (int k1 = 0; k1 < last - 1; ++k1) {
        for (int k2 = k1 + 1; k2 < last; ++k2) {
            if (score(k1, k2) >= floor) return {k1, k2};
        }
    }
    return {0, 1};
}

int unit_intensity_bin(double v) {
    if (!(v > 0.0)) return 0;
    return std::min(kOtsuBins - 1, static_cast<int>(v * kOtsuBins));
}

std::vector<std::uint64_t> unit_histogram(const GrayImage& img) {
    std::vector<std::uint64_t> hist(kOtsuBins, 0);
    for (double v : img.data()) ++hist[static_cast<std::size_t>(unit_intensity_bin(v))];
    return hist;
}

OtsuLevels otsu_two_level(const GrayImage& img) {
    const auto [k1, k2] = otsu_two_level_bins(unit_histogram(img));
    return {(k1 + 1.0) / kOtsuBins, (k2 + 1.0) / kOtsuBins};
}

double otsu_threshold_image(const GrayImage& img) {
    return (otsu_split_bin(unit_histogram(img)) + 1.0) / kOtsuBins;
}

double otsu_threshold_1d(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("Otsu threshold of an empty list");
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument("Otsu threshold of non-finite values");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) throw DegenerateHistogram("all values identical; no threshold separates them");
    const double width = (hi - lo) / kOtsuBins;
    std::vector<std::uint64_t> hist(kOtsuBins, 0);
    for (double v : values) {
        const int b = std::clamp(static_cast<int>((v - lo) / width), 0, kOtsuBins - 1);
        ++hist[static_cast<std::size_t>(b)];
    }
    return lo + (otsu_split_bin(hist) + 1) * width;
}

}  // namespace cellseg
