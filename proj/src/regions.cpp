#include "cellseg/regions.hpp"

#include <algorithm>
#include <cmath>

namespace cellseg {

RegionTable extract_regions(const LabelMatrix& lm, const RgbImage& raw) {
    require_same_shape(lm, raw, "extract_regions");
    RegionTable rt;
    rt.width = lm.width();
    rt.height = lm.height();
    const Label n = lm.n_objects();
    rt.rows.resize(n);
    for (Label l = 1; l <= n; ++l) rt.rows[l - 1].label = l;

    std::vector<double> sum_x(n, 0.0), sum_y(n, 0.0);
    const auto w = static_cast<std::size_t>(lm.width());
    for (std::size_t i = 0; i < lm.size(); ++i) {
        const Label l = lm[i];
        if (l == 0) continue;
        Region& r = rt.rows[l - 1];
        r.pixels.push_back(static_cast<std::uint32_t>(i));
        r.red.push_back(raw.at(i, Channel::Red));
        r.green.push_back(raw.at(i, Channel::Green));
        r.blue.push_back(raw.at(i, Channel::Blue));
        sum_x[l - 1] += static_cast<double>(i % w);
        sum_y[l - 1] += static_cast<double>(i / w);
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    for (Label l = 1; l <= n; ++l) {
        Region& r = rt.rows[l - 1];
        r.area = r.pixels.size();
        if (r.area == 0) continue;
        const auto a = static_cast<double>(r.area);
        r.centroid_x = sum_x[l - 1] / a;
        r.centroid_y = sum_y[l - 1] / a;
        r.mean_r = mean(r.red);
        r.mean_g = mean(r.green);
        r.mean_b = mean(r.blue);
    }
    // Label gaps (non-contiguous input) would leave empty rows; drop them.
    std::erase_if(rt.rows, [](const Region& r) { return r.area == 0; });
    return rt;
}

LabelMatrix paint_regions(const RegionTable& rt) {
    std::vector<Label> labels(static_cast<std::size_t>(rt.width) * static_cast<std::size_t>(rt.height), 0);
    for (const auto& r : rt.rows) {
        for (auto p : r.pixels) labels.at(p) = r.label;
    }
    return LabelMatrix(rt.width, rt.height, std::move(labels));
}

std::vector<Point> centroids(const RegionTable& rt) {
    std::vector<Point> out;
    out.reserve(rt.rows.size());
    for (const auto& r : rt.rows) out.push_back({r.centroid_x, r.centroid_y});
    return out;
}

BinCounts bin_centroids(const std::vector<Point>& points, Axis axis, int n_bins, double lo, double hi) {
    if (n_bins < 1) throw InvalidArgument("bin count must be >= 1");
    if (!(lo < hi)) throw InvalidArgument("bin extent requires lo < hi");
    BinCounts out;
    out.counts.assign(static_cast<std::size_t>(n_bins), 0);
    const double width = (hi - lo) / n_bins;
    for (const auto& p : points) {
        const double v = axis == Axis::X ? p.x : p.y;
        if (!(v >= lo && v <= hi)) {
            ++out.dropped;
            continue;
        }
        const int b = std::min(n_bins - 1, static_cast<int>(std::floor((v - lo) / width)));
        ++out.counts[static_cast<std::size_t>(b)];
    }
    return out;
}

}  // namespace cellseg
