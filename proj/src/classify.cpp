#include "cellseg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cellseg/otsu.hpp"

namespace cellseg {

Histogram value_histogram(std::span<const double> values, int bins) {
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    std::vector<double> finite;
    for (double v : values) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    Histogram h;
    if (finite.empty()) return h;
    const auto [lo_it, hi_it] = std::minmax_element(finite.begin(), finite.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
        h.edges = {lo, hi};
        h.counts = {static_cast<long>(finite.size())};
        return h;
    }
    const double width = (hi - lo) / bins;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + i * width;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : finite) {
        const int b = std::clamp(static_cast<int>((v - lo) / width), 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

ClassificationResult classify_regions(const RegionTable& rt, const ClassifierExpr& expr,
                                      const Threshold& threshold, const ClassifyOptions& opts) {
    ClassificationResult res;
    res.objects.reserve(rt.rows.size());
    std::vector<double> scaled_r, scaled_g, scaled_b;
    auto scaled = [&](const std::vector<double>& src, std::vector<double>& dst) -> std::span<const double> {
        if (opts.intensity_scale == 1.0) return src;
        dst.resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * opts.intensity_scale;
        return dst;
    };

    std::vector<double> f_values;
    for (const auto& row : rt.rows) {
        if (row.red.empty()) {
            throw InvalidArgument("region " + std::to_string(row.label) +
                                  " has no pixel lists; classify requires extracted regions");
        }
        const EvalResult e = expr.evaluate(scaled(row.red, scaled_r), scaled(row.green, scaled_g),
                                           scaled(row.blue, scaled_b));
        res.objects.push_back({row.label, e.value, State::Two, e.division_by_zero});
        f_values.push_back(e.value);
    }

    if (threshold.is_auto()) {
        std::vector<double> finite;
        for (double v : f_values) {
            if (std::isfinite(v)) finite.push_back(v);
        }
        res.threshold_used = otsu_threshold_1d(finite);
        res.mode = ThresholdMode::Otsu;
    } else {
        res.threshold_used = *threshold.value;
        res.mode = ThresholdMode::Manual;
    }
    for (auto& o : res.objects) {
        o.state = state_for(o.f_value, res.threshold_used);
        (o.state == State::One ? res.state1 : res.state2)++;
    }
    res.histogram = value_histogram(f_values, opts.histogram_bins);
    return res;
}

void apply_classification(RegionTable& rt, const ClassificationResult& result) {
    std::unordered_map<Label, const ObjectClass*> by_label;
    for (const auto& o : result.objects) by_label[o.label] = &o;
    for (auto& row : rt.rows) {
        auto it = by_label.find(row.label);
        if (it == by_label.end()) continue;
        row.f_value = it->second->f_value;
        row.state = it->second->state;
    }
}

}  // namespace cellseg
