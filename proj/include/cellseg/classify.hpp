#pragma once

#include <span>
#include <vector>

#include "cellseg/expr.hpp"
#include "cellseg/params.hpp"
#include "cellseg/region_table.hpp"

namespace cellseg {

/// State 1 iff f_value > threshold (a value equal to the threshold is state 2).
inline State state_for(double f_value, double threshold) {
    return f_value > threshold ? State::One : State::Two;
}

enum class ThresholdMode { Manual, Otsu };

struct ObjectClass {
    Label label = 0;
    double f_value = 0.0;
    State state = State::Two;
    bool division_by_zero = false;
};

struct Histogram {
    std::vector<double> edges;   // counts.size() + 1 ascending edges
    std::vector<long> counts;
};

struct ClassificationResult {
    std::vector<ObjectClass> objects;
    double threshold_used = 0.0;
    ThresholdMode mode = ThresholdMode::Manual;
    Histogram histogram;
    std::size_t state1 = 0;
    std::size_t state2 = 0;
};

struct ClassifyOptions {
    // Channel values are multiplied by this before evaluation; 255 evaluates f in
    // 8-bit display units, in which case the threshold is in display units too.
    double intensity_scale = 1.0;
    int histogram_bins = 32;
};

/// Evaluates `expr` per region and thresholds the results. With an automatic threshold
/// the Otsu threshold of the finite f values is used. Non-finite f values (division by
/// zero) are flagged, excluded from the Otsu fit and histogram, and assigned by the same
/// strict comparison (NaN lands in state 2).
ClassificationResult classify_regions(const RegionTable& rt, const ClassifierExpr& expr,
                                      const Threshold& threshold, const ClassifyOptions& opts = {});

/// Copies f values and states into the table rows (matched by label).
void apply_classification(RegionTable& rt, const ClassificationResult& result);

/// Equal-width histogram of the finite values over [min, max]; the last bin is closed.
Histogram value_histogram(std::span<const double> values, int bins);

}  // namespace cellseg
