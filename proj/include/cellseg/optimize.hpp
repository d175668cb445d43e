#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cellseg/params.hpp"
#include "cellseg/region_table.hpp"
#include "cellseg/regions.hpp"

namespace cellseg {

using GroundTruthCentroids = std::vector<Point>;

struct TruthState {
    Label label = 0;
    State state = State::One;
};
using GroundTruthStates = std::vector<TruthState>;

/// Sum over bins of (manual - automatic)^2.
double w_metric(std::span<const long> manual, std::span<const long> automatic);

struct Confusion {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;
    long total() const { return tp + tn + fp + fn; }
};

/// Confusion counts of predicted states against truth; `positive` names the positive
/// class (state 2, "dead", in the viability workflow). Throws if a truth label has no
/// prediction.
Confusion confusion(const std::map<Label, State>& predicted, const GroundTruthStates& truth,
                    State positive = State::Two);

/// (TP + TN) / total.
double accuracy(const std::map<Label, State>& predicted, const GroundTruthStates& truth,
                State positive = State::Two);

struct SweepResult {
    std::vector<double> thresholds;  // ascending
    std::vector<double> accuracies;
    double optimal_threshold = 0.0;
    double optimal_accuracy = 0.0;
    double plateau_lo = 0.0;         // first and last threshold of the chosen plateau
    double plateau_hi = 0.0;
    int plateau_count = 0;           // disjoint runs attaining the maximum
    std::vector<std::string> warnings;
};

/// Accuracy at `steps` equally spaced thresholds over [lo, hi]. The optimum is the
/// midpoint of the lowest-threshold run of maximal accuracy.
SweepResult threshold_sweep(const std::map<Label, double>& f_values, const GroundTruthStates& truth,
                            double lo, double hi, int steps, State positive = State::Two);

std::string sweep_csv(const SweepResult& s);
nlohmann::json sweep_json(const SweepResult& s);

using GroundTruth = std::variant<GroundTruthCentroids, GroundTruthStates>;

/// Optional image bounds for validating clicked centroids.
struct Bounds {
    double width;
    double height;
};

/// CSV with header "x,y" (centroids) or "label,state" (states).
GroundTruth parse_ground_truth(const std::string& csv, std::optional<Bounds> bounds = std::nullopt);
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::optional<Bounds> bounds = std::nullopt);

/// Reproducible random subset of k labels for manual classification (sorted ascending).
std::vector<Label> sample_subset(std::span<const Label> labels, std::size_t k, std::uint64_t seed);

/// Region counts of the three methods compared side by side.
struct SegmenterComparison {
    LabelMatrix otsu_components;   // single-level Otsu threshold + connected components
    LabelMatrix naive_watershed;   // watershed of the inverted raw grayscale
    LabelMatrix full_pipeline;     // filters + background-enforced watershed + limits
};

SegmenterComparison compare_segmenters(const RgbImage& img, const PipelineParams& p);

/// Depth-binning setup used by the w metric.
struct BinSpec {
    Axis axis = Axis::Y;
    int n_bins = kDefaultDepthBins;
    double lo = 0.0;
    double hi = 0.0;  // hi <= lo means "full image extent along axis"
};

double segmentation_w(const RgbImage& img, const PipelineParams& p,
                      const GroundTruthCentroids& manual, const BinSpec& bins);

/// Candidate values per parameter; an empty list keeps the base value.
struct ParamGrid {
    std::vector<double> equalization_clip_limit;
    std::vector<int> background_size;
    std::vector<int> median_size;
    std::vector<double> gaussian_radius;
    std::vector<long> min_area;
    std::vector<long> max_area;
    std::vector<double> min_signal;
};

struct GridPoint {
    PipelineParams params;
    double w = 0.0;
};

/// Evaluates the w metric over the cartesian product of the grid, skipping invalid
/// combinations. Results are sorted by w, ties kept in enumeration order.
std::vector<GridPoint> grid_search(const RgbImage& img, const PipelineParams& base,
                                   const ParamGrid& grid, const GroundTruthCentroids& manual,
                                   const BinSpec& bins);

}  // namespace cellseg
