#include "cellseg/optimize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cellseg/classify.hpp"
#include "cellseg/filters.hpp"
#include "cellseg/io.hpp"
#include "cellseg/segment.hpp"

namespace cellseg {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(trim(f));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_real(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw IoError("ground truth line " + std::to_string(line_no) + ": malformed number \"" + s + "\"");
    }
    return v;
}

long to_integer(const std::string& s, std::size_t line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw IoError("ground truth line " + std::to_string(line_no) + ": malformed integer \"" + s + "\"");
    }
    return v;
}

}  // namespace

double w_metric(std::span<const long> manual, std::span<const long> automatic) {
    if (manual.size() != automatic.size()) {
        throw InvalidArgument("w metric: bin count mismatch (" + std::to_string(manual.size()) + " vs " +
                              std::to_string(automatic.size()) + ")");
    }
    double w = 0.0;
    for (std::size_t i = 0; i < manual.size(); ++i) {
        const double d = static_cast<double>(manual[i] - automatic[i]);
        w += d * d;
    }
    return w;
}

Confusion confusion(const std::map<Label, State>& predicted, const GroundTruthStates& truth, State positive) {
    Confusion c;
    for (const auto& t : truth) {
        auto it = predicted.find(t.label);
        if (it == predicted.end()) {
            throw InvalidArgument("no prediction for truth label " + std::to_string(t.label));
        }
        const bool pred_pos = it->second == positive;
        const bool true_pos = t.state == positive;
        if (pred_pos && true_pos) ++c.tp;
        else if (!pred_pos && !true_pos) ++c.tn;
        else if (pred_pos) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double accuracy(const std::map<Label, State>& predicted, const GroundTruthStates& truth, State positive) {
    const Confusion c = confusion(predicted, truth, positive);
    if (c.total() == 0) throw InvalidArgument("accuracy of an empty ground truth");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

SweepResult threshold_sweep(const std::map<Label, double>& f_values, const GroundTruthStates& truth,
                            double lo, double hi, int steps, State positive) {
    if (!(lo < hi)) throw InvalidArgument("sweep range requires lo < hi");
    if (steps < 2) throw InvalidArgument("sweep needs at least 2 steps");
    if (truth.empty()) throw InvalidArgument("sweep needs at least one ground-truth label");
    for (const auto& t : truth) {
        if (!f_values.count(t.label)) {
            throw InvalidArgument("no f value for truth label " + std::to_string(t.label));
        }
    }

    SweepResult s;
    s.thresholds.resize(static_cast<std::size_t>(steps));
    s.accuracies.resize(static_cast<std::size_t>(steps));
    std::vector<long> correct(static_cast<std::size_t>(steps));
    const double step = (hi - lo) / (steps - 1);
    std::map<Label, State> predicted;
    for (int i = 0; i < steps; ++i) {
        const double t = i == steps - 1 ? hi : lo + i * step;
        for (const auto& tr : truth) predicted[tr.label] = state_for(f_values.at(tr.label), t);
        const Confusion c = confusion(predicted, truth, positive);
        s.thresholds[static_cast<std::size_t>(i)] = t;
        correct[static_cast<std::size_t>(i)] = c.tp + c.tn;
        s.accuracies[static_cast<std::size_t>(i)] =
            static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    }

    const long best = *std::max_element(correct.begin(), correct.end());
    int first_lo = -1, first_hi = -1;
    for (int i = 0; i < steps; ++i) {
        if (correct[static_cast<std::size_t>(i)] != best) continue;
        if (i == 0 || correct[static_cast<std::size_t>(i - 1)] != best) {
            ++s.plateau_count;
            if (first_lo < 0) first_lo = i;
        }
        if (s.plateau_count == 1) first_hi = i;
    }
    s.plateau_lo = s.thresholds[static_cast<std::size_t>(first_lo)];
    s.plateau_hi = s.thresholds[static_cast<std::size_t>(first_hi)];
    s.optimal_threshold = 0.5 * (s.plateau_lo + s.plateau_hi);
    s.optimal_accuracy = s.accuracies[static_cast<std::size_t>(first_lo)];
    if (s.plateau_count > 1) {
        s.warnings.push_back("maximal accuracy reached on " + std::to_string(s.plateau_count) +
                             " disjoint threshold ranges; reporting the lowest");
    }
    return s;
}

std::string sweep_csv(const SweepResult& s) {
    std::string out = "threshold,accuracy\n";
    for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
        out += format_real(s.thresholds[i]) + "," + format_real(s.accuracies[i]) + "\n";
    }
    return out;
}

nlohmann::json sweep_json(const SweepResult& s) {
    return {
        {"thresholds", s.thresholds},
        {"accuracies", s.accuracies},
        {"optimal_threshold", s.optimal_threshold},
        {"optimal_accuracy", s.optimal_accuracy},
        {"plateau", {s.plateau_lo, s.plateau_hi}},
        {"plateau_count", s.plateau_count},
        {"warnings", s.warnings},
    };
}

GroundTruth parse_ground_truth(const std::string& csv, std::optional<Bounds> bounds) {
    std::istringstream in(csv);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw IoError("ground truth CSV is empty");
    const auto header = split(trim(line));
    const bool centroids = header == std::vector<std::string>{"x", "y"};
    const bool states = header == std::vector<std::string>{"label", "state"};
    if (!centroids && !states) {
        throw IoError("unknown ground truth header \"" + trim(line) + "\" (expected x,y or label,state)");
    }
    GroundTruthCentroids pts;
    GroundTruthStates sts;
    std::set<Label> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line));
        if (f.size() != 2) {
            throw IoError("ground truth line " + std::to_string(line_no) + ": expected 2 fields");
        }
        if (centroids) {
            const Point p{to_real(f[0], line_no), to_real(f[1], line_no)};
            if (p.x < 0 || p.y < 0 || (bounds && (p.x > bounds->width - 1 || p.y > bounds->height - 1))) {
                throw IoError("ground truth line " + std::to_string(line_no) + ": centroid outside the image");
            }
            pts.push_back(p);
        } else {
            const long label = to_integer(f[0], line_no);
            const long state = to_integer(f[1], line_no);
            if (label < 1) throw IoError("ground truth line " + std::to_string(line_no) + ": label must be >= 1");
            if (state != 1 && state != 2) {
                throw IoError("ground truth line " + std::to_string(line_no) + ": state must be 1 or 2");
            }
            if (!seen.insert(static_cast<Label>(label)).second) {
                throw IoError("ground truth line " + std::to_string(line_no) + ": duplicate label " +
                              std::to_string(label));
            }
            sts.push_back({static_cast<Label>(label), state == 1 ? State::One : State::Two});
        }
    }
    if (centroids) return pts;
    return sts;
}

GroundTruth load_ground_truth(const std::filesystem::path& path, std::optional<Bounds> bounds) {
    return parse_ground_truth(read_text_file(path), bounds);
}

std::vector<Label> sample_subset(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
    std::vector<Label> pool(labels.begin(), labels.end());
    if (k >= pool.size()) {
        std::sort(pool.begin(), pool.end());
        return pool;
    }
    // Partial Fisher-Yates with an explicitly seeded engine.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

SegmenterComparison compare_segmenters(const RgbImage& img, const PipelineParams& p) {
    validate(p);
    SegmenterComparison out;
    const GrayImage gray = to_grayscale(img);

    std::vector<bool> fg(gray.size(), false);
    const auto hist = unit_histogram(gray);
    const int occupied = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }));
    if (occupied >= 2) {
        const double t = otsu_threshold_image(gray);
        for (std::size_t i = 0; i < gray.size(); ++i) fg[i] = gray[i] >= t;
    }
    out.otsu_components = connected_components(gray.width(), gray.height(), fg);

    out.naive_watershed = watershed_flood(invert(gray));
    out.full_pipeline = segment(img, p, false).labels;
    return out;
}

double segmentation_w(const RgbImage& img, const PipelineParams& p, const GroundTruthCentroids& manual,
                      const BinSpec& bins) {
    double lo = bins.lo;
    double hi = bins.hi;
    if (!(hi > lo)) {
        lo = 0.0;
        hi = bins.axis == Axis::X ? img.width() - 1.0 : img.height() - 1.0;
    }
    const Segmentation s = segment(img, p, false);
    const RegionTable rt = extract_regions(s.labels, img);
    const auto automatic = bin_centroids(centroids(rt), bins.axis, bins.n_bins, lo, hi);
    const auto truth = bin_centroids(manual, bins.axis, bins.n_bins, lo, hi);
    return w_metric(truth.counts, automatic.counts);
}

std::vector<GridPoint> grid_search(const RgbImage& img, const PipelineParams& base, const ParamGrid& grid,
                                   const GroundTruthCentroids& manual, const BinSpec& bins) {
    std::vector<PipelineParams> candidates{base};
    auto expand = [&](const auto& values, auto member) {
        if (values.empty()) return;
        std::vector<PipelineParams> next;
        for (const auto& c : candidates) {
            for (const auto& v : values) {
                PipelineParams q = c;
                q.*member = v;
                next.push_back(q);
            }
        }
        candidates = std::move(next);
    };
    expand(grid.equalization_clip_limit, &PipelineParams::equalization_clip_limit);
    expand(grid.background_size, &PipelineParams::background_size);
    expand(grid.median_size, &PipelineParams::median_size);
    expand(grid.gaussian_radius, &PipelineParams::gaussian_radius);
    expand(grid.min_area, &PipelineParams::min_area);
    expand(grid.max_area, &PipelineParams::max_area);
    expand(grid.min_signal, &PipelineParams::min_signal);

    std::vector<GridPoint> out;
    for (const auto& c : candidates) {
        if (!check_params(c).empty()) continue;
        out.push_back({c, segmentation_w(img, c, manual, bins)});
    }
    std::stable_sort(out.begin(), out.end(), [](const GridPoint& a, const GridPoint& b) { return a.w < b.w; });
    return out;
}

}  // namespace cellseg
