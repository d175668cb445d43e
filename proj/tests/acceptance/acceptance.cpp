// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "cellseg/classify.hpp"
#include "cellseg/optimize.hpp"
#include "cellseg/otsu.hpp"
#include "cellseg/regions.hpp"
#include "cellseg/segment.hpp"
#include "cellseg/synthetic.hpp"
#include "cellseg/watershed.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cellseg;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void run(const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char timing[96];
    std::snprintf(timing, sizeof timing, "%.2fs (limit %.0fs)", secs, budget_s);
    if (secs >= budget_s) {
        o.pass = false;
        o.detail += " [over time budget]";
    }
    std::printf("%s %-32s %s  %s\n", o.pass ? "PASS" : "FAIL", name, timing, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- example cells -------------------------------------------------------------

Outcome table_classification() {
    RegionTable rt;
    Label label = 1;
    for (const auto& c : {oracle::table_cell_a(), oracle::table_cell_b()}) {
        Region r;
        r.label = label++;
        r.area = c.r.size();
        for (std::size_t i = 0; i < c.r.size(); ++i) {
            r.red.push_back(c.r[i] / 255.0);
            r.green.push_back(c.g[i] / 255.0);
            r.blue.push_back(c.b[i] / 255.0);
        }
        rt.rows.push_back(std::move(r));
    }
    ClassifyOptions display;
    display.intensity_scale = 255.0;
    const auto res = classify_regions(rt, parse_expr("mean(R)"), Threshold::manual(9.0), display);
    const bool ok = res.objects[0].state == State::One && res.objects[1].state == State::Two;
    return {ok, fmt("f = %.4g -> state %d, f = %.4g -> state %d", res.objects[0].f_value,
                    static_cast<int>(res.objects[0].state), res.objects[1].f_value,
                    static_cast<int>(res.objects[1].state))};
}

// ---- Otsu -----------------------------------------------------------------------

Outcome otsu_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> occupied(2, 64), bin(0, 255), count(1, 1000);
    int single_mismatch = 0, two_mismatch = 0, two_checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::uint64_t> h(256, 0);
        const int n = occupied(rng);
        // Exactly n distinct occupied bins; every few trials uses one count everywhere to force ties.
        std::vector<int> bins(256);
        for (int i = 0; i < 256; ++i) bins[static_cast<std::size_t>(i)] = i;
        std::shuffle(bins.begin(), bins.end(), rng);
        const bool flat = trial % 5 == 0;
        for (int i = 0; i < n; ++i) {
            h[static_cast<std::size_t>(bins[static_cast<std::size_t>(i)])] = flat ? 100 : static_cast<std::uint64_t>(count(rng));
        }
        if (otsu_split_bin(h) != oracle::otsu_single(h)) ++single_mismatch;
        if (n >= 3) {
            ++two_checked;
            if (otsu_two_level_bins(h) != oracle::otsu_two(h)) ++two_mismatch;
        }
    }
    return {single_mismatch == 0 && two_mismatch == 0,
            fmt("single-level mismatches %d/1000, two-level mismatches %d/%d", single_mismatch, two_mismatch,
                two_checked)};
}

// ---- watershed --------------------------------------------------------------------

Outcome watershed_properties() {
    int count_bad = 0, partition_bad = 0, mask_bad = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const int w = 48 + static_cast<int>(seed % 5) * 8;
        const int h = 40 + static_cast<int>(seed % 3) * 8;
        const GrayImage e = testutil::random_elevation(w, h, seed);
        const LabelMatrix ws = watershed_flood(e);
        if (static_cast<int>(ws.n_objects()) != oracle::count_minima(e)) ++count_bad;

        // Every pixel is either ridge (0) or exactly one basin in 1..n, and no basin is empty.
        std::vector<std::size_t> area(ws.n_objects() + 1, 0);
        bool ok = true;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            if (ws[i] > ws.n_objects()) ok = false;
            else ++area[ws[i]];
        }
        for (Label l = 1; l <= ws.n_objects(); ++l) ok = ok && area[l] > 0;
        if (!ok) ++partition_bad;

        const GrayImage img = invert(e);
        const BackgroundMask m = compute_background_mask(img, otsu_two_level(img));
        const LabelMatrix fg = discard_background_regions(watershed_flood(invert_and_enforce(img, m)), m);
        for (std::size_t i = 0; i < fg.size(); ++i) {
            if (m[i] && fg[i] != 0) {
                ++mask_bad;
                break;
            }
        }
    }
    return {count_bad == 0 && partition_bad == 0 && mask_bad == 0,
            fmt("count mismatches %d, partition failures %d, mask violations %d (of 200)", count_bad, partition_bad,
                mask_bad)};
}

// ---- synthetic corpus ---------------------------------------------------------------

constexpr int kCorpusSize = 50;

SyntheticSpec corpus_spec(int i) {
    SyntheticSpec s;
    s.width = 384;
    s.height = 384;
    s.min_blobs = 20;
    s.max_blobs = 100;
    s.min_radius = 4;
    s.max_radius = 12;
    s.min_gap = 4;
    s.min_amplitude = 0.25;
    s.max_amplitude = 0.9;
    s.background = 0.05;
    s.gradient = 0.2;
    s.peak_photons = 100;
    s.seed = 1000 + static_cast<std::uint64_t>(i);
    return s;
}

PipelineParams corpus_params() {
    PipelineParams p;
    p.equalization_clip_limit = 0.01;
    p.background_size = 31;
    p.median_size = 3;
    p.gaussian_radius = 3;
    p.min_area = 12;
    p.max_area = 2000;
    p.min_signal = 0.05;
    return p;
}

struct CorpusStats {
    long blobs = 0, recovered = 0, detected = 0, spurious = 0;
    long centroid_violations = 0;
    double worst_error_ratio = 0.0;
    int naive_more = 0, full_closer = 0;
    double seconds = 0.0;
};

// Each blob is matched to the final region under its center pixel; a region matches at
// most one blob. Unmatched regions are spurious.
CorpusStats run_corpus() {
    CorpusStats st;
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineParams p = corpus_params();
    for (int i = 0; i < kCorpusSize; ++i) {
        const SyntheticImage img = make_blob_image(corpus_spec(i));
        const SegmenterComparison cmp = compare_segmenters(img.image, p);
        const LabelMatrix& lm = cmp.full_pipeline;
        const RegionTable rt = extract_regions(lm, img.image);
        std::vector<bool> taken(lm.n_objects() + 1, false);
        long matched = 0;
        for (const auto& b : img.blobs) {
            const Label l = lm(static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)));
            if (l == 0 || taken[l]) continue;
            taken[l] = true;
            ++matched;
            const Region& r = rt.rows[l - 1];
            const double err = std::hypot(r.centroid_x - b.x, r.centroid_y - b.y);
            st.worst_error_ratio = std::max(st.worst_error_ratio, err / b.radius);
            if (err >= b.radius) ++st.centroid_violations;
        }
        const long truth = static_cast<long>(img.blobs.size());
        const long full = lm.n_objects();
        st.blobs += truth;
        st.recovered += matched;
        st.detected += full;
        st.spurious += full - matched;
        st.naive_more += cmp.naive_watershed.n_objects() > lm.n_objects();
        st.full_closer += std::labs(full - truth) < std::labs(static_cast<long>(cmp.otsu_components.n_objects()) - truth);
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return st;
}

// ---- w metric and accuracy -------------------------------------------------------------

Outcome metric_arithmetic() {
    struct WCase {
        std::vector<long> manual, automatic;
        double w;
    };
    const std::vector<WCase> w_cases{
        {{0}, {0}, 0},
        {{5, 3, 2}, {5, 3, 2}, 0},
        {{1}, {0}, 1},
        {{0, 0}, {3, 4}, 25},
        {{10, 20, 30}, {12, 18, 30}, 8},
        {{7, 7, 7, 7}, {6, 8, 6, 8}, 4},
        {{100}, {90}, 100},
        {{2, 0, 2, 0, 2}, {0, 2, 0, 2, 0}, 20},
        {{3, 9, 4}, {9, 3, 4}, 72},
        {{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1},
         {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 2},
    };
    struct ACase {
        std::vector<int> predicted, truth;  // states, label = position + 1
        double accuracy;
    };
    const std::vector<ACase> a_cases{
        {{1, 2}, {1, 2}, 1.0},
        {{1, 2}, {2, 1}, 0.0},
        {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 2}, 0.9},
        {{2, 2, 2, 2, 2, 2, 2, 2, 2, 2}, {2, 2, 2, 2, 2, 2, 2, 2, 2, 1}, 0.9},
        {{1, 2, 1, 2, 1, 2, 1, 2, 1, 2}, {1, 2, 1, 2, 1, 2, 1, 2, 1, 1}, 0.9},
        {{2, 2, 2, 2}, {2, 2, 2, 2}, 1.0},
        {{1, 1, 2, 2}, {2, 2, 1, 1}, 0.0},
        {{1, 2, 2, 1}, {1, 2, 1, 2}, 0.5},
        {{1, 1, 1, 2}, {1, 1, 1, 1}, 0.75},
        {{2, 1, 2, 1, 2}, {2, 1, 2, 1, 1}, 0.8},
    };
    int bad = 0;
    for (const auto& c : w_cases) bad += w_metric(c.manual, c.automatic) != c.w;
    for (const auto& c : a_cases) {
        std::map<Label, State> pred;
        GroundTruthStates truth;
        for (std::size_t i = 0; i < c.truth.size(); ++i) {
            const Label l = static_cast<Label>(i + 1);
            pred[l] = c.predicted[i] == 1 ? State::One : State::Two;
            truth.push_back({l, c.truth[i] == 1 ? State::One : State::Two});
        }
        // Accuracy is expected bit-exact: the hand values are the correctly rounded quotients.
        bad += accuracy(pred, truth) != c.accuracy;
        bad += accuracy(pred, truth, State::One) != c.accuracy;
    }
    return {bad == 0, fmt("%zu w cases, %zu accuracy cases, %d mismatches", w_cases.size(), a_cases.size(), bad)};
}

// ---- threshold sweep ----------------------------------------------------------------

struct Population {
    double mean, sd;
    int n;
    State state;
};

// Deterministic sample: the (i + 0.5) / n quantiles of the normal distribution.
void add_population(const Population& pop, std::map<Label, double>& f, GroundTruthStates& truth) {
    for (int i = 0; i < pop.n; ++i) {
        const Label l = static_cast<Label>(f.size() + 1);
        f[l] = pop.mean + pop.sd * oracle::normal_quantile((i + 0.5) / pop.n);
        truth.push_back({l, pop.state});
    }
}

// Where n_a * pdf_a = n_b * pdf_b between the two means (low population a, high b).
double bayes_crossover(const Population& a, const Population& b) {
    auto diff = [&](double x) {
        auto logpdf = [](const Population& p, double v) {
            const double z = (v - p.mean) / p.sd;
            return std::log(static_cast<double>(p.n)) - std::log(p.sd) - 0.5 * z * z;
        };
        return logpdf(a, x) - logpdf(b, x);
    };
    double lo = a.mean, hi = b.mean;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (diff(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double analytic_accuracy(const Population& a, const Population& b, double c) {
    const double correct_a = a.n * oracle::normal_cdf((c - a.mean) / a.sd);
    const double correct_b = b.n * (1.0 - oracle::normal_cdf((c - b.mean) / b.sd));
    return (correct_a + correct_b) / (a.n + b.n);
}

Outcome sweep_optimum() {
    constexpr double kLo = 0.0, kHi = 2.0;
    constexpr int kSteps = 201;
    constexpr double kStep = (kHi - kLo) / (kSteps - 1);
    constexpr double kAccuracyTol = 0.02;

    std::string detail;
    bool pass = true;
    // Low f = state 2 (dead, positive), high f = state 1.
    const std::vector<std::pair<Population, Population>> pairs{
        {{0.8, 0.25, 5000, State::Two}, {1.6, 0.25, 5000, State::One}},
        {{0.7, 0.15, 6000, State::Two}, {1.3, 0.30, 4000, State::One}},
    };
    for (const auto& [a, b] : pairs) {
        std::map<Label, double> f;
        GroundTruthStates truth;
        add_population(a, f, truth);
        add_population(b, f, truth);
        const SweepResult s = threshold_sweep(f, truth, kLo, kHi, kSteps);
        const double c = bayes_crossover(a, b);
        const double acc = analytic_accuracy(a, b, c);
        const bool ok = std::abs(s.optimal_threshold - c) <= kStep + 1e-12 &&
                        std::abs(s.optimal_accuracy - acc) <= kAccuracyTol;
        pass = pass && ok;
        detail += fmt("c=%.4f t*=%.4f acc=%.4f (analytic %.4f); ", c, s.optimal_threshold, s.optimal_accuracy, acc);
    }

    // Separable populations with a gap: every threshold in [1.10, 1.30] is perfect.
    {
        std::map<Label, double> f;
        GroundTruthStates truth;
        add_population({0.8, 0.1, 400, State::Two}, f, truth);
        add_population({1.6, 0.1, 400, State::One}, f, truth);
        for (auto& [l, v] : f) v = v < 1.2 ? std::min(v, 1.095) : std::max(v, 1.305);
        const SweepResult s = threshold_sweep(f, truth, kLo, kHi, kSteps);
        const bool ok = s.optimal_accuracy == 1.0 && std::abs(s.plateau_lo - 1.10) < 1e-9 &&
                        std::abs(s.plateau_hi - 1.30) < 1e-9 && std::abs(s.optimal_threshold - 1.2) <= kStep &&
                        s.plateau_count == 1;
        pass = pass && ok;
        detail += fmt("plateau [%.2f, %.2f] -> %.3f", s.plateau_lo, s.plateau_hi, s.optimal_threshold);
    }
    return {pass, detail};
}

// ---- determinism ------------------------------------------------------------------

Outcome cli_determinism() {
    testutil::TempDir dir;
    const std::string input = (dir / "input.png").string();
    save_image(make_blob_image(corpus_spec(7)).image, input);
    std::string detail;
    for (const char* run_dir : {"a", "b"}) {
        const auto r = testutil::cli({"segment", input, "--out", (dir / run_dir).string()});
        if (r.code != 0) return {false, "segment exited " + std::to_string(r.code) + ": " + r.err};
        detail = r.out.substr(0, r.out.find('\n'));
    }
    bool same = true;
    for (const char* f : {"labels.png", "regions.csv"}) {
        same = same && testutil::file_bytes(dir / "a" / f) == testutil::file_bytes(dir / "b" / f);
    }
    return {same, detail + (same ? ", labels.png and regions.csv identical" : ", outputs differ")};
}

}  // namespace

int main() {
    run("example-cell classification", 1, table_classification);
    run("otsu oracle equivalence", 30, otsu_oracle);
    run("watershed correctness", 60, watershed_properties);

    CorpusStats corpus;
    run("synthetic blob recovery", 300, [&] {
        corpus = run_corpus();
        const double recall = static_cast<double>(corpus.recovered) / static_cast<double>(corpus.blobs);
        const double spurious =
            corpus.detected ? static_cast<double>(corpus.spurious) / static_cast<double>(corpus.detected) : 0.0;
        return Outcome{recall >= 0.95 && spurious <= 0.05 && corpus.centroid_violations == 0,
                       fmt("recall %.4f (>= 0.95), spurious %.4f (<= 0.05), worst centroid error %.3f r, %ld blobs", recall,
                           spurious, corpus.worst_error_ratio, corpus.blobs)};
    });
    // Reuses the corpus pass above; the time shown is for that pass.
    run("oversegmentation ordering", 300, [&] {
        const double naive = static_cast<double>(corpus.naive_more) / kCorpusSize;
        const double closer = static_cast<double>(corpus.full_closer) / kCorpusSize;
        return Outcome{naive >= 0.95 && closer >= 0.80,
                       fmt("naive > full in %.0f%% (>= 95%%), full closer than otsu in %.0f%% (>= 80%%)", 100 * naive,
                           100 * closer)};
    });
    run("w metric and accuracy arithmetic", 1, metric_arithmetic);
    run("threshold sweep optimum", 10, sweep_optimum);
    run("segment determinism", 60, cli_determinism);

    std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
