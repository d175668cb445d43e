#include "cellseg/app.hpp"

#include <charconv>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cellseg/classify.hpp"
#include "cellseg/io.hpp"
#include "cellseg/optimize.hpp"
#include "cellseg/otsu.hpp"
#include "cellseg/regions.hpp"
#include "cellseg/render.hpp"
#include "cellseg/segment.hpp"
#include "cellseg/server.hpp"
#include "cellseg/synthetic.hpp"

namespace cellseg {

namespace fs = std::filesystem;

namespace {

// Raised for a missing input so it maps to the usage exit code.
class MissingFile : public InvalidArgument {
public:
    explicit MissingFile(const fs::path& p) : InvalidArgument("file not found: " + p.string()) {}
};

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw MissingFile(p);
}

// Parameter flags shared by every subcommand that runs the pipeline.
struct ParamFlags {
    std::string config;
    std::optional<double> clip_limit;
    std::optional<int> background_size;
    std::optional<int> median_size;
    std::optional<double> gaussian_radius;
    std::optional<long> min_area;
    std::optional<long> max_area;
    std::optional<double> min_signal;
    std::optional<std::string> expr;
    std::optional<std::string> threshold;
    bool no_equalize = false;
    bool no_background_subtract = false;
    bool no_smooth = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON parameter file; flags override its values");
        cmd->add_option("--clip-limit", clip_limit, "equalization clip limit in [0,1]");
        cmd->add_option("--background-size", background_size, "background median window (odd, >= 3)");
        cmd->add_option("--median-size", median_size, "smoothing median window (odd, >= 1)");
        cmd->add_option("--gaussian-radius", gaussian_radius, "Gaussian smoothing radius (sigma = radius/2)");
        cmd->add_option("--min-area", min_area, "smallest kept object, px^2");
        cmd->add_option("--max-area", max_area, "largest kept object, px^2");
        cmd->add_option("--min-signal", min_signal, "smallest kept mean grayscale intensity");
        cmd->add_option("--expr", expr, "classification expression, e.g. mean(R)");
        cmd->add_option("--threshold", threshold, "classification threshold: number, ratio like 9/255, or auto");
        cmd->add_flag("--no-equalize", no_equalize, "skip adaptive histogram equalization");
        cmd->add_flag("--no-background-subtract", no_background_subtract, "skip background subtraction");
        cmd->add_flag("--no-smooth", no_smooth, "skip median and Gaussian smoothing");
    }

    // Defaults, then the config file, then explicit flags.
    PipelineParams resolve() const {
        PipelineParams p;
        if (!config.empty()) {
            require_file(config);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(read_text_file(config));
            } catch (const nlohmann::json::exception& e) {
                throw InvalidArgument("config " + config + ": " + e.what());
            }
            p = params_from_json(j, p);
        }
        if (clip_limit) p.equalization_clip_limit = *clip_limit;
        if (background_size) p.background_size = *background_size;
        if (median_size) p.median_size = *median_size;
        if (gaussian_radius) p.gaussian_radius = *gaussian_radius;
        if (min_area) p.min_area = *min_area;
        if (max_area) p.max_area = *max_area;
        if (min_signal) p.min_signal = *min_signal;
        if (expr) p.classifier_expr = *expr;
        if (threshold) p.classifier_threshold = Threshold::parse(*threshold);
        if (no_equalize) p.enable_equalization = false;
        if (no_background_subtract) p.enable_background_subtraction = false;
        if (no_smooth) p.enable_smoothing = false;
        parse_expr(p.classifier_expr);  // surfaces the caret diagnostic before generic validation
        validate(p);
        return p;
    }
};

struct ClassifyFlags {
    double display_scale = 1.0;
    int bins = 32;

    void attach(CLI::App* cmd) {
        cmd->add_option("--display-scale", display_scale,
                        "multiply channel values before evaluation (255 gives 8-bit units)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--bins", bins, "f-value histogram bins")->check(CLI::Range(1, 4096));
    }
    ClassifyOptions options() const { return {display_scale, bins}; }
};

void prepare_out(const fs::path& dir, const PipelineParams& p) {
    fs::create_directories(dir);
    write_text_file(dir / "params.json", to_json(p).dump(2) + "\n");
}

RgbImage load_input(const fs::path& path) {
    require_file(path);
    return load_image(path);
}

void print_warnings(const Warnings& w, std::ostream& err) {
    for (const auto& m : w) err << "warning: " << m << "\n";
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += format_real(h.edges[i]) + "," + format_real(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) + "\n";
    }
    return out;
}

int cmd_segment(const fs::path& image, const ParamFlags& flags, const fs::path& out_dir, bool save_steps,
                std::ostream& out, std::ostream& err) {
    const PipelineParams p = flags.resolve();
    const RgbImage img = load_input(image);
    const Segmentation s = segment(img, p, save_steps);
    print_warnings(s.warnings, err);
    prepare_out(out_dir, p);
    save_label_matrix(s.labels, out_dir / "labels.png");
    export_region_table(extract_regions(s.labels, img), out_dir / "regions.csv");
    save_png(boundary_overlay(img, s.labels), out_dir / "overlay.png");
    if (save_steps) {
        fs::create_directories(out_dir / "steps");
        for (const auto& st : pipeline_steps(p)) {
            save_png(render_step(s, st.key), out_dir / "steps" / (std::string(1, st.panel) + "_" + st.key + ".png"));
        }
    }
    out << "regions: " << s.labels.n_objects() << "\n";
    return kExitOk;
}

// Label matrix from a file when given, otherwise from running the pipeline.
LabelMatrix labels_for(const RgbImage& img, const std::string& labels_path, const PipelineParams& p,
                       std::ostream& err) {
    if (!labels_path.empty()) {
        require_file(labels_path);
        LabelMatrix lm = load_label_matrix(labels_path);
        require_same_shape(img, lm, "label matrix");
        return lm;
    }
    Segmentation s = segment(img, p, false);
    print_warnings(s.warnings, err);
    return std::move(s.labels);
}

int cmd_classify(const fs::path& image, const std::string& labels_path, const ParamFlags& flags,
                 const ClassifyFlags& cflags, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
    const PipelineParams p = flags.resolve();
    const ClassifierExpr expr = parse_expr(p.classifier_expr);
    const RgbImage img = load_input(image);
    const LabelMatrix lm = labels_for(img, labels_path, p, err);
    RegionTable rt = extract_regions(lm, img);
    const ClassificationResult res = classify_regions(rt, expr, p.classifier_threshold, cflags.options());
    apply_classification(rt, res);

    std::map<Label, State> states;
    for (const auto& o : res.objects) states[o.label] = o.state;
    prepare_out(out_dir, p);
    export_region_table(rt, out_dir / "regions.csv");
    save_png(state_overlay(img, lm, states), out_dir / "classes.png");
    write_text_file(out_dir / "histogram.csv", histogram_csv(res.histogram));

    std::size_t div0 = 0;
    for (const auto& o : res.objects) div0 += o.division_by_zero;
    if (div0) err << "warning: division by zero in " << div0 << " region(s)\n";
    if (res.mode == ThresholdMode::Otsu) out << "otsu threshold: " << format_real(res.threshold_used) << "\n";
    out << "regions: " << res.objects.size() << "\n";
    out << "state 1: " << res.state1 << "\n";
    out << "state 2: " << res.state2 << "\n";
    return kExitOk;
}

std::pair<double, double> parse_range(const std::string& text) {
    const auto comma = text.find(',');
    auto num = [&](std::string_view s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ValidationError(std::vector<FieldError>{{"range", "expected lo,hi; got \"" + text + "\""}});
        }
        return v;
    };
    if (comma == std::string::npos) num("");
    return {num(std::string_view(text).substr(0, comma)), num(std::string_view(text).substr(comma + 1))};
}

int cmd_sweep(const std::string& image, const std::string& f_values, const std::string& labels_path,
              const fs::path& truth_path, const ParamFlags& flags, const ClassifyFlags& cflags,
              const std::string& range, int steps, int positive, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
    const PipelineParams p = flags.resolve();
    const auto [lo, hi] = parse_range(range);
    std::vector<FieldError> errs;
    if (!(lo < hi)) errs.push_back({"range", "lo must be below hi"});
    if (steps < 2) errs.push_back({"steps", "must be >= 2"});
    if (positive != 1 && positive != 2) errs.push_back({"positive", "must be 1 or 2"});
    if (!errs.empty()) throw ValidationError(std::move(errs));
    if (image.empty() == f_values.empty()) {
        throw InvalidArgument("give exactly one of an image or --f-values");
    }

    std::map<Label, double> f;
    if (!f_values.empty()) {
        require_file(f_values);
        const RegionTable rt = parse_region_table(read_text_file(f_values));
        for (const auto& row : rt.rows) {
            if (!row.f_value) throw InvalidArgument(f_values + ": region " + std::to_string(row.label) + " has no f_value");
            f[row.label] = *row.f_value;
        }
    } else {
        const ClassifierExpr expr = parse_expr(p.classifier_expr);
        const RgbImage img = load_input(image);
        const LabelMatrix lm = labels_for(img, labels_path, p, err);
        const RegionTable rt = extract_regions(lm, img);
        for (const auto& o : classify_regions(rt, expr, Threshold::manual(0.0), cflags.options()).objects) {
            f[o.label] = o.f_value;
        }
    }
    require_file(truth_path);
    const GroundTruth gt = load_ground_truth(truth_path);
    const auto* truth = std::get_if<GroundTruthStates>(&gt);
    if (!truth) throw InvalidArgument(truth_path.string() + ": sweep needs label,state ground truth");
    for (const auto& t : *truth) {
        if (!f.count(t.label)) {
            throw InvalidArgument(truth_path.string() + ": label " + std::to_string(t.label) + " is not a region");
        }
    }

    const SweepResult res = threshold_sweep(f, *truth, lo, hi, steps, positive == 1 ? State::One : State::Two);
    prepare_out(out_dir, p);
    write_text_file(out_dir / "sweep.csv", sweep_csv(res));
    write_text_file(out_dir / "sweep.json", sweep_json(res).dump(2) + "\n");
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    out << "optimal threshold: " << format_real(res.optimal_threshold) << "\n";
    out << "optimal accuracy: " << format_real(res.optimal_accuracy) << "\n";
    return kExitOk;
}

int cmd_compare(const fs::path& image, const ParamFlags& flags, const fs::path& out_dir, std::ostream& out) {
    const PipelineParams p = flags.resolve();
    const RgbImage img = load_input(image);
    const SegmenterComparison c = compare_segmenters(img, p);
    prepare_out(out_dir, p);
    save_png(boundary_overlay(img, c.otsu_components), out_dir / "otsu_components.png");
    save_png(boundary_overlay(img, c.naive_watershed), out_dir / "naive_watershed.png");
    save_png(boundary_overlay(img, c.full_pipeline), out_dir / "full_pipeline.png");
    std::string csv = "method,regions\n";
    csv += "otsu_components," + std::to_string(c.otsu_components.n_objects()) + "\n";
    csv += "naive_watershed," + std::to_string(c.naive_watershed.n_objects()) + "\n";
    csv += "full_pipeline," + std::to_string(c.full_pipeline.n_objects()) + "\n";
    write_text_file(out_dir / "summary.csv", csv);
    out << csv;
    return kExitOk;
}

struct SynthFlags {
    SyntheticSpec spec;
    std::vector<int> blobs;
    std::vector<double> radius;
    std::vector<double> amplitude;
    std::string truth;
};

int cmd_synth(SynthFlags f, const fs::path& out_path, std::ostream& out) {
    auto pair_of = [](const auto& v, auto& lo, auto& hi, const char* field) {
        if (v.empty()) return;
        if (v.size() > 2) throw ValidationError(std::vector<FieldError>{{field, "expected one value or min,max"}});
        lo = v.front();
        hi = v.back();
        if (lo > hi) throw ValidationError(std::vector<FieldError>{{field, "min exceeds max"}});
    };
    pair_of(f.blobs, f.spec.min_blobs, f.spec.max_blobs, "blobs");
    pair_of(f.radius, f.spec.min_radius, f.spec.max_radius, "radius");
    pair_of(f.amplitude, f.spec.min_amplitude, f.spec.max_amplitude, "amplitude");
    const SyntheticImage s = make_blob_image(f.spec);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_image(s.image, out_path);
    if (!f.truth.empty()) {
        std::string csv = "x,y\n";
        for (const auto& b : s.blobs) csv += format_real(b.x) + "," + format_real(b.y) + "\n";
        write_text_file(f.truth, csv);
    }
    out << "blobs: " << s.blobs.size() << "\n";
    return kExitOk;
}

int cmd_serve(ServerConfig cfg, std::ostream& out) {
    Service service(cfg);
    HttpServer http(service);
    const int port = http.bind(cfg.host, cfg.port);
    out << "listening on http://" << cfg.host << ":" << port << "\n" << std::flush;
    http.listen();
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fluorescence image segmentation and object classification"};
    app.name("cellseg");
    app.require_subcommand(1);

    std::string image;
    std::string out_dir = "out";
    std::string labels;
    ParamFlags params;
    ClassifyFlags cflags;

    auto* seg = app.add_subcommand("segment", "segment an image into labeled objects");
    bool save_steps = false;
    seg->add_option("image", image, "PNG or TIFF input")->required();
    seg->add_option("--out", out_dir, "output directory");
    seg->add_flag("--steps", save_steps, "also write every intermediate pipeline step");
    params.attach(seg);

    auto* cls = app.add_subcommand("classify", "classify segmented objects by an expression");
    cls->add_option("image", image, "PNG or TIFF input")->required();
    cls->add_option("--labels", labels, "label matrix PNG; segments the image when omitted");
    cls->add_option("--out", out_dir, "output directory");
    params.attach(cls);
    cflags.attach(cls);

    auto* swp = app.add_subcommand("sweep", "accuracy of the classifier over a threshold range");
    std::string f_values;
    std::string truth;
    std::string range = "0,2";
    int steps = 201;
    int positive = 2;
    swp->add_option("image", image, "PNG or TIFF input (alternative to --f-values)");
    swp->add_option("--f-values", f_values, "region CSV with an f_value column");
    swp->add_option("--labels", labels, "label matrix PNG for the image");
    swp->add_option("--truth", truth, "ground truth CSV with header label,state")->required();
    swp->add_option("--range", range, "threshold range lo,hi");
    swp->add_option("--steps", steps, "number of thresholds");
    swp->add_option("--positive", positive, "state counted as positive (1 or 2)");
    swp->add_option("--out", out_dir, "output directory");
    params.attach(swp);
    cflags.attach(swp);

    auto* cmp = app.add_subcommand("compare", "region counts of three segmenters side by side");
    cmp->add_option("image", image, "PNG or TIFF input")->required();
    cmp->add_option("--out", out_dir, "output directory");
    params.attach(cmp);

    auto* syn = app.add_subcommand("synth", "render a synthetic blob image");
    SynthFlags sf;
    std::string synth_out;
    syn->add_option("--out", synth_out, "output PNG")->required();
    syn->add_option("--truth", sf.truth, "write blob centers as x,y CSV");
    syn->add_option("--seed", sf.spec.seed, "random seed");
    syn->add_option("--width", sf.spec.width);
    syn->add_option("--height", sf.spec.height);
    syn->add_option("--blobs", sf.blobs, "count or min,max")->delimiter(',');
    syn->add_option("--radius", sf.radius, "radius or min,max")->delimiter(',');
    syn->add_option("--amplitude", sf.amplitude, "amplitude or min,max")->delimiter(',');
    syn->add_option("--gap", sf.spec.min_gap, "edge-to-edge spacing");
    syn->add_option("--background", sf.spec.background);
    syn->add_option("--gradient", sf.spec.gradient, "illumination falloff across x");
    syn->add_option("--photons", sf.spec.peak_photons, "Poisson scale; 0 disables noise");

    auto* srv = app.add_subcommand("serve", "run the HTTP service");
    ServerConfig cfg;
    try {
        cfg = config_from_env();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    srv->add_option("--host", cfg.host);
    srv->add_option("--port", cfg.port)->check(CLI::Range(0, 65535));
    srv->add_option("--max-upload-bytes", cfg.max_upload_bytes);
    srv->add_option("--session-ttl-seconds", cfg.session_ttl_seconds)->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (seg->parsed()) return cmd_segment(image, params, out_dir, save_steps, out, err);
        if (cls->parsed()) return cmd_classify(image, labels, params, cflags, out_dir, out, err);
        if (swp->parsed()) {
            return cmd_sweep(image, f_values, labels, truth, params, cflags, range, steps, positive, out_dir, out, err);
        }
        if (cmp->parsed()) return cmd_compare(image, params, out_dir, out);
        if (syn->parsed()) return cmd_synth(sf, synth_out, out);
        if (srv->parsed()) return cmd_serve(cfg, out);
    } catch (const ExprError& e) {
        err << "error: expression parse error at position " << e.position() << "\n" << e.caret_diagnostic() << "\n";
        return kExitUsage;
    } catch (const DegenerateHistogram& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace cellseg
