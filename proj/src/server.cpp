#include "cellseg/server.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <limits>
#include <random>
#include <set>

// Clients that omit Content-Type get form-urlencoded by default; the upload limit is
// enforced by the Service instead of httplib's small form cap.
#define CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH ((std::numeric_limits<std::size_t>::max)())
#include <httplib.h>
#include <json.hpp>

#include "cellseg/classify.hpp"
#include "cellseg/io.hpp"
#include "cellseg/optimize.hpp"
#include "cellseg/regions.hpp"
#include "cellseg/render.hpp"
#include "cellseg/segment.hpp"

namespace cellseg {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxCachedSegmentations = 8;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t hash_text(const std::string& s, std::uint64_t seed) { return fnv1a(s.data(), s.size(), seed); }

HttpResponse json_response(int status, const json& j) {
    HttpResponse r;
    r.status = status;
    r.body = j.dump();
    return r;
}

HttpResponse error_response(int status, const std::string& message) {
    return json_response(status, json{{"error", message}});
}

HttpResponse validation_response(const ValidationError& e) {
    json fields = json::array();
    for (const auto& f : e.errors()) fields.push_back({{"field", f.field}, {"message", f.message}});
    return json_response(422, json{{"error", e.what()}, {"fields", fields}});
}

HttpResponse expr_response(const ExprError& e) {
    return json_response(422, json{{"error", e.message()},
                                   {"field", "expr"},
                                   {"position", e.position()},
                                   {"diagnostic", e.caret_diagnostic()}});
}

// Parses a JSON request body; an empty body is an empty object.
json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json j = json::parse(body);
    if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"", "request body must be a JSON object"}});
    return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed) {
    std::vector<FieldError> errs;
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            errs.push_back({key, "unknown field"});
        }
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

double number_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(std::vector<FieldError>{{key, "must be a number"}});
    return j.at(key).get<double>();
}

long integer_field(const json& j, const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) {
        return static_cast<long>(v.get<double>());
    }
    throw ValidationError(std::vector<FieldError>{{key, "must be an integer"}});
}

int state_number(State s) { return s == State::One ? 1 : s == State::Two ? 2 : 0; }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

ServerConfig config_from_env(ServerConfig base) {
    auto read = [](const char* name, auto& dst) {
        const char* v = std::getenv(name);
        if (!v || !*v) return;
        char* end = nullptr;
        const long long n = std::strtoll(v, &end, 10);
        if (*end != '\0' || n < 0) throw InvalidArgument(std::string(name) + ": expected a non-negative integer");
        dst = static_cast<std::remove_reference_t<decltype(dst)>>(n);
    };
    read("CELLSEG_PORT", base.port);
    read("CELLSEG_MAX_UPLOAD_BYTES", base.max_upload_bytes);
    read("CELLSEG_SESSION_TTL_SECONDS", base.session_ttl_seconds);
    return base;
}

struct ClassEntry {
    std::string key;
    ClassificationResult result;
    std::map<Label, State> states;
    std::string body;
    std::vector<std::uint8_t> overlay_png;
};

struct SegEntry {
    std::string key;
    PipelineParams params;
    Segmentation seg;
    RegionTable regions;
    std::string body;
    std::map<std::string, std::vector<std::uint8_t>> artifacts;
    std::map<std::string, std::shared_ptr<ClassEntry>> classifications;
    std::string last_classification;
    GroundTruthStates truth;
};

struct Service::Session {
    std::string id;
    std::mutex mutex;
    RgbImage image;
    std::uint64_t image_hash = 0;
    std::chrono::steady_clock::time_point last_used;
    std::map<std::string, std::shared_ptr<SegEntry>> segs;
    std::deque<std::string> seg_order;
    std::string current;

    SegEntry* current_seg() {
        auto it = segs.find(current);
        return it == segs.end() ? nullptr : it->second.get();
    }
    std::string url(const std::string& artifact_key) const {
        return "/api/session/" + id + "/artifact/" + artifact_key;
    }
};

Service::Service(ServerConfig config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
    if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
    std::random_device rd;
    id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Service::~Service() = default;

std::size_t Service::session_count() {
    std::lock_guard lock(store_mutex_);
    return sessions_.size();
}

void Service::expire_sessions() {
    const auto now = clock_();
    const auto ttl = std::chrono::seconds(config_.session_ttl_seconds);
    std::lock_guard lock(store_mutex_);
    std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > ttl; });
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) {
    std::lock_guard lock(store_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    it->second->last_used = clock_();
    return it->second;
}

HttpResponse Service::handle(const std::string& method, const std::string& raw_path, const std::string& body) {
    const std::string path = raw_path.substr(0, raw_path.find('?'));
    std::vector<std::string> parts;
    for (std::size_t pos = 0; pos < path.size();) {
        const std::size_t next = path.find('/', pos);
        const std::size_t end = next == std::string::npos ? path.size() : next;
        if (end > pos) parts.push_back(path.substr(pos, end - pos));
        pos = end + 1;
    }
    expire_sessions();
    try {
        if (parts.size() < 2 || parts[0] != "api" || parts[1] != "session") {
            return error_response(404, "no such endpoint");
        }
        if (parts.size() == 2) {
            if (method != "POST") return error_response(405, "method not allowed");
            return create_session(body);
        }
        auto session = find_session(parts[2]);
        if (!session) return error_response(404, "unknown session");
        std::lock_guard lock(session->mutex);
        if (parts.size() == 4 && method == "POST") {
            if (parts[3] == "segment") return segment(*session, body);
            if (parts[3] == "classify") return classify(*session, body);
            if (parts[3] == "ground-truth") return ground_truth(*session, body);
            if (parts[3] == "sweep") return sweep(*session, body);
        }
        if (parts.size() == 5 && parts[3] == "artifact" && method == "GET") return artifact(*session, parts[4]);
        return error_response(404, "no such endpoint");
    } catch (const json::exception& e) {
        return error_response(400, std::string("malformed JSON: ") + e.what());
    } catch (const ExprError& e) {
        return expr_response(e);
    } catch (const ValidationError& e) {
        return validation_response(e);
    } catch (const InvalidArgument& e) {
        return error_response(422, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

HttpResponse Service::create_session(const std::string& body) {
    if (body.size() > config_.max_upload_bytes) {
        return error_response(413, "upload exceeds " + std::to_string(config_.max_upload_bytes) + " bytes");
    }
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(body.data()), body.size());
    if (!looks_like_image(bytes)) return error_response(415, "expected a PNG or TIFF image");
    RgbImage image;
    try {
        image = decode_image(bytes);
    } catch (const Error& e) {
        return error_response(415, e.what());
    }
    auto s = std::make_shared<Session>();
    s->image = std::move(image);
    s->image_hash = fnv1a(body.data(), body.size());
    s->last_used = clock_();
    {
        std::lock_guard lock(store_mutex_);
        do {
            const std::uint64_t a = id_state_ += 0x9e3779b97f4a7c15ull;
            const std::uint64_t b = fnv1a(&a, sizeof a);
            s->id = hex64(b) + hex64(fnv1a(&b, sizeof b));
        } while (sessions_.count(s->id));
        sessions_[s->id] = s;
    }
    return json_response(201, json{{"id", s->id}, {"width", s->image.width()}, {"height", s->image.height()}});
}

HttpResponse Service::segment(Session& s, const std::string& body) {
    const PipelineParams p = params_from_json(parse_body(body));
    validate(p);
    const std::string key = hex64(hash_text(to_json(p).dump(), s.image_hash));

    HttpResponse r;
    if (auto it = s.segs.find(key); it != s.segs.end()) {
        s.current = key;
        r.body = it->second->body;
        r.headers["X-Cache"] = "hit";
        return r;
    }

    auto e = std::make_shared<SegEntry>();
    e->key = key;
    e->params = p;
    e->seg = cellseg::segment(s.image, p, true);
    e->regions = extract_regions(e->seg.labels, s.image);

    json regions = json::array();
    for (const auto& row : e->regions.rows) {
        regions.push_back({{"label", row.label},
                           {"centroid_x", row.centroid_x},
                           {"centroid_y", row.centroid_y},
                           {"area", row.area},
                           {"mean_R", row.mean_r},
                           {"mean_G", row.mean_g},
                           {"mean_B", row.mean_b}});
    }
    json steps = json::array();
    for (const auto& st : pipeline_steps(p)) {
        steps.push_back({{"key", st.key},
                         {"panel", std::string(1, st.panel)},
                         {"title", st.title},
                         {"skipped", st.skipped},
                         {"url", s.url(key + "-" + st.key)}});
    }
    json out{{"key", key},
             {"region_count", e->seg.labels.n_objects()},
             {"width", s.image.width()},
             {"height", s.image.height()},
             {"params", to_json(p)},
             {"regions", regions},
             {"overlay_url", s.url(key + "-overlay")},
             {"steps", steps},
             {"warnings", e->seg.warnings}};
    e->body = out.dump();

    s.segs[key] = e;
    s.seg_order.push_back(key);
    while (s.seg_order.size() > kMaxCachedSegmentations) {
        s.segs.erase(s.seg_order.front());
        s.seg_order.pop_front();
    }
    s.current = key;
    r.body = e->body;
    r.headers["X-Cache"] = "miss";
    return r;
}

HttpResponse Service::classify(Session& s, const std::string& body) {
    SegEntry* seg = s.current_seg();
    if (!seg) return error_response(409, "no segmentation yet; POST segment first");
    const json j = parse_body(body);
    reject_unknown(j, {"expr", "threshold", "display_scale", "bins"});

    std::string expr_text = seg->params.classifier_expr;
    if (j.contains("expr")) {
        if (!j["expr"].is_string()) throw ValidationError(std::vector<FieldError>{{"expr", "must be a string"}});
        expr_text = j["expr"].get<std::string>();
    }
    Threshold threshold = seg->params.classifier_threshold;
    if (j.contains("threshold")) {
        const auto& t = j["threshold"];
        if (t.is_number()) threshold = Threshold::manual(t.get<double>());
        else if (t.is_string()) threshold = Threshold::parse(t.get<std::string>());
        else throw ValidationError(std::vector<FieldError>{{"threshold", "must be a number or \"auto\""}});
        if (threshold.value && !std::isfinite(*threshold.value)) {
            throw ValidationError(std::vector<FieldError>{{"threshold", "must be finite"}});
        }
    }
    ClassifyOptions opts;
    opts.intensity_scale = number_field(j, "display_scale", 1.0);
    if (!(opts.intensity_scale > 0.0) || !std::isfinite(opts.intensity_scale)) {
        throw ValidationError(std::vector<FieldError>{{"display_scale", "must be a positive number"}});
    }
    const long bins = integer_field(j, "bins", opts.histogram_bins);
    if (bins < 1 || bins > 4096) throw ValidationError(std::vector<FieldError>{{"bins", "must be in [1,4096]"}});
    opts.histogram_bins = static_cast<int>(bins);

    const ClassifierExpr expr = parse_expr(expr_text);
    const std::string canonical = expr.to_string();
    json request{{"expr", canonical},
                 {"threshold", threshold.to_string()},
                 {"display_scale", opts.intensity_scale},
                 {"bins", opts.histogram_bins}};
    const std::string key = hex64(hash_text(request.dump(), fnv1a(seg->key.data(), seg->key.size())));

    HttpResponse r;
    if (auto it = seg->classifications.find(key); it != seg->classifications.end()) {
        seg->last_classification = key;
        r.body = it->second->body;
        r.headers["X-Cache"] = "hit";
        return r;
    }

    auto c = std::make_shared<ClassEntry>();
    c->key = key;
    c->result = classify_regions(seg->regions, expr, threshold, opts);
    json objects = json::array();
    for (const auto& o : c->result.objects) {
        c->states[o.label] = o.state;
        objects.push_back({{"label", o.label},
                           {"f_value", nullable(o.f_value)},
                           {"state", state_number(o.state)},
                           {"division_by_zero", o.division_by_zero}});
    }
    json out{{"expr", canonical},
             {"mode", c->result.mode == ThresholdMode::Otsu ? "otsu" : "manual"},
             {"threshold", c->result.threshold_used},
             {"display_scale", opts.intensity_scale},
             {"region_count", c->result.objects.size()},
             {"state_counts", {{"1", c->result.state1}, {"2", c->result.state2}}},
             {"objects", objects},
             {"histogram", {{"edges", c->result.histogram.edges}, {"counts", c->result.histogram.counts}}},
             {"overlay_url", s.url(key + "-classes")}};
    c->body = out.dump();
    seg->classifications[key] = c;
    seg->last_classification = key;
    r.body = c->body;
    r.headers["X-Cache"] = "miss";
    return r;
}

HttpResponse Service::ground_truth(Session& s, const std::string& body) {
    SegEntry* seg = s.current_seg();
    if (!seg) return error_response(409, "no segmentation yet; POST segment first");
    const json j = parse_body(body);
    reject_unknown(j, {"states"});
    if (!j.contains("states") || !j["states"].is_array()) {
        throw ValidationError(std::vector<FieldError>{{"states", "must be an array of {label, state}"}});
    }
    GroundTruthStates truth;
    std::set<Label> seen;
    json unknown = json::array();
    std::vector<FieldError> errs;
    for (std::size_t i = 0; i < j["states"].size(); ++i) {
        const auto& item = j["states"][i];
        const std::string where = "states[" + std::to_string(i) + "]";
        if (!item.is_object() || !item.contains("label") || !item.contains("state") ||
            !item["label"].is_number_integer() || !item["state"].is_number_integer()) {
            errs.push_back({where, "expected {\"label\": integer, \"state\": 1 or 2}"});
            continue;
        }
        const long label = item["label"].get<long>();
        const long state = item["state"].get<long>();
        if (state != 1 && state != 2) {
            errs.push_back({where, "state must be 1 or 2"});
            continue;
        }
        if (label < 1 || label > static_cast<long>(seg->seg.labels.n_objects())) {
            unknown.push_back(label);
            continue;
        }
        if (!seen.insert(static_cast<Label>(label)).second) {
            errs.push_back({where, "duplicate label " + std::to_string(label)});
            continue;
        }
        truth.push_back({static_cast<Label>(label), state == 1 ? State::One : State::Two});
    }
    if (!unknown.empty()) {
        return json_response(422, json{{"error", "ground truth references labels absent from the segmentation"},
                                       {"unknown_labels", unknown}});
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
    std::size_t ones = 0;
    for (const auto& t : truth) ones += t.state == State::One;
    seg->truth = std::move(truth);
    return json_response(200, json{{"count", seg->truth.size()},
                                   {"state_counts", {{"1", ones}, {"2", seg->truth.size() - ones}}}});
}

HttpResponse Service::sweep(Session& s, const std::string& body) {
    SegEntry* seg = s.current_seg();
    if (!seg) return error_response(409, "no segmentation yet; POST segment first");
    auto cls = seg->classifications.find(seg->last_classification);
    if (cls == seg->classifications.end()) return error_response(409, "no classification yet; POST classify first");
    if (seg->truth.empty()) return error_response(409, "no ground truth yet; POST ground-truth first");
    const json j = parse_body(body);
    reject_unknown(j, {"lo", "hi", "steps", "positive_state"});
    const double lo = number_field(j, "lo", 0.0);
    const double hi = number_field(j, "hi", 2.0);
    const long steps = integer_field(j, "steps", 201);
    const long positive = integer_field(j, "positive_state", 2);
    std::vector<FieldError> errs;
    if (!(lo < hi)) errs.push_back({"hi", "must exceed lo"});
    if (steps < 2) errs.push_back({"steps", "must be >= 2"});
    if (steps > 1000000) errs.push_back({"steps", "must be <= 1000000"});
    if (positive != 1 && positive != 2) errs.push_back({"positive_state", "must be 1 or 2"});
    if (!errs.empty()) throw ValidationError(std::move(errs));

    std::map<Label, double> f;
    for (const auto& o : cls->second->result.objects) f[o.label] = o.f_value;
    const SweepResult res = threshold_sweep(f, seg->truth, lo, hi, static_cast<int>(steps),
                                            positive == 1 ? State::One : State::Two);
    return json_response(200, sweep_json(res));
}

HttpResponse Service::artifact(Session& s, const std::string& key) {
    const std::size_t dash = key.find('-');
    if (dash == std::string::npos) return error_response(404, "unknown artifact");
    const std::string prefix = key.substr(0, dash);
    const std::string what = key.substr(dash + 1);

    HttpResponse r;
    r.content_type = "image/png";
    if (auto it = s.segs.find(prefix); it != s.segs.end()) {
        SegEntry& e = *it->second;
        auto& png = e.artifacts[what];
        if (png.empty()) {
            if (what == "overlay") {
                png = encode_png(boundary_overlay(s.image, e.seg.labels));
            } else {
                const auto steps = pipeline_steps(e.params);
                const bool known = std::any_of(steps.begin(), steps.end(), [&](const StepInfo& st) { return st.key == what; });
                if (!known) {
                    e.artifacts.erase(what);
                    return error_response(404, "unknown artifact");
                }
                png = encode_png(render_step(e.seg, what));
            }
        }
        r.body.assign(png.begin(), png.end());
        return r;
    }
    if (what == "classes") {
        for (auto& [seg_key, e] : s.segs) {
            auto it = e->classifications.find(prefix);
            if (it == e->classifications.end()) continue;
            ClassEntry& c = *it->second;
            if (c.overlay_png.empty()) c.overlay_png = encode_png(state_overlay(s.image, e->seg.labels, c.states));
            r.body.assign(c.overlay_png.begin(), c.overlay_png.end());
            return r;
        }
    }
    return error_response(404, "unknown artifact");
}

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {}
    Service& service;
    httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        std::string body = req.body;
        if (req.is_multipart_form_data()) {
            const auto& files = req.files;
            if (!files.empty()) body = files.begin()->second.content;
        }
        const HttpResponse out = impl_->service.handle(req.method, req.path, body);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) res.set_header(k, v);
        res.set_content(out.body, out.content_type);
    };
    impl_->server.Get(".*", forward);
    impl_->server.Post(".*", forward);
    impl_->server.set_payload_max_length(service.config().max_upload_bytes + 1);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw IoError("could not bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw IoError("could not bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace cellseg
