#include "cellseg/params.hpp"

#include <charconv>
#include <cmath>

#include "cellseg/expr.hpp"

namespace cellseg {

namespace {

std::optional<double> parse_real(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string join_messages(const std::vector<FieldError>& errors) {
    std::string out = "invalid parameters:";
    for (const auto& e : errors) out += " " + e.field + ": " + e.message + ";";
    return out;
}

}  // namespace

Threshold Threshold::parse(const std::string& text) {
    if (text == "auto") return automatic();
    if (auto slash = text.find('/'); slash != std::string::npos) {
        auto num = parse_real(std::string_view(text).substr(0, slash));
        auto den = parse_real(std::string_view(text).substr(slash + 1));
        if (num && den && *den != 0.0) return manual(*num / *den);
    } else if (auto v = parse_real(text)) {
        return manual(*v);
    }
    throw ValidationError({{"classifier_threshold",
                            "expected a number, a ratio like 9/255, or \"auto\"; got \"" + text +
                                "\""}});
}

std::string Threshold::to_string() const {
    if (is_auto()) return "auto";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *value);
    return std::string(buf, ptr);
}

ValidationError::ValidationError(std::vector<FieldError> errors)
    : InvalidArgument(join_messages(errors)), errors_(std::move(errors)) {}

std::vector<FieldError> check_params(const PipelineParams& p) {
    std::vector<FieldError> errs;
    if (!(p.equalization_clip_limit >= 0.0 && p.equalization_clip_limit <= 1.0)) {
        errs.push_back({"equalization_clip_limit", "must be in [0,1]"});
    }
    if (p.background_size < 3) {
        errs.push_back({"background_size", "must be >= 3"});
    } else if (p.background_size % 2 == 0) {
        errs.push_back({"background_size", "must be odd"});
    }
    if (p.median_size < 1) {
        errs.push_back({"median_size", "must be >= 1"});
    } else if (p.median_size % 2 == 0) {
        errs.push_back({"median_size", "must be odd"});
    }
    if (!(p.gaussian_radius > 0.0) || !std::isfinite(p.gaussian_radius)) {
        errs.push_back({"gaussian_radius", "must be a positive real"});
    }
    if (p.min_area < 0) errs.push_back({"min_area", "must be >= 0"});
    if (p.max_area <= 0) errs.push_back({"max_area", "must be > 0"});
    if (p.min_area >= 0 && p.max_area > 0 && p.min_area > p.max_area) {
        errs.push_back({"min_area", "must not exceed max_area"});
    }
    if (!(p.min_signal >= 0.0 && p.min_signal <= 1.0)) {
        errs.push_back({"min_signal", "must be in [0,1]"});
    }
    try {
        parse_expr(p.classifier_expr);
    } catch (const ExprError& e) {
        errs.push_back({"classifier_expr", e.what()});
    }
    if (p.classifier_threshold.value && !std::isfinite(*p.classifier_threshold.value)) {
        errs.push_back({"classifier_threshold", "must be finite or \"auto\""});
    }
    return errs;
}

void validate(const PipelineParams& p) {
    auto errs = check_params(p);
    if (!errs.empty()) throw ValidationError(std::move(errs));
}

nlohmann::json to_json(const PipelineParams& p) {
    nlohmann::json j;
    j["equalization_clip_limit"] = p.equalization_clip_limit;
    j["background_size"] = p.background_size;
    j["median_size"] = p.median_size;
    j["gaussian_radius"] = p.gaussian_radius;
    j["min_area"] = p.min_area;
    j["max_area"] = p.max_area;
    j["min_signal"] = p.min_signal;
    j["classifier_expr"] = p.classifier_expr;
    if (p.classifier_threshold.is_auto()) {
        j["classifier_threshold"] = "auto";
    } else {
        j["classifier_threshold"] = *p.classifier_threshold.value;
    }
    j["enable_equalization"] = p.enable_equalization;
    j["enable_background_subtraction"] = p.enable_background_subtraction;
    j["enable_smoothing"] = p.enable_smoothing;
    return j;
}

PipelineParams params_from_json(const nlohmann::json& j, PipelineParams p) {
    if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"", "parameters must be a JSON object"}});
    std::vector<FieldError> errs;

    auto real = [&](const std::string& key, double& dst) {
        const auto& v = j.at(key);
        if (v.is_number()) dst = v.get<double>();
        else errs.push_back({key, "must be a number"});
    };
    auto integer = [&](const std::string& key, auto& dst) {
        const auto& v = j.at(key);
        if (v.is_number_integer()) {
            dst = v.get<std::remove_reference_t<decltype(dst)>>();
        } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(v.get<double>());
        } else {
            errs.push_back({key, "must be an integer"});
        }
    };
    auto boolean = [&](const std::string& key, bool& dst) {
        const auto& v = j.at(key);
        if (v.is_boolean()) dst = v.get<bool>();
        else errs.push_back({key, "must be a boolean"});
    };

    for (const auto& [key, value] : j.items()) {
        if (key == "equalization_clip_limit") real(key, p.equalization_clip_limit);
        else if (key == "background_size") integer(key, p.background_size);
        else if (key == "median_size") integer(key, p.median_size);
        else if (key == "gaussian_radius") real(key, p.gaussian_radius);
        else if (key == "min_area") integer(key, p.min_area);
        else if (key == "max_area") integer(key, p.max_area);
        else if (key == "min_signal") real(key, p.min_signal);
        else if (key == "classifier_expr") {
            if (value.is_string()) p.classifier_expr = value.get<std::string>();
            else errs.push_back({key, "must be a string"});
        } else if (key == "classifier_threshold") {
            if (value.is_number()) {
                p.classifier_threshold = Threshold::manual(value.get<double>());
            } else if (value.is_string()) {
                try {
                    p.classifier_threshold = Threshold::parse(value.get<std::string>());
                } catch (const ValidationError& e) {
                    errs.insert(errs.end(), e.errors().begin(), e.errors().end());
                }
            } else {
                errs.push_back({key, "must be a number or \"auto\""});
            }
        } else if (key == "enable_equalization") boolean(key, p.enable_equalization);
        else if (key == "enable_background_subtraction") boolean(key, p.enable_background_subtraction);
        else if (key == "enable_smoothing") boolean(key, p.enable_smoothing);
        else errs.push_back({key, "unknown parameter"});
    }
    if (!errs.empty()) throw ValidationError(std::move(errs));
    return p;
}

}  // namespace cellseg
