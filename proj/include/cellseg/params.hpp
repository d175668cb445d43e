#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellseg/image.hpp"

namespace cellseg {

/// Classification threshold: a fixed value, or nullopt for automatic (Otsu) selection.
struct Threshold {
    std::optional<double> value;

    static Threshold automatic() { return {}; }
    static Threshold manual(double v) { return {v}; }
    bool is_auto() const { return !value.has_value(); }

    /// Accepts "auto", a decimal ("0.0353") or a ratio ("9/255").
    static Threshold parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const Threshold&) const = default;
};

/// Segmentation and classification parameters. Defaults are the values used for the
/// mitochondrial-polarity example (clip 0.01, background 19, median 7, gaussian 7,
/// area 35..2000, signal 0.2, mean(R) thresholded at 9/255).
struct PipelineParams {
    double equalization_clip_limit = 0.01;
    int background_size = 19;
    int median_size = 7;
    double gaussian_radius = 7.0;
    long min_area = 35;
    long max_area = 2000;
    double min_signal = 0.2;
    std::string classifier_expr = "mean(R)";
    Threshold classifier_threshold = Threshold::manual(9.0 / 255.0);
    bool enable_equalization = true;
    bool enable_background_subtraction = true;
    bool enable_smoothing = true;

    bool operator==(const PipelineParams&) const = default;
};

struct FieldError {
    std::string field;
    std::string message;
};

/// Parameter validation failure; carries one entry per offending field.
class ValidationError : public InvalidArgument {
public:
    explicit ValidationError(std::vector<FieldError> errors);
    const std::vector<FieldError>& errors() const { return errors_; }

private:
    std::vector<FieldError> errors_;
};

/// Returns every violated constraint; empty when the parameters are usable.
std::vector<FieldError> check_params(const PipelineParams& p);

/// Throws ValidationError if check_params reports anything.
void validate(const PipelineParams& p);

nlohmann::json to_json(const PipelineParams& p);

/// Overlays the fields present in `j` onto `base`. Unknown keys and wrongly typed
/// values raise ValidationError naming the field. Does not run validate().
PipelineParams params_from_json(const nlohmann::json& j, PipelineParams base = {});

}  // namespace cellseg
