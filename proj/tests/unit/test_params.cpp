#include <doctest.h>

#include "cellseg/params.hpp"

using namespace cellseg;

namespace {

bool has_field(const std::vector<FieldError>& errs, const std::string& field, const std::string& msg = "") {
    for (const auto& e : errs) {
        if (e.field == field && e.message.find(msg) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("defaults are the published configuration") {
    const PipelineParams p;
    CHECK(p.equalization_clip_limit == 0.01);
    CHECK(p.background_size == 19);
    CHECK(p.median_size == 7);
    CHECK(p.gaussian_radius == 7.0);
    CHECK(p.min_area == 35);
    CHECK(p.max_area == 2000);
    CHECK(p.min_signal == 0.2);
    CHECK(p.classifier_expr == "mean(R)");
    CHECK(*p.classifier_threshold.value == 9.0 / 255.0);
    CHECK(p.enable_equalization);
    CHECK(p.enable_background_subtraction);
    CHECK(p.enable_smoothing);
    CHECK(check_params(p).empty());
}

TEST_CASE("each constraint is reported against its own field") {
    PipelineParams p;
    p.background_size = 18;
    CHECK(has_field(check_params(p), "background_size", "must be odd"));
    p = {};
    p.background_size = 1;
    CHECK(has_field(check_params(p), "background_size"));
    p = {};
    p.median_size = 4;
    CHECK(has_field(check_params(p), "median_size", "must be odd"));
    p = {};
    p.equalization_clip_limit = 1.5;
    CHECK(has_field(check_params(p), "equalization_clip_limit"));
    p = {};
    p.gaussian_radius = 0.0;
    CHECK(has_field(check_params(p), "gaussian_radius"));
    p = {};
    p.min_area = 3000;
    CHECK(has_field(check_params(p), "min_area", "max_area"));
    p = {};
    p.min_signal = -0.1;
    CHECK(has_field(check_params(p), "min_signal"));
    p = {};
    p.classifier_expr = "mean(Q)";
    CHECK(has_field(check_params(p), "classifier_expr", "unknown variable"));
    p = {};
    p.median_size = 1;
    CHECK(check_params(p).empty());
}

TEST_CASE("validate throws with every failing field") {
    PipelineParams p;
    p.background_size = 18;
    p.median_size = 2;
    try {
        validate(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.errors().size() == 2);
    }
}

TEST_CASE("threshold text forms") {
    CHECK(Threshold::parse("auto").is_auto());
    CHECK(*Threshold::parse("9/255").value == 9.0 / 255.0);
    CHECK(*Threshold::parse("1.2").value == 1.2);
    CHECK(*Threshold::parse("3e-2").value == 0.03);
    CHECK_THROWS_AS(Threshold::parse("nine"), ValidationError);
    CHECK_THROWS_AS(Threshold::parse("9/0"), ValidationError);
    CHECK(Threshold::manual(1.5).to_string() == "1.5");
    CHECK(Threshold::automatic().to_string() == "auto");
}

TEST_CASE("json round trip preserves every field") {
    PipelineParams p;
    p.equalization_clip_limit = 0.02;
    p.background_size = 31;
    p.median_size = 3;
    p.gaussian_radius = 2.5;
    p.min_area = 10;
    p.max_area = 500;
    p.min_signal = 0.1;
    p.classifier_expr = "mean(R) / mean(G)";
    p.classifier_threshold = Threshold::automatic();
    p.enable_smoothing = false;
    CHECK(params_from_json(to_json(p)) == p);
    p.classifier_threshold = Threshold::manual(1.2);
    CHECK(params_from_json(to_json(p)) == p);
}

TEST_CASE("json overlay rejects unknown keys and wrong types") {
    const PipelineParams base;
    const PipelineParams p = params_from_json(nlohmann::json{{"background_size", 21}}, base);
    CHECK(p.background_size == 21);
    CHECK(p.median_size == base.median_size);
    CHECK(params_from_json(nlohmann::json{{"min_area", 40.0}}).min_area == 40);

    try {
        params_from_json(nlohmann::json{{"bogus", 1}, {"median_size", "seven"}, {"min_area", 1.5}});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(has_field(e.errors(), "bogus", "unknown"));
        CHECK(has_field(e.errors(), "median_size", "integer"));
        CHECK(has_field(e.errors(), "min_area", "integer"));
    }
    CHECK_THROWS_AS(params_from_json(nlohmann::json::array()), ValidationError);
    CHECK(params_from_json(nlohmann::json{{"classifier_threshold", "9/255"}}).classifier_threshold ==
          Threshold::manual(9.0 / 255.0));
}
