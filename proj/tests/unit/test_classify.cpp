#include <doctest.h>

#include <cmath>

#include "cellseg/classify.hpp"
#include "cellseg/otsu.hpp"
#include "oracles.hpp"

using namespace cellseg;

namespace {

Region region_from(Label label, const oracle::CellPixels& c) {
    Region r;
    r.label = label;
    r.area = c.r.size();
    for (std::size_t i = 0; i < c.r.size(); ++i) {
        r.red.push_back(c.r[i] / 255.0);
        r.green.push_back(c.g[i] / 255.0);
        r.blue.push_back(c.b[i] / 255.0);
    }
    return r;
}

Region constant_region(Label label, double red, std::size_t n = 3) {
    Region r;
    r.label = label;
    r.area = n;
    r.red.assign(n, red);
    r.green.assign(n, 0.0);
    r.blue.assign(n, 0.0);
    return r;
}

RegionTable example_cells() {
    RegionTable rt;
    rt.rows = {region_from(1, oracle::table_cell_a()), region_from(2, oracle::table_cell_b())};
    return rt;
}

}  // namespace

TEST_CASE("example cells: mean red above 9 is state 1") {
    const RegionTable rt = example_cells();
    const ClassifierExpr mean_r = parse_expr("mean(R)");

    ClassifyOptions display;
    display.intensity_scale = 255.0;
    const ClassificationResult a = classify_regions(rt, mean_r, Threshold::manual(9.0), display);
    CHECK(a.objects[0].f_value == doctest::Approx(17.0));
    CHECK(a.objects[1].f_value == doctest::Approx(3.0));
    CHECK(a.objects[0].state == State::One);
    CHECK(a.objects[1].state == State::Two);

    const ClassificationResult b = classify_regions(rt, mean_r, Threshold::parse("9/255"));
    CHECK(b.objects[0].state == State::One);
    CHECK(b.objects[1].state == State::Two);
    CHECK(b.state1 == 1);
    CHECK(b.state2 == 1);

    // Green and blue channel means land where the listed values say.
    const auto g = classify_regions(rt, parse_expr("mean(G)"), Threshold::manual(12), display);
    CHECK(g.objects[0].f_value == doctest::Approx(10.0));
    CHECK(g.objects[1].f_value == doctest::Approx(16.0));
    const auto bl = classify_regions(rt, parse_expr("mean(B)"), Threshold::manual(12), display);
    CHECK(bl.objects[1].f_value == doctest::Approx(44.0));
}

TEST_CASE("a value equal to the threshold is state 2") {
    CHECK(state_for(0.5, 0.5) == State::Two);
    CHECK(state_for(std::nextafter(0.5, 1.0), 0.5) == State::One);
    RegionTable rt;
    rt.rows = {constant_region(1, 0.25), constant_region(2, 0.5)};
    const auto res = classify_regions(rt, parse_expr("mean(R)"), Threshold::manual(0.25));
    CHECK(res.objects[0].state == State::Two);
    CHECK(res.objects[1].state == State::One);
}

TEST_CASE("automatic threshold is Otsu over the f values") {
    RegionTable rt;
    const std::vector<double> reds{0.1, 0.12, 0.15, 0.11, 0.6, 0.65, 0.7};
    for (std::size_t i = 0; i < reds.size(); ++i) rt.rows.push_back(constant_region(static_cast<Label>(i + 1), reds[i]));
    const auto res = classify_regions(rt, parse_expr("mean(R)"), Threshold::automatic());
    CHECK(res.mode == ThresholdMode::Otsu);
    // Region means of three equal values can differ from the value in the last bit.
    CHECK(res.threshold_used == doctest::Approx(otsu_threshold_1d(reds)).epsilon(1e-12));
    CHECK(res.state1 == 3);
    CHECK(res.state2 == 4);

    RegionTable flat;
    flat.rows = {constant_region(1, 0.3), constant_region(2, 0.3)};
    CHECK_THROWS_AS(classify_regions(flat, parse_expr("mean(R)"), Threshold::automatic()), DegenerateHistogram);
}

TEST_CASE("division by zero is flagged and excluded from fits") {
    RegionTable rt;
    rt.rows = {constant_region(1, 0.2), constant_region(2, 0.0), constant_region(3, 0.8), constant_region(4, 0.9)};
    // 0 / 0 for the dark region gives NaN.
    const auto res = classify_regions(rt, parse_expr("mean(R) / max(R) * mean(R)"), Threshold::automatic());
    CHECK(res.objects[1].division_by_zero);
    CHECK(std::isnan(res.objects[1].f_value));
    CHECK(res.objects[1].state == State::Two);
    long total = 0;
    for (long c : res.histogram.counts) total += c;
    CHECK(total == 3);

    RegionTable copy = rt;
    apply_classification(copy, res);
    CHECK(copy.rows[0].f_value.has_value());
    CHECK(copy.rows[3].state == res.objects[3].state);
}

TEST_CASE("regions without pixel lists are rejected") {
    RegionTable rt;
    rt.rows.resize(1);
    rt.rows[0].label = 1;
    CHECK_THROWS_AS(classify_regions(rt, parse_expr("mean(R)"), Threshold::manual(0.1)), InvalidArgument);
}

TEST_CASE("value histogram covers the finite range with a closed last bin") {
    const std::vector<double> v{0.0, 0.25, 0.5, 0.75, 1.0, NAN, INFINITY};
    const Histogram h = value_histogram(v, 4);
    REQUIRE(h.edges.size() == 5);
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 1.0);
    CHECK(h.counts == std::vector<long>{1, 1, 1, 2});
    const Histogram flat = value_histogram(std::vector<double>{2.0, 2.0}, 8);
    CHECK(flat.counts == std::vector<long>{2});
    CHECK(value_histogram(std::vector<double>{}, 3).counts.empty());
    CHECK_THROWS_AS(value_histogram(v, 0), InvalidArgument);
}
