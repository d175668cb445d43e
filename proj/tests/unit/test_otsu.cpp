#include <doctest.h>

#include <random>

#include "cellseg/otsu.hpp"
#include "oracles.hpp"

using namespace cellseg;

namespace {

std::vector<std::uint64_t> random_histogram(std::mt19937_64& rng, int occupied) {
    std::vector<std::uint64_t> h(256, 0);
    std::uniform_int_distribution<int> bin(0, 255);
    std::uniform_int_distribution<int> count(1, 500);
    for (int i = 0; i < occupied; ++i) h[static_cast<std::size_t>(bin(rng))] += static_cast<std::uint64_t>(count(rng));
    return h;
}

int occupied(const std::vector<std::uint64_t>& h) {
    return static_cast<int>(std::count_if(h.begin(), h.end(), [](auto c) { return c > 0; }));
}

}  // namespace

TEST_CASE("single and two-level splits agree with the exhaustive oracle") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 60; ++trial) {
        const auto h = random_histogram(rng, 3 + trial % 30);
        if (occupied(h) < 3) continue;
        CHECK(otsu_split_bin(h) == oracle::otsu_single(h));
        CHECK(otsu_two_level_bins(h) == oracle::otsu_two(h));
    }
}

TEST_CASE("exact ties resolve to the smallest split") {
    // Two equal spikes: every split between them gives the same partition.
    std::vector<std::uint64_t> h(256, 0);
    h[10] = 100;
    h[200] = 100;
    CHECK(otsu_split_bin(h) == 10);
    // Three spikes: every (k1, k2) that separates them is the same partition.
    h[105] = 100;
    const auto [k1, k2] = otsu_two_level_bins(h);
    CHECK(k1 == 10);
    CHECK(k2 == 105);
    CHECK(oracle::otsu_two(h) == std::pair{10, 105});
}

TEST_CASE("degenerate histograms raise") {
    std::vector<std::uint64_t> h(256, 0);
    h[3] = 10;
    CHECK_THROWS_AS(otsu_split_bin(h), DegenerateHistogram);
    h[9] = 10;
    CHECK_NOTHROW(otsu_split_bin(h));
    CHECK_THROWS_AS(otsu_two_level_bins(h), DegenerateHistogram);
    CHECK_THROWS_AS(otsu_split_bin(std::vector<std::uint64_t>(10, 1)), InvalidArgument);
}

TEST_CASE("bin edges are exact powers of two") {
    CHECK(unit_intensity_bin(0.0) == 0);
    CHECK(unit_intensity_bin(1.0) == 255);
    for (int k = 0; k < 255; ++k) {
        const double edge = (k + 1) / 256.0;
        CHECK(unit_intensity_bin(edge) == k + 1);
        CHECK(unit_intensity_bin(std::nextafter(edge, 0.0)) == k);
    }
}

TEST_CASE("two-level thresholds separate three intensity populations") {
    GrayImage g(30, 1);
    for (int x = 0; x < 30; ++x) g(x, 0) = x < 10 ? 0.05 : x < 20 ? 0.5 : 0.95;
    const OtsuLevels l = otsu_two_level(g);
    CHECK(l.t1 > 0.05);
    CHECK(l.t1 <= 0.5);
    CHECK(l.t2 > 0.5);
    CHECK(l.t2 <= 0.95);
}

TEST_CASE("one-dimensional Otsu returns a bin edge between clusters") {
    const std::vector<double> v{1.0, 1.1, 1.2, 5.0, 5.1, 5.3};
    const double t = otsu_threshold_1d(v);
    CHECK(t > 1.2);
    CHECK(t < 5.0);
    const double width = (5.3 - 1.0) / 256.0;
    const double k = (t - 1.0) / width;
    CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-9));
    CHECK_THROWS_AS(otsu_threshold_1d(std::vector<double>{2.0, 2.0}), DegenerateHistogram);
    CHECK_THROWS_AS(otsu_threshold_1d(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(otsu_threshold_1d(std::vector<double>{1.0, NAN}), InvalidArgument);
}
