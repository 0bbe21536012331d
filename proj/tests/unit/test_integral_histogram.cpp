#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "nnid/errors.hpp"
#include "nnid/integral_histogram.hpp"

using namespace nnid;

TEST_SUITE("integral_histogram") {

TEST_CASE("1x1 map") {
    const CostMap m{1, 1, {42.0}, kWetCost};
    const BinningSpec s;
    const Histogram h = query_rect(build_integral(m, s), 0, 0, 1, 1);
    CHECK(h.total == 1);
    CHECK(h.counts[s.bin_of(42.0)] == 1);
}

TEST_CASE("2x2 map, every unit rectangle") {
    BinningSpec s;
    s.bin_count = 2;
    s.lo = 0;
    s.hi = 2;
    s.wet_bin = false;
    const CostMap m{2, 2, {1.0, 50.0, 50.0, 1.0}, kWetCost};  // bins 0, 1, 1, 0
    const IntegralHistogram ih = build_integral(m, s);
    const std::uint64_t want[4][2] = {{1, 0}, {0, 1}, {0, 1}, {1, 0}};
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) {
            const Histogram h = query_rect(ih, x, y, 1, 1);
            CHECK(h.counts[0] == want[y * 2 + x][0]);
            CHECK(h.counts[1] == want[y * 2 + x][1]);
        }
}

TEST_CASE("full rectangle equals the direct histogram") {
    std::mt19937_64 rng(1);
    const CostMap m = testing::random_cost_map(rng, 37, 23);
    const BinningSpec s;
    CHECK(query_rect(build_integral(m, s), 0, 0, 37, 23) == build_histogram(m.costs, s));
}

TEST_CASE("random rectangles equal direct binning and tiles add up") {
    std::mt19937_64 rng(2);
    const CostMap m = testing::random_cost_map(rng, 64, 64);
    const BinningSpec s = BinningSpec::search_default();
    const IntegralHistogram ih = build_integral(m, s);
    std::uniform_int_distribution<std::size_t> pos(0, 63);
    for (int i = 0; i < 500; ++i) {
        std::size_t x0 = pos(rng), x1 = pos(rng), y0 = pos(rng), y1 = pos(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        const std::size_t w = x1 - x0 + 1, h = y1 - y0 + 1;
        const Histogram q = query_rect(ih, x0, y0, w, h);
        REQUIRE(q.counts == testing::naive_counts(m, s, x0, y0, w, h));
        CHECK(q.total == w * h);
        if (w >= 2) {
            const std::size_t split = w / 2;
            const Histogram left = query_rect(ih, x0, y0, split, h);
            const Histogram right = query_rect(ih, x0 + split, y0, w - split, h);
            for (std::size_t b = 0; b < s.slots(); ++b) CHECK(left.counts[b] + right.counts[b] == q.counts[b]);
        }
    }
}

TEST_CASE("each pixel is classified exactly once") {
    std::mt19937_64 rng(3);
    const CostMap m = testing::random_cost_map(rng, 31, 17);
    CHECK(build_integral(m, BinningSpec{}).classifications() == 31 * 17);
    CHECK(classify(m, BinningSpec{}).classifications == 31 * 17);
}

TEST_CASE("memory budget and size accounting") {
    CHECK(IntegralHistogram::required_bytes(10, 20, 65) == 11 * 21 * 65 * sizeof(std::uint32_t));
    std::mt19937_64 rng(4);
    const CostMap m = testing::random_cost_map(rng, 50, 50);
    try {
        build_integral(m, BinningSpec{}, 1000);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        CHECK(std::string(e.what()).find(std::to_string(IntegralHistogram::required_bytes(50, 50, 257))) !=
              std::string::npos);
    }
}

TEST_CASE("out-of-range rectangles are rejected") {
    const CostMap m{4, 4, std::vector<double>(16, 1.0), kWetCost};
    const IntegralHistogram ih = build_integral(m, BinningSpec{});
    CHECK_THROWS_AS(query_rect(ih, 3, 0, 2, 1), BoundsError);
    CHECK_THROWS_AS(query_rect(ih, 0, 4, 1, 1), BoundsError);
}

TEST_CASE("streamed prefix rows equal the stored prefix sums") {
    std::mt19937_64 rng(5);
    const CostMap m = testing::random_cost_map(rng, 19, 13);
    const BinningSpec s = BinningSpec::search_default();
    const IntegralHistogram ih = build_integral(m, s);
    const BinIndexMap bins = classify(m, s);
    PrefixRowCursor cursor(bins, 0);
    for (std::size_t y = 0;; ++y) {
        for (std::size_t x = 0; x <= 19; ++x)
            for (std::size_t b = 0; b < s.slots(); ++b) REQUIRE(cursor.at(x)[b] == ih.sum(y, x, b));
        if (y == 13) break;
        cursor.advance();
    }
    CHECK_THROWS_AS(cursor.advance(), BoundsError);
    PrefixRowCursor mid(bins, 7);
    for (std::size_t x = 0; x <= 19; ++x)
        for (std::size_t b = 0; b < s.slots(); ++b) CHECK(mid.at(x)[b] == ih.sum(7, x, b));
}

}
