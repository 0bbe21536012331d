#include <doctest.h>

#include <cmath>
#include <random>

#include "../support.hpp"
#include "nnid/dilated_conv.hpp"
#include "nnid/errors.hpp"

using namespace nnid;

namespace {

FeatureMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w) {
    std::normal_distribution<double> g;
    FeatureMap m(c, h, w);
    for (double& v : m.values) v = g(rng);
    return m;
}

DilatedKernel random_kernel(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t d) {
    std::normal_distribution<double> g;
    DilatedKernel k{rows, cols, std::vector<double>(rows * cols), d};
    for (double& v : k.taps) v = g(rng);
    return k;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

std::vector<DilatedFilter> inception_filters(std::mt19937_64& rng, bool all_dilation_one = false) {
    std::vector<DilatedFilter> filters;
    for (std::size_t oc = 0; oc < 30; ++oc) {
        DilatedFilter f;
        f.dilation = all_dilation_one ? 1 : InceptionLayout::dilations[oc / 10];
        for (std::size_t ic = 0; ic < 30; ++ic) f.per_input.push_back(random_kernel(rng, 5, 5, f.dilation));
        filters.push_back(std::move(f));
    }
    return filters;
}

}  // namespace

TEST_SUITE("dilated_conv") {

TEST_CASE("dilation 1 is an ordinary same-size convolution") {
    std::mt19937_64 rng(1);
    for (std::size_t ks : {1, 3, 5}) {
        const FeatureMap z = random_map(rng, 1, 23, 31);
        const DilatedKernel k = random_kernel(rng, ks, ks, 1);
        const FeatureMap out = dilated_conv2d(z, k);
        CHECK(out.height == 23);
        CHECK(out.width == 31);
        CHECK(max_abs_diff(out.values, testing::naive_conv2d(z.values, 23, 31, k.taps, ks, ks)) < 1e-9);
    }
}

TEST_CASE("impulse response of a dilated box kernel") {
    FeatureMap z(1, 11, 11);
    z(0, 5, 5) = 1.0;
    const FeatureMap out = dilated_conv2d(z, DilatedKernel{3, 3, std::vector<double>(9, 1.0), 2});
    for (std::size_t r = 0; r < 11; ++r)
        for (std::size_t c = 0; c < 11; ++c) {
            const bool hit = (r == 3 || r == 5 || r == 7) && (c == 3 || c == 5 || c == 7);
            CHECK(out(0, r, c) == (hit ? 1.0 : 0.0));
        }
}

TEST_CASE("dilated kernel equals its zero-stuffed expansion") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> side(17, 64);
    for (int trial = 0; trial < 30; ++trial)
        for (std::size_t d : {1, 2, 4}) {
            const std::size_t ks = trial % 2 ? 5 : 3;
            const std::size_t h = side(rng), w = side(rng);
            const FeatureMap z = random_map(rng, 1, h, w);
            const DilatedKernel k = random_kernel(rng, ks, ks, d);
            const DilatedKernel s = testing::zero_stuffed(k);
            CHECK(max_abs_diff(dilated_conv2d(z, k).values,
                               testing::naive_conv2d(z.values, h, w, s.taps, s.rows, s.cols)) < 1e-9);
        }
}

TEST_CASE("linearity and interior shift equivariance") {
    std::mt19937_64 rng(3);
    const FeatureMap z1 = random_map(rng, 1, 40, 40), z2 = random_map(rng, 1, 40, 40);
    const DilatedKernel k = random_kernel(rng, 3, 3, 2);
    FeatureMap mix(1, 40, 40);
    for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] = 2.0 * z1.values[i] - 0.5 * z2.values[i];
    const FeatureMap a = dilated_conv2d(z1, k), b = dilated_conv2d(z2, k), m = dilated_conv2d(mix, k);
    for (std::size_t i = 0; i < m.values.size(); ++i)
        CHECK(std::abs(m.values[i] - (2.0 * a.values[i] - 0.5 * b.values[i])) < 1e-9);

    FeatureMap shifted(1, 40, 40);
    for (std::size_t r = 3; r < 40; ++r)
        for (std::size_t c = 3; c < 40; ++c) shifted(0, r, c) = z1(0, r - 3, c - 3);
    const FeatureMap s = dilated_conv2d(shifted, k);
    for (std::size_t r = 10; r < 36; ++r)
        for (std::size_t c = 10; c < 36; ++c) CHECK(std::abs(s(0, r, c) - a(0, r - 3, c - 3)) < 1e-12);
}

TEST_CASE("kernel validation") {
    const FeatureMap z(1, 8, 8);
    CHECK_THROWS_AS(dilated_conv2d(z, DilatedKernel{2, 3, std::vector<double>(6), 1}), ConfigError);
    CHECK_THROWS_AS(dilated_conv2d(z, DilatedKernel{3, 3, std::vector<double>(8), 1}), ConfigError);
    CHECK_THROWS_AS(dilated_conv2d(z, DilatedKernel{3, 3, std::vector<double>(9), 0}), ConfigError);
    CHECK_THROWS_AS(dilated_conv2d(z, DilatedKernel{5, 5, std::vector<double>(25), 2}), DimensionError);
    CHECK_THROWS_AS(dilated_conv2d(FeatureMap(2, 8, 8), DilatedKernel{3, 3, std::vector<double>(9), 1}),
                    ConfigError);
}

TEST_CASE("inception block") {
    std::mt19937_64 rng(4);
    const FeatureMap input = random_map(rng, 30, 24, 24);
    const auto filters = inception_filters(rng);

    SUBCASE("layout and parameter count") {
        CHECK_NOTHROW(validate_inception_filters(filters));
        CHECK(parameter_count(filters) == 30 * 5 * 5 * 30);
        CHECK(parameter_count(filters) == parameter_count(inception_filters(rng, true)));
    }
    SUBCASE("zero kernels give zero output") {
        auto zero = filters;
        for (auto& f : zero)
            for (auto& k : f.per_input) std::fill(k.taps.begin(), k.taps.end(), 0.0);
        const FeatureMap out = dilated_inception_block(input, zero);
        CHECK(out.channels == 30);
        for (double v : out.values) CHECK(v == 0.0);
    }
    SUBCASE("each output channel sums per-input convolutions") {
        const FeatureMap out = dilated_inception_block(input, filters);
        CHECK(out.height == 24);
        CHECK(out.width == 24);
        for (std::size_t oc : {0, 15, 29}) {
            std::vector<double> want(24 * 24, 0.0);
            for (std::size_t ic = 0; ic < 30; ++ic) {
                const DilatedKernel s = testing::zero_stuffed(filters[oc].per_input[ic]);
                const std::vector<double> plane(input.values.begin() + ic * 576, input.values.begin() + (ic + 1) * 576);
                const auto part = testing::naive_conv2d(plane, 24, 24, s.taps, s.rows, s.cols);
                for (std::size_t i = 0; i < want.size(); ++i) want[i] += part[i];
            }
            const std::vector<double> got(out.values.begin() + oc * 576, out.values.begin() + (oc + 1) * 576);
            CHECK(max_abs_diff(got, want) < 1e-9);
        }
    }
    SUBCASE("all dilations one is the plain 5x5 block") {
        const auto plain = inception_filters(rng, true);
        const FeatureMap out = conv_block(input, plain);
        for (std::size_t oc : {3, 27}) {
            std::vector<double> want(576, 0.0);
            for (std::size_t ic = 0; ic < 30; ++ic) {
                const std::vector<double> plane(input.values.begin() + ic * 576, input.values.begin() + (ic + 1) * 576);
                const auto part = testing::naive_conv2d(plane, 24, 24, plain[oc].per_input[ic].taps, 5, 5);
                for (std::size_t i = 0; i < 576; ++i) want[i] += part[i];
            }
            const std::vector<double> got(out.values.begin() + oc * 576, out.values.begin() + (oc + 1) * 576);
            CHECK(max_abs_diff(got, want) < 1e-9);
        }
    }
    SUBCASE("wrong layouts are rejected") {
        auto bad = filters;
        bad[0].dilation = 2;
        for (auto& k : bad[0].per_input) k.dilation = 2;
        CHECK_THROWS_AS(validate_inception_filters(bad), ConfigError);
        CHECK_THROWS_AS(validate_inception_filters(std::span(filters).first(29)), ConfigError);
        auto three = filters;
        three[5].per_input[0] = random_kernel(rng, 3, 3, 1);
        CHECK_THROWS_AS(validate_inception_filters(three), ConfigError);
        CHECK_THROWS_AS(dilated_inception_block(random_map(rng, 29, 24, 24), filters), ConfigError);
    }
}

}
