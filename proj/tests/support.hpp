#pragma once

// Shared fixtures and brute-force reference implementations for the tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nnid/cost_model.hpp"
#include "nnid/dilated_conv.hpp"
#include "nnid/gray_image.hpp"
#include "nnid/histogram.hpp"

namespace testing {

inline nnid::GrayImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> pick(lo, hi);
    nnid::GrayImage img(w, h);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(pick(rng));
    return img;
}

/// Log-uniform costs over roughly [1e-2, 1e6] with a sprinkle of wet pixels.
inline nnid::CostMap random_cost_map(std::mt19937_64& rng, std::size_t w, std::size_t h, double wet_fraction = 0.02) {
    std::uniform_real_distribution<double> expo(-2.5, 6.5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    nnid::CostMap map{w, h, std::vector<double>(w * h), nnid::kWetCost};
    for (double& v : map.costs) v = u(rng) < wet_fraction ? nnid::kWetCost : std::pow(10.0, expo(rng));
    return map;
}

/// Cost map with a few coarse plateaus, so that many crop positions tie.
inline nnid::CostMap blocky_cost_map(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t block) {
    std::uniform_int_distribution<int> level(0, 3);
    const std::size_t bw = (w + block - 1) / block;
    std::vector<double> levels(bw * ((h + block - 1) / block));
    for (double& v : levels) v = std::pow(10.0, level(rng));
    nnid::CostMap map{w, h, std::vector<double>(w * h), nnid::kWetCost};
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) map.costs[r * w + c] = levels[(r / block) * bw + c / block];
    return map;
}

inline long reflect101(long i, long n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

/// Residual of kernel vertical (x) horizontal at image position (r, c), which
/// may lie outside the image; tap t sits at offset t - anchor.
inline double naive_residual_at(const nnid::GrayImage& img, const nnid::DirectionalKernel& k, long r, long c,
                                long anchor) {
    const long h = static_cast<long>(img.height());
    const long w = static_cast<long>(img.width());
    double acc = 0.0;
    for (std::size_t a = 0; a < k.vertical.size(); ++a)
        for (std::size_t b = 0; b < k.horizontal.size(); ++b) {
            const long rr = reflect101(r + static_cast<long>(a) - anchor, h);
            const long cc = reflect101(c + static_cast<long>(b) - anchor, w);
            acc += k.vertical[a] * k.horizontal[b] * img(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        }
    return acc;
}

/// sum_k sum_q |K(q)| / (|R_k(p - q)| + sigma), straight from the definition.
inline std::vector<double> naive_cost_map(const nnid::GrayImage& img, double sigma, const nnid::FilterBank& bank) {
    const long anchor = static_cast<long>(bank.anchor());
    const long L = static_cast<long>(bank.length());
    std::vector<double> cost(img.size(), 0.0);
    for (const auto& k : nnid::directional_kernels(bank))
        for (long r = 0; r < static_cast<long>(img.height()); ++r)
            for (long c = 0; c < static_cast<long>(img.width()); ++c) {
                double acc = 0.0;
                for (long u = 0; u < L; ++u)
                    for (long v = 0; v < L; ++v) {
                        const double kq = std::abs(k.vertical[static_cast<std::size_t>(u)] *
                                                   k.horizontal[static_cast<std::size_t>(v)]);
                        const double res = naive_residual_at(img, k, r - (u - anchor), c - (v - anchor), anchor);
                        acc += kq / (std::abs(res) + sigma);
                    }
                cost[static_cast<std::size_t>(r) * img.width() + static_cast<std::size_t>(c)] += acc;
            }
    return cost;
}

/// Counts by binning each value on its own.
inline std::vector<std::uint64_t> naive_counts(const nnid::CostMap& map, const nnid::BinningSpec& spec, std::size_t x0,
                                               std::size_t y0, std::size_t w, std::size_t h) {
    std::vector<std::uint64_t> counts(spec.slots(), 0);
    for (std::size_t r = y0; r < y0 + h; ++r)
        for (std::size_t c = x0; c < x0 + w; ++c) ++counts[spec.bin_of(map(r, c))];
    return counts;
}

/// Plain "same" 2D convolution with zero padding and a centered odd kernel:
/// out(r, c) = sum z(r - i, c - j) k(i, j).
inline std::vector<double> naive_conv2d(const std::vector<double>& z, std::size_t h, std::size_t w,
                                        const std::vector<double>& k, std::size_t kr, std::size_t kc) {
    const long hr = static_cast<long>(kr - 1) / 2;
    const long hc = static_cast<long>(kc - 1) / 2;
    std::vector<double> out(h * w, 0.0);
    for (long r = 0; r < static_cast<long>(h); ++r)
        for (long c = 0; c < static_cast<long>(w); ++c) {
            double acc = 0.0;
            for (long i = -hr; i <= hr; ++i)
                for (long j = -hc; j <= hc; ++j) {
                    const long rr = r - i;
                    const long cc = c - j;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
                    acc += z[static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc)] *
                           k[static_cast<std::size_t>(i + hr) * kc + static_cast<std::size_t>(j + hc)];
                }
            out[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)] = acc;
        }
    return out;
}

/// Kernel with d - 1 zero rows and columns inserted between taps.
inline nnid::DilatedKernel zero_stuffed(const nnid::DilatedKernel& k) {
    nnid::DilatedKernel s;
    s.rows = k.field_rows();
    s.cols = k.field_cols();
    s.dilation = 1;
    s.taps.assign(s.rows * s.cols, 0.0);
    for (std::size_t r = 0; r < k.rows; ++r)
        for (std::size_t c = 0; c < k.cols; ++c) s.taps[r * k.dilation * s.cols + c * k.dilation] = k.tap(r, c);
    return s;
}

/// Fresh, empty scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("nnid_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testing

