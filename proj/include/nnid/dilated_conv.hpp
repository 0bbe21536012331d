#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace nnid {

/// Channels x height x width, channel-major.
struct FeatureMap {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), values(c * h * w, fill) {}

    double operator()(std::size_t c, std::size_t r, std::size_t col) const noexcept {
        return values[(c * height + r) * width + col];
    }
    double& operator()(std::size_t c, std::size_t r, std::size_t col) noexcept {
        return values[(c * height + r) * width + col];
    }
};

/// Odd-sized 2D kernel whose taps are indexed by centered offsets
/// i in [-(rows-1)/2, (rows-1)/2], j likewise, and spread `dilation` pixels apart.
struct DilatedKernel {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> taps;  // row-major
    std::size_t dilation = 1;

    double tap(std::size_t r, std::size_t c) const noexcept { return taps[r * cols + c]; }
    std::size_t field_rows() const noexcept { return (rows - 1) * dilation + 1; }
    std::size_t field_cols() const noexcept { return (cols - 1) * dilation + 1; }
};

/// (z * k)(x, y) = sum_i sum_j z(x - d i, y - d j) k(i, j) with zero padding;
/// the output keeps the input's spatial size.
FeatureMap dilated_conv2d(const FeatureMap& z, const DilatedKernel& k);

/// One output channel of a multi-channel block: a kernel per input channel,
/// all at one dilation.
struct DilatedFilter {
    std::size_t dilation = 1;
    std::vector<DilatedKernel> per_input;
};

/// Output channel c = sum over input channels of dilated_conv2d(input[ic],
/// filters[c].per_input[ic]).
FeatureMap conv_block(const FeatureMap& input, std::span<const DilatedFilter> filters);

/// Inception-of-dilations replacement for a 30 -> 30, 5x5 convolution block:
/// ten filters each at dilation 1, 2 and 4.
struct InceptionLayout {
    static constexpr std::size_t channels = 30;
    static constexpr std::size_t kernel_size = 5;
    static constexpr std::size_t filters_per_dilation = 10;
    static constexpr std::array<std::size_t, 3> dilations = {1, 2, 4};
};

/// Validates the 10/10/10 layout, then runs conv_block. Throws ConfigError
/// on a wrong partition, kernel size or channel count.
FeatureMap dilated_inception_block(const FeatureMap& input, std::span<const DilatedFilter> filters);
void validate_inception_filters(std::span<const DilatedFilter> filters);

/// Trainable weights (taps only; dilation adds none).
std::size_t parameter_count(std::span<const DilatedFilter> filters) noexcept;

}  // namespace nnid
