#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnid/gray_image.hpp"

namespace nnid {

/// Cost value that marks a pixel as never to be changed.
inline constexpr double kWetCost = 1e10;

/// Dense row-major matrix of doubles.
struct RealMatrix {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    RealMatrix() = default;
    RealMatrix(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}

    double operator()(std::size_t row, std::size_t col) const noexcept { return values[row * width + col]; }
    double& operator()(std::size_t row, std::size_t col) noexcept { return values[row * width + col]; }
};

/// Two-channel orthonormal filter pair. Tap t sits at spatial offset
/// t - anchor(), with anchor() = (length - 1) / 2.
struct FilterBank {
    std::vector<double> lowpass;
    std::vector<double> highpass;

    std::size_t length() const noexcept { return lowpass.size(); }
    std::size_t anchor() const noexcept { return (lowpass.size() - 1) / 2; }

    /// Daubechies-8 decomposition pair (16 taps); highpass is the
    /// alternating-sign reversal of lowpass.
    static const FilterBank& daubechies8();
    static FilterBank haar();
    /// Both filters reversed in time.
    FilterBank reversed() const;
    /// Throws NumericalError unless sum(lowpass) = sqrt(2), both filters have
    /// unit norm and are mutually orthogonal (all within 1e-9).
    void validate() const;
};

/// Separable 2D kernel: K(r, c) = vertical[r] * horizontal[c].
struct DirectionalKernel {
    std::span<const double> vertical;
    std::span<const double> horizontal;
};

/// LH = h g^T, HL = g h^T, HH = g g^T.
std::vector<DirectionalKernel> directional_kernels(const FilterBank& bank);

struct WaveletResiduals {
    RealMatrix lh;
    RealMatrix hl;
    RealMatrix hh;
};

/// Per-pixel embedding costs for one image.
struct CostMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> costs;
    double wet_threshold = kWetCost;

    double operator()(std::size_t row, std::size_t col) const noexcept { return costs[row * width + col]; }
    bool is_wet(std::size_t index) const noexcept { return costs[index] >= wet_threshold; }
    /// Costs of the w x h rectangle at (x0, y0).
    CostMap crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const;

    friend bool operator==(const CostMap&, const CostMap&) = default;
};

/// Correlation of the mirror-padded image with each directional kernel,
/// same-size output. Images must be at least filter-length on each side.
WaveletResiduals wavelet_residuals(const GrayImage& image,
                                   const FilterBank& bank = FilterBank::daubechies8());

/// S-UNIWARD spatial costs: for every directional kernel K,
/// sum over residual positions r covering pixel p of |K(p - r)| / (|R(r)| + sigma).
/// Residuals are taken over the mirror-extended image so that every residual
/// touching the image exists. Costs above kWetCost are clamped to it.
CostMap compute_cost_map(const GrayImage& image, double sigma = 1.0,
                         const FilterBank& bank = FilterBank::daubechies8());

}  // namespace nnid
