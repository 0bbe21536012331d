#include "nnid/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nnid/errors.hpp"

namespace nnid {

namespace {

// db8 decomposition lowpass, standard wavelet tables.
constexpr double kDb8Lowpass[16] = {
    -0.00011747678412476953, 0.0006754494064505693, -0.00039174037337694705, -0.004870352993451574,
    0.008746094047405777,    0.013981027917398282,  -0.044088253930794755,   -0.017369301001807547,
    0.12874742662047847,     0.0004724845739132828, -0.2840155429615469,     -0.015829105256349306,
    0.5853546836542067,      0.6756307362972898,    0.31287159091429995,     0.05441584224310401};

std::vector<double> alternating_reversal(const std::vector<double>& h) {
    const std::size_t n = h.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (i % 2 == 0 ? -1.0 : 1.0) * h[n - 1 - i];
    return g;
}

// Reflect-101 index into [0, n): -1 -> 1, n -> n - 2. Valid for |overshoot| < n.
std::size_t reflect(long i, long n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return static_cast<std::size_t>(i);
}

void check_image(const GrayImage& image, const FilterBank& bank) {
    const std::size_t need = bank.length();
    if (image.width() < need || image.height() < need)
        throw DimensionError("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                             " is smaller than the " + std::to_string(need) + "-tap filter support");
}

// Image extended by L-1 mirrored pixels on every side, offset by its minimum
// so that adding a constant to the image leaves the result bit-identical.
RealMatrix extend_image(const GrayImage& image, std::size_t pad) {
    const auto w = static_cast<long>(image.width());
    const auto h = static_cast<long>(image.height());
    const auto p = static_cast<long>(pad);
    const double base = *std::min_element(image.pixels().begin(), image.pixels().end());
    RealMatrix ext(image.width() + 2 * pad, image.height() + 2 * pad);
    for (long r = -p; r < h + p; ++r) {
        const std::size_t sr = reflect(r, h);
        double* dst = &ext.values[static_cast<std::size_t>(r + p) * ext.width];
        for (long c = -p; c < w + p; ++c) dst[c + p] = image(sr, reflect(c, w)) - base;
    }
    return ext;
}

// out[i][j] = sum_t taps[t] * in[i][j + t]; out width = in width - L + 1.
RealMatrix correlate_rows(const RealMatrix& in, std::span<const double> taps) {
    const std::size_t L = taps.size();
    RealMatrix out(in.width - L + 1, in.height);
    for (std::size_t i = 0; i < in.height; ++i) {
        const double* src = &in.values[i * in.width];
        double* dst = &out.values[i * out.width];
        for (std::size_t t = 0; t < L; ++t) {
            const double k = taps[t];
            for (std::size_t j = 0; j < out.width; ++j) dst[j] += k * src[j + t];
        }
    }
    return out;
}

// out[i][j] = sum_t taps[t] * in[i + t][j]; out height = in height - L + 1.
RealMatrix correlate_cols(const RealMatrix& in, std::span<const double> taps) {
    const std::size_t L = taps.size();
    RealMatrix out(in.width, in.height - L + 1);
    for (std::size_t i = 0; i < out.height; ++i) {
        double* dst = &out.values[i * out.width];
        for (std::size_t t = 0; t < L; ++t) {
            const double k = taps[t];
            const double* src = &in.values[(i + t) * in.width];
            for (std::size_t j = 0; j < out.width; ++j) dst[j] += k * src[j];
        }
    }
    return out;
}

std::vector<double> abs_reversed(std::span<const double> taps) {
    std::vector<double> out(taps.rbegin(), taps.rend());
    for (double& v : out) v = std::abs(v);
    return out;
}

// Residuals of one kernel over the extended domain: rows/cols r in
// [-(L-1-a), n-1+a], i.e. (H+L-1) x (W+L-1).
RealMatrix extended_residual(const RealMatrix& ext, const DirectionalKernel& k) {
    return correlate_cols(correlate_rows(ext, k.horizontal), k.vertical);
}

}  // namespace

const FilterBank& FilterBank::daubechies8() {
    static const FilterBank bank = [] {
        FilterBank b;
        b.lowpass.assign(std::begin(kDb8Lowpass), std::end(kDb8Lowpass));
        b.highpass = alternating_reversal(b.lowpass);
        b.validate();
        return b;
    }();
    return bank;
}

FilterBank FilterBank::haar() {
    FilterBank b;
    const double s = 1.0 / std::sqrt(2.0);
    b.lowpass = {s, s};
    b.highpass = alternating_reversal(b.lowpass);
    return b;
}

FilterBank FilterBank::reversed() const {
    return FilterBank{{lowpass.rbegin(), lowpass.rend()}, {highpass.rbegin(), highpass.rend()}};
}

void FilterBank::validate() const {
    if (lowpass.size() != highpass.size() || lowpass.size() < 2)
        throw NumericalError("filter bank needs two filters of equal length >= 2");
    double sum = 0, hh = 0, gg = 0, hg = 0;
    for (std::size_t i = 0; i < lowpass.size(); ++i) {
        sum += lowpass[i];
        hh += lowpass[i] * lowpass[i];
        gg += highpass[i] * highpass[i];
        hg += lowpass[i] * highpass[i];
    }
    if (std::abs(sum - std::sqrt(2.0)) > 1e-9 || std::abs(hh - 1) > 1e-9 || std::abs(gg - 1) > 1e-9 ||
        std::abs(hg) > 1e-9)
        throw NumericalError("filter bank is not orthonormal");
}

std::vector<DirectionalKernel> directional_kernels(const FilterBank& bank) {
    return {{bank.lowpass, bank.highpass}, {bank.highpass, bank.lowpass}, {bank.highpass, bank.highpass}};
}

CostMap CostMap::crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
    if (x0 + w > width || y0 + h > height) throw BoundsError("cost crop exceeds map bounds");
    CostMap out{w, h, std::vector<double>(w * h), wet_threshold};
    for (std::size_t r = 0; r < h; ++r)
        std::copy_n(&costs[(y0 + r) * width + x0], w, &out.costs[r * w]);
    return out;
}

WaveletResiduals wavelet_residuals(const GrayImage& image, const FilterBank& bank) {
    check_image(image, bank);
    const std::size_t L = bank.length();
    const std::size_t lead = L - 1 - bank.anchor();
    const RealMatrix ext = extend_image(image, L - 1);
    const auto kernels = directional_kernels(bank);
    RealMatrix out[3];
    for (std::size_t k = 0; k < 3; ++k) {
        const RealMatrix full = extended_residual(ext, kernels[k]);
        out[k] = RealMatrix(image.width(), image.height());
        for (std::size_t r = 0; r < image.height(); ++r)
            std::copy_n(&full.values[(r + lead) * full.width + lead], image.width(), &out[k].values[r * image.width()]);
    }
    return {std::move(out[0]), std::move(out[1]), std::move(out[2])};
}

CostMap compute_cost_map(const GrayImage& image, double sigma, const FilterBank& bank) {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("sigma must be a positive finite number");
    check_image(image, bank);
    const std::size_t L = bank.length();
    const RealMatrix ext = extend_image(image, L - 1);

    RealMatrix total(image.width(), image.height());
    for (const DirectionalKernel& k : directional_kernels(bank)) {
        RealMatrix inv = extended_residual(ext, k);
        for (double& v : inv.values) v = 1.0 / (std::abs(v) + sigma);
        // Pixel p collects |K(p - r)| / (|R(r)| + sigma) from every residual r
        // whose support covers it: a correlation with the reversed |K|.
        const auto h_rev = abs_reversed(k.horizontal);
        const auto v_rev = abs_reversed(k.vertical);
        const RealMatrix xi = correlate_cols(correlate_rows(inv, h_rev), v_rev);
        for (std::size_t i = 0; i < total.values.size(); ++i) total.values[i] += xi.values[i];
    }

    CostMap map{image.width(), image.height(), std::move(total.values), kWetCost};
    for (std::size_t i = 0; i < map.costs.size(); ++i) {
        double& v = map.costs[i];
        if (!std::isfinite(v))
            throw NumericalError("non-finite cost at row " + std::to_string(i / map.width) + ", col " +
                                 std::to_string(i % map.width));
        v = std::min(v, kWetCost);
    }
    return map;
}

}  // namespace nnid
