#include "nnid/dilated_conv.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "nnid/errors.hpp"

namespace nnid {

namespace {

void check_kernel(const DilatedKernel& k) {
    if (k.rows == 0 || k.cols == 0 || k.rows % 2 == 0 || k.cols % 2 == 0)
        throw ConfigError("dilated kernels must have odd, nonzero sizes");
    if (k.taps.size() != k.rows * k.cols) throw ConfigError("kernel tap count does not match its size");
    if (k.dilation == 0) throw ConfigError("dilation must be at least 1");
}

// Accumulates conv(z[channel], k) into out[out_channel].
void accumulate(const FeatureMap& z, std::size_t channel, const DilatedKernel& k, FeatureMap& out,
                std::size_t out_channel) {
    if (k.field_rows() > z.height || k.field_cols() > z.width)
        throw DimensionError("receptive field " + std::to_string(k.field_rows()) + "x" +
                             std::to_string(k.field_cols()) + " exceeds the " + std::to_string(z.height) + "x" +
                             std::to_string(z.width) + " input");
    const long h = static_cast<long>(z.height), w = static_cast<long>(z.width);
    const long d = static_cast<long>(k.dilation);
    const long ri = static_cast<long>(k.rows / 2), rj = static_cast<long>(k.cols / 2);
    for (long i = -ri; i <= ri; ++i) {
        for (long j = -rj; j <= rj; ++j) {
            const double tap = k.tap(static_cast<std::size_t>(i + ri), static_cast<std::size_t>(j + rj));
            if (tap == 0.0) continue;
            // out(x, y) += z(x - d i, y - d j) * tap, restricted to the valid range.
            const long sr = d * i, sc = d * j;
            const long r0 = std::max(0L, sr), r1 = std::min(h, h + sr);
            const long c0 = std::max(0L, sc), c1 = std::min(w, w + sc);
            for (long r = r0; r < r1; ++r) {
                const double* src = &z.values[(channel * z.height + static_cast<std::size_t>(r - sr)) * z.width];
                double* dst = &out.values[(out_channel * out.height + static_cast<std::size_t>(r)) * out.width];
                for (long c = c0; c < c1; ++c) dst[c] += tap * src[c - sc];
            }
        }
    }
}

}  // namespace

FeatureMap dilated_conv2d(const FeatureMap& z, const DilatedKernel& k) {
    if (z.channels != 1) throw ConfigError("dilated_conv2d expects a single-channel input");
    check_kernel(k);
    FeatureMap out(1, z.height, z.width);
    accumulate(z, 0, k, out, 0);
    return out;
}

FeatureMap conv_block(const FeatureMap& input, std::span<const DilatedFilter> filters) {
    FeatureMap out(filters.size(), input.height, input.width);
    for (std::size_t oc = 0; oc < filters.size(); ++oc) {
        const DilatedFilter& f = filters[oc];
        if (f.per_input.size() != input.channels)
            throw ConfigError("filter " + std::to_string(oc) + " has " + std::to_string(f.per_input.size()) +
                              " input kernels for " + std::to_string(input.channels) + " channels");
        for (std::size_t ic = 0; ic < input.channels; ++ic) {
            DilatedKernel k = f.per_input[ic];
            k.dilation = f.dilation;
            check_kernel(k);
            accumulate(input, ic, k, out, oc);
        }
    }
    return out;
}

void validate_inception_filters(std::span<const DilatedFilter> filters) {
    using L = InceptionLayout;
    if (filters.size() != L::channels)
        throw ConfigError("inception block needs " + std::to_string(L::channels) + " filters, got " +
                          std::to_string(filters.size()));
    std::map<std::size_t, std::size_t> per_dilation;
    for (const DilatedFilter& f : filters) {
        ++per_dilation[f.dilation];
        if (f.per_input.size() != L::channels) throw ConfigError("inception filters take 30 input channels");
        for (const DilatedKernel& k : f.per_input)
            if (k.rows != L::kernel_size || k.cols != L::kernel_size)
                throw ConfigError("inception kernels must be 5x5");
    }
    for (std::size_t d : L::dilations)
        if (per_dilation[d] != L::filters_per_dilation)
            throw ConfigError("inception block needs 10 filters at dilation " + std::to_string(d) + ", got " +
                              std::to_string(per_dilation[d]));
    if (per_dilation.size() != L::dilations.size()) throw ConfigError("inception block uses dilations 1, 2 and 4 only");
}

FeatureMap dilated_inception_block(const FeatureMap& input, std::span<const DilatedFilter> filters) {
    validate_inception_filters(filters);
    if (input.channels != InceptionLayout::channels) throw ConfigError("inception block input must have 30 channels");
    return conv_block(input, filters);
}

std::size_t parameter_count(std::span<const DilatedFilter> filters) noexcept {
    std::size_t n = 0;
    for (const DilatedFilter& f : filters)
        for (const DilatedKernel& k : f.per_input) n += k.taps.size();
    return n;
}

}  // namespace nnid
