#include "nnid/integral_histogram.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "nnid/errors.hpp"

namespace nnid {

namespace {

void check_counter_range(std::size_t width, std::size_t height) {
    if (static_cast<unsigned long long>(width) * height > std::numeric_limits<std::uint32_t>::max())
        throw ResourceError("image has more pixels than a 32-bit counter can hold");
}

}  // namespace

BinIndexMap classify(const CostMap& costs, const BinningSpec& spec) {
    spec.validate();
    if (costs.costs.empty()) throw DomainError("cannot classify an empty cost map");
    BinIndexMap map{costs.width, costs.height, spec, std::vector<std::uint16_t>(costs.costs.size()), 0};
    for (std::size_t i = 0; i < costs.costs.size(); ++i) {
        map.bins[i] = static_cast<std::uint16_t>(spec.bin_of(costs.costs[i]));
        ++map.classifications;
    }
    return map;
}

std::size_t IntegralHistogram::required_bytes(std::size_t width, std::size_t height, std::size_t slots) noexcept {
    return (width + 1) * (height + 1) * slots * sizeof(std::uint32_t);
}

IntegralHistogram IntegralHistogram::build(const CostMap& costs, const BinningSpec& spec, std::size_t memory_budget) {
    spec.validate();
    if (costs.costs.empty()) throw DomainError("cannot build an integral histogram of an empty cost map");
    const std::size_t need = required_bytes(costs.width, costs.height, spec.slots());
    if (need > memory_budget)
        throw ResourceError("integral histogram needs " + std::to_string(need) + " bytes, budget is " +
                            std::to_string(memory_budget));
    return build(classify(costs, spec), memory_budget);
}

IntegralHistogram IntegralHistogram::build(const BinIndexMap& bins, std::size_t memory_budget) {
    check_counter_range(bins.width, bins.height);
    const std::size_t slots = bins.spec.slots();
    const std::size_t need = required_bytes(bins.width, bins.height, slots);
    if (need > memory_budget)
        throw ResourceError("integral histogram needs " + std::to_string(need) + " bytes, budget is " +
                            std::to_string(memory_budget));

    IntegralHistogram ih;
    ih.width_ = bins.width;
    ih.height_ = bins.height;
    ih.slots_ = slots;
    ih.spec_ = bins.spec;
    ih.classifications_ = bins.classifications;
    ih.sums_.assign((bins.width + 1) * (bins.height + 1) * slots, 0);

    const std::size_t row_stride = (bins.width + 1) * slots;
    std::vector<std::uint32_t> running(slots);
    for (std::size_t y = 0; y < bins.height; ++y) {
        // sums[y+1][x+1] = sums[y][x+1] + (row-y prefix up to x), which is the
        // usual four-term recurrence with the row prefix kept in `running`.
        std::fill(running.begin(), running.end(), 0);
        const std::uint32_t* above = &ih.sums_[y * row_stride];
        std::uint32_t* below = &ih.sums_[(y + 1) * row_stride];
        for (std::size_t x = 0; x < bins.width; ++x) {
            ++running[bins(y, x)];
            const std::uint32_t* a = above + (x + 1) * slots;
            std::uint32_t* d = below + (x + 1) * slots;
            for (std::size_t b = 0; b < slots; ++b) d[b] = a[b] + running[b];
        }
    }
    return ih;
}

void IntegralHistogram::query_counts(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h,
                                     std::span<std::uint64_t> out) const {
    if (w == 0 || h == 0 || x0 + w > width_ || y0 + h > height_)
        throw BoundsError("rectangle (" + std::to_string(x0) + ", " + std::to_string(y0) + ", " + std::to_string(w) +
                          "x" + std::to_string(h) + ") is outside the " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " map");
    if (out.size() != slots_) throw SpecMismatchError("output span has the wrong number of slots");
    const std::uint32_t* tl = &sums_[(y0 * (width_ + 1) + x0) * slots_];
    const std::uint32_t* tr = &sums_[(y0 * (width_ + 1) + x0 + w) * slots_];
    const std::uint32_t* bl = &sums_[((y0 + h) * (width_ + 1) + x0) * slots_];
    const std::uint32_t* br = &sums_[((y0 + h) * (width_ + 1) + x0 + w) * slots_];
    for (std::size_t b = 0; b < slots_; ++b) out[b] = br[b] - bl[b] - tr[b] + tl[b];
}

Histogram IntegralHistogram::query_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
    std::vector<std::uint64_t> counts(slots_);
    query_counts(x0, y0, w, h, counts);
    return Histogram{spec_, std::move(counts), static_cast<std::uint64_t>(w) * h};
}

IntegralHistogram build_integral(const CostMap& costs, const BinningSpec& spec, std::size_t memory_budget) {
    return IntegralHistogram::build(costs, spec, memory_budget);
}

Histogram query_rect(const IntegralHistogram& ih, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    return ih.query_rect(x0, y0, w, h);
}

PrefixRowCursor::PrefixRowCursor(const BinIndexMap& bins, std::size_t row)
    : bins_(&bins), row_(row), slots_(bins.spec.slots()), sums_((bins.width + 1) * slots_, 0), running_(slots_) {
    if (row > bins.height) throw BoundsError("cursor row beyond map height");
    check_counter_range(bins.width, bins.height);
    // Column histograms of rows [0, row), then a horizontal prefix.
    std::vector<std::uint32_t> columns(bins.width * slots_, 0);
    for (std::size_t y = 0; y < row; ++y)
        for (std::size_t x = 0; x < bins.width; ++x) ++columns[x * slots_ + bins(y, x)];
    for (std::size_t x = 0; x < bins.width; ++x)
        for (std::size_t b = 0; b < slots_; ++b)
            sums_[(x + 1) * slots_ + b] = sums_[x * slots_ + b] + columns[x * slots_ + b];
}

void PrefixRowCursor::advance() {
    if (row_ >= bins_->height) throw BoundsError("cursor already at the last prefix row");
    std::fill(running_.begin(), running_.end(), 0);
    for (std::size_t x = 0; x < bins_->width; ++x) {
        ++running_[(*bins_)(row_, x)];
        std::uint32_t* d = &sums_[(x + 1) * slots_];
        for (std::size_t b = 0; b < slots_; ++b) d[b] += running_[b];
    }
    ++row_;
}

}  // namespace nnid
