#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nnid/cost_model.hpp"
#include "nnid/histogram.hpp"

namespace nnid {

/// Bin slot of every pixel, computed once per pixel.
struct BinIndexMap {
    std::size_t width = 0;
    std::size_t height = 0;
    BinningSpec spec;
    std::vector<std::uint16_t> bins;
    /// Number of value-to-bin classifications performed (== width * height).
    std::uint64_t classifications = 0;

    std::uint16_t operator()(std::size_t row, std::size_t col) const noexcept { return bins[row * width + col]; }
};

BinIndexMap classify(const CostMap& costs, const BinningSpec& spec);

inline constexpr std::size_t kDefaultIntegralBudget = std::size_t{2} << 30;

/// Per-bin 2D prefix sums: sum(y, x, b) counts pixels of slot b in [0,y) x [0,x).
/// Cells are pixel-major with the slots of one corner contiguous, so a
/// rectangle query reads four contiguous runs.
class IntegralHistogram {
public:
    /// Throws ResourceError, naming the byte count, if the table would exceed
    /// `memory_budget`.
    static IntegralHistogram build(const CostMap& costs, const BinningSpec& spec,
                                   std::size_t memory_budget = kDefaultIntegralBudget);
    static IntegralHistogram build(const BinIndexMap& bins, std::size_t memory_budget = kDefaultIntegralBudget);

    static std::size_t required_bytes(std::size_t width, std::size_t height, std::size_t slots) noexcept;

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    const BinningSpec& spec() const noexcept { return spec_; }
    std::size_t slots() const noexcept { return slots_; }
    std::uint64_t classifications() const noexcept { return classifications_; }

    std::uint32_t sum(std::size_t y, std::size_t x, std::size_t b) const noexcept {
        return sums_[(y * (width_ + 1) + x) * slots_ + b];
    }

    /// Counts of the w x h rectangle at (x0, y0) into `out` (length slots()).
    void query_counts(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h,
                      std::span<std::uint64_t> out) const;
    Histogram query_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t slots_ = 0;
    BinningSpec spec_;
    std::uint64_t classifications_ = 0;
    std::vector<std::uint32_t> sums_;
};

IntegralHistogram build_integral(const CostMap& costs, const BinningSpec& spec,
                                 std::size_t memory_budget = kDefaultIntegralBudget);
Histogram query_rect(const IntegralHistogram& ih, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h);

/// One row of the integral histogram, streamed top to bottom. Two cursors a
/// crop height apart answer every rectangle query of a band while keeping
/// only 2 * (width + 1) * slots counters live.
class PrefixRowCursor {
public:
    /// Positions the cursor at prefix row `row` (0 <= row <= height).
    PrefixRowCursor(const BinIndexMap& bins, std::size_t row);

    std::size_t row() const noexcept { return row_; }
    /// Moves to row() + 1.
    void advance();
    const std::uint32_t* at(std::size_t x) const noexcept { return &sums_[x * slots_]; }

private:
    const BinIndexMap* bins_;
    std::size_t row_;
    std::size_t slots_;
    std::vector<std::uint32_t> sums_;
    std::vector<std::uint32_t> running_;
};

}  // namespace nnid
