#pragma once

#include <cstddef>

#include "nnid/cost_model.hpp"
#include "nnid/histogram.hpp"

namespace nnid {

struct CropResult {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t size = 0;
    double distance = 0.0;
    std::size_t evaluated = 0;

    friend bool operator==(const CropResult&, const CropResult&) = default;
};

struct CropSearchOptions {
    std::size_t stride = 1;
    BinningSpec spec = BinningSpec::search_default();
    unsigned threads = 1;
};

/// Square crop whose cost histogram is closest (kl_sym) to the whole map's.
/// Candidates are every (x, y) on the stride grid; ties go to the smallest y,
/// then the smallest x. Rectangle histograms come from two streamed prefix
/// rows of the integral histogram, so the result does not depend on `threads`.
CropResult smart_crop_2(const CostMap& mother, std::size_t size, const CropSearchOptions& options = {});

/// Same contract as smart_crop_2, re-binning every candidate rectangle from
/// the raw costs. O(positions * size^2); meant for tests and benchmarks.
CropResult crop_search_direct(const CostMap& mother, std::size_t size, const CropSearchOptions& options = {});

/// kl_sym between the whole map and one crop, by direct binning.
double crop_distance(const CostMap& mother, std::size_t x, std::size_t y, std::size_t size, const BinningSpec& spec);

}  // namespace nnid
