#include "nnid/smart_crop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nnid/errors.hpp"
#include "nnid/integral_histogram.hpp"
#include "nnid/parallel.hpp"

namespace nnid {

namespace {

void check_request(const CostMap& mother, std::size_t size, const CropSearchOptions& options) {
    options.spec.validate();
    if (size == 0) throw DimensionError("crop size must be positive");
    if (options.stride == 0) throw ConfigError("stride must be at least 1");
    if (size > mother.width || size > mother.height)
        throw DimensionError("crop size " + std::to_string(size) + " exceeds the " + std::to_string(mother.width) +
                             "x" + std::to_string(mother.height) + " mother");
}

std::vector<std::size_t> grid_positions(std::size_t extent, std::size_t size, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p + size <= extent; p += stride) out.push_back(p);
    return out;
}

struct Candidate {
    double distance = std::numeric_limits<double>::infinity();
    std::size_t y = 0;
    std::size_t x = 0;
};

// Strict less-than keeps the first minimum in row-major scan order.
void offer(Candidate& best, double d, std::size_t y, std::size_t x) {
    if (d < best.distance) best = {d, y, x};
}

// Normalized probabilities and logs for one side of the distance under one
// smoothing regime.
struct Normalized {
    std::vector<double> p;
    std::vector<double> log_p;
};

Normalized normalize(const std::vector<std::uint64_t>& counts, std::uint64_t total, double eps) {
    Normalized n{std::vector<double>(counts.size()), std::vector<double>(counts.size())};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        n.p[i] = detail::smoothed_probability(counts[i], total, eps, counts.size());
        n.log_p[i] = std::log(n.p[i]);
    }
    return n;
}

}  // namespace

CropResult smart_crop_2(const CostMap& mother, std::size_t size, const CropSearchOptions& options) {
    check_request(mother, size, options);
    const BinIndexMap bins = classify(mother, options.spec);
    const std::size_t slots = options.spec.slots();

    std::vector<std::uint64_t> mother_counts(slots, 0);
    for (auto b : bins.bins) ++mother_counts[b];
    const std::uint64_t mother_total = bins.bins.size();
    const std::uint64_t crop_total = static_cast<std::uint64_t>(size) * size;
    const double eps = detail::smoothing_epsilon(mother_total, crop_total);
    // [0]: exact regime, [1]: smoothed regime (some slot empty on one side).
    const Normalized mother_norm[2] = {normalize(mother_counts, mother_total, 0.0),
                                       normalize(mother_counts, mother_total, eps)};

    const auto ys = grid_positions(mother.height, size, options.stride);
    const auto xs = grid_positions(mother.width, size, options.stride);
    const std::size_t positions = ys.size() * xs.size();

    // Per-count lookup of the crop side pays off once there are more
    // evaluations than distinct counts.
    const bool use_table = positions * slots > crop_total + 1;
    std::vector<double> table[2][2];
    if (use_table) {
        for (int r = 0; r < 2; ++r) {
            const double e = r == 0 ? 0.0 : eps;
            table[r][0].resize(crop_total + 1);
            table[r][1].resize(crop_total + 1);
            for (std::uint64_t c = 0; c <= crop_total; ++c) {
                table[r][0][c] = detail::smoothed_probability(c, crop_total, e, slots);
                table[r][1][c] = std::log(table[r][0][c]);
            }
        }
    }

    const unsigned workers = std::max(1u, options.threads);
    const std::size_t bands = std::min<std::size_t>(workers, ys.size());
    std::vector<Candidate> band_best(bands);

    parallel_for(bands, workers, [&](std::size_t band) {
        const std::size_t first = ys.size() * band / bands;
        const std::size_t last = ys.size() * (band + 1) / bands;
        PrefixRowCursor top(bins, ys[first]);
        PrefixRowCursor bottom(bins, ys[first] + size);
        std::vector<std::uint64_t> counts(slots);
        std::vector<double> q(slots), log_q(slots);
        Candidate best;
        for (std::size_t yi = first; yi < last; ++yi) {
            const std::size_t y = ys[yi];
            while (top.row() < y) top.advance();
            while (bottom.row() < y + size) bottom.advance();
            for (std::size_t x : xs) {
                const std::uint32_t* tl = top.at(x);
                const std::uint32_t* tr = top.at(x + size);
                const std::uint32_t* bl = bottom.at(x);
                const std::uint32_t* br = bottom.at(x + size);
                bool support_differs = false;
                for (std::size_t b = 0; b < slots; ++b) {
                    counts[b] = static_cast<std::uint32_t>(br[b] - bl[b] - tr[b] + tl[b]);
                    support_differs |= (counts[b] == 0) != (mother_counts[b] == 0);
                }
                const int regime = support_differs ? 1 : 0;
                const double e = support_differs ? eps : 0.0;
                for (std::size_t b = 0; b < slots; ++b) {
                    if (use_table) {
                        q[b] = table[regime][0][counts[b]];
                        log_q[b] = table[regime][1][counts[b]];
                    } else {
                        q[b] = detail::smoothed_probability(counts[b], crop_total, e, slots);
                        log_q[b] = std::log(q[b]);
                    }
                }
                const Normalized& m = mother_norm[regime];
                offer(best, detail::kl_sym_normalized(m.p, m.log_p, q, log_q), y, x);
            }
        }
        band_best[band] = best;
    });

    Candidate best;
    for (const Candidate& c : band_best) offer(best, c.distance, c.y, c.x);
    return CropResult{best.x, best.y, size, best.distance, positions};
}

double crop_distance(const CostMap& mother, std::size_t x, std::size_t y, std::size_t size, const BinningSpec& spec) {
    if (x + size > mother.width || y + size > mother.height) throw BoundsError("crop outside the mother map");
    const Histogram whole = build_histogram(mother.costs, spec);
    const CostMap part = mother.crop(x, y, size, size);
    return kl_sym(whole, build_histogram(part.costs, spec));
}

CropResult crop_search_direct(const CostMap& mother, std::size_t size, const CropSearchOptions& options) {
    check_request(mother, size, options);
    const Histogram whole = build_histogram(mother.costs, options.spec);
    const auto ys = grid_positions(mother.height, size, options.stride);
    const auto xs = grid_positions(mother.width, size, options.stride);
    std::vector<double> values(size * size);
    Candidate best;
    for (std::size_t y : ys) {
        for (std::size_t x : xs) {
            for (std::size_t r = 0; r < size; ++r)
                std::copy_n(&mother.costs[(y + r) * mother.width + x], size, &values[r * size]);
            offer(best, kl_sym(whole, build_histogram(values, options.spec)), y, x);
        }
    }
    return CropResult{best.x, best.y, size, best.distance, ys.size() * xs.size()};
}

}  // namespace nnid
