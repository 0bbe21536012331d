#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nnid/cost_model.hpp"
#include "nnid/gray_image.hpp"

namespace nnid {

/// log2(3): the ternary embedding ceiling in bits per pixel.
inline constexpr double kTernaryCapacity = 1.5849625007211562;

struct PayloadSpec {
    double alpha = 0.0;  ///< bits per pixel
    std::size_t width = 0;
    std::size_t height = 0;
    double k = 0.0;  ///< square-root-law constant

    double total_bits() const noexcept { return alpha * static_cast<double>(width) * static_cast<double>(height); }
};

/// Relative payload that keeps alpha * wh proportional to sqrt(wh) * ln(wh):
/// k = alpha * sqrt(wh) / ln(wh), alpha' = k * ln(w'h') / sqrt(w'h').
/// The result carries k. Same area returns base.alpha unchanged.
PayloadSpec srl_payload(const PayloadSpec& base, std::size_t target_width, std::size_t target_height);

/// log2(3) times the number of non-wet pixels.
double ternary_capacity_bits(const CostMap& costs) noexcept;

/// Ternary entropy in bits of a pixel changed by +1 and by -1 with
/// probability beta each.
double ternary_entropy(double beta) noexcept;

struct EmbeddingPlan {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> beta;  ///< P(+1) = P(-1) = beta(i, j), in [0, 1/3]
    double lambda = 0.0;
    double realized_bits = 0.0;
    double target_bits = 0.0;
    int iterations = 0;
};

struct EmbeddingOptions {
    /// Absolute tolerance in bits; negative means 1e-3 * target_bits.
    double tolerance = -1.0;
    int max_iterations = 200;
    unsigned threads = 1;
};

/// Payload-limited sender: beta = exp(-lambda rho) / (1 + 2 exp(-lambda rho)),
/// with lambda found by bisection on log(lambda) so the entropy sum hits the
/// target. Wet pixels get beta = 0. The entropy sum is reduced over
/// fixed-size chunks, so the result is independent of `threads`.
EmbeddingPlan compute_change_probabilities(const CostMap& costs, double target_bits,
                                           const EmbeddingOptions& options = {});

/// Plan with beta = 0 everywhere (zero payload).
EmbeddingPlan empty_plan(std::size_t width, std::size_t height);

/// Each pixel draws u from Philox keyed by (seed, row, col): +1 if u < beta,
/// -1 if u >= 1 - beta. A change that would leave [0, 255] is applied in the
/// opposite direction.
GrayImage simulate_embedding(const GrayImage& cover, const EmbeddingPlan& plan, std::uint64_t seed,
                             unsigned threads = 1);

}  // namespace nnid
