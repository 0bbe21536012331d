#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nnid {

enum class BinTransform { linear, log10 };

/// Fixed histogram layout. Values are transformed, clamped to [lo, hi] and
/// assigned to half-open bins; the last bin is closed. With wet_bin set,
/// values at or above kWetCost go to an extra final slot.
struct BinningSpec {
    std::size_t bin_count = 256;
    BinTransform transform = BinTransform::log10;
    double lo = -2.0;
    double hi = 6.0;
    bool wet_bin = true;

    /// Reduced layout used while sweeping crop positions.
    static BinningSpec search_default() {
        BinningSpec s;
        s.bin_count = 64;
        return s;
    }

    /// Number of count slots, including the wet slot when enabled.
    std::size_t slots() const noexcept { return bin_count + (wet_bin ? 1 : 0); }
    std::size_t bin_of(double value) const noexcept;
    /// Throws ConfigError unless lo < hi and bin_count >= 2.
    void validate() const;

    friend bool operator==(const BinningSpec&, const BinningSpec&) = default;
};

struct Histogram {
    BinningSpec spec;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    friend bool operator==(const Histogram&, const Histogram&) = default;
};

Histogram build_histogram(std::span<const double> values, const BinningSpec& spec);

/// Histogram from precomputed counts (length spec.slots()).
Histogram histogram_from_counts(const BinningSpec& spec, std::vector<std::uint64_t> counts);

/// Symmetrized Kullback-Leibler distance in nats between the normalized
/// histograms. When some bin is empty on exactly one side, both sides are
/// smoothed with eps = 1 / (10 * max(P.total, Q.total)) and renormalized;
/// bins empty on both sides contribute nothing. The result is symmetric
/// bit-for-bit.
double kl_sym(const Histogram& p, const Histogram& q);

namespace detail {

/// (count / total + eps) / (1 + slots * eps)
inline double smoothed_probability(std::uint64_t count, std::uint64_t total, double eps,
                                   std::size_t slots) noexcept {
    return (static_cast<double>(count) / static_cast<double>(total) + eps) /
           (1.0 + static_cast<double>(slots) * eps);
}

inline double smoothing_epsilon(std::uint64_t total_p, std::uint64_t total_q) noexcept {
    return 1.0 / (10.0 * static_cast<double>(total_p > total_q ? total_p : total_q));
}

/// sum p (log p - log q) + sum q (log q - log p), skipping slots where both
/// probabilities are zero. Shared by kl_sym and the crop search so that both
/// produce identical bits.
inline double kl_sym_normalized(std::span<const double> p, std::span<const double> log_p,
                                std::span<const double> q, std::span<const double> log_q) noexcept {
    double forward = 0.0;
    double backward = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0 && q[i] == 0.0) continue;
        forward += p[i] * (log_p[i] - log_q[i]);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0 && q[i] == 0.0) continue;
        backward += q[i] * (log_q[i] - log_p[i]);
    }
    const double d = forward + backward;
    return d > 0.0 ? d : 0.0;
}

}  // namespace detail

}  // namespace nnid
