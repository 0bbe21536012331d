#include "nnid/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "nnid/counter_rng.hpp"
#include "nnid/errors.hpp"
#include "nnid/parallel.hpp"

namespace nnid {

namespace {

constexpr std::size_t kChunk = 1 << 14;

double beta_of(double lambda, double cost) noexcept {
    const double e = std::exp(-lambda * cost);
    return e / (1.0 + 2.0 * e);
}

struct EntropySum {
    const CostMap& costs;
    unsigned threads;

    double operator()(double lambda) const {
        const std::size_t n = costs.costs.size();
        const std::size_t chunks = (n + kChunk - 1) / kChunk;
        std::vector<double> partial(chunks, 0.0);
        parallel_for(chunks, threads, [&](std::size_t c) {
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            double s = 0.0;
            for (std::size_t i = c * kChunk; i < end; ++i)
                if (!costs.is_wet(i)) s += ternary_entropy(beta_of(lambda, costs.costs[i]));
            partial[c] = s;
        });
        double total = 0.0;
        for (double s : partial) total += s;
        return total;
    }
};

}  // namespace

PayloadSpec srl_payload(const PayloadSpec& base, std::size_t target_width, std::size_t target_height) {
    const double area = static_cast<double>(base.width) * static_cast<double>(base.height);
    const double target_area = static_cast<double>(target_width) * static_cast<double>(target_height);
    if (!(base.alpha > 0)) throw DomainError("square-root-law scaling needs a positive base payload");
    if (area <= 1.0 || target_area <= 1.0) throw DomainError("square-root-law scaling needs images of at least 2 pixels");
    const double k = base.alpha * std::sqrt(area) / std::log(area);
    const double alpha = area == target_area ? base.alpha : k * std::log(target_area) / std::sqrt(target_area);
    return PayloadSpec{alpha, target_width, target_height, k};
}

double ternary_capacity_bits(const CostMap& costs) noexcept {
    std::size_t usable = 0;
    for (std::size_t i = 0; i < costs.costs.size(); ++i) usable += costs.is_wet(i) ? 0 : 1;
    return kTernaryCapacity * static_cast<double>(usable);
}

double ternary_entropy(double beta) noexcept {
    if (beta <= 0.0) return 0.0;
    const double rest = 1.0 - 2.0 * beta;
    double h = -2.0 * beta * std::log2(beta);
    if (rest > 0.0) h -= rest * std::log2(rest);
    return h;
}

EmbeddingPlan empty_plan(std::size_t width, std::size_t height) {
    EmbeddingPlan plan;
    plan.width = width;
    plan.height = height;
    plan.beta.assign(width * height, 0.0);
    plan.lambda = std::numeric_limits<double>::infinity();
    return plan;
}

EmbeddingPlan compute_change_probabilities(const CostMap& costs, double target_bits, const EmbeddingOptions& options) {
    std::size_t usable = 0;
    for (std::size_t i = 0; i < costs.costs.size(); ++i) usable += costs.is_wet(i) ? 0 : 1;
    const double ceiling = kTernaryCapacity * static_cast<double>(usable);
    if (!(target_bits > 0)) throw DomainError("target payload must be positive");
    if (target_bits > ceiling) {
        std::ostringstream msg;
        msg << "payload of " << target_bits << " bits exceeds the ternary capacity of " << ceiling << " bits ("
            << usable << " non-wet pixels)";
        throw CapacityError(msg.str());
    }
    const double tol = options.tolerance >= 0 ? options.tolerance : 1e-3 * target_bits;
    const EntropySum entropy{costs, options.threads};

    // Entropy decreases in lambda; bisect on log(lambda).
    double lo = std::log(1e-8), hi = std::log(1e8);
    double lambda = 0, bits = 0;
    int iterations = 0;
    auto probe = [&](double log_lambda) {
        ++iterations;
        lambda = std::exp(log_lambda);
        bits = entropy(lambda);
        return bits;
    };
    auto fail = [&](const std::string& why) {
        std::ostringstream msg;
        msg << why << " after " << iterations << " iterations: bracket log(lambda) in [" << lo << ", " << hi
            << "], last lambda " << lambda << " gave " << bits << " bits for target " << target_bits;
        throw ConvergenceError(msg.str());
    };

    auto close_enough = [&] { return std::abs(bits - target_bits) <= tol; };
    const double step = 4 * std::log(10.0);
    // Widen the bracket until H(lo) >= target >= H(hi).
    probe(lo);
    while (bits < target_bits && !close_enough()) {
        if (iterations >= options.max_iterations || lo < -700) fail("cannot bracket the payload from below");
        hi = lo;
        lo -= step;
        probe(lo);
    }
    if (!close_enough()) {
        probe(hi);
        while (bits > target_bits && !close_enough()) {
            if (iterations >= options.max_iterations || hi > 700) fail("cannot bracket the payload from above");
            lo = hi;
            hi += step;
            probe(hi);
        }
    }
    while (!close_enough()) {
        if (iterations >= options.max_iterations) fail("bisection did not converge");
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) fail("bracket collapsed");
        if (probe(mid) > target_bits) lo = mid;
        else hi = mid;
    }

    EmbeddingPlan plan;
    plan.width = costs.width;
    plan.height = costs.height;
    plan.beta.resize(costs.costs.size());
    for (std::size_t i = 0; i < costs.costs.size(); ++i)
        plan.beta[i] = costs.is_wet(i) ? 0.0 : beta_of(lambda, costs.costs[i]);
    plan.lambda = lambda;
    plan.realized_bits = bits;
    plan.target_bits = target_bits;
    plan.iterations = iterations;
    return plan;
}

GrayImage simulate_embedding(const GrayImage& cover, const EmbeddingPlan& plan, std::uint64_t seed, unsigned threads) {
    if (plan.width != cover.width() || plan.height != cover.height() || plan.beta.size() != cover.size())
        throw DimensionError("embedding plan is " + std::to_string(plan.width) + "x" + std::to_string(plan.height) +
                             " but the cover is " + std::to_string(cover.width()) + "x" +
                             std::to_string(cover.height()));
    GrayImage stego = cover;
    const std::size_t w = cover.width();
    parallel_for(cover.height(), threads, [&](std::size_t row) {
        for (std::size_t col = 0; col < w; ++col) {
            const double beta = plan.beta[row * w + col];
            if (beta <= 0.0) continue;
            const double u = pixel_uniform(seed, static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col));
            int change = 0;
            if (u < beta) change = 1;
            else if (u >= 1.0 - beta) change = -1;
            if (change == 0) continue;
            const int v = cover(row, col);
            if (v + change > 255 || v + change < 0) change = -change;
            stego(row, col) = static_cast<std::uint8_t>(v + change);
        }
    });
    return stego;
}

}  // namespace nnid
