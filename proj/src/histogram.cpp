#include "nnid/histogram.hpp"

#include <cmath>
#include <string>

#include "nnid/cost_model.hpp"
#include "nnid/errors.hpp"

namespace nnid {

std::size_t BinningSpec::bin_of(double value) const noexcept {
    if (wet_bin && value >= kWetCost) return bin_count;
    double t = transform == BinTransform::log10 ? std::log10(value) : value;
    if (!(t >= lo)) t = lo;  // also catches -inf from log10(0) and NaN
    if (t >= hi) return bin_count - 1;
    const auto idx = static_cast<std::size_t>(std::floor((t - lo) / (hi - lo) * static_cast<double>(bin_count)));
    return idx < bin_count ? idx : bin_count - 1;
}

void BinningSpec::validate() const {
    if (bin_count < 2) throw ConfigError("bin_count must be at least 2");
    if (!(lo < hi)) throw ConfigError("binning range requires lo < hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("binning range must be finite");
    if (bin_count > 65535) throw ConfigError("bin_count above 65535 is not supported");
}

Histogram build_histogram(std::span<const double> values, const BinningSpec& spec) {
    spec.validate();
    if (values.empty()) throw DomainError("cannot build a histogram of zero values");
    Histogram h{spec, std::vector<std::uint64_t>(spec.slots(), 0), values.size()};
    for (double v : values) ++h.counts[spec.bin_of(v)];
    return h;
}

Histogram histogram_from_counts(const BinningSpec& spec, std::vector<std::uint64_t> counts) {
    if (counts.size() != spec.slots())
        throw SpecMismatchError("count vector has " + std::to_string(counts.size()) + " slots, spec needs " +
                                std::to_string(spec.slots()));
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    return Histogram{spec, std::move(counts), total};
}

double kl_sym(const Histogram& p, const Histogram& q) {
    if (!(p.spec == q.spec)) throw SpecMismatchError("kl_sym requires identical binning specs");
    if (p.total == 0 || q.total == 0) throw DomainError("kl_sym requires nonempty histograms");
    const std::size_t n = p.counts.size();
    bool support_differs = false;
    for (std::size_t i = 0; i < n; ++i)
        if ((p.counts[i] == 0) != (q.counts[i] == 0)) support_differs = true;
    const double eps = support_differs ? detail::smoothing_epsilon(p.total, q.total) : 0.0;

    std::vector<double> pn(n), lp(n), qn(n), lq(n);
    for (std::size_t i = 0; i < n; ++i) {
        pn[i] = detail::smoothed_probability(p.counts[i], p.total, eps, n);
        qn[i] = detail::smoothed_probability(q.counts[i], q.total, eps, n);
        lp[i] = std::log(pn[i]);
        lq[i] = std::log(qn[i]);
    }
    return detail::kl_sym_normalized(pn, lp, qn, lq);
}

}  // namespace nnid
