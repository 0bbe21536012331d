#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "../support.hpp"
#include "nnid/counter_rng.hpp"
#include "nnid/embedding.hpp"
#include "nnid/errors.hpp"
#include "nnid/payload_calibration.hpp"
#include "nnid/synthetic_corpus.hpp"

using namespace nnid;
using namespace std::chrono_literals;

namespace {

ProbeSet smooth_probe_set(std::size_t count, std::size_t dim) {
    ProbeSet set;
    set.dim = dim;
    for (std::size_t i = 0; i < count; ++i) {
        set.covers.push_back(synthetic_mother(dim, dim, 100 + i));
        set.costs.push_back(compute_cost_map(set.covers.back()));
        set.seeds.push_back(derive_seed(7, "probe_" + std::to_string(i), dim, "stego"));
    }
    return set;
}

// Records every probe so tests can inspect the schedule.
class CountingDetector final : public DetectorOracle {
public:
    explicit CountingDetector(std::function<double(double)> f) : f_(std::move(f)) {}
    double accuracy(double alpha, int) override {
        alphas.push_back(alpha);
        return f_(alpha);
    }
    std::vector<double> alphas;

private:
    std::function<double(double)> f_;
};

// Noise-free linear ramps with seeded slope and offset.
ProbeSet gradient_probe_set(std::size_t count, std::size_t dim) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> slope(-1.5, 1.5), offset(60.0, 190.0);
    ProbeSet set;
    set.dim = dim;
    for (std::size_t i = 0; i < count; ++i) {
        const double sx = slope(rng), sy = slope(rng), base = offset(rng);
        GrayImage img(dim, dim);
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < dim; ++c) {
                const double v = base + sx * (static_cast<double>(c) - dim / 2.0) + sy * (static_cast<double>(r) - dim / 2.0);
                img(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        set.covers.push_back(img);
        set.costs.push_back(compute_cost_map(img));
        set.seeds.push_back(derive_seed(7, "ramp_" + std::to_string(i), dim, "stego"));
    }
    return set;
}

}  // namespace

TEST_SUITE("payload_calibration") {

TEST_CASE("initial payload follows the square-root law from 0.4 at 256") {
    CHECK(srl_initial_alpha(256) == 0.4);
    CHECK(srl_initial_alpha(512) == doctest::Approx(0.225).epsilon(1e-9));
    CHECK(srl_initial_alpha(1024) == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("synthetic detector converges to the closed-form inverse") {
    SyntheticDetector oracle;
    CalibrationOptions opt;
    opt.tolerance = 0.002;
    for (std::size_t dim : {256, 512, 1024, 2048}) {
        const CalibrationResult r = calibrate_payload(oracle, srl_initial_alpha(dim), opt);
        CHECK(r.converged);
        CHECK(std::abs(r.alpha - 0.26) <= 0.002);
        CHECK(r.iterations <= 20);
        CHECK(r.iterations == static_cast<int>(r.history.size()));
        CHECK(std::abs(r.achieved_accuracy - 0.76) <= 0.002);
    }
}

TEST_CASE("bracket expands from the seed then halves") {
    CountingDetector oracle([](double a) { return std::min(0.5 + a, 1.0); });
    CalibrationOptions opt;
    opt.tolerance = 1e-4;
    const CalibrationResult r = calibrate_payload(oracle, 0.01, opt);
    CHECK(r.converged);
    // 0.01 -> 0.02 -> ... -> 0.32 brackets 0.26, then bisection.
    CHECK(oracle.alphas[0] == 0.01);
    CHECK(oracle.alphas[5] == doctest::Approx(0.32));
    CHECK(oracle.alphas[6] == doctest::Approx(0.24));
    CHECK(std::abs(r.alpha - 0.26) <= 1e-4);
}

TEST_CASE("a target just above chance drives the payload toward zero") {
    SyntheticDetector oracle;
    CalibrationOptions opt;
    opt.target = 0.5 + 0.005;
    const CalibrationResult r = calibrate_payload(oracle, 0.4, opt);
    CHECK(r.converged);
    CHECK(r.alpha <= 0.4 / 2);
    CHECK(r.alpha < 0.011);
}

TEST_CASE("unreachable targets and exhausted budgets") {
    SyntheticDetector weak([](double a) { return 0.5 + a / 10; });
    CHECK_THROWS_AS(calibrate_payload(weak, 0.4, CalibrationOptions{}), InfeasibleTargetError);
    try {
        calibrate_payload(weak, 0.4, CalibrationOptions{});
    } catch (const ConvergenceError& e) {
        CHECK(e.exit_code() == 4);
    }

    SyntheticDetector steep([](double a) { return a < 0.3 ? 0.6 : 0.9; });
    CalibrationOptions opt;
    opt.max_iterations = 8;
    const CalibrationResult r = calibrate_payload(steep, 0.4, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 8);
    CHECK(std::abs(r.achieved_accuracy - 0.76) == doctest::Approx(0.14));

    CHECK_THROWS_AS(calibrate_payload(steep, 0.4, CalibrationOptions{0.4, 0.005, 30, 1}), ConfigError);
}

TEST_CASE("non-monotone detectors are flagged in the history") {
    SyntheticDetector bumpy([](double a) { return a > 0.15 && a < 0.25 ? 0.55 : std::min(0.5 + a, 1.0); });
    CalibrationOptions opt;
    opt.tolerance = 0.002;
    const CalibrationResult r = calibrate_payload(bumpy, 0.1, opt);
    bool warned = false;
    for (const auto& p : r.history) warned = warned || p.warning.has_value();
    CHECK(warned);
}

TEST_CASE("calibration is deterministic") {
    SyntheticDetector a, b;
    const auto ra = calibrate_payload(a, 0.4, CalibrationOptions{});
    const auto rb = calibrate_payload(b, 0.4, CalibrationOptions{});
    CHECK(ra.alpha == rb.alpha);
    CHECK(ra.history.size() == rb.history.size());
}

TEST_CASE("accuracy line parsing") {
    CHECK(parse_accuracy_line("epoch 1\naccuracy=0.76\n") == 0.76);
    CHECK(parse_accuracy_line("accuracy=1\n\n") == 1.0);
    CHECK_THROWS_AS(parse_accuracy_line("accuracy=0.7\ndone\n"), DetectorParseError);
    CHECK_THROWS_AS(parse_accuracy_line("accuracy=1.5"), DetectorParseError);
    CHECK_THROWS_AS(parse_accuracy_line("accuracy=abc"), DetectorParseError);
    CHECK_THROWS_AS(parse_accuracy_line(""), DetectorParseError);
}

TEST_CASE("external commands") {
    const auto dir = testing::scratch_dir("external");
    const std::vector<std::filesystem::path> covers{"a.pgm"}, stegos{"b.pgm"};
    SUBCASE("stub printing a fixed accuracy") {
        const ExternalDetectorCall call{"echo accuracy=0.76", dir, 0.3, 256, 10s};
        CHECK(external_command_detector(call, covers, stegos) == 0.76);
    }
    SUBCASE("placeholders are substituted") {
        const ExternalDetectorCall call{"test -f {covers} && test -f {stegos} && echo accuracy=0.{dim}", dir, 0.25, 512,
                                        10s};
        CHECK(external_command_detector(call, covers, stegos) == 0.512);
        CHECK(testing::read_file(dir / "covers.txt") == "a.pgm\n");
    }
    SUBCASE("nonzero exit surfaces the code") {
        const ExternalDetectorCall call{"echo accuracy=0.9; exit 3", dir, 0.3, 256, 10s};
        try {
            external_command_detector(call, covers, stegos);
            FAIL("expected DetectorError");
        } catch (const DetectorError& e) {
            CHECK(std::string(e.what()).find("code 3") != std::string::npos);
        }
    }
    SUBCASE("malformed output") {
        const ExternalDetectorCall call{"echo hello", dir, 0.3, 256, 10s};
        CHECK_THROWS_AS(external_command_detector(call, covers, stegos), DetectorParseError);
    }
    SUBCASE("timeout") {
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(run_command("sleep 20", 200ms), DetectorTimeoutError);
        CHECK(std::chrono::steady_clock::now() - start < 5s);
    }
}

TEST_CASE("calibration through an external stub detector") {
    const auto dir = testing::scratch_dir("external_loop");
    ProbeSet probes = smooth_probe_set(2, 32);
    ExternalCommandOracle oracle(std::move(probes),
                                 "awk -v a={alpha} 'BEGIN { v = 0.5 + a / 2; if (v > 1) v = 1; "
                                 "printf \"accuracy=%.9f\\n\", v }'",
                                 dir, 30s);
    CalibrationOptions opt;
    opt.tolerance = 0.002;
    const CalibrationResult r = calibrate_payload(oracle, srl_initial_alpha(32), opt);
    CHECK(r.converged);
    CHECK(std::abs(r.alpha - 2 * (0.76 - 0.5)) <= 2 * 0.002);
    CHECK(std::filesystem::exists(dir / "probe_0" / "stego" / "1.pgm"));
}

TEST_CASE("built-in residual detector") {
    const ProbeSet probes = smooth_probe_set(40, 64);
    SUBCASE("identical classes sit at chance") {
        const double acc = builtin_residual_detector(probes.covers, probes.covers, 3);
        CHECK(acc >= 0.5);
        CHECK(acc <= 0.55);
    }
    SUBCASE("saturated embedding on smooth ramps is obvious") {
        const ProbeSet ramps = gradient_probe_set(40, 64);
        CHECK(builtin_residual_detector(ramps.covers, ramps.embed(kTernaryCapacity, 0), 3) > 0.9);
    }
    SUBCASE("accuracy grows with payload") {
        std::vector<double> mean;
        for (double alpha : {0.05, 0.2, 0.4, 1.0}) {
            double sum = 0;
            for (int rep = 0; rep < 5; ++rep)
                sum += builtin_residual_detector(probes.covers, probes.embed(alpha, rep), 11 + rep);
            mean.push_back(sum / 5);
        }
        for (std::size_t i = 1; i < mean.size(); ++i) CHECK(mean[i] >= mean[i - 1] - 0.03);
    }
    SUBCASE("too few images") {
        const std::vector<GrayImage> few(probes.covers.begin(), probes.covers.begin() + 19);
        CHECK_THROWS_AS(builtin_residual_detector(few, few, 1), DomainError);
    }
}

}
