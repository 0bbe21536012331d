#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnid/cost_model.hpp"
#include "nnid/gray_image.hpp"
#include "nnid/manifest.hpp"

namespace nnid {

/// Something that, given a relative payload, embeds and reports the balanced
/// cover/stego accuracy of a detector. Expected to be nondecreasing in alpha.
class DetectorOracle {
public:
    virtual ~DetectorOracle() = default;
    /// `repeat` selects an independent stego realization.
    virtual double accuracy(double alpha, int repeat) = 0;
};

/// Closed-form accuracy curve; defaults to min(0.5 + alpha, 1).
class SyntheticDetector final : public DetectorOracle {
public:
    SyntheticDetector();
    explicit SyntheticDetector(std::function<double(double)> curve);
    double accuracy(double alpha, int repeat) override;

private:
    std::function<double(double)> curve_;
};

/// Per-image features used by the built-in detector: log variance of a
/// 4-neighbour high-pass residual, mean absolute second difference and a
/// 9-bin histogram of horizontal first differences clipped to [-4, 4].
std::vector<double> residual_features(const GrayImage& image);

/// Fits a ridge-regularized linear classifier on half of the pairs (seeded,
/// pairs never split) and returns the balanced accuracy on the other half,
/// floored at 0.5. Needs at least 20 images per class.
double builtin_residual_detector(std::span<const GrayImage> covers, std::span<const GrayImage> stegos,
                                 std::uint64_t split_seed);

struct CommandOutcome {
    int exit_code = 0;
    std::string output;
};

/// Runs `command` through /bin/sh, capturing stdout. Throws
/// DetectorTimeoutError after `timeout`.
CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout);

/// Parses the last non-empty line of a detector's stdout, which must read
/// `accuracy=<float in [0, 1]>`.
double parse_accuracy_line(const std::string& output);

struct ExternalDetectorCall {
    std::string command_template;  ///< {covers}, {stegos}, {alpha}, {dim} are substituted
    std::filesystem::path work_dir;
    double alpha = 0.0;
    std::size_t dim = 0;
    std::chrono::milliseconds timeout{std::chrono::minutes(30)};
};

/// Writes the cover and stego path lists into work_dir, runs the command and
/// returns its accuracy. Nonzero exit raises DetectorError with the code.
double external_command_detector(const ExternalDetectorCall& call, std::span<const std::filesystem::path> covers,
                                 std::span<const std::filesystem::path> stegos);

/// Covers with their costs and stego seeds, re-embedded at every probe.
struct ProbeSet {
    std::vector<GrayImage> covers;
    std::vector<CostMap> costs;
    std::vector<std::uint64_t> seeds;
    std::size_t dim = 0;

    /// Entries of `manifest` whose size equals `dim`, read relative to `root`.
    static ProbeSet from_manifest(const DatasetManifest& manifest, const std::filesystem::path& root, std::size_t dim,
                                  double sigma = 1.0, unsigned threads = 1);
    std::vector<GrayImage> embed(double alpha, int repeat, unsigned threads = 1) const;
};

class ResidualDetectorOracle final : public DetectorOracle {
public:
    ResidualDetectorOracle(ProbeSet probes, std::uint64_t split_seed, unsigned threads = 1);
    double accuracy(double alpha, int repeat) override;

private:
    ProbeSet probes_;
    std::uint64_t split_seed_;
    unsigned threads_;
};

class ExternalCommandOracle final : public DetectorOracle {
public:
    ExternalCommandOracle(ProbeSet probes, std::string command_template, std::filesystem::path work_dir,
                          std::chrono::milliseconds timeout, unsigned threads = 1);
    double accuracy(double alpha, int repeat) override;

private:
    ProbeSet probes_;
    std::string template_;
    std::filesystem::path work_dir_;
    std::chrono::milliseconds timeout_;
    unsigned threads_;
};

struct CalibrationProbe {
    double alpha = 0.0;
    double accuracy = 0.0;
    std::optional<std::string> warning;
};

struct CalibrationResult {
    double alpha = 0.0;
    double achieved_accuracy = 0.0;
    int iterations = 0;
    std::vector<CalibrationProbe> history;
    bool converged = false;
};

struct CalibrationOptions {
    double target = 0.76;
    double tolerance = 0.005;
    int max_iterations = 30;
    int repeats = 1;
};

/// Square-root-law payload for a dim x dim image from 0.4 bpp at 256 x 256.
double srl_initial_alpha(std::size_t dim);

/// Dichotomous payload search. Starting at `initial_alpha`, the bracket is
/// doubled or halved until acc(lo) < target <= acc(hi), then bisected on
/// alpha; every probe counts as an iteration. Stops as soon as a probe lands
/// within tolerance. Without convergence the closest probe is returned with
/// converged = false. Throws InfeasibleTargetError if log2(3) bpp stays
/// below the target.
CalibrationResult calibrate_payload(DetectorOracle& oracle, double initial_alpha, const CalibrationOptions& options);

void to_json(nlohmann::json& j, const CalibrationResult& r);

}  // namespace nnid
