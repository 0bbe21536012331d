#include "nnid/payload_calibration.hpp"

#include <Eigen/Dense>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nnid/counter_rng.hpp"
#include "nnid/dataset_pipeline.hpp"
#include "nnid/embedding.hpp"
#include "nnid/errors.hpp"
#include "nnid/parallel.hpp"

namespace fs = std::filesystem;

namespace nnid {

SyntheticDetector::SyntheticDetector() : curve_([](double a) { return std::min(0.5 + a, 1.0); }) {}
SyntheticDetector::SyntheticDetector(std::function<double(double)> curve) : curve_(std::move(curve)) {}
double SyntheticDetector::accuracy(double alpha, int) { return curve_(alpha); }

std::vector<double> residual_features(const GrayImage& image) {
    const std::size_t w = image.width(), h = image.height();
    if (w < 3 || h < 3) throw DimensionError("detector features need images of at least 3x3");
    double sum = 0, sum_sq = 0, second = 0;
    std::vector<double> hist(9, 0.0);
    for (std::size_t r = 1; r + 1 < h; ++r) {
        for (std::size_t c = 1; c + 1 < w; ++c) {
            const double x = image(r, c);
            const double e = x - 0.25 * (image(r - 1, c) + image(r + 1, c) + image(r, c - 1) + image(r, c + 1));
            sum += e;
            sum_sq += e * e;
            second += std::abs(image(r, c - 1) - 2 * x + image(r, c + 1)) +
                      std::abs(image(r - 1, c) - 2 * x + image(r + 1, c));
        }
    }
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c + 1 < w; ++c) {
            const int d = std::clamp(int{image(r, c + 1)} - int{image(r, c)}, -4, 4);
            hist[static_cast<std::size_t>(d + 4)] += 1.0;
        }
    const double n = static_cast<double>((w - 2) * (h - 2));
    const double var = sum_sq / n - (sum / n) * (sum / n);
    std::vector<double> f{std::log(var + 1e-6), second / (2 * n)};
    const double pairs = static_cast<double>(h * (w - 1));
    for (double v : hist) f.push_back(v / pairs);
    return f;
}

double builtin_residual_detector(std::span<const GrayImage> covers, std::span<const GrayImage> stegos,
                                 std::uint64_t split_seed) {
    if (covers.size() != stegos.size()) throw ConfigError("detector needs as many stegos as covers");
    if (covers.size() < 20)
        throw DomainError("detector needs at least 20 images per class, got " + std::to_string(covers.size()));
    const std::size_t pairs = covers.size();
    const auto order = seeded_permutation(pairs, split_seed);
    const std::size_t train_pairs = pairs / 2;

    std::vector<std::vector<double>> cover_f(pairs), stego_f(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        cover_f[i] = residual_features(covers[i]);
        stego_f[i] = residual_features(stegos[i]);
    }
    const auto dims = static_cast<Eigen::Index>(cover_f[0].size());

    // Rows alternate cover / stego of the same pair.
    Eigen::MatrixXd X(static_cast<Eigen::Index>(2 * train_pairs), dims);
    Eigen::VectorXd y(static_cast<Eigen::Index>(2 * train_pairs));
    for (std::size_t k = 0; k < train_pairs; ++k) {
        const std::size_t p = order[k];
        for (Eigen::Index d = 0; d < dims; ++d) {
            X(static_cast<Eigen::Index>(2 * k), d) = cover_f[p][static_cast<std::size_t>(d)];
            X(static_cast<Eigen::Index>(2 * k + 1), d) = stego_f[p][static_cast<std::size_t>(d)];
        }
        y(static_cast<Eigen::Index>(2 * k)) = -1.0;
        y(static_cast<Eigen::Index>(2 * k + 1)) = 1.0;
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::RowVectorXd scale = ((X.rowwise() - mean).array().square().colwise().mean()).sqrt();
    for (Eigen::Index d = 0; d < dims; ++d)
        if (scale(d) < 1e-12) scale(d) = 1.0;
    const Eigen::MatrixXd Z = (X.rowwise() - mean).array().rowwise() / scale.array();
    const double ridge = 1e-3 * static_cast<double>(Z.rows());
    const Eigen::MatrixXd gram = Z.transpose() * Z + ridge * Eigen::MatrixXd::Identity(dims, dims);
    const Eigen::VectorXd weights = gram.ldlt().solve(Z.transpose() * y);

    auto score = [&](const std::vector<double>& f) {
        double s = 0;
        for (Eigen::Index d = 0; d < dims; ++d)
            s += weights(d) * (f[static_cast<std::size_t>(d)] - mean(d)) / scale(d);
        return s;
    };
    std::size_t true_cover = 0, true_stego = 0;
    const std::size_t test_pairs = pairs - train_pairs;
    for (std::size_t k = train_pairs; k < pairs; ++k) {
        const std::size_t p = order[k];
        true_cover += score(cover_f[p]) <= 0.0 ? 1 : 0;
        true_stego += score(stego_f[p]) > 0.0 ? 1 : 0;
    }
    const double balanced =
        0.5 * (static_cast<double>(true_cover) + static_cast<double>(true_stego)) / static_cast<double>(test_pairs);
    return std::max(0.5, balanced);
}

CommandOutcome run_command(const std::string& command, std::chrono::milliseconds timeout) {
    int fds[2];
    if (pipe(fds) != 0) throw DetectorError("cannot create pipe for detector command");
    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw DetectorError("cannot fork detector command");
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], STDOUT_FILENO);
        close(fds[0]);
        close(fds[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);
    close(fds[1]);
    CommandOutcome out;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            kill(-pid, SIGKILL);
            close(fds[0]);
            waitpid(pid, nullptr, 0);
            throw DetectorTimeoutError("detector command timed out after " + std::to_string(timeout.count()) +
                                       " ms: " + command);
        }
        pollfd pfd{fds[0], POLLIN, 0};
        const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
        if (ready < 0 && errno != EINTR) break;
        if (ready <= 0) continue;
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n <= 0) break;
        out.output.append(buf, static_cast<std::size_t>(n));
    }
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    return out;
}

double parse_accuracy_line(const std::string& output) {
    std::istringstream in(output);
    std::string line, last;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (!line.empty()) last = line;
    }
    constexpr std::string_view prefix = "accuracy=";
    double value = 0;
    if (last.rfind(prefix, 0) == 0) {
        const char* first = last.data() + prefix.size();
        const char* end = last.data() + last.size();
        const auto [ptr, ec] = std::from_chars(first, end, value);
        if (ec == std::errc() && ptr == end && value >= 0.0 && value <= 1.0) return value;
    }
    throw DetectorParseError("detector output does not end with accuracy=<float in [0,1]>; captured output:\n" +
                             output);
}

namespace {

void replace_all(std::string& s, const std::string& key, const std::string& value) {
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
        s.replace(pos, key.size(), value);
}

void write_list(const fs::path& path, std::span<const fs::path> items) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : items) out << p.string() << '\n';
}

std::string format_alpha(double alpha) {
    std::ostringstream s;
    s.precision(17);
    s << alpha;
    return s.str();
}

}  // namespace

double external_command_detector(const ExternalDetectorCall& call, std::span<const fs::path> covers,
                                 std::span<const fs::path> stegos) {
    fs::create_directories(call.work_dir);
    const fs::path cover_list = call.work_dir / "covers.txt";
    const fs::path stego_list = call.work_dir / "stegos.txt";
    write_list(cover_list, covers);
    write_list(stego_list, stegos);
    std::string command = call.command_template;
    replace_all(command, "{covers}", cover_list.string());
    replace_all(command, "{stegos}", stego_list.string());
    replace_all(command, "{alpha}", format_alpha(call.alpha));
    replace_all(command, "{dim}", std::to_string(call.dim));
    const CommandOutcome out = run_command(command, call.timeout);
    if (out.exit_code != 0)
        throw DetectorError("detector command exited with code " + std::to_string(out.exit_code) + ": " + command);
    return parse_accuracy_line(out.output);
}

ProbeSet ProbeSet::from_manifest(const DatasetManifest& manifest, const fs::path& root, std::size_t dim, double sigma,
                                 unsigned threads) {
    ProbeSet set;
    set.dim = dim;
    std::vector<const ManifestEntry*> picked;
    for (const auto& e : manifest.entries)
        if (e.size == dim) picked.push_back(&e);
    set.covers.resize(picked.size());
    set.costs.resize(picked.size());
    set.seeds.resize(picked.size());
    parallel_for(picked.size(), threads, [&](std::size_t i) {
        set.covers[i] = read_image(root / picked[i]->cover);
        set.costs[i] = compute_cost_map(set.covers[i], sigma);
        set.seeds[i] = picked[i]->seed;
    });
    return set;
}

std::vector<GrayImage> ProbeSet::embed(double alpha, int repeat, unsigned threads) const {
    std::vector<GrayImage> stegos(covers.size());
    parallel_for(covers.size(), threads, [&](std::size_t i) {
        const double bits = std::min(alpha * static_cast<double>(covers[i].size()), ternary_capacity_bits(costs[i]));
        const std::uint64_t seed = mix_seed(seeds[i], static_cast<std::uint64_t>(repeat));
        if (bits <= 0.0) {
            stegos[i] = covers[i];
            return;
        }
        stegos[i] = simulate_embedding(covers[i], compute_change_probabilities(costs[i], bits), seed);
    });
    return stegos;
}

ResidualDetectorOracle::ResidualDetectorOracle(ProbeSet probes, std::uint64_t split_seed, unsigned threads)
    : probes_(std::move(probes)), split_seed_(split_seed), threads_(threads) {}

double ResidualDetectorOracle::accuracy(double alpha, int repeat) {
    const auto stegos = probes_.embed(alpha, repeat, threads_);
    return builtin_residual_detector(probes_.covers, stegos, mix_seed(split_seed_, static_cast<std::uint64_t>(repeat)));
}

ExternalCommandOracle::ExternalCommandOracle(ProbeSet probes, std::string command_template, fs::path work_dir,
                                             std::chrono::milliseconds timeout, unsigned threads)
    : probes_(std::move(probes)), template_(std::move(command_template)), work_dir_(std::move(work_dir)),
      timeout_(timeout), threads_(threads) {}

double ExternalCommandOracle::accuracy(double alpha, int repeat) {
    const fs::path probe_dir = work_dir_ / ("probe_" + std::to_string(repeat));
    fs::create_directories(probe_dir / "cover");
    fs::create_directories(probe_dir / "stego");
    const auto stegos = probes_.embed(alpha, repeat, threads_);
    std::vector<fs::path> cover_paths, stego_paths;
    for (std::size_t i = 0; i < stegos.size(); ++i) {
        cover_paths.push_back(probe_dir / "cover" / (std::to_string(i) + ".pgm"));
        stego_paths.push_back(probe_dir / "stego" / (std::to_string(i) + ".pgm"));
        write_pgm(probes_.covers[i], cover_paths.back());
        write_pgm(stegos[i], stego_paths.back());
    }
    ExternalDetectorCall call{template_, probe_dir, alpha, probes_.dim, timeout_};
    return external_command_detector(call, cover_paths, stego_paths);
}

double srl_initial_alpha(std::size_t dim) {
    return srl_payload(PayloadSpec{0.4, 256, 256, 0.0}, dim, dim).alpha;
}

CalibrationResult calibrate_payload(DetectorOracle& oracle, double initial_alpha, const CalibrationOptions& options) {
    const double target = options.target, tol = options.tolerance;
    if (!(target > 0.5 && target < 1.0)) throw ConfigError("target accuracy must lie in (0.5, 1)");
    if (!(tol > 0)) throw ConfigError("accuracy tolerance must be positive");
    if (options.repeats < 1 || options.max_iterations < 1) throw ConfigError("repeats and max_iterations must be >= 1");

    CalibrationResult result;
    auto probe = [&](double alpha) {
        double acc = 0;
        for (int r = 0; r < options.repeats; ++r) acc += oracle.accuracy(alpha, r);
        acc /= options.repeats;
        CalibrationProbe p{alpha, acc, std::nullopt};
        for (const auto& h : result.history) {
            const bool drop = (h.alpha < alpha && h.accuracy - acc > 2 * tol) || (h.alpha > alpha && acc - h.accuracy > 2 * tol);
            if (drop) {
                std::ostringstream msg;
                msg << "non-monotone detector: accuracy " << acc << " at alpha " << alpha << " vs " << h.accuracy
                    << " at alpha " << h.alpha;
                p.warning = msg.str();
                break;
            }
        }
        result.history.push_back(p);
        ++result.iterations;
        return acc;
    };
    auto hit = [&](double acc) { return std::abs(acc - target) <= tol; };
    auto finish = [&](bool converged) {
        const CalibrationProbe* best = &result.history.front();
        if (converged) best = &result.history.back();
        else
            for (const auto& h : result.history)
                if (std::abs(h.accuracy - target) < std::abs(best->accuracy - target)) best = &h;
        result.alpha = best->alpha;
        result.achieved_accuracy = best->accuracy;
        result.converged = converged;
        return result;
    };
    auto out_of_budget = [&] { return result.iterations >= options.max_iterations; };

    double lo = 0.0, hi = kTernaryCapacity;
    double alpha = std::clamp(initial_alpha, 1e-6, kTernaryCapacity);
    double acc = probe(alpha);
    if (hit(acc)) return finish(true);

    if (acc < target) {
        // Grow until the detector reaches the target.
        for (;;) {
            lo = alpha;
            if (alpha >= kTernaryCapacity) {
                std::ostringstream msg;
                msg << "target accuracy " << target << " unreachable: " << acc << " at the ternary ceiling";
                throw InfeasibleTargetError(msg.str());
            }
            if (out_of_budget()) return finish(false);
            alpha = std::min(2 * alpha, kTernaryCapacity);
            acc = probe(alpha);
            if (hit(acc)) return finish(true);
            if (acc >= target) {
                hi = alpha;
                break;
            }
        }
    } else {
        // Shrink until the detector drops below it; vanishing payloads count
        // as chance level.
        for (;;) {
            hi = alpha;
            if (alpha / 2 < 1e-6) {
                lo = 0.0;
                break;
            }
            if (out_of_budget()) return finish(false);
            alpha /= 2;
            acc = probe(alpha);
            if (hit(acc)) return finish(true);
            if (acc < target) {
                lo = alpha;
                break;
            }
        }
    }

    while (!out_of_budget()) {
        alpha = 0.5 * (lo + hi);
        acc = probe(alpha);
        if (hit(acc)) return finish(true);
        (acc >= target ? hi : lo) = alpha;
    }
    return finish(false);
}

void to_json(nlohmann::json& j, const CalibrationResult& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& p : r.history) {
        nlohmann::json h{{"alpha", p.alpha}, {"accuracy", p.accuracy}};
        h["warning"] = p.warning ? nlohmann::json(*p.warning) : nlohmann::json(nullptr);
        history.push_back(h);
    }
    j = nlohmann::json{{"alpha", r.alpha},
                       {"achieved_accuracy", r.achieved_accuracy},
                       {"iterations", r.iterations},
                       {"converged", r.converged},
                       {"history", history}};
}

}  // namespace nnid
