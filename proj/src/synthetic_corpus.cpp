#include "nnid/synthetic_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nnid/counter_rng.hpp"
#include "nnid/errors.hpp"

namespace nnid {

namespace {

// In-place separable box blur of radius r with clamped borders.
void box_blur(std::vector<double>& v, std::size_t w, std::size_t h, std::size_t r) {
    std::vector<double> tmp(v.size());
    const double norm = 1.0 / static_cast<double>(2 * r + 1);
    auto clamp = [](long i, long n) { return static_cast<std::size_t>(std::clamp(i, 0L, n - 1)); };
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0;
            for (long d = -static_cast<long>(r); d <= static_cast<long>(r); ++d)
                s += v[y * w + clamp(static_cast<long>(x) + d, static_cast<long>(w))];
            tmp[y * w + x] = s * norm;
        }
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0;
            for (long d = -static_cast<long>(r); d <= static_cast<long>(r); ++d)
                s += tmp[clamp(static_cast<long>(y) + d, static_cast<long>(h)) * w + x];
            v[y * w + x] = s * norm;
        }
}

}  // namespace

GrayImage synthetic_mother(std::size_t width, std::size_t height, std::uint64_t seed) {
    if (width == 0 || height == 0) throw DimensionError("synthetic image needs positive dimensions");
    std::uint64_t state = splitmix64(seed);
    auto uniform = [&] {
        state = splitmix64(state);
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    const double W = static_cast<double>(width), H = static_cast<double>(height);

    // Gradient plus a slow wave.
    const double gx = (uniform() - 0.5) * 120.0 / W, gy = (uniform() - 0.5) * 120.0 / H;
    const double base = 90.0 + 60.0 * uniform();
    const double wave_amp = 15.0 * uniform(), wave_fx = 2.0 + 4.0 * uniform(), wave_fy = 1.0 + 3.0 * uniform();

    // Texture amplitude: a handful of Gaussian blobs over a low floor.
    struct Blob { double cx, cy, radius, weight; };
    std::vector<Blob> blobs(4 + static_cast<std::size_t>(uniform() * 4));
    for (auto& b : blobs) b = {uniform() * W, uniform() * H, (0.05 + 0.2 * uniform()) * std::min(W, H), 0.4 + 0.6 * uniform()};

    std::vector<double> noise(width * height);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            noise[y * width + x] = pixel_uniform(seed, static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x)) - 0.5;
    box_blur(noise, width, height, 1);

    std::vector<std::uint8_t> pixels(width * height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = static_cast<double>(x), fy = static_cast<double>(y);
            double amp = 0.03;
            for (const auto& b : blobs) {
                const double dx = (fx - b.cx) / b.radius, dy = (fy - b.cy) / b.radius;
                amp += b.weight * std::exp(-0.5 * (dx * dx + dy * dy));
            }
            const double v = base + gx * fx + gy * fy +
                             wave_amp * std::sin(wave_fx * 6.283185307179586 * fx / W) *
                                 std::cos(wave_fy * 6.283185307179586 * fy / H) +
                             std::min(amp, 1.2) * 300.0 * noise[y * width + x];
            pixels[y * width + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return GrayImage(width, height, std::move(pixels));
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir, std::size_t count,
                                                          std::size_t width, std::size_t height, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "mother_%02zu.pgm", i);
        paths.push_back(dir / name);
        write_pgm(synthetic_mother(width, height, mix_seed(seed, i)), paths.back());
    }
    return paths;
}

}  // namespace nnid
