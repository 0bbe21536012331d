#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nnid {

/// 8-bit grayscale image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
    GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t operator()(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width_ + col]; }
    std::uint8_t& operator()(std::size_t row, std::size_t col) noexcept { return pixels_[row * width_ + col]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    /// Copy of the w x h rectangle with top-left corner (x0, y0).
    GrayImage crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const;
    GrayImage mirrored_horizontally() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Binary PGM (P5, maxval 255) and 8-bit grayscale PNG.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& image, const std::filesystem::path& path);

/// Dispatches on the file signature; throws DataError for anything else.
GrayImage read_image(const std::filesystem::path& path);
/// Writes PNG for a ".png" extension, PGM otherwise.
void write_image(const GrayImage& image, const std::filesystem::path& path);

}  // namespace nnid
