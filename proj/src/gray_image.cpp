#include "nnid/gray_image.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "nnid/errors.hpp"

namespace nnid {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width * height)
        throw DimensionError("pixel buffer size " + std::to_string(pixels_.size()) + " does not match " +
                             std::to_string(width) + "x" + std::to_string(height));
}

GrayImage GrayImage::crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
    if (x0 + w > width_ || y0 + h > height_)
        throw BoundsError("crop rectangle exceeds image bounds");
    GrayImage out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(r, c) = (*this)(y0 + r, x0 + c);
    return out;
}

GrayImage GrayImage::mirrored_horizontally() const {
    GrayImage out(width_, height_);
    for (std::size_t r = 0; r < height_; ++r)
        for (std::size_t c = 0; c < width_; ++c) out(r, c) = (*this)(r, width_ - 1 - c);
    return out;
}

namespace {

// Reads the next whitespace-separated PGM header token, skipping comments.
std::string next_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

std::size_t parse_header_number(std::istream& in, const std::filesystem::path& path) {
    const std::string tok = next_token(in);
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw DataError("malformed PGM header in " + path.string());
    }
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    if (next_token(in) != "P5") throw DataError("not a binary PGM (P5): " + path.string());
    const std::size_t width = parse_header_number(in, path);
    const std::size_t height = parse_header_number(in, path);
    const std::size_t maxval = parse_header_number(in, path);
    if (maxval != 255) throw DataError("only 8-bit PGM is supported: " + path.string());
    if (width == 0 || height == 0) throw DataError("empty PGM: " + path.string());
    std::vector<std::uint8_t> pixels(width * height);
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw DataError("truncated PGM: " + path.string());
    return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels().data()), static_cast<std::streamsize>(image.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
    // Only genuine single-channel 8-bit inputs are accepted; colour would need
    // a conversion policy that is out of scope here.
    if ((img.format & PNG_FORMAT_FLAG_COLOR) != 0) {
        png_image_free(&img);
        throw DataError("PNG is not grayscale: " + path.string());
    }
    img.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr))
        throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
    return GrayImage(img.width, img.height, std::move(pixels));
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels().data(), 0, nullptr))
        throw DataError("cannot write PNG " + path.string() + ": " + img.message);
}

GrayImage read_image(const std::filesystem::path& path) {
    std::array<unsigned char, 8> magic{};
    {
        FilePtr f(std::fopen(path.c_str(), "rb"));
        if (!f) throw DataError("cannot open " + path.string());
        if (std::fread(magic.data(), 1, magic.size(), f.get()) < 2)
            throw DataError("file too short to be an image: " + path.string());
    }
    if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
    if (png_sig_cmp(magic.data(), 0, magic.size()) == 0) return read_png(path);
    throw DataError("unrecognised image format: " + path.string());
}

void write_image(const GrayImage& image, const std::filesystem::path& path) {
    if (path.extension() == ".png")
        write_png(image, path);
    else
        write_pgm(image, path);
}

}  // namespace nnid
