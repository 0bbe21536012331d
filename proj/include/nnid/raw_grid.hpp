#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace nnid {

/// 2D grid of reals as persisted on disk: 16-byte header (magic "NNIDCST1",
/// width and height as u32 little-endian) followed by row-major f32 LE.
/// Used for cost maps, feature maps and convolution kernels alike.
struct RawGrid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;
};

inline constexpr char kRawGridMagic[8] = {'N', 'N', 'I', 'D', 'C', 'S', 'T', '1'};

void write_raw_grid(const RawGrid& grid, const std::filesystem::path& path);
RawGrid read_raw_grid(const std::filesystem::path& path);

}  // namespace nnid
