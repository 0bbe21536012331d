#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nnid/gray_image.hpp"

namespace nnid {

/// Smooth gradient with blurred noise whose amplitude varies across the
/// frame (flat areas next to textured ones), deterministic in `seed`.
GrayImage synthetic_mother(std::size_t width, std::size_t height, std::uint64_t seed);

/// Writes mother_00.pgm ... into `dir` and returns the paths.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir, std::size_t count = 10,
                                                          std::size_t width = 2048, std::size_t height = 3072,
                                                          std::uint64_t seed = 1);

}  // namespace nnid
