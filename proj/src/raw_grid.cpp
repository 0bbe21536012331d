#include "nnid/raw_grid.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "nnid/errors.hpp"

namespace nnid {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
}

}  // namespace

void write_raw_grid(const RawGrid& grid, const std::filesystem::path& path) {
    if (grid.values.size() != grid.width * grid.height)
        throw DimensionError("grid value count does not match its dimensions");
    if (grid.width > std::numeric_limits<std::uint32_t>::max() ||
        grid.height > std::numeric_limits<std::uint32_t>::max())
        throw DimensionError("grid too large for a u32 header");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kRawGridMagic, sizeof kRawGridMagic);
    put_u32(out, static_cast<std::uint32_t>(grid.width));
    put_u32(out, static_cast<std::uint32_t>(grid.height));
    for (double v : grid.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    if (!out) throw DataError("write failed: " + path.string());
}

RawGrid read_raw_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    unsigned char header[16];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (in.gcount() != sizeof header || std::memcmp(header, kRawGridMagic, 8) != 0)
        throw DataError("not an NNIDCST1 grid: " + path.string());
    RawGrid grid;
    grid.width = get_u32(header + 8);
    grid.height = get_u32(header + 12);
    const std::size_t n = grid.width * grid.height;
    std::vector<unsigned char> payload(n * 4);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(payload.size()))
        throw DataError("truncated grid payload: " + path.string());
    grid.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) grid.values[i] = std::bit_cast<float>(get_u32(&payload[4 * i]));
    return grid;
}

}  // namespace nnid
