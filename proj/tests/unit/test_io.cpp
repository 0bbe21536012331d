#include <doctest.h>

#include <fstream>
#include <random>

#include "../support.hpp"
#include "nnid/errors.hpp"
#include "nnid/gray_image.hpp"
#include "nnid/manifest.hpp"
#include "nnid/raw_grid.hpp"

using namespace nnid;
namespace fs = std::filesystem;

TEST_SUITE("io") {

TEST_CASE("PGM and PNG round trips") {
    const fs::path dir = testing::scratch_dir("images");
    std::mt19937_64 rng(1);
    const GrayImage img = testing::random_image(rng, 37, 21);
    write_image(img, dir / "a.pgm");
    write_image(img, dir / "a.png");
    CHECK(read_pgm(dir / "a.pgm") == img);
    CHECK(read_png(dir / "a.png") == img);
    CHECK(read_image(dir / "a.pgm") == img);
    CHECK(read_image(dir / "a.png") == img);
    CHECK(testing::read_file(dir / "a.pgm").rfind("P5", 0) == 0);
}

TEST_CASE("unreadable images") {
    const fs::path dir = testing::scratch_dir("bad_images");
    std::ofstream(dir / "junk.pgm") << "hello";
    std::ofstream(dir / "short.pgm") << "P5\n4 4\n255\nab";
    CHECK_THROWS_AS(read_image(dir / "junk.pgm"), DataError);
    CHECK_THROWS_AS(read_image(dir / "short.pgm"), DataError);
    CHECK_THROWS_AS(read_image(dir / "missing.pgm"), DataError);
}

TEST_CASE("image helpers") {
    GrayImage img(3, 2, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6});
    CHECK(img.mirrored_horizontally() == GrayImage(3, 2, std::vector<std::uint8_t>{3, 2, 1, 6, 5, 4}));
    CHECK(img.crop(1, 1, 2, 1) == GrayImage(2, 1, std::vector<std::uint8_t>{5, 6}));
    CHECK_THROWS_AS(img.crop(2, 0, 2, 1), BoundsError);
}

TEST_CASE("raw grid round trip") {
    const fs::path dir = testing::scratch_dir("grids");
    const RawGrid g{3, 2, {0.5, -1.25, 3.0, 1e10, 0.0, 7.75}};
    write_raw_grid(g, dir / "g.raw");
    const RawGrid r = read_raw_grid(dir / "g.raw");
    CHECK(r.width == 3);
    CHECK(r.height == 2);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.values[i] == doctest::Approx(g.values[i]).epsilon(1e-7));
    CHECK(fs::file_size(dir / "g.raw") == 16 + 6 * 4);
    std::ofstream(dir / "bad.raw") << "NNIDCST1xx";
    CHECK_THROWS_AS(read_raw_grid(dir / "bad.raw"), DataError);
}

TEST_CASE("manifest round trip and validation") {
    DatasetManifest m;
    m.name = "UNI_256";
    m.dim_policy = "fixed";
    m.dim = 256;
    m.global_seed = 0xFFFFFFFFFFFFFFFFull;
    for (int i = 0; i < 3; ++i) {
        ManifestEntry e;
        e.mother_id = "m" + std::to_string(i);
        e.mother_path = "../m/" + e.mother_id + ".png";
        e.x = 10 + i;
        e.y = 20;
        e.size = 256;
        e.distance = 0.1 / 3.0 * i;
        e.cover = "UNI_256/cover/" + e.mother_id + ".pgm";
        e.seed = 0x8000000000000001ull + i;
        if (i == 1) {
            e.distance_recomputed = 1.0 / 7.0;
            e.realized_bits = 12345.678901234567;
            e.flags = {"no_alpha"};
        }
        m.entries.push_back(e);
    }
    m.splits = {{0}, {2}, {1}};
    m.skipped = {{"too_small", 2}};
    m.notes = {"note"};
    const std::string text = serialize_manifest(m);
    CHECK(parse_manifest(text) == m);
    CHECK(serialize_manifest(parse_manifest(text)) == text);
    CHECK(text.back() == '\n');

    const fs::path dir = testing::scratch_dir("manifest");
    write_manifest(m, dir / "m.json");
    CHECK(read_manifest(dir / "m.json") == m);

    DatasetManifest overlap = m;
    overlap.splits.val = {0};
    CHECK_THROWS_AS(validate_manifest(overlap), DataError);
    DatasetManifest missing = m;
    missing.splits.test.clear();
    CHECK_THROWS_AS(validate_manifest(missing), DataError);
    DatasetManifest mixed = m;
    mixed.entries[1].size = 512;
    CHECK_THROWS_AS(validate_manifest(mixed), DataError);
    CHECK_THROWS_AS(parse_manifest("{ not json"), DataError);
}

}
