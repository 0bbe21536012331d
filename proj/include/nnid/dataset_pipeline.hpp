#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nnid/manifest.hpp"
#include "nnid/smart_crop.hpp"

namespace nnid {

struct NnidConfig {
    std::vector<std::size_t> sizes = {256, 512, 1024, 2048};
    std::size_t stride = 1;
    BinningSpec search_spec = BinningSpec::search_default();
    double sigma = 1.0;
    std::uint64_t global_seed = 0;
    unsigned threads = 1;
    /// Also recompute costs on the cropped pixels and record that distance.
    bool recompute_final = false;
};

/// Smart-crops every decodable image of `mother_dir` (sorted by file name)
/// at each requested size, writes covers under out_dir/UNI_<size>/cover and
/// returns one manifest per size with entry and mother paths relative to
/// out_dir.
/// Splits are a seeded proportional partition (64/16/20 train/val/test).
std::vector<DatasetManifest> build_nnid(const std::filesystem::path& mother_dir, const std::filesystem::path& out_dir,
                                        const NnidConfig& config);

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Split counts of the training protocol: `pairs` cover/stego pairs shared
/// between train and validation images, plus `test_pairs` held out.
struct SplitProtocol {
    std::size_t pairs = 12000;
    std::size_t train_images = 19200;
    std::size_t val_images = 4800;
    std::size_t test_pairs = 3000;

    /// Every count multiplied by `scale` and rounded.
    SplitProtocol scaled(double scale) const;
    void validate() const;
};

/// Seeded selection of pairs + test_pairs entries, split so that a cover and
/// its stego always land in the same set. Throws CapacityError on shortfall.
DatasetManifest assemble_splits(const DatasetManifest& manifest, const SplitProtocol& protocol, std::uint64_t seed);

/// Seeded pick of `pairs_per_dim` pairs from each of three fixed-size
/// manifests, split 80/20 into train/validation. All inputs must share one
/// root directory.
DatasetManifest build_multi(std::span<const DatasetManifest> unis, std::size_t pairs_per_dim, std::uint64_t seed);

/// Rewrites entry mother/cover/stego paths from being relative to `from` to being
/// relative to `to`.
DatasetManifest rebase_paths(DatasetManifest m, const std::filesystem::path& from, const std::filesystem::path& to);

/// Relative payloads per crop size calibrated at 76% accuracy.
std::map<std::size_t, double> reference_alpha_table();

struct EmbedConfig {
    std::map<std::size_t, double> alpha_table = reference_alpha_table();
    std::optional<std::uint64_t> seed;  ///< overrides the manifest's global seed
    double sigma = 1.0;
    unsigned threads = 1;
};

/// Embeds every entry at its size's payload and writes stegos next to the
/// covers (.../stego/<id>.pgm). Entries whose payload is missing or
/// infeasible are flagged and left without a stego.
DatasetManifest embed_dataset(const DatasetManifest& manifest, const std::filesystem::path& root,
                              const EmbedConfig& config);

struct DifficultyReport {
    std::string name;
    std::size_t images = 0;
    double mean_smart = 0.0;
    double mean_center = 0.0;
    double mean_random = 0.0;
    std::size_t random_per_image = 0;
};

/// kl_sym between each mother's cost histogram and its smart crop, its
/// center crop and `random_crops` seeded random crops, averaged over entries.
/// Mother paths are resolved against `root`.
DifficultyReport difficulty_report(const DatasetManifest& manifest, const std::filesystem::path& root,
                                   std::size_t random_crops, std::uint64_t seed, double sigma = 1.0,
                                   unsigned threads = 1);

void to_json(nlohmann::json& j, const DifficultyReport& r);

}  // namespace nnid
