#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnid/histogram.hpp"
#include "nnid/smart_crop.hpp"

namespace nnid {

inline constexpr const char* kToolVersion = "nnid 1.0.0";

/// One cover/stego pair. Paths are relative to the manifest's directory.
struct ManifestEntry {
    std::string mother_id;
    std::string mother_path;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t size = 0;
    double distance = 0.0;  ///< kl_sym(mother, crop) on the search binning
    std::optional<double> distance_recomputed;
    std::string cover;
    std::string stego;
    double alpha = 0.0;
    std::uint64_t seed = 0;  ///< stego seed
    std::optional<double> realized_bits;
    std::vector<std::string> flags;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Indices into entries; a pair is never split between sets.
struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    friend bool operator==(const Splits&, const Splits&) = default;
};

struct DatasetManifest {
    std::string name;
    std::string dim_policy;  ///< "fixed" or "mixed"
    std::optional<std::size_t> dim;
    std::vector<ManifestEntry> entries;
    Splits splits;
    std::uint64_t global_seed = 0;
    std::string tool_version = kToolVersion;
    BinningSpec search_spec = BinningSpec::search_default();
    std::size_t stride = 1;
    std::map<std::string, std::uint64_t> skipped;  ///< reason -> count
    std::vector<std::string> notes;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Throws DataError unless splits are disjoint, exhaustive and in range, and
/// fixed-size manifests are uniform.
void validate_manifest(const DatasetManifest& m);

void to_json(nlohmann::json& j, const BinningSpec& s);
void from_json(const nlohmann::json& j, BinningSpec& s);
void to_json(nlohmann::json& j, const Histogram& h);
void from_json(const nlohmann::json& j, Histogram& h);
void to_json(nlohmann::json& j, const CropResult& r);
void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);
void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Pretty-printed JSON with sorted keys, trailing newline.
std::string serialize_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text);

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes `j` pretty-printed with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace nnid
