#include "nnid/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nnid/errors.hpp"

namespace nnid {

using nlohmann::json;

void validate_manifest(const DatasetManifest& m) {
    std::set<std::size_t> seen;
    for (const auto* set : {&m.splits.train, &m.splits.val, &m.splits.test}) {
        for (std::size_t i : *set) {
            if (i >= m.entries.size()) throw DataError("split index " + std::to_string(i) + " out of range");
            if (!seen.insert(i).second) throw DataError("entry " + std::to_string(i) + " appears in two splits");
        }
    }
    if (seen.size() != m.entries.size()) throw DataError("splits do not cover every entry of " + m.name);
    if (m.dim_policy == "fixed" && m.dim)
        for (const auto& e : m.entries)
            if (e.size != *m.dim) throw DataError("entry " + e.mother_id + " breaks the uniform size of " + m.name);
}

void to_json(json& j, const BinningSpec& s) {
    j = json{{"bin_count", s.bin_count},
             {"transform", s.transform == BinTransform::log10 ? "log10" : "linear"},
             {"lo", s.lo},
             {"hi", s.hi},
             {"wet_bin", s.wet_bin}};
}

void from_json(const json& j, BinningSpec& s) {
    s.bin_count = j.at("bin_count").get<std::size_t>();
    const auto t = j.at("transform").get<std::string>();
    if (t == "log10") s.transform = BinTransform::log10;
    else if (t == "linear") s.transform = BinTransform::linear;
    else throw DataError("unknown transform '" + t + "'");
    s.lo = j.at("lo").get<double>();
    s.hi = j.at("hi").get<double>();
    s.wet_bin = j.at("wet_bin").get<bool>();
}

void to_json(json& j, const Histogram& h) { j = json{{"spec", h.spec}, {"counts", h.counts}}; }

void from_json(const json& j, Histogram& h) {
    h = histogram_from_counts(j.at("spec").get<BinningSpec>(), j.at("counts").get<std::vector<std::uint64_t>>());
}

void to_json(json& j, const CropResult& r) {
    j = json{{"x", r.x}, {"y", r.y}, {"size", r.size}, {"distance", r.distance}, {"evaluated", r.evaluated}};
}

void to_json(json& j, const ManifestEntry& e) {
    j = json{{"mother_id", e.mother_id}, {"mother_path", e.mother_path},
             {"x", e.x},                 {"y", e.y},
             {"size", e.size},           {"distance", e.distance},
             {"cover", e.cover},         {"stego", e.stego},
             {"alpha", e.alpha},         {"seed", e.seed},
             {"flags", e.flags}};
    j["distance_recomputed"] = e.distance_recomputed ? json(*e.distance_recomputed) : json(nullptr);
    j["realized_bits"] = e.realized_bits ? json(*e.realized_bits) : json(nullptr);
}

namespace {

std::optional<double> optional_double(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

void from_json(const json& j, ManifestEntry& e) {
    e.mother_id = j.at("mother_id").get<std::string>();
    e.mother_path = j.at("mother_path").get<std::string>();
    e.x = j.at("x").get<std::size_t>();
    e.y = j.at("y").get<std::size_t>();
    e.size = j.at("size").get<std::size_t>();
    e.distance = j.at("distance").get<double>();
    e.distance_recomputed = optional_double(j, "distance_recomputed");
    e.cover = j.at("cover").get<std::string>();
    e.stego = j.at("stego").get<std::string>();
    e.alpha = j.at("alpha").get<double>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.realized_bits = optional_double(j, "realized_bits");
    e.flags = j.value("flags", std::vector<std::string>{});
}

void to_json(json& j, const DatasetManifest& m) {
    j = json{{"name", m.name},
             {"dim_policy", m.dim_policy},
             {"entries", m.entries},
             {"splits", {{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}}},
             {"global_seed", m.global_seed},
             {"tool_version", m.tool_version},
             {"search_spec", m.search_spec},
             {"stride", m.stride},
             {"skipped", m.skipped},
             {"notes", m.notes}};
    j["dim"] = m.dim ? json(*m.dim) : json(nullptr);
}

void from_json(const json& j, DatasetManifest& m) {
    m.name = j.at("name").get<std::string>();
    m.dim_policy = j.at("dim_policy").get<std::string>();
    m.dim = j.contains("dim") && !j.at("dim").is_null() ? std::optional(j.at("dim").get<std::size_t>()) : std::nullopt;
    m.entries = j.at("entries").get<std::vector<ManifestEntry>>();
    const json& s = j.at("splits");
    m.splits.train = s.at("train").get<std::vector<std::size_t>>();
    m.splits.val = s.at("val").get<std::vector<std::size_t>>();
    m.splits.test = s.at("test").get<std::vector<std::size_t>>();
    m.global_seed = j.at("global_seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.search_spec = j.at("search_spec").get<BinningSpec>();
    m.stride = j.at("stride").get<std::size_t>();
    m.skipped = j.value("skipped", std::map<std::string, std::uint64_t>{});
    m.notes = j.value("notes", std::vector<std::string>{});
}

std::string serialize_manifest(const DatasetManifest& m) { return json(m).dump(2) + "\n"; }

DatasetManifest parse_manifest(const std::string& text) {
    try {
        return json::parse(text).get<DatasetManifest>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << serialize_manifest(m);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

}  // namespace nnid
