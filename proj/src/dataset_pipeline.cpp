#include "nnid/dataset_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "nnid/cost_model.hpp"
#include "nnid/counter_rng.hpp"
#include "nnid/embedding.hpp"
#include "nnid/errors.hpp"
#include "nnid/integral_histogram.hpp"
#include "nnid/parallel.hpp"

namespace fs = std::filesystem;

namespace nnid {

namespace {

std::string uni_name(std::size_t size) { return "UNI_" + std::to_string(size); }

// Share of pairs per split under the reference protocol: 9600 train,
// 2400 validation and 3000 test pairs out of 15000.
Splits proportional_splits(std::size_t n, std::uint64_t seed) {
    const auto order = seeded_permutation(n, seed);
    const auto test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 3000.0 / 15000.0));
    const auto val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 2400.0 / 15000.0));
    Splits s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < test) s.test.push_back(order[i]);
        else if (i < test + val) s.val.push_back(order[i]);
        else s.train.push_back(order[i]);
    }
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    return s;
}

struct MotherOutcome {
    std::string id;
    std::string path;
    std::optional<std::string> failure;
    // Per requested size: entry or nothing when the crop does not fit.
    std::vector<std::optional<ManifestEntry>> entries;
};

Histogram histogram_of_bins(const BinIndexMap& bins, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    std::vector<std::uint64_t> counts(bins.spec.slots(), 0);
    for (std::size_t r = y0; r < y0 + h; ++r)
        for (std::size_t c = x0; c < x0 + w; ++c) ++counts[bins(r, c)];
    return histogram_from_counts(bins.spec, std::move(counts));
}

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::uint64_t state = seed;
    for (std::size_t i = n; i > 1; --i) {
        state = splitmix64(state);
        std::swap(p[i - 1], p[state % i]);
    }
    return p;
}

std::vector<DatasetManifest> build_nnid(const fs::path& mother_dir, const fs::path& out_dir, const NnidConfig& config) {
    config.search_spec.validate();
    if (config.sizes.empty()) throw ConfigError("no crop sizes requested");
    if (config.stride == 0) throw ConfigError("stride must be at least 1");
    if (!fs::is_directory(mother_dir)) throw DataError("mother directory not found: " + mother_dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(mother_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });

    for (std::size_t size : config.sizes) fs::create_directories(out_dir / uni_name(size) / "cover");

    std::vector<MotherOutcome> outcomes(files.size());
    parallel_for(files.size(), config.threads, [&](std::size_t i) {
        MotherOutcome& out = outcomes[i];
        out.id = files[i].stem().string();
        out.path = fs::relative(fs::absolute(files[i]), fs::absolute(out_dir)).generic_string();
        out.entries.resize(config.sizes.size());
        GrayImage mother;
        CostMap costs;
        try {
            mother = read_image(files[i]);
            costs = compute_cost_map(mother, config.sigma);
        } catch (const Error& e) {
            out.failure = e.what();
            return;
        }
        const Histogram whole = build_histogram(costs.costs, config.search_spec);
        for (std::size_t s = 0; s < config.sizes.size(); ++s) {
            const std::size_t size = config.sizes[s];
            if (size > mother.width() || size > mother.height()) continue;
            CropSearchOptions opt;
            opt.stride = config.stride;
            opt.spec = config.search_spec;
            const CropResult crop = smart_crop_2(costs, size, opt);

            ManifestEntry e;
            e.mother_id = out.id;
            e.mother_path = out.path;
            e.x = crop.x;
            e.y = crop.y;
            e.size = size;
            e.distance = crop.distance;
            e.cover = (fs::path(uni_name(size)) / "cover" / (out.id + ".pgm")).generic_string();
            e.seed = derive_seed(config.global_seed, out.id, size, "stego");
            const GrayImage cover = mother.crop(crop.x, crop.y, size, size);
            write_pgm(cover, out_dir / e.cover);
            if (config.recompute_final && size >= FilterBank::daubechies8().length()) {
                const CostMap own = compute_cost_map(cover, config.sigma);
                e.distance_recomputed = kl_sym(whole, build_histogram(own.costs, config.search_spec));
            }
            out.entries[s] = std::move(e);
        }
    });

    std::vector<DatasetManifest> manifests;
    for (std::size_t s = 0; s < config.sizes.size(); ++s) {
        DatasetManifest m;
        m.name = uni_name(config.sizes[s]);
        m.dim_policy = "fixed";
        m.dim = config.sizes[s];
        m.global_seed = config.global_seed;
        m.search_spec = config.search_spec;
        m.stride = config.stride;
        for (const MotherOutcome& o : outcomes) {
            if (o.failure) {
                ++m.skipped["undecodable"];
                m.notes.push_back("skipped " + o.id + ": " + *o.failure);
            } else if (!o.entries[s]) {
                ++m.skipped["too_small"];
            } else {
                m.entries.push_back(*o.entries[s]);
            }
        }
        m.splits = proportional_splits(m.entries.size(), derive_seed(config.global_seed, m.name, 0, "splits"));
        validate_manifest(m);
        manifests.push_back(std::move(m));
    }
    for (const MotherOutcome& o : outcomes)
        if (o.failure) std::cerr << "warning: skipping " << o.id << ": " << *o.failure << '\n';
    return manifests;
}

SplitProtocol SplitProtocol::scaled(double scale) const {
    if (!(scale > 0)) throw ConfigError("scale must be positive");
    auto s = [scale](std::size_t v) { return static_cast<std::size_t>(std::llround(static_cast<double>(v) * scale)); };
    return SplitProtocol{s(pairs), s(train_images), s(val_images), s(test_pairs)};
}

void SplitProtocol::validate() const {
    if (train_images % 2 != 0 || val_images % 2 != 0)
        throw ConfigError("train and validation image counts must be even (whole pairs)");
    if (train_images + val_images != 2 * pairs)
        throw ConfigError("train + validation images must equal twice the pair count");
}

DatasetManifest assemble_splits(const DatasetManifest& manifest, const SplitProtocol& protocol, std::uint64_t seed) {
    protocol.validate();
    const std::size_t need = protocol.pairs + protocol.test_pairs;
    if (manifest.entries.size() < need)
        throw CapacityError(manifest.name + " has " + std::to_string(manifest.entries.size()) + " pairs, " +
                            std::to_string(need) + " requested (short by " +
                            std::to_string(need - manifest.entries.size()) + ")");
    const auto order = seeded_permutation(manifest.entries.size(), seed);
    const std::size_t train_pairs = protocol.train_images / 2;

    // Selected entries keep their original relative order.
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<long>(need));
    std::vector<std::size_t> sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    std::map<std::size_t, std::size_t> renumber;
    DatasetManifest out = manifest;
    out.entries.clear();
    for (std::size_t old : sorted) {
        renumber[old] = out.entries.size();
        out.entries.push_back(manifest.entries[old]);
    }
    out.splits = {};
    for (std::size_t i = 0; i < need; ++i) {
        const std::size_t idx = renumber[chosen[i]];
        if (i < train_pairs) out.splits.train.push_back(idx);
        else if (i < protocol.pairs) out.splits.val.push_back(idx);
        else out.splits.test.push_back(idx);
    }
    for (auto* v : {&out.splits.train, &out.splits.val, &out.splits.test}) std::sort(v->begin(), v->end());
    validate_manifest(out);
    return out;
}

DatasetManifest build_multi(std::span<const DatasetManifest> unis, std::size_t pairs_per_dim, std::uint64_t seed) {
    if (unis.size() != 3) throw ConfigError("MULTI needs exactly three UNI manifests");
    std::set<std::size_t> dims;
    for (const auto& u : unis) {
        if (u.dim_policy != "fixed" || !u.dim) throw ConfigError(u.name + " is not a fixed-size manifest");
        dims.insert(*u.dim);
    }
    if (dims.size() != 3) throw ConfigError("MULTI needs three distinct dimensions");

    DatasetManifest out;
    out.name = "MULTI";
    out.dim_policy = "mixed";
    out.global_seed = seed;
    out.search_spec = unis[0].search_spec;
    out.stride = unis[0].stride;
    for (const auto& u : unis) {
        if (u.entries.size() < pairs_per_dim)
            throw CapacityError(u.name + " has " + std::to_string(u.entries.size()) + " pairs, " +
                                std::to_string(pairs_per_dim) + " requested");
        auto order = seeded_permutation(u.entries.size(), derive_seed(seed, u.name, *u.dim, "multi"));
        order.resize(pairs_per_dim);
        std::sort(order.begin(), order.end());
        for (std::size_t i : order) out.entries.push_back(u.entries[i]);
        out.notes.push_back(std::to_string(pairs_per_dim) + " pairs from " + u.name);
    }
    // 19200 / 4800 images at full scale: an 80/20 split of pairs.
    const std::size_t total = out.entries.size();
    const auto train = static_cast<std::size_t>(std::llround(static_cast<double>(total) * 0.8));
    const auto order = seeded_permutation(total, derive_seed(seed, "MULTI", 0, "splits"));
    for (std::size_t i = 0; i < total; ++i) (i < train ? out.splits.train : out.splits.val).push_back(order[i]);
    std::sort(out.splits.train.begin(), out.splits.train.end());
    std::sort(out.splits.val.begin(), out.splits.val.end());
    validate_manifest(out);
    return out;
}

DatasetManifest rebase_paths(DatasetManifest m, const fs::path& from, const fs::path& to) {
    auto absolute = [](const fs::path& dir) { return fs::absolute(dir.empty() ? fs::path(".") : dir); };
    const fs::path abs_from = absolute(from), abs_to = absolute(to);
    auto rebase = [&](std::string& p) {
        if (p.empty()) return;
        p = fs::path(p).is_absolute() ? p : fs::relative(abs_from / p, abs_to).generic_string();
    };
    for (auto& e : m.entries) {
        rebase(e.mother_path);
        rebase(e.cover);
        rebase(e.stego);
    }
    return m;
}

std::map<std::size_t, double> reference_alpha_table() { return {{256, 0.4}, {512, 0.3204}, {1024, 0.28895}}; }

DatasetManifest embed_dataset(const DatasetManifest& manifest, const fs::path& root, const EmbedConfig& config) {
    DatasetManifest out = manifest;
    const std::uint64_t seed = config.seed.value_or(manifest.global_seed);
    if (config.seed) out.global_seed = *config.seed;
    parallel_for(out.entries.size(), config.threads, [&](std::size_t i) {
        ManifestEntry& e = out.entries[i];
        std::erase_if(e.flags, [](const std::string& f) { return f == "no_alpha" || f == "infeasible_alpha"; });
        e.seed = derive_seed(seed, e.mother_id, e.size, "stego");
        const auto it = config.alpha_table.find(e.size);
        if (it == config.alpha_table.end()) {
            e.flags.push_back("no_alpha");
            return;
        }
        e.alpha = it->second;
        const GrayImage cover = read_image(root / e.cover);
        const fs::path cover_path(e.cover);
        e.stego = (cover_path.parent_path().parent_path() / "stego" / cover_path.filename()).generic_string();
        EmbeddingPlan plan;
        if (e.alpha == 0.0) {
            plan = empty_plan(cover.width(), cover.height());
        } else {
            try {
                const CostMap costs = compute_cost_map(cover, config.sigma);
                plan = compute_change_probabilities(costs, e.alpha * static_cast<double>(cover.size()));
            } catch (const CapacityError&) {
                e.flags.push_back("infeasible_alpha");
                e.stego.clear();
                e.realized_bits.reset();
                return;
            }
        }
        e.realized_bits = plan.realized_bits;
        fs::create_directories((root / e.stego).parent_path());
        write_pgm(simulate_embedding(cover, plan, e.seed), root / e.stego);
    });
    return out;
}

DifficultyReport difficulty_report(const DatasetManifest& manifest, const fs::path& root, std::size_t random_crops,
                                   std::uint64_t seed, double sigma, unsigned threads) {
    struct PerEntry { double smart = 0, center = 0, random = 0; };
    std::vector<PerEntry> rows(manifest.entries.size());
    const BinningSpec& spec = manifest.search_spec;
    parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
        const ManifestEntry& e = manifest.entries[i];
        const GrayImage mother = read_image(root / e.mother_path);
        const BinIndexMap bins = classify(compute_cost_map(mother, sigma), spec);
        const Histogram whole = histogram_of_bins(bins, 0, 0, bins.width, bins.height);
        auto dist = [&](std::size_t x, std::size_t y) { return kl_sym(whole, histogram_of_bins(bins, x, y, e.size, e.size)); };
        PerEntry& r = rows[i];
        r.smart = dist(e.x, e.y);
        r.center = dist((bins.width - e.size) / 2, (bins.height - e.size) / 2);
        double sum = 0;
        for (std::size_t k = 0; k < random_crops; ++k) {
            const std::uint64_t s = derive_seed(seed, e.mother_id, e.size, "random_crop_" + std::to_string(k));
            const auto x = static_cast<std::size_t>(pixel_uniform(s, 0, 0) * static_cast<double>(bins.width - e.size + 1));
            const auto y = static_cast<std::size_t>(pixel_uniform(s, 0, 1) * static_cast<double>(bins.height - e.size + 1));
            sum += dist(x, y);
        }
        r.random = random_crops ? sum / static_cast<double>(random_crops) : 0.0;
    });
    DifficultyReport rep;
    rep.name = manifest.name;
    rep.images = rows.size();
    rep.random_per_image = random_crops;
    for (const auto& r : rows) {
        rep.mean_smart += r.smart;
        rep.mean_center += r.center;
        rep.mean_random += r.random;
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        rep.mean_smart /= n;
        rep.mean_center /= n;
        rep.mean_random /= n;
    }
    return rep;
}

void to_json(nlohmann::json& j, const DifficultyReport& r) {
    j = nlohmann::json{{"name", r.name},
                       {"images", r.images},
                       {"mean_kl_smart_crop", r.mean_smart},
                       {"mean_kl_center_crop", r.mean_center},
                       {"mean_kl_random_crops", r.mean_random},
                       {"random_crops_per_image", r.random_per_image}};
}

}  // namespace nnid
