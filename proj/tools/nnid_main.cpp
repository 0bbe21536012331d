// nnid: command-line front end for building nearly-nested image datasets.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nnid/cost_model.hpp"
#include "nnid/counter_rng.hpp"
#include "nnid/dataset_pipeline.hpp"
#include "nnid/dilated_conv.hpp"
#include "nnid/embedding.hpp"
#include "nnid/errors.hpp"
#include "nnid/histogram.hpp"
#include "nnid/manifest.hpp"
#include "nnid/payload_calibration.hpp"
#include "nnid/raw_grid.hpp"
#include "nnid/smart_crop.hpp"
#include "nnid/synthetic_corpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double scale = 1.0;
};

nnid::CostMap load_cost_map(const fs::path& path) {
    nnid::RawGrid g = nnid::read_raw_grid(path);
    return nnid::CostMap{g.width, g.height, std::move(g.values), nnid::kWetCost};
}

void save_cost_map(const nnid::CostMap& map, const fs::path& path) {
    nnid::write_raw_grid(nnid::RawGrid{map.width, map.height, map.costs}, path);
}

// "256=0.4,512=0.3204"
std::map<std::size_t, double> parse_alpha_table(const std::string& text) {
    std::map<std::size_t, double> table;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw nnid::ConfigError("alpha table items look like 256=0.4, got '" + item + "'");
        try {
            table[std::stoul(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw nnid::ConfigError("bad alpha table item '" + item + "'");
        }
    }
    return table;
}

nnid::BinningSpec binning(std::size_t bins, double lo, double hi, bool linear, bool no_wet) {
    nnid::BinningSpec s;
    s.bin_count = bins;
    s.lo = lo;
    s.hi = hi;
    s.transform = linear ? nnid::BinTransform::linear : nnid::BinTransform::log10;
    s.wet_bin = !no_wet;
    s.validate();
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nearly-nested image dataset builder"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags g;
    app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--scale", g.scale, "Scale factor for protocol dataset sizes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    // costmap
    auto* costmap = app.add_subcommand("costmap", "Compute the S-UNIWARD cost map of an image");
    std::string cm_image, cm_out;
    double cm_sigma = 1.0;
    costmap->add_option("image", cm_image)->required();
    costmap->add_option("-o,--output", cm_out)->required();
    costmap->add_option("--sigma", cm_sigma)->capture_default_str();

    // hist
    auto* hist = app.add_subcommand("hist", "Histogram of a cost map as JSON");
    std::string h_in, h_out;
    std::size_t h_bins = 256;
    double h_lo = -2, h_hi = 6;
    bool h_linear = false, h_no_wet = false;
    hist->add_option("costmap", h_in)->required();
    hist->add_option("-o,--output", h_out)->required();
    hist->add_option("--bins", h_bins)->capture_default_str();
    hist->add_option("--lo", h_lo)->capture_default_str();
    hist->add_option("--hi", h_hi)->capture_default_str();
    hist->add_flag("--linear", h_linear, "Bin raw costs instead of log10 costs");
    hist->add_flag("--no-wet-bin", h_no_wet);

    // crop
    auto* crop = app.add_subcommand("crop", "Smart crop search on a cost map");
    std::string c_in, c_out, c_image;
    std::size_t c_size = 0, c_stride = 1, c_bins = 64;
    bool c_recompute = false;
    crop->add_option("costmap", c_in)->required();
    crop->add_option("--size", c_size)->required();
    crop->add_option("--stride", c_stride)->capture_default_str();
    crop->add_option("--bins", c_bins)->capture_default_str();
    crop->add_option("-o,--output", c_out)->required();
    crop->add_option("--image", c_image, "Mother image, needed by --recompute-final");
    crop->add_flag("--recompute-final", c_recompute, "Also report the distance with costs recomputed on the crop");

    // embed
    auto* embed = app.add_subcommand("embed", "Simulate embedding into one image or a whole manifest");
    std::string e_cover, e_costmap, e_out, e_manifest, e_table;
    double e_alpha = -1;
    embed->add_option("cover", e_cover);
    embed->add_option("costmap", e_costmap);
    embed->add_option("--alpha", e_alpha, "Relative payload in bits per pixel");
    embed->add_option("--manifest", e_manifest, "Embed every entry of a dataset manifest");
    embed->add_option("--alpha-table", e_table, "Per-size payloads, e.g. 256=0.4,512=0.3204");
    embed->add_option("-o,--output", e_out);

    // calibrate
    auto* calib = app.add_subcommand("calibrate", "Dichotomous payload calibration for one dimension");
    std::string k_manifest, k_detector = "builtin", k_out;
    std::size_t k_dim = 0;
    nnid::CalibrationOptions k_opt;
    long k_timeout = 1800;
    calib->add_option("--manifest", k_manifest)->required();
    calib->add_option("--dim", k_dim)->required();
    calib->add_option("--target", k_opt.target)->capture_default_str();
    calib->add_option("--tol", k_opt.tolerance)->capture_default_str();
    calib->add_option("--max-iter", k_opt.max_iterations)->capture_default_str();
    calib->add_option("--repeats", k_opt.repeats)->capture_default_str();
    calib->add_option("--detector", k_detector, "builtin | synthetic | cmd:<template>")->capture_default_str();
    calib->add_option("--timeout", k_timeout, "External detector timeout in seconds")->capture_default_str();
    calib->add_option("-o,--output", k_out)->required();

    // build-nnid
    auto* build = app.add_subcommand("build-nnid", "Build UNI datasets from a directory of mother images");
    std::string b_mothers, b_out;
    nnid::NnidConfig b_cfg;
    std::size_t b_bins = 64;
    bool b_assemble = false;
    build->add_option("--mothers", b_mothers)->required();
    build->add_option("-o,--output", b_out)->required();
    build->add_option("--sizes", b_cfg.sizes)->delimiter(',')->capture_default_str();
    build->add_option("--stride", b_cfg.stride)->capture_default_str();
    build->add_option("--bins", b_bins, "Bins of the search histogram")->capture_default_str();
    build->add_option("--sigma", b_cfg.sigma)->capture_default_str();
    build->add_flag("--recompute-final", b_cfg.recompute_final);
    build->add_flag("--assemble", b_assemble, "Select protocol-sized splits (scaled by --scale)");

    // build-multi
    auto* multi = app.add_subcommand("build-multi", "Assemble the MULTI dataset from three UNI manifests");
    std::vector<std::string> m_inputs;
    std::string m_out;
    long m_pairs = -1;
    multi->add_option("--manifests", m_inputs)->required()->expected(3);
    multi->add_option("--pairs-per-dim", m_pairs, "Defaults to 4000 x --scale");
    multi->add_option("-o,--output", m_out)->required();

    // report
    auto* report = app.add_subcommand("report", "Same-difficulty report for a manifest");
    std::string r_manifest, r_out;
    std::size_t r_random = 20;
    report->add_option("--manifest", r_manifest)->required();
    report->add_option("--random", r_random, "Random crops per image")->capture_default_str();
    report->add_option("-o,--output", r_out);

    // dconv
    auto* dconv = app.add_subcommand("dconv", "Dilated convolution of a raw f32 grid");
    std::string d_in, d_kernel, d_out;
    std::size_t d_dilation = 1;
    dconv->add_option("--input", d_in)->required();
    dconv->add_option("--kernel", d_kernel)->required();
    dconv->add_option("--dilation", d_dilation)->required();
    dconv->add_option("-o,--output", d_out)->required();

    // synth-corpus
    auto* synth = app.add_subcommand("synth-corpus", "Write the synthetic mother corpus");
    std::string s_out;
    std::size_t s_count = 10, s_width = 2048, s_height = 3072;
    synth->add_option("-o,--output", s_out)->required();
    synth->add_option("--count", s_count)->capture_default_str();
    synth->add_option("--width", s_width)->capture_default_str();
    synth->add_option("--height", s_height)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*costmap) {
            save_cost_map(nnid::compute_cost_map(nnid::read_image(cm_image), cm_sigma), cm_out);
        } else if (*hist) {
            const auto spec = binning(h_bins, h_lo, h_hi, h_linear, h_no_wet);
            nnid::write_json(json(nnid::build_histogram(load_cost_map(h_in).costs, spec)), h_out);
        } else if (*crop) {
            nnid::CropSearchOptions opt;
            opt.stride = c_stride;
            opt.spec = binning(c_bins, -2, 6, false, false);
            opt.threads = g.threads;
            const nnid::CostMap mother = load_cost_map(c_in);
            const nnid::CropResult r = nnid::smart_crop_2(mother, c_size, opt);
            json j = r;
            if (c_recompute) {
                if (c_image.empty()) throw nnid::ConfigError("--recompute-final needs --image");
                const auto own = nnid::compute_cost_map(nnid::read_image(c_image).crop(r.x, r.y, c_size, c_size));
                j["distance_recomputed"] = nnid::kl_sym(nnid::build_histogram(mother.costs, opt.spec),
                                                        nnid::build_histogram(own.costs, opt.spec));
            }
            nnid::write_json(j, c_out);
        } else if (*embed) {
            if (!e_manifest.empty()) {
                nnid::EmbedConfig cfg;
                if (!e_table.empty()) cfg.alpha_table = parse_alpha_table(e_table);
                if (app.get_option("--seed")->count() > 0) cfg.seed = g.seed;
                cfg.threads = g.threads;
                const fs::path root = fs::path(e_manifest).parent_path();
                const auto updated = nnid::embed_dataset(nnid::read_manifest(e_manifest), root, cfg);
                nnid::write_manifest(updated, e_out.empty() ? fs::path(e_manifest) : fs::path(e_out));
            } else {
                if (e_cover.empty() || e_costmap.empty() || e_out.empty() || e_alpha < 0)
                    throw nnid::ConfigError("embed needs <cover> <costmap> --alpha F -o <stego>, or --manifest");
                const nnid::GrayImage cover = nnid::read_image(e_cover);
                const nnid::CostMap costs = load_cost_map(e_costmap);
                nnid::EmbeddingOptions opt;
                opt.threads = g.threads;
                const auto plan = e_alpha == 0.0
                                      ? nnid::empty_plan(cover.width(), cover.height())
                                      : nnid::compute_change_probabilities(
                                            costs, e_alpha * static_cast<double>(cover.size()), opt);
                nnid::write_image(nnid::simulate_embedding(cover, plan, g.seed, g.threads), e_out);
                std::cout << "realized_bits=" << plan.realized_bits << " lambda=" << plan.lambda << '\n';
            }
        } else if (*calib) {
            const fs::path root = fs::path(k_manifest).parent_path();
            const auto manifest = nnid::read_manifest(k_manifest);
            std::unique_ptr<nnid::DetectorOracle> oracle;
            if (k_detector == "synthetic") {
                oracle = std::make_unique<nnid::SyntheticDetector>();
            } else if (k_detector == "builtin") {
                oracle = std::make_unique<nnid::ResidualDetectorOracle>(
                    nnid::ProbeSet::from_manifest(manifest, root, k_dim, 1.0, g.threads), g.seed, g.threads);
            } else if (k_detector.rfind("cmd:", 0) == 0) {
                oracle = std::make_unique<nnid::ExternalCommandOracle>(
                    nnid::ProbeSet::from_manifest(manifest, root, k_dim, 1.0, g.threads), k_detector.substr(4),
                    fs::path(k_out).parent_path() / ("calibration_" + std::to_string(k_dim)),
                    std::chrono::seconds(k_timeout), g.threads);
            } else {
                throw nnid::ConfigError("unknown detector '" + k_detector + "'");
            }
            const auto result = nnid::calibrate_payload(*oracle, nnid::srl_initial_alpha(k_dim), k_opt);
            json j = result;
            j["dim"] = k_dim;
            j["target"] = k_opt.target;
            nnid::write_json(j, k_out);
            if (!result.converged) {
                std::cerr << "calibration did not converge within " << k_opt.max_iterations << " probes\n";
                return 4;
            }
        } else if (*build) {
            b_cfg.search_spec = nnid::BinningSpec::search_default();
            b_cfg.search_spec.bin_count = b_bins;
            b_cfg.global_seed = g.seed;
            b_cfg.threads = g.threads;
            for (auto m : nnid::build_nnid(b_mothers, b_out, b_cfg)) {
                if (b_assemble)
                    m = nnid::assemble_splits(m, nnid::SplitProtocol{}.scaled(g.scale),
                                              nnid::derive_seed(g.seed, m.name, 0, "assemble"));
                nnid::write_manifest(m, fs::path(b_out) / (m.name + ".json"));
                std::cout << m.name << ": " << m.entries.size() << " entries\n";
            }
        } else if (*multi) {
            const fs::path out_dir = fs::path(m_out).parent_path();
            std::vector<nnid::DatasetManifest> unis;
            for (const auto& p : m_inputs)
                unis.push_back(nnid::rebase_paths(nnid::read_manifest(p), fs::path(p).parent_path(), out_dir));
            const std::size_t pairs = m_pairs >= 0 ? static_cast<std::size_t>(m_pairs)
                                                   : nnid::SplitProtocol{4000, 6400, 1600, 0}.scaled(g.scale).pairs;
            nnid::write_manifest(nnid::build_multi(unis, pairs, g.seed), m_out);
        } else if (*report) {
            const auto rep = nnid::difficulty_report(nnid::read_manifest(r_manifest), fs::path(r_manifest).parent_path(),
                                                     r_random, g.seed, 1.0, g.threads);
            const json j = rep;
            if (r_out.empty()) std::cout << j.dump(2) << '\n';
            else nnid::write_json(j, r_out);
        } else if (*dconv) {
            const nnid::RawGrid in = nnid::read_raw_grid(d_in);
            const nnid::RawGrid ker = nnid::read_raw_grid(d_kernel);
            nnid::FeatureMap z(1, in.height, in.width);
            z.values = in.values;
            const nnid::DilatedKernel k{ker.height, ker.width, ker.values, d_dilation};
            const nnid::FeatureMap out = nnid::dilated_conv2d(z, k);
            nnid::write_raw_grid(nnid::RawGrid{out.width, out.height, out.values}, d_out);
        } else if (*synth) {
            for (const auto& p : nnid::write_synthetic_corpus(s_out, s_count, s_width, s_height, g.seed))
                std::cout << p.string() << '\n';
        }
    } catch (const nnid::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
