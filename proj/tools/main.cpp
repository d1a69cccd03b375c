// cavisim command-line tool: cavity simulation on preoperative volumes plus
// the evaluation statistics (Dice, shape-based consensus, rank tests).

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cavisim/cavisim.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1; // bad arguments, configs, mismatched grids
constexpr int kExitRuntime = 2;    // unreadable/corrupt data, degenerate draws, I/O

std::string strip_nii_suffix(std::string name) {
    for (const char* suffix : {".nii.gz", ".nii"}) {
        const std::size_t len = std::string(suffix).size();
        if (name.size() > len && name.compare(name.size() - len, len, suffix) == 0)
            return name.substr(0, name.size() - len);
    }
    return name;
}

std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw cavisim::config_error(flag + " expects LO:HI");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw cavisim::config_error(flag + " expects numeric LO:HI, got '" + text + "'");
    }
}

cavisim::VolumeMode parse_volume_mode(const std::string& text) {
    if (text == "paper")
        return cavisim::VolumeMode::paper;
    if (text == "exact-volume")
        return cavisim::VolumeMode::exact_volume;
    throw cavisim::config_error("volume mode must be 'paper' or 'exact-volume'");
}

void write_text_atomic(const std::string& path, const std::string& text) {
    cavisim::atomic_write(path, [&](const std::string& tmp) {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw cavisim::io_error("cannot open '" + tmp + "' for writing");
        out << text;
        if (!out)
            throw cavisim::io_error("write failed for '" + tmp + "'");
    });
}

std::vector<fs::path> list_volume_files(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw cavisim::io_error("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        const std::string name = entry.path().filename().string();
        if (name != strip_nii_suffix(name))
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
    std::string image, parcellation, labelmap, output_dir;
    std::uint64_t seed = 0;
    int draws = 1;
    int workers = 1;
    std::vector<double> volumes;
    std::string volume_log_range;
    std::string lambda_range;
    std::string sigma_range;
    int frequency = 16;
    int octaves = 4;
    double persistence = 0.5;
    double noise_scale = 3.0;
    std::string volume_mode = "paper";
    int retry_limit = 10;
    int smooth_radius = 3;
    bool no_perturb = false;
    bool export_mesh = false;
};

// Flags override config-file values: only fields whose flag was not given on
// the command line are taken from the JSON document.
void apply_config_file(const std::string& path, SimulateConfig& cfg, const CLI::App& cmd) {
    std::ifstream in(path);
    if (!in)
        throw cavisim::io_error("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw cavisim::config_error(path + ": " + e.what());
    }
    if (!doc.is_object())
        throw cavisim::config_error(path + ": config must be a JSON object");

    auto unused = [&](const std::string& flag) {
        const CLI::Option* opt = cmd.get_option_no_throw("--" + flag);
        return opt == nullptr || opt->count() == 0;
    };
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "image" && unused(key)) cfg.image = value.get<std::string>();
            else if (key == "parcellation" && unused(key)) cfg.parcellation = value.get<std::string>();
            else if (key == "labelmap" && unused(key)) cfg.labelmap = value.get<std::string>();
            else if (key == "output-dir" && unused(key)) cfg.output_dir = value.get<std::string>();
            else if (key == "seed" && unused(key)) cfg.seed = value.get<std::uint64_t>();
            else if (key == "draws" && unused(key)) cfg.draws = value.get<int>();
            else if (key == "workers" && unused(key)) cfg.workers = value.get<int>();
            else if (key == "volumes" && unused(key)) cfg.volumes = value.get<std::vector<double>>();
            else if (key == "volume-log-range" && unused(key)) cfg.volume_log_range = value.get<std::string>();
            else if (key == "lambda-range" && unused(key)) cfg.lambda_range = value.get<std::string>();
            else if (key == "sigma-range" && unused(key)) cfg.sigma_range = value.get<std::string>();
            else if (key == "frequency" && unused(key)) cfg.frequency = value.get<int>();
            else if (key == "octaves" && unused(key)) cfg.octaves = value.get<int>();
            else if (key == "persistence" && unused(key)) cfg.persistence = value.get<double>();
            else if (key == "noise-scale" && unused(key)) cfg.noise_scale = value.get<double>();
            else if (key == "volume-mode" && unused(key)) cfg.volume_mode = value.get<std::string>();
            else if (key == "retry-limit" && unused(key)) cfg.retry_limit = value.get<int>();
            else if (key == "smooth-radius" && unused(key)) cfg.smooth_radius = value.get<int>();
            else if (key == "no-perturb" && unused(key)) cfg.no_perturb = value.get<bool>();
            else if (key == "export-mesh" && unused(key)) cfg.export_mesh = value.get<bool>();
            else if (!cmd.get_option_no_throw("--" + key))
                throw cavisim::config_error(path + ": unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw cavisim::config_error(path + ": key '" + key + "': " + e.what());
        }
    }
}

json vec3_json(cavisim::Vec3 v) { return json::array({v.x, v.y, v.z}); }

json metadata_json(const cavisim::SimulationResult& r, const SimulateConfig& cfg, int draw,
                   std::uint32_t image_crc, std::uint32_t parcellation_crc) {
    const auto& p = r.params;
    json meta;
    meta["draw_index"] = draw;
    meta["master_seed"] = cfg.seed;
    meta["attempts"] = r.attempts;
    meta["seed_voxel"] = {
        {"index", json::array({r.seed_voxel[0], r.seed_voxel[1], r.seed_voxel[2]})},
        {"mm", vec3_json(r.seed_mm)}};
    meta["cavity_voxels"] = r.cavity_voxels;
    meta["cavity_volume_mm3"] = r.cavity_volume_mm3;
    meta["surface_voxels"] = r.surface_voxels;
    meta["csf"] = {{"mean", r.csf.mean}, {"stddev", r.csf.stddev}};
    meta["params"] = {
        {"frequency", p.frequency},
        {"octaves", p.noise.octaves},
        {"persistence", p.noise.persistence},
        {"noise_scale", p.noise.scale},
        {"noise_shift", vec3_json(p.noise.shift)},
        {"lambda", p.lambda},
        {"volume_mm3", p.volume_mm3},
        {"angles_rad", vec3_json(p.angles)},
        {"hemisphere", cavisim::to_string(p.hemisphere)},
        {"alpha_sigmas_mm", vec3_json(p.alpha_sigmas)},
        {"volume_mode", p.volume_mode == cavisim::VolumeMode::paper ? "paper" : "exact-volume"},
        {"perturb", p.perturb},
        {"retry_limit", p.retry_limit},
        {"smooth_radius", p.smooth_radius}};
    meta["inputs"] = {{"image", cfg.image},
                      {"image_crc32", image_crc},
                      {"parcellation", cfg.parcellation},
                      {"parcellation_crc32", parcellation_crc}};
    return meta;
}

int run_simulate(SimulateConfig& cfg) {
    if (cfg.draws < 1)
        throw cavisim::config_error("--draws must be >= 1");
    if (cfg.workers < 1)
        throw cavisim::config_error("--workers must be >= 1");

    cavisim::ParamDistributions dists;
    dists.frequency = cfg.frequency;
    dists.octaves = cfg.octaves;
    dists.persistence = cfg.persistence;
    dists.scale = cfg.noise_scale;
    dists.retry_limit = cfg.retry_limit;
    dists.smooth_radius = cfg.smooth_radius;
    dists.volume_mode = parse_volume_mode(cfg.volume_mode);
    dists.perturb = !cfg.no_perturb;
    if (!cfg.volumes.empty())
        dists.volumes_mm3 = cfg.volumes;
    if (!cfg.volume_log_range.empty())
        dists.volume_log_range = parse_range(cfg.volume_log_range, "--volume-log-range");
    if (!cfg.lambda_range.empty())
        dists.lambda_range = parse_range(cfg.lambda_range, "--lambda-range");
    if (!cfg.sigma_range.empty())
        dists.sigma_range = parse_range(cfg.sigma_range, "--sigma-range");
    dists.validate();

    const cavisim::LoadedVolume image_file = cavisim::read_volume(cfg.image);
    const cavisim::LoadedVolume parc_file = cavisim::read_volume(cfg.parcellation);
    if (parc_file.is_scalar())
        throw cavisim::format_error(cfg.parcellation + ": parcellation must be integer-typed");
    const cavisim::ScalarVolume image = image_file.to_scalar();
    const cavisim::LabelVolume parcellation = parc_file.labels();
    cavisim::require_same_grid(image.grid, parcellation.grid, "image vs parcellation");
    const cavisim::LabelCategoryMap map = cavisim::read_labelmap(cfg.labelmap);

    const std::uint32_t image_crc = cavisim::content_checksum(image);
    const std::uint32_t parc_crc = cavisim::content_checksum(parcellation);

    fs::create_directories(cfg.output_dir);
    const std::string base = strip_nii_suffix(fs::path(cfg.image).filename().string());
    const std::uint64_t image_id = cavisim::fnv1a64(base);

    // Shared per-image precomputations, filled before the pool starts so the
    // workers only read them. Values are functions of the inputs alone, so
    // outputs do not depend on worker count.
    cavisim::SimulationCache cache;
    cache.csf = cavisim::estimate_csf_stats(
        image, cavisim::category_mask(parcellation, map, {cavisim::Category::ventricles}));
    for (auto h : {cavisim::Hemisphere::left, cavisim::Hemisphere::right}) {
        cache.resectable[h] =
            cavisim::resectable_mask(parcellation, map, h, cfg.smooth_radius);
        cache.gm_support[h] = cavisim::foreground_indices(
            cavisim::category_mask(parcellation, map, {cavisim::gm_category(h)}));
    }

    std::vector<std::string> failures(static_cast<std::size_t>(cfg.draws));
    std::atomic<int> next{0};

    auto run_draw = [&](int draw) {
        cavisim::Rng rng(cavisim::stream_seed(cfg.seed, image_id,
                                              static_cast<std::uint64_t>(draw)));
        const cavisim::ResectionParams params = cavisim::sample_params(dists, rng);
        const cavisim::SimulationResult result =
            cavisim::simulate_resection(image, parcellation, map, params, rng, &cache);

        char stem_buf[32];
        std::snprintf(stem_buf, sizeof stem_buf, "_d%03d", draw);
        const std::string stem = (fs::path(cfg.output_dir) / (base + stem_buf)).string();

        const cavisim::VolumeHeader* hdr = &image_file.header;
        cavisim::atomic_write(stem + "_resected.nii.gz", [&](const std::string& tmp) {
            cavisim::write_volume(result.resected, tmp, hdr);
        });
        cavisim::atomic_write(stem + "_label.nii.gz", [&](const std::string& tmp) {
            cavisim::write_volume(result.label, tmp, hdr);
        });
        write_text_atomic(stem + "_meta.json",
                          metadata_json(result, cfg, draw, image_crc, parc_crc).dump(2) + "\n");
        if (cfg.export_mesh)
            cavisim::atomic_write(stem + "_mesh.ply", [&](const std::string& tmp) {
                cavisim::write_ply(result.surface, tmp);
            });
    };

    auto worker = [&] {
        for (;;) {
            const int draw = next.fetch_add(1);
            if (draw >= cfg.draws)
                break;
            try {
                run_draw(draw);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(draw)] = e.what();
            }
        }
    };

    if (cfg.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    int failed = 0;
    for (int d = 0; d < cfg.draws; ++d)
        if (!failures[static_cast<std::size_t>(d)].empty()) {
            ++failed;
            std::cerr << "draw " << d << " failed: " << failures[static_cast<std::size_t>(d)]
                      << "\n";
        }
    if (failed > 0) {
        std::cerr << failed << " of " << cfg.draws << " draws failed\n";
        return kExitRuntime;
    }
    std::cout << cfg.draws << " draw(s) written to " << cfg.output_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateConfig {
    std::string predictions, references;
    std::string csv_path, summary_path;
};

int run_evaluate(const EvaluateConfig& cfg) {
    std::map<std::string, fs::path> pred, ref;
    for (const auto& p : list_volume_files(cfg.predictions))
        pred[strip_nii_suffix(p.filename().string())] = p;
    for (const auto& p : list_volume_files(cfg.references))
        ref[strip_nii_suffix(p.filename().string())] = p;

    std::vector<std::string> orphans;
    for (const auto& [stem, path] : pred)
        if (!ref.count(stem))
            orphans.push_back(path.string());
    for (const auto& [stem, path] : ref)
        if (!pred.count(stem))
            orphans.push_back(path.string());
    if (!orphans.empty()) {
        std::cerr << "unpaired label files:\n";
        for (const auto& o : orphans)
            std::cerr << "  " << o << "\n";
        return kExitValidation;
    }
    if (pred.empty()) {
        std::cerr << "no pairs found\n";
        return kExitValidation;
    }

    std::ostringstream csv;
    csv << "name,dice\n";
    std::vector<double> scores;
    for (const auto& [stem, path] : pred) {
        const cavisim::BinaryMask a = cavisim::read_volume(path.string()).to_mask();
        const cavisim::BinaryMask b = cavisim::read_volume(ref.at(stem).string()).to_mask();
        if (!a.grid.matches(b.grid))
            throw cavisim::grid_mismatch("grids differ for pair '" + stem + "'");
        const double d = cavisim::dice(a, b);
        scores.push_back(d);
        csv << stem << "," << d << "\n";
    }
    const cavisim::MedianIqr summary = cavisim::median_iqr(scores);

    if (!cfg.csv_path.empty())
        write_text_atomic(cfg.csv_path, csv.str());
    json out = {{"count", scores.size()}, {"median", summary.median}, {"iqr", summary.iqr}};
    if (!cfg.summary_path.empty())
        write_text_atomic(cfg.summary_path, out.dump(2) + "\n");
    std::cout << "pairs = " << scores.size() << "\nmedian dice = " << summary.median
              << "\niqr = " << summary.iqr << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// consensus

struct ConsensusConfig {
    std::vector<std::string> inputs;
    std::string output;
    std::string leave_one_out_dir;
};

int run_consensus(const ConsensusConfig& cfg) {
    if (cfg.inputs.size() < 2)
        throw cavisim::config_error("consensus requires at least two label files");
    std::vector<cavisim::BinaryMask> masks;
    std::vector<std::string> stems;
    cavisim::VolumeHeader first_header;
    for (const auto& path : cfg.inputs) {
        cavisim::LoadedVolume loaded = cavisim::read_volume(path);
        cavisim::BinaryMask mask = loaded.to_mask();
        if (!masks.empty() && !mask.grid.matches(masks.front().grid))
            throw cavisim::grid_mismatch("'" + path + "' is not on the same grid as '" +
                                         cfg.inputs.front() + "'");
        if (masks.empty())
            first_header = loaded.header;
        masks.push_back(std::move(mask));
        stems.push_back(strip_nii_suffix(fs::path(path).filename().string()));
    }

    if (!cfg.output.empty()) {
        const cavisim::BinaryMask consensus = cavisim::sba_consensus(masks);
        cavisim::atomic_write(cfg.output, [&](const std::string& tmp) {
            cavisim::write_volume(consensus, tmp, &first_header);
        });
        std::cout << "consensus written to " << cfg.output << "\n";
    }

    if (!cfg.leave_one_out_dir.empty()) {
        if (masks.size() < 3)
            throw cavisim::config_error("leave-one-out needs at least three raters");
        fs::create_directories(cfg.leave_one_out_dir);
        for (std::size_t skip = 0; skip < masks.size(); ++skip) {
            std::vector<cavisim::BinaryMask> rest;
            for (std::size_t i = 0; i < masks.size(); ++i)
                if (i != skip)
                    rest.push_back(masks[i]);
            const cavisim::BinaryMask consensus = cavisim::sba_consensus(rest);
            const fs::path out =
                fs::path(cfg.leave_one_out_dir) / ("consensus_without_" + stems[skip] + ".nii.gz");
            cavisim::atomic_write(out.string(), [&](const std::string& tmp) {
                cavisim::write_volume(consensus, tmp, &first_header);
            });
        }
        std::cout << masks.size() << " leave-one-out consensuses written to "
                  << cfg.leave_one_out_dir << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsConfig {
    std::string x_path, y_path;
    std::string direction = "greater";
    int comparisons = 1;
    double alpha = 0.05;
    std::string json_path;
};

std::vector<double> read_score_column(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw cavisim::io_error("cannot open '" + path + "'");
    std::vector<double> out;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        // trim whitespace and trailing CR
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos)
            continue;
        const auto end = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(begin, end - begin + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size())
                throw std::invalid_argument("trailing characters");
            out.push_back(v);
        } catch (const std::exception&) {
            throw cavisim::format_error(path + ": row " + std::to_string(row) +
                                        ": not a number: '" + token + "'");
        }
    }
    if (out.empty())
        throw cavisim::format_error(path + ": no scores found");
    return out;
}

int run_stats(const StatsConfig& cfg) {
    if (cfg.direction != "greater" && cfg.direction != "less")
        throw cavisim::config_error("--direction must be 'greater' or 'less'");
    const std::vector<double> x = read_score_column(cfg.x_path);
    const std::vector<double> y = read_score_column(cfg.y_path);

    cavisim::TestOptions options;
    options.alpha = cfg.alpha;
    options.comparisons = cfg.comparisons;
    const cavisim::TestResult res = cfg.direction == "greater"
                                        ? cavisim::mann_whitney_one_tailed(x, y, options)
                                        : cavisim::mann_whitney_one_tailed(y, x, options);

    // res.u always belongs to the sample hypothesized to be greater.
    std::cout << "U = " << res.u << "\n";
    std::cout << "p = " << res.p_value << " (one-tailed, x " << cfg.direction << "; "
              << (res.exact ? "exact" : "normal approximation") << ")\n";
    std::cout << "adjusted alpha = " << res.adjusted_alpha << " (alpha " << cfg.alpha << " / "
              << cfg.comparisons << " comparisons)\n";
    std::cout << "reject = " << (res.reject ? "true" : "false") << "\n";

    if (!cfg.json_path.empty()) {
        json out = {{"u", res.u},
                    {"p_value", res.p_value},
                    {"adjusted_alpha", res.adjusted_alpha},
                    {"reject", res.reject},
                    {"direction", cfg.direction},
                    {"exact", res.exact},
                    {"n_x", x.size()},
                    {"n_y", y.size()}};
        write_text_atomic(cfg.json_path, out.dump(2) + "\n");
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavisim: synthesize resection cavities in 3D volumes and evaluate segmentations"};
    app.set_version_flag("--version", "cavisim 1.0.0");
    app.require_subcommand(1);

    SimulateConfig sim;
    std::string config_path;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "draw cavities on an image and write (resected, label, metadata) triples");
    simulate->add_option("--image", sim.image, "input volume (.nii/.nii.gz)");
    simulate->add_option("--parcellation", sim.parcellation, "integer label volume on the same grid");
    simulate->add_option("--labelmap", sim.labelmap, "JSON mapping categories to label ids");
    simulate->add_option("--output-dir", sim.output_dir, "directory for output triples");
    CLI::Option* seed_opt =
        simulate->add_option("--seed", sim.seed, "master seed (required; no wall-clock default)");
    simulate->add_option("--draws", sim.draws, "number of cavities to draw");
    simulate->add_option("--workers", sim.workers, "parallel draw workers")
        ->envname("CAVISIM_WORKERS");
    simulate->add_option("--volumes", sim.volumes,
                         "explicit cavity volume samples in mm^3 (comma separated)")
        ->delimiter(',');
    simulate->add_option("--volume-log-range", sim.volume_log_range,
                         "log-uniform volume range LO:HI in mm^3 (used when --volumes is absent)");
    simulate->add_option("--lambda-range", sim.lambda_range, "ellipsoid elongation range LO:HI");
    simulate->add_option("--sigma-range", sim.sigma_range, "alpha smoothing sigma range LO:HI, mm");
    simulate->add_option("--frequency", sim.frequency, "geodesic sphere frequency");
    simulate->add_option("--octaves", sim.octaves, "noise octaves");
    simulate->add_option("--persistence", sim.persistence, "noise persistence in (0,1]");
    simulate->add_option("--noise-scale", sim.noise_scale, "noise smoothness scale");
    simulate->add_option("--volume-mode", sim.volume_mode, "'paper' or 'exact-volume'");
    simulate->add_option("--retry-limit", sim.retry_limit, "placement retries before failing");
    simulate->add_option("--smooth-radius", sim.smooth_radius,
                         "resectable-mask morphology radius, voxels");
    simulate->add_flag("--no-perturb", sim.no_perturb, "skip the surface roughening");
    simulate->add_flag("--export-mesh", sim.export_mesh, "also write the cavity surface as PLY");
    simulate->add_option("--config", config_path, "JSON config mirroring these flags");

    EvaluateConfig eval;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Dice between two directories of paired label files");
    evaluate->add_option("--predictions", eval.predictions, "directory of predicted labels")
        ->required();
    evaluate->add_option("--references", eval.references, "directory of reference labels")
        ->required();
    evaluate->add_option("--csv", eval.csv_path, "write per-pair Dice rows here");
    evaluate->add_option("--summary", eval.summary_path, "write median/IQR JSON here");

    ConsensusConfig cons;
    CLI::App* consensus =
        app.add_subcommand("consensus", "shape-based consensus of two or more label files");
    consensus->add_option("inputs", cons.inputs, "label files on a common grid")->required();
    consensus->add_option("--output", cons.output, "write the consensus mask here");
    consensus->add_option("--leave-one-out", cons.leave_one_out_dir,
                          "also write one consensus per excluded rater into this directory");

    StatsConfig stats;
    CLI::App* stats_cmd = app.add_subcommand(
        "stats", "one-tailed Mann-Whitney U test with Bonferroni-adjusted threshold");
    stats_cmd->add_option("--x", stats.x_path, "first score column (one number per row)")
        ->required();
    stats_cmd->add_option("--y", stats.y_path, "second score column")->required();
    stats_cmd->add_option("--direction", stats.direction,
                          "alternative hypothesis: x 'greater' or 'less' than y");
    stats_cmd->add_option("--comparisons", stats.comparisons, "Bonferroni comparison count");
    stats_cmd->add_option("--alpha", stats.alpha, "base significance threshold");
    stats_cmd->add_option("--json", stats.json_path, "write a machine-readable result here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the message or help text
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (simulate->parsed()) {
            if (!config_path.empty())
                apply_config_file(config_path, sim, *simulate);
            if (seed_opt->count() == 0 && config_path.empty())
                throw cavisim::config_error("--seed is required for simulate");
            if (seed_opt->count() == 0 && !config_path.empty()) {
                // config may carry the seed; re-check that something set it
                std::ifstream in(config_path);
                json doc = json::parse(in);
                if (!doc.contains("seed"))
                    throw cavisim::config_error("--seed is required for simulate");
            }
            for (const auto& [flag, value] : std::vector<std::pair<std::string, std::string>>{
                     {"--image", sim.image},
                     {"--parcellation", sim.parcellation},
                     {"--labelmap", sim.labelmap},
                     {"--output-dir", sim.output_dir}})
                if (value.empty())
                    throw cavisim::config_error(flag + " is required for simulate");
            return run_simulate(sim);
        }
        if (evaluate->parsed())
            return run_evaluate(eval);
        if (consensus->parsed())
            return run_consensus(cons);
        if (stats_cmd->parsed())
            return run_stats(stats);
    } catch (const cavisim::invalid_parameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const cavisim::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const cavisim::grid_mismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const cavisim::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
