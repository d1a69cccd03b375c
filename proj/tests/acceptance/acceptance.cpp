// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The first argument must be the path to the cavisim CLI binary
// (used by the reproducibility and throughput criteria).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <cavisim/cavisim.hpp>

#include "../support/oracles.hpp"
#include "../support/phantom.hpp"

namespace fs = std::filesystem;
using namespace cavisim;

namespace {

std::string g_cli_binary;

void require(bool condition, const std::string& message) {
    if (!condition)
        throw std::runtime_error(message);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + g_cli_binary + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cavisim_accept_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// -------------------------------------------------------------------- 1
void criterion_mesh_suite() {
    for (int f : {1, 2, 4, 8, 16}) {
        const TriangleMesh m = icosphere(f);
        const auto f2 = static_cast<std::size_t>(f) * static_cast<std::size_t>(f);
        require(m.vertices.size() == 10 * f2 + 2, "vertex count off at f=" + std::to_string(f));
        require(m.faces.size() == 20 * f2, "face count off at f=" + std::to_string(f));
        require(m.vertices.size() - edge_count(m) + m.faces.size() == 2,
                "Euler characteristic off at f=" + std::to_string(f));
        for (const Vec3& v : m.vertices)
            require(std::abs(norm(v) - 1.0) < 1e-9, "vertex radius off at f=" + std::to_string(f));
        require(is_watertight(m), "icosphere not watertight at f=" + std::to_string(f));
    }
    NoiseParams params;
    params.octaves = 4;
    params.persistence = 0.5;
    params.scale = 3.0;
    params.shift = {101.0, 707.0, 303.0};
    const TriangleMesh perturbed = perturb_radially(icosphere(16), params);
    require(is_watertight(perturbed), "perturbed mesh lost watertightness");
    for (const Vec3& v : perturbed.vertices) {
        const double r = norm(v);
        require(r >= 0.0 && r <= 2.0, "perturbed radius " + fmt(r) + " outside [0,2]");
    }
}

// -------------------------------------------------------------------- 2
void criterion_noise_suite() {
    NoiseParams params;
    params.shift = {42.0, 17.0, 993.0};
    const OctaveNoise noise(params);
    Rng rng(20240);
    for (int i = 0; i < 100000; ++i) {
        const Vec3 p{rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200)};
        const double d = noise.displacement(p);
        require(d >= -1.0 && d <= 1.0, "displacement " + fmt(d) + " outside [-1,1]");
    }
    const OctaveNoise again(params);
    Rng rng2(555);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p{rng2.uniform(-50, 50), rng2.uniform(-50, 50), rng2.uniform(-50, 50)};
        require(noise.value(p) == again.value(p), "same shift must be bitwise deterministic");
    }
    NoiseParams other = params;
    other.shift = {43.0, 17.0, 993.0};
    const OctaveNoise decorrelated(other);
    int differing = 0;
    Rng rng3(556);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p{rng3.uniform(-50, 50), rng3.uniform(-50, 50), rng3.uniform(-50, 50)};
        if (noise.value(p) != decorrelated.value(p))
            ++differing;
    }
    require(differing >= 990, "only " + std::to_string(differing) +
                                  "/1000 points differ between distinct shifts");
}

// -------------------------------------------------------------------- 3
void criterion_volume_fidelity() {
    // Small brain inside a 160^3 half-millimetre grid so the unclipped
    // cavity cannot touch the grid boundary.
    const auto ph = testsupport::build_head_phantom(160, 0.5, 0.25);
    const double v = 4.0 / 3.0 * std::numbers::pi * 1000.0; // ball of radius 10 mm

    ResectionParams params;
    params.frequency = 16;
    params.perturb = false; // zero displacement
    params.lambda = 1.0;
    params.angles = {0.0, 0.0, 0.0};
    params.volume_mm3 = v;
    params.hemisphere = Hemisphere::left;

    params.volume_mode = VolumeMode::exact_volume;
    Rng rng(99);
    const SimulationResult exact =
        simulate_resection(ph.image, ph.parcellation, ph.map, params, rng);
    const double exact_volume =
        static_cast<double>(exact.surface_voxels) * ph.image.grid.voxel_volume();
    require(std::abs(exact_volume - v) / v < 0.05,
            "exact-volume cavity " + fmt(exact_volume) + " vs ball " + fmt(v));

    params.volume_mode = VolumeMode::paper;
    Rng rng2(99);
    const SimulationResult printed =
        simulate_resection(ph.image, ph.parcellation, ph.map, params, rng2);
    const double printed_volume =
        static_cast<double>(printed.surface_voxels) * ph.image.grid.voxel_volume();
    const double expected = std::numbers::pi * v; // consequence of r = (3v/4)^(1/3)
    require(std::abs(printed_volume - expected) / expected < 0.05,
            "printed-formula cavity " + fmt(printed_volume) + " vs pi*v " + fmt(expected));
}

// -------------------------------------------------------------------- 4
void criterion_label_containment() {
    const auto ph = testsupport::build_head_phantom(96);
    ParamDistributions dists;
    dists.volumes_mm3 = std::vector<double>{3000.0, 8000.0, 15000.0, 25000.0};

    SimulationCache cache;
    cache.csf = estimate_csf_stats(
        ph.image, category_mask(ph.parcellation, ph.map, {Category::ventricles}));
    for (auto h : {Hemisphere::left, Hemisphere::right}) {
        cache.resectable[h] = resectable_mask(ph.parcellation, ph.map, h);
        cache.gm_support[h] =
            foreground_indices(category_mask(ph.parcellation, ph.map, {gm_category(h)}));
    }
    const BinaryMask contra_left =
        category_mask(ph.parcellation, ph.map, {Category::hemisphere_right});
    const BinaryMask contra_right =
        category_mask(ph.parcellation, ph.map, {Category::hemisphere_left});

    for (int draw = 0; draw < 100; ++draw) {
        Rng rng(stream_seed(42, fnv1a64("phantom"), static_cast<std::uint64_t>(draw)));
        const ResectionParams params = sample_params(dists, rng);
        const SimulationResult result =
            simulate_resection(ph.image, ph.parcellation, ph.map, params, rng, &cache);
        const std::string tag = " (draw " + std::to_string(draw) + ")";
        require(result.cavity_voxels > 0, "empty label" + tag);

        const BinaryMask& resectable = cache.resectable.at(params.hemisphere);
        const BinaryMask& contra =
            params.hemisphere == Hemisphere::left ? contra_left : contra_right;
        for (std::size_t i = 0; i < result.label.size(); ++i)
            if (result.label[i]) {
                require(resectable[i] == 1, "label outside the resectable mask" + tag);
                require(contra[i] == 0, "label in the contralateral hemisphere" + tag);
            }

        const ScalarVolume alpha = gaussian_smooth(result.label, params.alpha_sigmas);
        for (std::size_t i = 0; i < alpha.size(); ++i)
            if (alpha[i] == 0.0f)
                require(result.resected[i] == ph.image[i],
                        "image modified where alpha is zero" + tag);
    }
}

// -------------------------------------------------------------------- 5
void criterion_blend_texture() {
    Grid3 grid;
    grid.dims = {64, 64, 64};

    Rng rng(7);
    const ScalarVolume constant = synth_csf_texture(grid, CsfStats{55.0, 0.0}, rng);
    for (std::size_t i = 0; i < constant.size(); ++i)
        require(constant[i] == 55.0f, "sigma 0 texture must be constant");

    const ScalarVolume texture = synth_csf_texture(grid, CsfStats{100.0, 10.0}, rng);
    double sum = 0.0;
    for (auto v : texture.data)
        sum += v;
    const double mean = sum / static_cast<double>(texture.size());
    double ss = 0.0;
    for (auto v : texture.data)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(texture.size()));
    require(std::abs(mean - 100.0) / 100.0 < 0.01, "texture mean " + fmt(mean));
    require(std::abs(sd - 10.0) / 10.0 < 0.01, "texture stddev " + fmt(sd));

    ScalarVolume image(grid), alpha(grid);
    Rng vals(8);
    for (std::size_t i = 0; i < image.size(); ++i)
        image[i] = static_cast<float>(vals.uniform(-500, 500));
    const ScalarVolume zero_blend = blend(image, texture, alpha);
    for (std::size_t i = 0; i < image.size(); ++i)
        require(zero_blend[i] == image[i], "alpha 0 endpoint not bit-exact");
    for (auto& a : alpha.data)
        a = 1.0f;
    const ScalarVolume one_blend = blend(image, texture, alpha);
    for (std::size_t i = 0; i < image.size(); ++i)
        require(one_blend[i] == texture[i], "alpha 1 endpoint not bit-exact");
}

// -------------------------------------------------------------------- 6
void criterion_metrics_oracles() {
    // Dice: exhaustive 2^3 masks against brute-force counting.
    Grid3 tiny;
    tiny.dims = {2, 2, 2};
    for (unsigned pa = 0; pa < 256; ++pa)
        for (unsigned pb = 0; pb < 256; ++pb) {
            BinaryMask a(tiny), b(tiny);
            for (unsigned bit = 0; bit < 8; ++bit) {
                a[bit] = (pa >> bit) & 1u;
                b[bit] = (pb >> bit) & 1u;
            }
            require(dice(a, b) == testsupport::brute_force_dice(a, b),
                    "dice mismatch on exhaustive 2^3 masks");
        }
    Grid3 four;
    four.dims = {4, 4, 4};
    BinaryMask a(four), b(four);
    a.at(0, 0, 0) = a.at(1, 0, 0) = a.at(2, 0, 0) = a.at(3, 0, 0) = 1;
    b.at(2, 0, 0) = b.at(3, 0, 0) = b.at(0, 1, 0) = b.at(1, 1, 0) = 1;
    require(dice(a, b) == 0.5, "4^3 half-overlap Dice must be 0.5");

    // Shape-based consensus: unanimity and idempotence.
    Grid3 g;
    g.dims = {24, 24, 24};
    g.spacing = {1, 1, 1};
    const BinaryMask blob = testsupport::sphere_mask(g, g.world(11.5, 11.5, 11.5), 6.0);
    const BinaryMask unanimous = sba_consensus({blob, blob, blob});
    require(unanimous.data == blob.data, "consensus of identical masks must be that mask");
    const BinaryMask twice = sba_consensus({unanimous, unanimous});
    require(twice.data == unanimous.data, "consensus must be idempotent on unanimous input");

    // Concentric spheres: consensus within one voxel of the mid sphere.
    Grid3 cg;
    cg.dims = {33, 33, 33};
    const Vec3 center = cg.world(16, 16, 16);
    const BinaryMask inner = testsupport::sphere_mask(cg, center, 8.0);
    const BinaryMask outer = testsupport::sphere_mask(cg, center, 12.0);
    const BinaryMask consensus = sba_consensus({inner, outer});
    const BinaryMask mid = testsupport::sphere_mask(cg, center, 10.0);
    const ScalarVolume d_mid = signed_distance(mid);
    const ScalarVolume d_consensus = signed_distance(consensus);
    const double voxel_diag = std::sqrt(3.0) + 1e-9;
    for (std::size_t i = 0; i < consensus.size(); ++i) {
        if (consensus[i] && !mid[i])
            require(std::abs(d_mid[i]) <= voxel_diag, "consensus leaks beyond one voxel");
        if (!consensus[i] && mid[i])
            require(std::abs(d_consensus[i]) <= voxel_diag, "consensus misses by over one voxel");
    }

    // Rank test: exact path against full enumeration for all n,m <= 5.
    Rng rng(31119);
    for (std::size_t n = 1; n <= 5; ++n)
        for (std::size_t m = 1; m <= 5; ++m)
            for (int trial = 0; trial < 3; ++trial) {
                std::vector<double> x(n), y(m);
                for (auto& v : x)
                    v = static_cast<double>(rng.below(4));
                for (auto& v : y)
                    v = static_cast<double>(rng.below(4));
                TestOptions opt;
                opt.method = TestMethod::exact;
                const double got = mann_whitney_one_tailed(x, y, opt).p_value;
                const double expect = testsupport::enumerated_mwu_p(x, y);
                require(std::abs(got - expect) < 1e-12,
                        "exact rank test deviates from enumeration at n=" + std::to_string(n) +
                            " m=" + std::to_string(m));
            }
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(15), y(15);
        for (auto& v : x)
            v = rng.normal(0.3, 1.0);
        for (auto& v : y)
            v = rng.normal(0.0, 1.0);
        TestOptions exact_opt, normal_opt;
        exact_opt.method = TestMethod::exact;
        normal_opt.method = TestMethod::normal;
        const double pe = mann_whitney_one_tailed(x, y, exact_opt).p_value;
        const double pn = mann_whitney_one_tailed(x, y, normal_opt).p_value;
        require(std::abs(pe - pn) <= 0.01,
                "exact and approximate p-values differ by " + fmt(std::abs(pe - pn)));
    }
    require(std::abs(bonferroni(0.05, 42) - 0.00119) < 1e-5,
            "Bonferroni threshold for 42 comparisons");
}

// -------------------------------------------------------------------- 7
void criterion_cli_reproducibility() {
    const fs::path dir = fresh_dir("repro");
    const auto ph = testsupport::build_head_phantom(64);
    write_volume(ph.image, (dir / "head.nii.gz").string());
    write_volume(ph.parcellation, (dir / "parcellation.nii.gz").string());
    {
        std::ofstream map(dir / "labelmap.json");
        map << testsupport::phantom_labelmap_json();
    }
    const std::string args = "simulate --image " + (dir / "head.nii.gz").string() +
                             " --parcellation " + (dir / "parcellation.nii.gz").string() +
                             " --labelmap " + (dir / "labelmap.json").string() +
                             " --volumes 4000,9000 --seed 42 --draws 4";
    require(run_cli(args + " --output-dir " + (dir / "a").string()) == 0, "first run failed");
    require(run_cli(args + " --output-dir " + (dir / "b").string()) == 0, "second run failed");
    require(run_cli(args + " --output-dir " + (dir / "c").string() + " --workers 4") == 0,
            "worker run failed");
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const std::string name = entry.path().filename().string();
        ++files;
        require(slurp(entry.path()) == slurp(dir / "b" / name),
                name + " differs between identical runs");
        require(slurp(entry.path()) == slurp(dir / "c" / name),
                name + " differs when the worker count changes");
    }
    require(files == 12, "expected 4 draws x 3 files");
    fs::remove_all(dir);
}

// -------------------------------------------------------------------- 8
void criterion_performance() {
    using clock = std::chrono::steady_clock;
    const auto ph = testsupport::build_head_phantom(96);
    ResectionParams params;
    params.frequency = 16;
    params.noise.shift = {100.0, 200.0, 300.0};
    params.volume_mm3 = 15000.0;
    params.lambda = 1.4;
    params.angles = {0.3, 1.0, 2.2};

    const auto t0 = clock::now();
    Rng rng(11);
    const SimulationResult result =
        simulate_resection(ph.image, ph.parcellation, ph.map, params, rng);
    const double one_draw = std::chrono::duration<double>(clock::now() - t0).count();
    require(result.cavity_voxels > 0, "draw produced no cavity");
    require(one_draw < 5.0, "single draw took " + fmt(one_draw) + " s (limit 5)");

    const fs::path dir = fresh_dir("perf");
    write_volume(ph.image, (dir / "head.nii.gz").string());
    write_volume(ph.parcellation, (dir / "parcellation.nii.gz").string());
    {
        std::ofstream map(dir / "labelmap.json");
        map << testsupport::phantom_labelmap_json();
    }
    const auto t1 = clock::now();
    const int code = run_cli("simulate --image " + (dir / "head.nii.gz").string() +
                             " --parcellation " + (dir / "parcellation.nii.gz").string() +
                             " --labelmap " + (dir / "labelmap.json").string() +
                             " --output-dir " + (dir / "out").string() +
                             " --volumes 4000,9000,16000 --seed 5 --draws 100 --workers 4");
    const double batch = std::chrono::duration<double>(clock::now() - t1).count();
    require(code == 0, "batch run failed");
    int triples = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir / "out"))
        ++triples;
    require(triples == 300, "expected 100 triples");
    require(batch < 180.0, "100 draws took " + fmt(batch) + " s (limit 180)");
    fs::remove_all(dir);
}

// -------------------------------------------------------------------- 9
void criterion_io_round_trip() {
    Grid3 g;
    g.dims = {17, 13, 11};
    g.spacing = {0.7, 1.1, 1.3};
    g.origin = {-20.0, 4.25, 9.5};
    Rng rng(2718);
    const fs::path dir = fresh_dir("io");

    ScalarVolume f32(g);
    for (auto& v : f32.data)
        v = static_cast<float>(rng.normal(0, 100));
    write_volume(f32, (dir / "f32.nii.gz").string());
    const LoadedVolume f32_back = read_volume((dir / "f32.nii.gz").string());
    require(f32_back.scalar().data == f32.data, "float32 payload not bit-exact");

    BinaryMask u8(g);
    for (auto& v : u8.data)
        v = rng.below(2) ? 1 : 0;
    write_volume(u8, (dir / "u8.nii.gz").string());
    require(read_volume((dir / "u8.nii.gz").string()).to_mask().data == u8.data,
            "uint8 payload not bit-exact");

    LabelVolume i32(g);
    for (auto& v : i32.data)
        v = static_cast<std::int32_t>(rng.below(100000)) - 50000;
    write_volume(i32, (dir / "i32.nii.gz").string());
    require(read_volume((dir / "i32.nii.gz").string()).labels().data == i32.data,
            "int32 payload not bit-exact");

    LabelVolume i16(g);
    for (auto& v : i16.data)
        v = static_cast<std::int32_t>(rng.below(60000)) - 30000;
    VolumeHeader h16;
    h16.datatype = nifti::DT_INT16;
    h16.disk_dims = g.dims;
    for (int d = 0; d < 3; ++d)
        h16.disk_pixdim[d] = static_cast<float>(g.spacing[d]);
    h16.sform_code = 1;
    h16.srow[0][0] = static_cast<float>(g.spacing.x);
    h16.srow[1][1] = static_cast<float>(g.spacing.y);
    h16.srow[2][2] = static_cast<float>(g.spacing.z);
    h16.srow[0][3] = static_cast<float>(g.origin.x);
    h16.srow[1][3] = static_cast<float>(g.origin.y);
    h16.srow[2][3] = static_cast<float>(g.origin.z);
    write_volume(i16, (dir / "i16.nii.gz").string(), &h16);
    const LoadedVolume i16_back = read_volume((dir / "i16.nii.gz").string());
    require(i16_back.header.datatype == nifti::DT_INT16, "int16 datatype not preserved");
    require(i16_back.labels().data == i16.data, "int16 payload not bit-exact");

    for (int axis = 0; axis < 3; ++axis) {
        require(std::abs(f32_back.scalar().grid.spacing[axis] - g.spacing[axis]) < 1e-6,
                "spacing drifted past 1e-6 mm");
        require(std::abs(f32_back.scalar().grid.origin[axis] - g.origin[axis]) < 1e-6,
                "origin drifted past 1e-6 mm");
    }
    fs::remove_all(dir);
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;
    std::function<void()> run;
};

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-cavisim-binary>\n");
        return 2;
    }
    g_cli_binary = argv[1];

    const std::vector<Criterion> criteria = {
        {1, "mesh suite (counts, Euler, radii, perturbation)", 2.0, criterion_mesh_suite},
        {2, "noise suite (range, determinism, decorrelation)", 2.0, criterion_noise_suite},
        {3, "volume fidelity oracle (both semi-axis modes)", 30.0, criterion_volume_fidelity},
        {4, "label containment over 100 seeded draws", 300.0, criterion_label_containment},
        {5, "blend endpoints and texture statistics", 0.0, criterion_blend_texture},
        {6, "metrics oracles (dice, consensus, rank test)", 0.0, criterion_metrics_oracles},
        {7, "byte-identical CLI reruns and worker invariance", 0.0, criterion_cli_reproducibility},
        {8, "performance envelope (single draw, 100-draw batch)", 0.0, criterion_performance},
        {9, "I/O round trip for all supported datatypes", 0.0, criterion_io_round_trip},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string failure;
        try {
            c.run();
        } catch (const std::exception& e) {
            failure = e.what();
        }
        const double elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
        if (failure.empty() && c.time_limit_s > 0.0 && elapsed > c.time_limit_s)
            failure = "runtime " + fmt(elapsed) + " s exceeds limit " + fmt(c.time_limit_s) + " s";
        if (failure.empty()) {
            std::printf("[PASS] %d. %s (%.2f s)\n", c.id, c.name, elapsed);
        } else {
            std::printf("[FAIL] %d. %s (%.2f s): %s\n", c.id, c.name, elapsed, failure.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0)
        std::printf("%d criterion(s) failed\n", failures);
    else
        std::printf("all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
