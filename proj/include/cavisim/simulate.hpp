#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "cavisim/masks.hpp"
#include "cavisim/mesh.hpp"
#include "cavisim/noise.hpp"
#include "cavisim/rng.hpp"
#include "cavisim/smoothing.hpp"
#include "cavisim/volume.hpp"
#include "cavisim/voxelize.hpp"

namespace cavisim {

/// Every stochastic knob of one cavity draw, after sampling.
struct ResectionParams {
    int frequency = 16;               ///< geodesic sphere subdivision frequency
    NoiseParams noise;                ///< surface roughness field
    double lambda = 1.5;              ///< ellipsoid elongation, >= 1
    double volume_mm3 = 20000.0;      ///< ellipsoid volume knob
    Vec3 angles{0.0, 0.0, 0.0};       ///< rotation around each axis, radians
    Hemisphere hemisphere = Hemisphere::left;
    Vec3 alpha_sigmas{0.75, 0.75, 0.75}; ///< alpha-channel smoothing, mm per axis
    int retry_limit = 10;             ///< placement retries before giving up
    VolumeMode volume_mode = VolumeMode::paper;
    bool perturb = true;              ///< disable to keep the unperturbed sphere
    int smooth_radius = 3;            ///< resectable-mask morphology radius, voxels

    void validate() const {
        if (frequency < 1)
            throw invalid_parameter("frequency must be >= 1");
        noise.validate();
        if (!(lambda >= 1.0))
            throw invalid_parameter("lambda must be >= 1");
        if (!(volume_mm3 > 0.0))
            throw invalid_parameter("volume must be positive");
        if (!(alpha_sigmas.x > 0.0 && alpha_sigmas.y > 0.0 && alpha_sigmas.z > 0.0))
            throw invalid_parameter("alpha sigmas must be positive");
        if (retry_limit < 0)
            throw invalid_parameter("retry limit must be >= 0");
        if (smooth_radius < 0)
            throw invalid_parameter("smoothing radius must be >= 0");
    }
};

/// Sampling ranges for ResectionParams. The cavity volume comes from an
/// explicit list when one is supplied (mirroring volumes measured on real
/// cavities), otherwise from a log-uniform range.
struct ParamDistributions {
    int frequency = 16;
    int octaves = 4;
    double persistence = 0.5;
    double scale = 3.0;
    std::pair<double, double> shift_range{0.0, 1000.0};
    std::pair<double, double> lambda_range{1.0, 2.0};
    std::pair<double, double> sigma_range{0.5, 1.0};
    std::pair<double, double> angle_range{0.0, 2.0 * std::numbers::pi};
    std::optional<std::vector<double>> volumes_mm3;           ///< explicit sample list
    std::pair<double, double> volume_log_range{1000.0, 100000.0}; ///< fallback, mm^3
    int retry_limit = 10;
    VolumeMode volume_mode = VolumeMode::paper;
    bool perturb = true;
    int smooth_radius = 3;

    void validate() const {
        if (frequency < 1 || octaves < 1)
            throw invalid_parameter("frequency and octaves must be >= 1");
        if (!(persistence > 0.0 && persistence <= 1.0))
            throw invalid_parameter("persistence must be in (0, 1]");
        if (!(scale > 0.0))
            throw invalid_parameter("noise scale must be positive");
        auto check_range = [](std::pair<double, double> r, const char* name) {
            if (!(r.first <= r.second))
                throw invalid_parameter(std::string(name) + " range is empty");
        };
        check_range(shift_range, "shift");
        check_range(lambda_range, "lambda");
        check_range(sigma_range, "sigma");
        check_range(angle_range, "angle");
        if (!(lambda_range.first >= 1.0))
            throw invalid_parameter("lambda range must start at >= 1");
        if (!(sigma_range.first > 0.0))
            throw invalid_parameter("sigma range must be positive");
        if (volumes_mm3) {
            if (volumes_mm3->empty())
                throw config_error("explicit cavity volume list is empty");
            for (double v : *volumes_mm3)
                if (!(v > 0.0))
                    throw invalid_parameter("cavity volumes must be positive");
        } else {
            if (!(volume_log_range.first > 0.0 &&
                  volume_log_range.first <= volume_log_range.second))
                throw invalid_parameter("volume log-range is invalid");
        }
    }
};

/// Draw one parameter set. The sampling order below is fixed and is part of
/// the determinism contract: hemisphere, shift, lambda, volume, angles,
/// alpha sigmas.
inline ResectionParams sample_params(const ParamDistributions& dists, Rng& rng) {
    dists.validate();
    ResectionParams p;
    p.frequency = dists.frequency;
    p.noise.octaves = dists.octaves;
    p.noise.persistence = dists.persistence;
    p.noise.scale = dists.scale;
    p.retry_limit = dists.retry_limit;
    p.volume_mode = dists.volume_mode;
    p.perturb = dists.perturb;
    p.smooth_radius = dists.smooth_radius;

    p.hemisphere = rng.below(2) == 0 ? Hemisphere::left : Hemisphere::right;
    for (int a = 0; a < 3; ++a)
        p.noise.shift[a] = rng.uniform(dists.shift_range.first, dists.shift_range.second);
    p.lambda = rng.uniform(dists.lambda_range.first, dists.lambda_range.second);
    if (dists.volumes_mm3)
        p.volume_mm3 = (*dists.volumes_mm3)[rng.below(dists.volumes_mm3->size())];
    else
        p.volume_mm3 = std::exp(rng.uniform(std::log(dists.volume_log_range.first),
                                            std::log(dists.volume_log_range.second)));
    for (int a = 0; a < 3; ++a)
        p.angles[a] = rng.uniform(dists.angle_range.first, dists.angle_range.second);
    for (int a = 0; a < 3; ++a)
        p.alpha_sigmas[a] = rng.uniform(dists.sigma_range.first, dists.sigma_range.second);
    return p;
}

/// Intensity statistics of cerebrospinal fluid, estimated from ventricles.
struct CsfStats {
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation

    void validate() const {
        if (!(stddev >= 0.0))
            throw invalid_parameter("CSF stddev must be >= 0");
    }
};

inline CsfStats estimate_csf_stats(const ScalarVolume& image, const BinaryMask& ventricles) {
    require_same_grid(image.grid, ventricles.grid, "CSF statistics");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (ventricles[i]) {
            sum += image[i];
            ++n;
        }
    if (n == 0)
        throw empty_support("ventricle mask is empty; cannot estimate CSF statistics");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i)
        if (ventricles[i]) {
            const double d = image[i] - mean;
            ss += d * d;
        }
    return CsfStats{mean, std::sqrt(ss / static_cast<double>(n))};
}

/// I.i.d. Gaussian texture over the whole grid.
inline ScalarVolume synth_csf_texture(const Grid3& grid, const CsfStats& stats, Rng& rng) {
    stats.validate();
    ScalarVolume out(grid);
    if (stats.stddev == 0.0) {
        for (auto& v : out.data)
            v = static_cast<float>(stats.mean);
        return out;
    }
    for (auto& v : out.data)
        v = static_cast<float>(rng.normal(stats.mean, stats.stddev));
    return out;
}

/// Voxelwise convex combination alpha*texture + (1-alpha)*image. The alpha=0
/// and alpha=1 endpoints return the untouched input values bit-exactly.
inline ScalarVolume blend(const ScalarVolume& image, const ScalarVolume& texture,
                          const ScalarVolume& alpha) {
    require_same_grid(image.grid, texture.grid, "blend");
    require_same_grid(image.grid, alpha.grid, "blend");
    ScalarVolume out(image.grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float a = alpha[i];
        if (!(a >= 0.0f && a <= 1.0f))
            throw invalid_parameter("blend alpha value outside [0, 1]");
        if (a == 0.0f)
            out[i] = image[i];
        else if (a == 1.0f)
            out[i] = texture[i];
        else
            out[i] = static_cast<float>(static_cast<double>(a) * texture[i] +
                                        (1.0 - static_cast<double>(a)) * image[i]);
    }
    return out;
}

/// Per-image precomputations a batch driver may reuse across draws. Using
/// the cache never changes results; it only skips recomputing values that
/// are functions of the inputs alone.
struct SimulationCache {
    std::optional<CsfStats> csf;
    std::map<Hemisphere, BinaryMask> resectable;
    std::map<Hemisphere, std::vector<std::size_t>> gm_support;
};

struct SimulationResult {
    ScalarVolume resected; ///< image with the cavity blended in
    BinaryMask label;      ///< final cavity segmentation

    TriangleMesh surface;  ///< placed cavity surface (for debug export)
    std::array<std::size_t, 3> seed_voxel{};
    Vec3 seed_mm;
    ResectionParams params;
    CsfStats csf;
    std::size_t cavity_voxels = 0;   ///< |label|
    std::size_t surface_voxels = 0;  ///< cavity size before hemisphere clipping
    double cavity_volume_mm3 = 0.0;
    int attempts = 0;
};

/// Run one full draw: build and roughen the sphere, place it at a random
/// cortical gray-matter voxel, rasterize, clip to the resectable hemisphere,
/// and blend a CSF-like texture through the smoothed alpha channel. If the
/// clipped label is empty, placement is retried with a fresh seed voxel up
/// to params.retry_limit times.
inline SimulationResult simulate_resection(const ScalarVolume& image,
                                           const LabelVolume& parcellation,
                                           const LabelCategoryMap& map,
                                           const ResectionParams& params, Rng& rng,
                                           SimulationCache* cache = nullptr) {
    params.validate();
    require_same_grid(image.grid, parcellation.grid, "simulation inputs");
    const Grid3& grid = image.grid;

    const Category gm = gm_category(params.hemisphere);
    const std::vector<std::size_t>* support = nullptr;
    std::vector<std::size_t> local_support;
    if (cache && cache->gm_support.count(params.hemisphere)) {
        support = &cache->gm_support.at(params.hemisphere);
    } else {
        local_support = foreground_indices(category_mask(parcellation, map, {gm}));
        if (cache) {
            cache->gm_support[params.hemisphere] = std::move(local_support);
            support = &cache->gm_support.at(params.hemisphere);
        } else {
            support = &local_support;
        }
    }
    if (support->empty())
        throw empty_support("no gray-matter voxels in the " + to_string(params.hemisphere) +
                            " hemisphere");

    const BinaryMask* resectable = nullptr;
    BinaryMask local_resectable;
    if (cache && cache->resectable.count(params.hemisphere)) {
        resectable = &cache->resectable.at(params.hemisphere);
    } else {
        local_resectable = resectable_mask(parcellation, map, params.hemisphere,
                                           params.smooth_radius);
        if (cache) {
            cache->resectable[params.hemisphere] = std::move(local_resectable);
            resectable = &cache->resectable.at(params.hemisphere);
        } else {
            resectable = &local_resectable;
        }
    }

    // The roughened unit sphere and its derived quantities do not depend on
    // the seed voxel, so they are built once across retries.
    TriangleMesh sphere = icosphere(params.frequency);
    if (params.perturb)
        sphere = perturb_radially(sphere, OctaveNoise(params.noise));
    const Vec3 center = centroid(sphere);
    const EllipsoidAxes axes =
        ellipsoid_semiaxes(params.volume_mm3, params.lambda, params.volume_mode);

    SimulationResult result;
    result.params = params;

    BinaryMask label;
    for (int attempt = 0; attempt <= params.retry_limit; ++attempt) {
        result.attempts = attempt + 1;
        result.seed_voxel = sample_random_voxel(grid, *support, rng);
        result.seed_mm = grid.world(static_cast<double>(result.seed_voxel[0]),
                                    static_cast<double>(result.seed_voxel[1]),
                                    static_cast<double>(result.seed_voxel[2]));
        const AffineTransform chain =
            make_transform_chain(center, params.angles, axes, result.seed_mm);
        result.surface = apply_transform(sphere, chain);
        const BinaryMask surface_mask = voxelize(result.surface, grid);
        result.surface_voxels = count_nonzero(surface_mask);
        label = mask_and(surface_mask, *resectable);
        result.cavity_voxels = count_nonzero(label);
        if (result.cavity_voxels > 0)
            break;
    }
    if (result.cavity_voxels == 0)
        throw degenerate_cavity("cavity label empty after " + std::to_string(result.attempts) +
                                " placement attempts");

    const ScalarVolume alpha = gaussian_smooth(label, params.alpha_sigmas);

    if (cache && cache->csf) {
        result.csf = *cache->csf;
    } else {
        result.csf =
            estimate_csf_stats(image, category_mask(parcellation, map, {Category::ventricles}));
        if (cache)
            cache->csf = result.csf;
    }
    const ScalarVolume texture = synth_csf_texture(grid, result.csf, rng);

    result.resected = blend(image, texture, alpha);
    result.label = std::move(label);
    result.cavity_volume_mm3 = static_cast<double>(result.cavity_voxels) * grid.voxel_volume();
    return result;
}

} // namespace cavisim
