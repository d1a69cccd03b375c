#pragma once

#include "cavisim/labelmap.hpp"
#include "cavisim/morphology.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

enum class Hemisphere { left, right };

inline std::string to_string(Hemisphere h) { return h == Hemisphere::left ? "left" : "right"; }

inline Category gm_category(Hemisphere h) {
    return h == Hemisphere::left ? Category::gm_left : Category::gm_right;
}

inline Category contralateral_category(Hemisphere h) {
    return h == Hemisphere::left ? Category::hemisphere_right : Category::hemisphere_left;
}

/// Voxels eligible for resection: everything except background, brainstem,
/// cerebellum and the contralateral hemisphere, then smoothed by a binary
/// closing followed by an opening (spherical element, radius in voxels).
/// Smoothing may grow the mask into excluded territory, so contralateral
/// voxels are cleared again afterwards; the result never intersects the
/// opposite hemisphere's label set.
inline BinaryMask resectable_mask(const LabelVolume& parcellation, const LabelCategoryMap& map,
                                  Hemisphere hemisphere, int smooth_radius = 3) {
    const Category contra = contralateral_category(hemisphere);
    std::set<std::int32_t> excluded;
    for (Category c : {Category::background, Category::brainstem, Category::cerebellum, contra}) {
        const auto& labels = map.labels(c);
        excluded.insert(labels.begin(), labels.end());
    }

    BinaryMask raw(parcellation.grid);
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = excluded.count(parcellation[i]) ? 0 : 1;

    BinaryMask smoothed = open_ball(close_ball(raw, smooth_radius), smooth_radius);

    const auto& contra_labels = map.labels(contra);
    for (std::size_t i = 0; i < smoothed.size(); ++i)
        if (smoothed[i] && contra_labels.count(parcellation[i]))
            smoothed[i] = 0;
    return smoothed;
}

} // namespace cavisim
