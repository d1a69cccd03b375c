#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavisim/errors.hpp"
#include "cavisim/volume.hpp"

namespace cavisim {

/// Anatomical categories a parcellation label can be assigned to.
enum class Category {
    background,
    brainstem,
    cerebellum,
    gm_left,
    gm_right,
    hemisphere_left,
    hemisphere_right,
    ventricles,
};

inline const std::vector<std::pair<Category, std::string>>& category_names() {
    static const std::vector<std::pair<Category, std::string>> names = {
        {Category::background, "background"},
        {Category::brainstem, "brainstem"},
        {Category::cerebellum, "cerebellum"},
        {Category::gm_left, "gm-left"},
        {Category::gm_right, "gm-right"},
        {Category::hemisphere_left, "hemisphere-left"},
        {Category::hemisphere_right, "hemisphere-right"},
        {Category::ventricles, "ventricles"},
    };
    return names;
}

inline std::string to_string(Category c) {
    for (const auto& [cat, name] : category_names())
        if (cat == c)
            return name;
    return "?";
}

inline Category category_from_string(const std::string& name) {
    for (const auto& [cat, name_] : category_names())
        if (name_ == name)
            return cat;
    throw config_error("unknown label category '" + name + "'");
}

/// Binds category names to sets of integer parcellation labels. Categories
/// may be absent; requesting an absent one fails at use time, so a map can
/// omit e.g. "ventricles" if no CSF texture will ever be synthesized from it.
class LabelCategoryMap {
public:
    LabelCategoryMap() = default;

    void set(Category c, std::set<std::int32_t> labels) { sets_[c] = std::move(labels); }

    bool has(Category c) const { return sets_.count(c) != 0; }

    /// Label set for a category; config_error if the category was never defined.
    const std::set<std::int32_t>& labels(Category c) const {
        auto it = sets_.find(c);
        if (it == sets_.end())
            throw config_error("label map does not define category '" + to_string(c) + "'");
        return it->second;
    }

    /// Background must not share labels with any tissue category, and the
    /// left/right variants of a category must be disjoint.
    void validate() const {
        auto check_disjoint = [&](Category a, Category b) {
            if (!has(a) || !has(b))
                return;
            for (std::int32_t label : sets_.at(a))
                if (sets_.at(b).count(label))
                    throw config_error("label " + std::to_string(label) + " appears in both '" +
                                       to_string(a) + "' and '" + to_string(b) + "'");
        };
        for (const auto& [cat, name] : category_names())
            if (cat != Category::background)
                check_disjoint(Category::background, cat);
        check_disjoint(Category::gm_left, Category::gm_right);
        check_disjoint(Category::hemisphere_left, Category::hemisphere_right);
    }

private:
    std::map<Category, std::set<std::int32_t>> sets_;
};

/// Parse a label map from JSON: an object mapping category names to integer
/// arrays. An optional "names" object (label id -> human-readable string) is
/// accepted and ignored; any other key is rejected.
inline LabelCategoryMap parse_labelmap(const std::string& text, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error(source + ": " + e.what());
    }
    if (!doc.is_object())
        throw config_error(source + ": label map must be a JSON object");

    LabelCategoryMap map;
    for (const auto& [key, value] : doc.items()) {
        if (key == "names")
            continue;
        const Category cat = [&] {
            try {
                return category_from_string(key);
            } catch (const config_error&) {
                throw config_error(source + ": unknown label category '" + key + "'");
            }
        }();
        if (!value.is_array())
            throw config_error(source + ": category '" + key + "' must be an integer array");
        std::set<std::int32_t> labels;
        for (const auto& item : value) {
            if (!item.is_number_integer())
                throw config_error(source + ": category '" + key + "' has a non-integer entry");
            labels.insert(item.get<std::int32_t>());
        }
        map.set(cat, std::move(labels));
    }
    try {
        map.validate();
    } catch (const config_error& e) {
        throw config_error(source + ": " + e.what());
    }
    return map;
}

inline LabelCategoryMap read_labelmap(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open label map '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_labelmap(text, path);
}

/// Mask of voxels whose label belongs to the union of the given categories.
/// A defined-but-empty category yields an all-zero mask; if `warnings` is
/// given, a note about the empty set is appended to it.
inline BinaryMask category_mask(const LabelVolume& parcellation, const LabelCategoryMap& map,
                                const std::vector<Category>& categories,
                                std::vector<std::string>* warnings = nullptr) {
    std::set<std::int32_t> wanted;
    for (Category c : categories) {
        const auto& labels = map.labels(c);
        if (labels.empty() && warnings)
            warnings->push_back("category '" + to_string(c) + "' has an empty label set");
        wanted.insert(labels.begin(), labels.end());
    }
    BinaryMask out(parcellation.grid);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = wanted.count(parcellation[i]) ? 1 : 0;
    return out;
}

} // namespace cavisim
