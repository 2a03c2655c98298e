#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instaug/error.hpp"
#include "instaug/hash.hpp"
#include "instaug/image.hpp"

namespace instaug {

// Dataset identifiers are opaque strings and may contain characters that are
// unsafe in file names. This maps an id to a safe spelling, appending a short
// content hash whenever anything had to be replaced so distinct ids stay
// distinct on disk.
inline std::string path_safe_id(std::string_view id) {
    std::string out;
    bool changed = id.empty();
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
        changed |= !ok;
    }
    if (changed) {
        static constexpr char digits[] = "0123456789abcdef";
        std::uint64_t h = fnv1a64(id);
        out.push_back('-');
        for (int i = 60; i >= 36; i -= 4) out.push_back(digits[(h >> i) & 0xf]);
    }
    return out;
}

// Lowercase, whitespace-trimmed class labels so "Cup " and "cup" compare equal.
inline std::string normalize_label(std::string_view raw) {
    std::string s(raw);
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::int64_t mask_area(const Mask& mask) {
    std::int64_t n = 0;
    for (int y = 0; y < mask.height(); ++y) {
        const std::uint8_t* row = mask.row(y);
        for (int x = 0; x < mask.width(); ++x) n += row[x] != 0;
    }
    return n;
}

// Tight bounding rectangle of the set pixels.
inline Rect bounding_rect(const Mask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        const std::uint8_t* row = mask.row(y);
        for (int x = 0; x < mask.width(); ++x) {
            if (!row[x]) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) throw EmptyMaskError("mask has no set pixels");
    return Rect{x0, y0, x1, y1};
}

// Grayscale map to binary mask; strictly-greater keeps a 127 midtone out.
inline Mask binarize(const ImageGray& gray, int threshold = 127) {
    Mask mask(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y) {
        const std::uint8_t* in = gray.row(y);
        std::uint8_t* out = mask.row(y);
        for (int x = 0; x < gray.width(); ++x) out[x] = in[x] > threshold ? 1 : 0;
    }
    return mask;
}

// {0,1} mask to the {0,255} grayscale convention used on disk.
inline ImageGray mask_to_gray(const Mask& mask) {
    ImageGray out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        const std::uint8_t* in = mask.row(y);
        std::uint8_t* dst = out.row(y);
        for (int x = 0; x < mask.width(); ++x) dst[x] = in[x] ? 255 : 0;
    }
    return out;
}

// One annotated object: a binary mask plus the label and the geometry that is
// always derived from the mask, never trusted from the source file.
struct Instance {
    std::string instance_id;
    std::string class_label;
    Mask mask;
    Rect bbox;
    std::int64_t area = 0;

    static Instance from_mask(std::string instance_id, std::string class_label, Mask mask) {
        Instance inst;
        inst.instance_id = std::move(instance_id);
        inst.class_label = normalize_label(class_label);
        inst.bbox = bounding_rect(mask);  // throws EmptyMaskError on blank masks
        inst.area = mask_area(mask);
        inst.mask = std::move(mask);
        return inst;
    }
};

struct ImageRecord {
    std::string image_id;
    std::filesystem::path path;
    int width = 0;
    int height = 0;
    std::vector<Instance> instances;

    const Instance* find_instance(std::string_view instance_id) const {
        for (const auto& inst : instances) {
            if (inst.instance_id == instance_id) return &inst;
        }
        return nullptr;
    }
};

struct Dataset {
    std::string dataset_id;
    std::vector<ImageRecord> images;

    const ImageRecord* find_image(std::string_view image_id) const {
        for (const auto& rec : images) {
            if (rec.image_id == image_id) return &rec;
        }
        return nullptr;
    }

    std::size_t instance_count() const {
        std::size_t n = 0;
        for (const auto& rec : images) n += rec.instances.size();
        return n;
    }
};

// Non-fatal observations collected while loading (skipped annotations,
// substituted labels). Fatal problems throw instead.
struct LoadReport {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace instaug
