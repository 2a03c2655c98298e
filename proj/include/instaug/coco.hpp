#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/image.hpp"

namespace instaug {

// ---------------------------------------------------------------------------
// Run-length masks, column-major with runs alternating background/foreground
// and the first run always counting background pixels.
// ---------------------------------------------------------------------------

inline Mask mask_from_rle_counts(std::span<const std::uint32_t> counts, int height, int width) {
    if (height < 1 || width < 1) throw DimensionError("run-length mask needs positive size");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    const std::uint64_t expected = static_cast<std::uint64_t>(height) * width;
    if (total != expected) {
        throw ParseError("run-length counts sum to " + std::to_string(total) + ", expected " +
                         std::to_string(expected));
    }
    Mask mask(width, height);
    std::uint64_t pos = 0;
    std::uint8_t value = 0;
    for (auto c : counts) {
        for (std::uint32_t i = 0; i < c; ++i, ++pos) {
            const int r = static_cast<int>(pos % height);
            const int col = static_cast<int>(pos / height);
            mask.at(col, r) = value;
        }
        value ^= 1;
    }
    return mask;
}

inline std::vector<std::uint32_t> rle_counts_from_mask(const Mask& mask) {
    std::vector<std::uint32_t> counts;
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (int col = 0; col < mask.width(); ++col) {
        for (int r = 0; r < mask.height(); ++r) {
            const std::uint8_t v = mask.at(col, r) ? 1 : 0;
            if (v == current) {
                ++run;
            } else {
                counts.push_back(run);
                current = v;
                run = 1;
            }
        }
    }
    counts.push_back(run);
    return counts;
}

// Compact string form of run-length counts: 6 bits per character offset from
// '0', low bits first, with runs after the third stored as deltas against the
// run two positions back.
inline std::string rle_counts_to_string(std::span<const std::uint32_t> counts) {
    std::string s;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        long long x = static_cast<long long>(counts[i]);
        if (i > 2) x -= static_cast<long long>(counts[i - 2]);
        bool more = true;
        while (more) {
            char c = static_cast<char>(x & 0x1f);
            x >>= 5;
            more = (c & 0x10) ? x != -1 : x != 0;
            if (more) c |= 0x20;
            s.push_back(static_cast<char>(c + 48));
        }
    }
    return s;
}

inline std::vector<std::uint32_t> rle_counts_from_string(std::string_view s) {
    std::vector<std::uint32_t> counts;
    std::size_t p = 0;
    while (p < s.size()) {
        long long x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= s.size()) throw ParseError("truncated run-length string");
            const char c = static_cast<char>(s[p] - 48);
            if (c < 0 || c > 63) throw ParseError("invalid character in run-length string");
            x |= static_cast<long long>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) x |= -1LL << (5 * k);
        }
        if (counts.size() > 2) x += static_cast<long long>(counts[counts.size() - 2]);
        if (x < 0) throw ParseError("negative run in run-length string");
        counts.push_back(static_cast<std::uint32_t>(x));
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Polygon rasterization: even-odd scanline fill sampled at pixel centers.
// ---------------------------------------------------------------------------

inline void fill_polygon(Mask& mask, std::span<const double> flat_xy) {
    const std::size_t n = flat_xy.size() / 2;
    if (n < 3) return;  // degenerate ring covers nothing
    std::vector<double> xs;
    for (int y = 0; y < mask.height(); ++y) {
        const double cy = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            const double py = flat_xy[2 * i + 1];
            const double qy = flat_xy[2 * j + 1];
            if ((py <= cy && qy > cy) || (qy <= cy && py > cy)) {
                const double px = flat_xy[2 * i];
                const double qx = flat_xy[2 * j];
                xs.push_back(px + (cy - py) * (qx - px) / (qy - py));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            int first = static_cast<int>(std::ceil(xs[i] - 0.5));
            int last = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            first = std::max(first, 0);
            last = std::min(last, mask.width() - 1);
            for (int x = first; x <= last; ++x) mask.at(x, y) = 1;
        }
    }
}

inline Mask mask_from_polygons(const std::vector<std::vector<double>>& polygons, int width,
                               int height) {
    Mask mask(width, height);
    for (const auto& poly : polygons) fill_polygon(mask, poly);
    return mask;
}

// ---------------------------------------------------------------------------
// Dataset loader for the common detection-annotation JSON layout: top-level
// "images", "annotations" and "categories" arrays, per-annotation
// "segmentation" given either as polygon rings or as a run-length object.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string json_id_to_string(const nlohmann::json& id) {
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<std::int64_t>());
    if (id.is_number_unsigned()) return std::to_string(id.get<std::uint64_t>());
    throw ParseError("identifier is neither a string nor an integer");
}

inline Mask mask_from_segmentation(const nlohmann::json& seg, int width, int height,
                                   const std::string& annotation_name) {
    if (seg.is_array()) {
        std::vector<std::vector<double>> polys;
        for (const auto& ring : seg) {
            if (!ring.is_array()) {
                throw ParseError(annotation_name + ": polygon segmentation must be a list of rings");
            }
            std::vector<double> flat;
            flat.reserve(ring.size());
            for (const auto& v : ring) flat.push_back(v.get<double>());
            if (flat.size() % 2 != 0) {
                throw ParseError(annotation_name + ": polygon ring has an odd number of values");
            }
            polys.push_back(std::move(flat));
        }
        return mask_from_polygons(polys, width, height);
    }
    if (seg.is_object()) {
        if (!seg.contains("size") || !seg.contains("counts")) {
            throw ParseError(annotation_name + ": run-length segmentation needs size and counts");
        }
        const auto& size = seg.at("size");
        if (!size.is_array() || size.size() != 2) {
            throw ParseError(annotation_name + ": run-length size must be [height, width]");
        }
        const int h = size.at(0).get<int>();
        const int w = size.at(1).get<int>();
        if (h != height || w != width) {
            throw ParseError(annotation_name + ": run-length size " + std::to_string(w) + "x" +
                             std::to_string(h) + " does not match image " + std::to_string(width) +
                             "x" + std::to_string(height));
        }
        const auto& counts = seg.at("counts");
        std::vector<std::uint32_t> runs;
        if (counts.is_string()) {
            runs = rle_counts_from_string(counts.get<std::string>());
        } else if (counts.is_array()) {
            for (const auto& v : counts) {
                const std::int64_t c = v.get<std::int64_t>();
                if (c < 0) throw ParseError(annotation_name + ": negative run length");
                runs.push_back(static_cast<std::uint32_t>(c));
            }
        } else {
            throw ParseError(annotation_name + ": counts must be a string or an array");
        }
        try {
            return mask_from_rle_counts(runs, h, w);
        } catch (const ParseError& e) {
            throw ParseError(annotation_name + ": " + e.what());
        }
    }
    throw ParseError(annotation_name + ": unsupported segmentation value");
}

}  // namespace detail

inline Dataset load_coco(const std::filesystem::path& annotation_file,
                         const std::filesystem::path& image_root, LoadReport* report = nullptr) {
    LoadReport fallback;
    LoadReport& rep = report ? *report : fallback;

    std::ifstream in(annotation_file);
    if (!in) throw IoError("cannot open " + annotation_file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(annotation_file.string() + ": " + e.what());
    }

    try {
        Dataset ds;
        ds.dataset_id = annotation_file.stem().string();

        std::map<std::string, std::string> categories;
        for (const auto& cat : j.value("categories", nlohmann::json::array())) {
            categories[detail::json_id_to_string(cat.at("id"))] =
                normalize_label(cat.at("name").get<std::string>());
        }

        std::map<std::string, std::size_t> image_index;
        for (const auto& img : j.value("images", nlohmann::json::array())) {
            ImageRecord rec;
            rec.image_id = detail::json_id_to_string(img.at("id"));
            rec.path = image_root / img.at("file_name").get<std::string>();
            rec.width = img.at("width").get<int>();
            rec.height = img.at("height").get<int>();
            if (rec.width < 1 || rec.height < 1) {
                throw ParseError("image " + rec.image_id + ": non-positive dimensions");
            }
            if (image_index.contains(rec.image_id)) {
                throw ParseError("duplicate image id " + rec.image_id);
            }
            image_index[rec.image_id] = ds.images.size();
            ds.images.push_back(std::move(rec));
        }

        for (const auto& ann : j.value("annotations", nlohmann::json::array())) {
            const std::string ann_id = detail::json_id_to_string(ann.at("id"));
            const std::string name = "annotation " + ann_id;
            const std::string image_id = detail::json_id_to_string(ann.at("image_id"));
            const auto rec_it = image_index.find(image_id);
            if (rec_it == image_index.end()) {
                throw ParseError(name + ": unknown image id " + image_id);
            }
            const std::string cat_id = detail::json_id_to_string(ann.at("category_id"));
            const auto cat_it = categories.find(cat_id);
            if (cat_it == categories.end()) {
                throw ParseError(name + ": unknown category id " + cat_id);
            }
            ImageRecord& rec = ds.images[rec_it->second];
            Mask mask = detail::mask_from_segmentation(ann.at("segmentation"), rec.width,
                                                       rec.height, name);
            if (mask_area(mask) == 0) {
                rep.warn(name + ": empty mask, skipped");
                continue;
            }
            rec.instances.push_back(Instance::from_mask(ann_id, cat_it->second, std::move(mask)));
        }

        std::vector<std::string> missing;
        for (const auto& rec : ds.images) {
            if (!std::filesystem::exists(rec.path)) missing.push_back(rec.path.string());
        }
        if (!missing.empty()) {
            std::string msg = "missing image files:";
            for (const auto& m : missing) msg += "\n  " + m;
            throw LoadError(msg);
        }
        return ds;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(annotation_file.string() + ": " + e.what());
    }
}

}  // namespace instaug
