#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/image.hpp"
#include "instaug/manifest.hpp"
#include "instaug/scene.hpp"

namespace instaug {

// ---------------------------------------------------------------------------
// Compositing
// ---------------------------------------------------------------------------

// Blend weight per pixel: the box average of the mask over a (2r+1)^2 window,
// normalized by the in-bounds window size. Radius 0 reproduces the mask
// itself, i.e. a hard cut.
inline MapF feather_alpha(const Mask& mask, int radius) {
    if (radius < 0) throw ConfigError("feather radius must be non-negative");
    MapF alpha(mask.width(), mask.height());
    if (radius == 0) {
        for (int y = 0; y < mask.height(); ++y) {
            const std::uint8_t* m = mask.row(y);
            float* a = alpha.row(y);
            for (int x = 0; x < mask.width(); ++x) a[x] = m[x] ? 1.0f : 0.0f;
        }
        return alpha;
    }
    // Summed-area table with one extra row/column of zeros.
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::int64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    const auto at = [&](int x, int y) -> std::int64_t& {
        return sat[static_cast<std::size_t>(y) * (w + 1) + x];
    };
    for (int y = 1; y <= h; ++y) {
        for (int x = 1; x <= w; ++x) {
            at(x, y) = (mask.at(x - 1, y - 1) ? 1 : 0) + at(x - 1, y) + at(x, y - 1) -
                       at(x - 1, y - 1);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int y0 = std::max(0, y - radius);
            const int x1 = std::min(w - 1, x + radius);
            const int y1 = std::min(h - 1, y + radius);
            const std::int64_t sum =
                at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
            const std::int64_t count = static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
            alpha.at(x, y) = static_cast<float>(static_cast<double>(sum) / count);
        }
    }
    return alpha;
}

// out = base outside the mask, top inside it. With radius 0 the copy is
// exact: pixels outside the mask are bit-identical to the base. A feather
// radius blends across the seam instead.
inline void composite_in_place(ImageRgb& base, const ImageRgb& top, const Mask& mask,
                               int feather_radius = 0) {
    require_same_size(base, top, "composite");
    if (mask.width() != base.width() || mask.height() != base.height()) {
        throw DimensionError("composite mask size does not match the images");
    }
    if (feather_radius == 0) {
        for (int y = 0; y < base.height(); ++y) {
            const std::uint8_t* m = mask.row(y);
            for (int x = 0; x < base.width(); ++x) {
                if (!m[x]) continue;
                for (int c = 0; c < 3; ++c) base.at(x, y, c) = top.at(x, y, c);
            }
        }
        return;
    }
    const MapF alpha = feather_alpha(mask, feather_radius);
    for (int y = 0; y < base.height(); ++y) {
        const float* a = alpha.row(y);
        for (int x = 0; x < base.width(); ++x) {
            if (a[x] == 0.0f) continue;
            if (a[x] == 1.0f) {
                for (int c = 0; c < 3; ++c) base.at(x, y, c) = top.at(x, y, c);
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                const double v = (1.0 - a[x]) * base.at(x, y, c) + a[x] * top.at(x, y, c);
                base.at(x, y, c) = static_cast<std::uint8_t>(std::llround(v));
            }
        }
    }
}

inline ImageRgb composite(const ImageRgb& base, const ImageRgb& top, const Mask& mask,
                          int feather_radius = 0) {
    ImageRgb out = base;
    composite_in_place(out, top, mask, feather_radius);
    return out;
}

// ---------------------------------------------------------------------------
// Variation counting: each of N instances is shown either as the original or
// as one of V generated variants, so a record yields (V+1)^N distinct frames.
// ---------------------------------------------------------------------------

inline boost::multiprecision::cpp_int count_variations(std::size_t instance_count,
                                                       std::size_t variants_per_instance) {
    using boost::multiprecision::cpp_int;
    cpp_int per_instance = cpp_int(variants_per_instance) + 1;
    cpp_int total = 1;
    for (std::size_t i = 0; i < instance_count; ++i) total *= per_instance;
    return total;
}

// ---------------------------------------------------------------------------
// Choice vectors: which variant (or the untouched original) each instance
// contributes to an assembled image.
// ---------------------------------------------------------------------------

struct ChoiceVector {
    static constexpr int kOriginal = -1;

    std::vector<int> choices;  // aligned with ImageRecord::instances

    static ChoiceVector all_original(std::size_t n) {
        ChoiceVector cv;
        cv.choices.assign(n, kOriginal);
        return cv;
    }

    bool all_original_choices() const {
        return std::all_of(choices.begin(), choices.end(),
                           [](int c) { return c == kOriginal; });
    }
};

using AssetLoader = std::function<ImageRgb(const VariantEntry&)>;

// Builds one training image: starts from the original pixels and composites
// the chosen variant of each instance in the given order (back to front).
// Instances left at kOriginal contribute nothing; annotations are untouched
// by construction since only pixels move.
inline ImageRgb assemble_image(const ImageRgb& original, const ImageRecord& record,
                               const VariantIndex& variants, const ChoiceVector& choice,
                               std::span<const std::size_t> order, const AssetLoader& load_asset,
                               int feather_radius = 0) {
    if (choice.choices.size() != record.instances.size()) {
        throw AssemblyError("choice vector length does not match the instance count");
    }
    if (order.size() != record.instances.size()) {
        throw AssemblyError("draw order length does not match the instance count");
    }
    ImageRgb canvas = original;
    for (const std::size_t idx : order) {
        if (idx >= record.instances.size()) throw AssemblyError("draw order index out of range");
        const int k = choice.choices[idx];
        if (k == ChoiceVector::kOriginal) continue;
        const Instance& inst = record.instances[idx];
        const auto* entries = variants.variants(record.image_id, inst.instance_id);
        const VariantEntry* entry = nullptr;
        if (entries) {
            for (const auto* e : *entries) {
                if (e->variant_index == k) {
                    entry = e;
                    break;
                }
            }
        }
        const std::string name =
            record.image_id + "/" + inst.instance_id + "/k" + std::to_string(k);
        if (!entry) throw AssemblyError("no manifest entry for " + name);
        if (entry->kept_original || entry->asset_path.empty()) {
            throw AssemblyError("entry " + name + " kept the original and has no asset");
        }
        ImageRgb asset;
        try {
            asset = load_asset(*entry);
        } catch (const Error& e) {
            throw AssemblyError("asset for " + name + " could not be loaded: " + e.what());
        }
        if (!asset.same_size(canvas)) {
            throw AssemblyError("asset for " + name + " has the wrong size");
        }
        composite_in_place(canvas, asset, inst.mask, feather_radius);
    }
    return canvas;
}

// ---------------------------------------------------------------------------
// Sequential full-frame redraw: each step hands the previous step's entire
// output back to the generator. Kept as the reference point that motivates
// compositing: errors outside the mask accumulate with every step.
// ---------------------------------------------------------------------------

inline ImageRgb iterative_redraw(const ImageRgb& original, const ImageRecord& record,
                                 std::span<const std::size_t> order,
                                 std::span<const std::string> prompts,
                                 std::span<const std::uint64_t> seeds, const SceneMaps& scene,
                                 InpaintBackend& inpaint) {
    if (prompts.size() != record.instances.size() || seeds.size() != record.instances.size()) {
        throw GenerationError("iterative redraw needs one prompt and one seed per instance");
    }
    ImageRgb current = original;
    for (const std::size_t idx : order) {
        if (idx >= record.instances.size()) {
            throw GenerationError("draw order index out of range");
        }
        GenerationRequest req;
        req.base_image = current;
        req.mask = record.instances[idx].mask;
        req.prompt_text = prompts[idx];
        req.depth_control = scene.depth.values;
        req.edge_control = scene.edge.values;
        req.seed = seeds[idx];
        req.context = {record.image_id, record.instances[idx].instance_id, 0};
        ImageRgb next = inpaint.inpaint(req);
        if (!next.same_size(current)) {
            throw GenerationError("generator returned a frame of the wrong size");
        }
        current = std::move(next);
    }
    return current;
}

// ---------------------------------------------------------------------------
// Small-object handling: generators lose tiny objects, so instances below an
// area threshold are generated inside an upscaled square crop around the
// object and mapped back afterwards.
// ---------------------------------------------------------------------------

struct CropPlacement {
    Rect region;        // square window in full-frame coordinates
    int scaled_w = 0;   // generation resolution of that window
    int scaled_h = 0;

    bool identity() const {
        return scaled_w == region.width() && scaled_h == region.height();
    }
};

struct SmallObjectSettings {
    // Strictly-below threshold on instance area, in pixels.
    std::int64_t area_threshold = 32 * 32;
    // The crop is upscaled until its short side reaches this many pixels.
    int min_generation_side = 512;
    // Context kept around the bounding box, in pixels on each side.
    int context_margin = 64;
};

inline bool needs_small_object_path(const Instance& instance, const SmallObjectSettings& s) {
    return instance.area < s.area_threshold;
}

// Square window around the instance: bounding box plus margin, clamped to
// the frame, then positioned to keep the object centered where possible.
inline CropPlacement plan_small_object_crop(int image_w, int image_h, const Instance& instance,
                                            const SmallObjectSettings& s) {
    const Rect& b = instance.bbox;
    int side = std::max(b.width(), b.height()) + 2 * s.context_margin;
    side = std::min(side, std::min(image_w, image_h));
    const int cx = (b.x0 + b.x1) / 2;
    const int cy = (b.y0 + b.y1) / 2;
    int x0 = std::clamp(cx - side / 2, 0, image_w - side);
    int y0 = std::clamp(cy - side / 2, 0, image_h - side);
    CropPlacement p;
    p.region = Rect{x0, y0, x0 + side - 1, y0 + side - 1};
    const double scale = std::max(1.0, static_cast<double>(s.min_generation_side) /
                                           std::min(p.region.width(), p.region.height()));
    p.scaled_w = static_cast<int>(std::lround(p.region.width() * scale));
    p.scaled_h = static_cast<int>(std::lround(p.region.height() * scale));
    return p;
}

// Builds the generation request for the crop: image and control maps are
// resampled bilinearly, the mask with nearest-neighbour so it stays binary.
inline GenerationRequest prepare_small_object(const ImageRgb& image, const Instance& instance,
                                              const SceneMaps& scene, const CropPlacement& p) {
    GenerationRequest req;
    req.base_image = resize_bilinear(crop(image, p.region), p.scaled_w, p.scaled_h);
    req.mask = resize_nearest(crop(instance.mask, p.region), p.scaled_w, p.scaled_h);
    if (mask_area(req.mask) == 0) {
        // Guard against a one-pixel object vanishing in the resample.
        const int mx = (instance.bbox.x0 + instance.bbox.x1) / 2 - p.region.x0;
        const int my = (instance.bbox.y0 + instance.bbox.y1) / 2 - p.region.y0;
        const double fx = static_cast<double>(p.scaled_w) / p.region.width();
        const double fy = static_cast<double>(p.scaled_h) / p.region.height();
        req.mask.at(std::clamp(static_cast<int>(mx * fx), 0, p.scaled_w - 1),
                    std::clamp(static_cast<int>(my * fy), 0, p.scaled_h - 1)) = 1;
    }
    if (!scene.depth.values.empty()) {
        req.depth_control = resize_bilinear(crop(scene.depth.values, p.region), p.scaled_w, p.scaled_h);
    }
    if (!scene.edge.values.empty()) {
        req.edge_control = resize_bilinear(crop(scene.edge.values, p.region), p.scaled_w, p.scaled_h);
    }
    return req;
}

// Maps a generated crop back into the full frame: the inverse of the crop
// plan (downscale to the window size, then place at the window origin).
inline ImageRgb paste_back(const ImageRgb& full_frame, const ImageRgb& generated,
                           const CropPlacement& p) {
    if (generated.width() != p.scaled_w || generated.height() != p.scaled_h) {
        throw DimensionError("generated crop does not match the planned resolution");
    }
    ImageRgb out = full_frame;
    paste(out, resize_bilinear(generated, p.region.width(), p.region.height()), p.region.x0,
          p.region.y0);
    return out;
}

// ---------------------------------------------------------------------------
// Mask refinement: re-segment the generated object from its own pixels so
// the stored annotation hugs what was actually drawn.
// ---------------------------------------------------------------------------

inline std::optional<Mask> refine_mask(const ImageRgb& asset, const Instance& instance,
                                       SaliencyBackend& saliency, int threshold = 127) {
    const ImageGray salience = saliency.saliency(crop(asset, instance.bbox));
    if (salience.width() != instance.bbox.width() || salience.height() != instance.bbox.height()) {
        throw AnalysisError("saliency backend returned a map of the wrong size");
    }
    const Mask refined_crop = binarize(salience, threshold);
    if (mask_area(refined_crop) == 0) return std::nullopt;
    Mask refined(asset.width(), asset.height());
    for (int y = 0; y < refined_crop.height(); ++y) {
        for (int x = 0; x < refined_crop.width(); ++x) {
            if (refined_crop.at(x, y)) refined.at(instance.bbox.x0 + x, instance.bbox.y0 + y) = 1;
        }
    }
    return refined;
}

// ---------------------------------------------------------------------------
// Variant generation for one record.
// ---------------------------------------------------------------------------

struct GenerateSettings {
    int variants_per_instance = 3;
    int max_attempts = 5;  // content-filter retries per variant
    SmallObjectSettings small_object;
    // Seed for a specific (instance, variant, attempt); attempt starts at 0.
    std::function<std::uint64_t(const Instance&, int, int)> seed_for;
    // Resume support: entries to skip because they already exist.
    std::function<bool(const std::string& instance_id, int variant_index)> skip;
};

struct VariantResult {
    std::string instance_id;
    int variant_index = 0;
    ImageRgb asset;  // full frame; empty when kept_original
    std::string prompt_text;
    std::uint64_t seed = 0;
    int nsfw_attempts = 1;
    bool kept_original = false;
    bool small_object = false;
};

// Called after each instance finishes so callers can persist incrementally.
using InstanceSink = std::function<void(const Instance&, std::vector<VariantResult>&&)>;

// Generates every variant of every instance of one record. Each variant is
// generated from the untouched original (never from another variant) and the
// stored asset is original-outside-mask / generated-inside-mask, so variants
// compose in any combination later. A variant whose generations are all
// rejected by the content filter becomes kept_original.
inline void generate_variants(const ImageRecord& record, const ImageRgb& image,
                              const SceneMaps& scene,
                              const std::vector<std::vector<std::string>>& prompts,
                              const GenerateSettings& settings, InpaintBackend& inpaint,
                              NsfwBackend& nsfw, const InstanceSink& sink) {
    if (prompts.size() != record.instances.size()) {
        throw GenerationError("prompt table does not match the instance count");
    }
    if (!settings.seed_for) throw ConfigError("generation needs a seed function");
    if (settings.variants_per_instance < 1) {
        throw ConfigError("variants_per_instance must be at least 1");
    }
    if (settings.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (image.width() != record.width || image.height() != record.height) {
        throw LoadError("image " + record.image_id + " does not match its recorded size");
    }

    for (std::size_t i = 0; i < record.instances.size(); ++i) {
        const Instance& inst = record.instances[i];
        if (static_cast<int>(prompts[i].size()) != settings.variants_per_instance) {
            throw GenerationError("instance " + inst.instance_id + " has " +
                                  std::to_string(prompts[i].size()) + " prompts, expected " +
                                  std::to_string(settings.variants_per_instance));
        }
        std::vector<VariantResult> results;
        const bool small = needs_small_object_path(inst, settings.small_object);
        for (int k = 0; k < settings.variants_per_instance; ++k) {
            if (settings.skip && settings.skip(inst.instance_id, k)) continue;
            VariantResult res;
            res.instance_id = inst.instance_id;
            res.variant_index = k;
            res.prompt_text = prompts[i][k];
            res.small_object = small;

            bool accepted = false;
            for (int attempt = 0; attempt < settings.max_attempts && !accepted; ++attempt) {
                res.seed = settings.seed_for(inst, k, attempt);
                res.nsfw_attempts = attempt + 1;

                ImageRgb candidate;
                if (small) {
                    const CropPlacement plan = plan_small_object_crop(
                        record.width, record.height, inst, settings.small_object);
                    GenerationRequest req = prepare_small_object(image, inst, scene, plan);
                    req.prompt_text = res.prompt_text;
                    req.seed = res.seed;
                    req.context = {record.image_id, inst.instance_id, k};
                    ImageRgb generated = inpaint.inpaint(req);
                    if (!generated.same_size(req.base_image)) {
                        throw GenerationError("generator returned a frame of the wrong size");
                    }
                    candidate = composite(image, paste_back(image, generated, plan), inst.mask);
                } else {
                    GenerationRequest req;
                    req.base_image = image;
                    req.mask = inst.mask;
                    req.prompt_text = res.prompt_text;
                    req.depth_control = scene.depth.values;
                    req.edge_control = scene.edge.values;
                    req.seed = res.seed;
                    req.context = {record.image_id, inst.instance_id, k};
                    ImageRgb generated = inpaint.inpaint(req);
                    if (!generated.same_size(image)) {
                        throw GenerationError("generator returned a frame of the wrong size");
                    }
                    candidate = composite(image, generated, inst.mask);
                }

                if (nsfw.check(crop(candidate, inst.bbox)).passed) {
                    res.asset = std::move(candidate);
                    accepted = true;
                }
            }
            res.kept_original = !accepted;
            results.push_back(std::move(res));
        }
        if (!results.empty() && sink) sink(inst, std::move(results));
    }
}

}  // namespace instaug
