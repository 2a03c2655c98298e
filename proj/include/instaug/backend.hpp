#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "instaug/error.hpp"
#include "instaug/image.hpp"

namespace instaug {

enum class BackendKind { inpaint, depth, edge, vqa, nsfw, saliency };

inline const char* backend_kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::inpaint: return "inpaint";
        case BackendKind::depth: return "depth";
        case BackendKind::edge: return "edge";
        case BackendKind::vqa: return "vqa";
        case BackendKind::nsfw: return "nsfw";
        case BackendKind::saliency: return "saliency";
    }
    return "unknown";
}

inline std::optional<BackendKind> backend_kind_from_name(std::string_view name) {
    if (name == "inpaint") return BackendKind::inpaint;
    if (name == "depth") return BackendKind::depth;
    if (name == "edge") return BackendKind::edge;
    if (name == "vqa") return BackendKind::vqa;
    if (name == "nsfw") return BackendKind::nsfw;
    if (name == "saliency") return BackendKind::saliency;
    return std::nullopt;
}

struct BackendDescriptor {
    BackendKind kind = BackendKind::inpaint;
    std::string name;
    bool deterministic = true;
    // How many requests the backend accepts concurrently; the pipeline
    // throttles itself to this.
    int max_in_flight = 1;
};

// Identifies the work item a request belongs to. Optional everywhere; used
// for logging, fault injection in tests and remote-side tracing.
struct RequestContext {
    std::string image_id;
    std::string instance_id;
    int variant_index = -1;
};

// Everything a generative fill needs: the image to fill, where to fill it,
// how to condition the result and the seed that makes it reproducible.
struct GenerationRequest {
    ImageRgb base_image;
    Mask mask;
    std::string prompt_text;
    MapF depth_control;
    MapF edge_control;
    std::uint64_t seed = 0;
    std::string negative_hint;
    RequestContext context;

    void validate() const {
        if (base_image.empty()) throw DimensionError("generation request without an image");
        if (mask.width() != base_image.width() || mask.height() != base_image.height()) {
            throw DimensionError("generation mask size does not match the image");
        }
        if (!depth_control.empty() &&
            (depth_control.width() != base_image.width() ||
             depth_control.height() != base_image.height())) {
            throw DimensionError("depth control size does not match the image");
        }
        if (!edge_control.empty() &&
            (edge_control.width() != base_image.width() ||
             edge_control.height() != base_image.height())) {
            throw DimensionError("edge control size does not match the image");
        }
    }
};

class InpaintBackend {
public:
    virtual ~InpaintBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // Returns an image of the same size as the request's base image.
    virtual ImageRgb inpaint(const GenerationRequest& request) = 0;
};

class DepthBackend {
public:
    virtual ~DepthBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // Non-negative per-pixel depth, larger values farther from the camera.
    virtual MapF estimate_depth(const ImageRgb& image) = 0;
};

class EdgeBackend {
public:
    virtual ~EdgeBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // Edge strength in [0, 1] per pixel.
    virtual MapF detect_edges(const ImageRgb& image) = 0;
};

class VqaBackend {
public:
    virtual ~VqaBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // Free-form answer; empty string means the model had no answer.
    virtual std::string answer(const ImageRgb& image, const std::string& question) = 0;
};

struct NsfwVerdict {
    bool passed = true;
    double score = 0.0;  // larger means more objectionable
};

class NsfwBackend {
public:
    virtual ~NsfwBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    virtual NsfwVerdict check(const ImageRgb& region) = 0;
};

class SaliencyBackend {
public:
    virtual ~SaliencyBackend() = default;
    virtual BackendDescriptor descriptor() const = 0;
    // Per-pixel salience in [0, 255], same size as the input.
    virtual ImageGray saliency(const ImageRgb& image) = 0;
};

}  // namespace instaug
