#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/image.hpp"
#include "instaug/png_io.hpp"

namespace instaug {

// Per-pixel distance from the camera; larger is farther.
struct DepthMap {
    MapF values;
};

// Per-pixel edge strength in [0, 1].
struct EdgeMap {
    MapF values;
};

struct SceneMaps {
    DepthMap depth;
    EdgeMap edge;
};

enum class DepthMode {
    sum,   // mask-weighted sum of depth values
    mean,  // the sum divided by the instance area
};

inline const char* depth_mode_name(DepthMode mode) {
    return mode == DepthMode::sum ? "sum" : "mean";
}

inline std::optional<DepthMode> depth_mode_from_name(std::string_view name) {
    if (name == "sum") return DepthMode::sum;
    if (name == "mean") return DepthMode::mean;
    return std::nullopt;
}

// Scalar depth of an instance: the depth image accumulated over the mask.
// sum mode weighs large objects heavier; mean mode is size-independent.
inline double instance_depth(const Mask& mask, const DepthMap& depth, DepthMode mode) {
    if (mask.width() != depth.values.width() || mask.height() != depth.values.height()) {
        throw DimensionError("instance mask and depth map differ in size");
    }
    double sum = 0.0;
    std::int64_t area = 0;
    for (int y = 0; y < mask.height(); ++y) {
        const std::uint8_t* m = mask.row(y);
        const float* d = depth.values.row(y);
        for (int x = 0; x < mask.width(); ++x) {
            if (m[x]) {
                sum += d[x];
                ++area;
            }
        }
    }
    if (area == 0) throw EmptyMaskError("instance mask has no set pixels");
    return mode == DepthMode::sum ? sum : sum / static_cast<double>(area);
}

// Back-to-front paint order: indices into `instances` sorted by descending
// depth score, ties broken by ascending instance id so the order is total.
inline std::vector<std::size_t> draw_order(std::span<const Instance> instances,
                                           const DepthMap& depth, DepthMode mode) {
    std::vector<double> scores(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        scores[i] = instance_depth(instances[i].mask, depth, mode);
    }
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return instances[a].instance_id < instances[b].instance_id;
    });
    return order;
}

// ---------------------------------------------------------------------------
// Disk cache: float maps quantized to 16-bit grayscale PNG plus a JSON
// sidecar holding the value range needed to dequantize.
// ---------------------------------------------------------------------------

namespace detail {

inline void save_quantized_map(const MapF& map, const std::filesystem::path& png_path,
                               const std::filesystem::path& sidecar_path) {
    float lo = map.at(0, 0);
    float hi = lo;
    for (int y = 0; y < map.height(); ++y) {
        const float* row = map.row(y);
        for (int x = 0; x < map.width(); ++x) {
            lo = std::min(lo, row[x]);
            hi = std::max(hi, row[x]);
        }
    }
    ImageGray16 q(map.width(), map.height());
    const double scale = hi > lo ? 65535.0 / (static_cast<double>(hi) - lo) : 0.0;
    for (int y = 0; y < map.height(); ++y) {
        const float* in = map.row(y);
        std::uint16_t* out = q.row(y);
        for (int x = 0; x < map.width(); ++x) {
            out[x] = static_cast<std::uint16_t>(std::llround((in[x] - lo) * scale));
        }
    }
    write_png(png_path, q);
    nlohmann::json sidecar{{"min", lo}, {"max", hi}};
    std::ofstream out(sidecar_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + sidecar_path.string() + " for writing");
    out << sidecar.dump() << '\n';
}

inline std::optional<MapF> load_quantized_map(const std::filesystem::path& png_path,
                                              const std::filesystem::path& sidecar_path) {
    if (!std::filesystem::exists(png_path) || !std::filesystem::exists(sidecar_path)) {
        return std::nullopt;
    }
    std::ifstream in(sidecar_path);
    if (!in) throw IoError("cannot open " + sidecar_path.string());
    nlohmann::json sidecar;
    try {
        in >> sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(sidecar_path.string() + ": " + e.what());
    }
    const double lo = sidecar.at("min").get<double>();
    const double hi = sidecar.at("max").get<double>();
    const ImageGray16 q = read_png_gray16(png_path);
    MapF map(q.width(), q.height());
    const double scale = hi > lo ? (hi - lo) / 65535.0 : 0.0;
    for (int y = 0; y < q.height(); ++y) {
        const std::uint16_t* in_row = q.row(y);
        float* out_row = map.row(y);
        for (int x = 0; x < q.width(); ++x) {
            out_row[x] = static_cast<float>(lo + in_row[x] * scale);
        }
    }
    return map;
}

}  // namespace detail

inline void save_scene_maps(const std::filesystem::path& dir, const std::string& image_id,
                            const SceneMaps& maps) {
    std::filesystem::create_directories(dir);
    const std::string base = path_safe_id(image_id);
    detail::save_quantized_map(maps.depth.values, dir / (base + ".depth.png"),
                               dir / (base + ".depth.json"));
    detail::save_quantized_map(maps.edge.values, dir / (base + ".edge.png"),
                               dir / (base + ".edge.json"));
}

inline std::optional<SceneMaps> load_scene_maps(const std::filesystem::path& dir,
                                                const std::string& image_id) {
    const std::string base = path_safe_id(image_id);
    auto depth = detail::load_quantized_map(dir / (base + ".depth.png"), dir / (base + ".depth.json"));
    if (!depth) return std::nullopt;
    auto edge = detail::load_quantized_map(dir / (base + ".edge.png"), dir / (base + ".edge.json"));
    if (!edge) return std::nullopt;
    return SceneMaps{DepthMap{std::move(*depth)}, EdgeMap{std::move(*edge)}};
}

// ---------------------------------------------------------------------------
// SceneAnalyzer: runs the depth and edge backends once per image, validating
// their output and caching it in memory and optionally on disk.
// ---------------------------------------------------------------------------

class SceneAnalyzer {
public:
    SceneAnalyzer(DepthBackend& depth, EdgeBackend& edge,
                  std::optional<std::filesystem::path> cache_dir = std::nullopt)
        : depth_(depth), edge_(edge), cache_dir_(std::move(cache_dir)) {}

    std::shared_ptr<const SceneMaps> analyze(const std::string& image_id, const ImageRgb& image) {
        {
            std::lock_guard lock(mutex_);
            if (const auto it = memory_.find(image_id); it != memory_.end()) {
                ++memory_hits_;
                return it->second;
            }
        }
        if (cache_dir_) {
            if (auto cached = load_scene_maps(*cache_dir_, image_id)) {
                if (cached->depth.values.same_size(cached->edge.values) &&
                    cached->depth.values.width() == image.width() &&
                    cached->depth.values.height() == image.height()) {
                    auto maps = std::make_shared<const SceneMaps>(std::move(*cached));
                    std::lock_guard lock(mutex_);
                    ++disk_hits_;
                    return memory_.try_emplace(image_id, std::move(maps)).first->second;
                }
                // Stale cache written for a different image size: recompute.
            }
        }

        SceneMaps maps;
        maps.depth.values = checked_depth(image_id, image);
        maps.edge.values = checked_edges(image_id, image);
        if (cache_dir_) save_scene_maps(*cache_dir_, image_id, maps);
        auto shared = std::make_shared<const SceneMaps>(std::move(maps));
        std::lock_guard lock(mutex_);
        ++backend_runs_;
        return memory_.try_emplace(image_id, std::move(shared)).first->second;
    }

    std::size_t memory_hits() const { return memory_hits_; }
    std::size_t disk_hits() const { return disk_hits_; }
    std::size_t backend_runs() const { return backend_runs_; }

private:
    static constexpr float kTolerance = 1e-5f;

    MapF checked_depth(const std::string& image_id, const ImageRgb& image) {
        MapF map = depth_.estimate_depth(image);
        if (map.width() != image.width() || map.height() != image.height()) {
            throw AnalysisError("depth backend \"" + depth_.descriptor().name +
                                "\" returned a map of the wrong size for image " + image_id);
        }
        for (int y = 0; y < map.height(); ++y) {
            float* row = map.row(y);
            for (int x = 0; x < map.width(); ++x) {
                if (!(row[x] >= -kTolerance) || std::isnan(row[x])) {
                    throw AnalysisError("depth backend \"" + depth_.descriptor().name +
                                        "\" returned a negative or invalid depth for image " +
                                        image_id);
                }
                row[x] = std::max(row[x], 0.0f);
            }
        }
        return map;
    }

    MapF checked_edges(const std::string& image_id, const ImageRgb& image) {
        MapF map = edge_.detect_edges(image);
        if (map.width() != image.width() || map.height() != image.height()) {
            throw AnalysisError("edge backend \"" + edge_.descriptor().name +
                                "\" returned a map of the wrong size for image " + image_id);
        }
        for (int y = 0; y < map.height(); ++y) {
            float* row = map.row(y);
            for (int x = 0; x < map.width(); ++x) {
                if (!(row[x] >= -kTolerance && row[x] <= 1.0f + kTolerance) || std::isnan(row[x])) {
                    throw AnalysisError("edge backend \"" + edge_.descriptor().name +
                                        "\" returned edge strength outside [0, 1] for image " +
                                        image_id);
                }
                row[x] = std::clamp(row[x], 0.0f, 1.0f);
            }
        }
        return map;
    }

    DepthBackend& depth_;
    EdgeBackend& edge_;
    std::optional<std::filesystem::path> cache_dir_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const SceneMaps>> memory_;
    std::size_t memory_hits_ = 0;
    std::size_t disk_hits_ = 0;
    std::size_t backend_runs_ = 0;
};

}  // namespace instaug
