#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "instaug/mock_backends.hpp"
#include "instaug/scene.hpp"

using namespace instaug;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("instaug_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Instance box_instance(const std::string& id, int w, int h, Rect r) {
    Mask m(w, h);
    for (int y = r.y0; y <= r.y1; ++y) {
        for (int x = r.x0; x <= r.x1; ++x) m.at(x, y) = 1;
    }
    return Instance::from_mask(id, "thing", std::move(m));
}

// Selection-style reference ordering: repeatedly pick the instance with the
// largest score, smallest id among equals. Shares nothing with the sort in
// the library.
std::vector<std::size_t> reference_order(const std::vector<Instance>& instances,
                                         const DepthMap& depth, DepthMode mode) {
    std::vector<double> score;
    for (const auto& inst : instances) score.push_back(instance_depth(inst.mask, depth, mode));
    std::vector<bool> used(instances.size(), false);
    std::vector<std::size_t> order;
    for (std::size_t round = 0; round < instances.size(); ++round) {
        std::size_t best = instances.size();
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (used[i]) continue;
            if (best == instances.size()) {
                best = i;
                continue;
            }
            if (score[i] > score[best] ||
                (score[i] == score[best] && instances[i].instance_id < instances[best].instance_id)) {
                best = i;
            }
        }
        used[best] = true;
        order.push_back(best);
    }
    return order;
}

class FunctionDepth : public DepthBackend {
public:
    explicit FunctionDepth(std::function<MapF(const ImageRgb&)> fn) : fn_(std::move(fn)) {}
    BackendDescriptor descriptor() const override { return {BackendKind::depth, "fn-depth", true, 4}; }
    MapF estimate_depth(const ImageRgb& image) override {
        ++calls;
        return fn_(image);
    }
    int calls = 0;

private:
    std::function<MapF(const ImageRgb&)> fn_;
};

class FunctionEdge : public EdgeBackend {
public:
    explicit FunctionEdge(std::function<MapF(const ImageRgb&)> fn) : fn_(std::move(fn)) {}
    BackendDescriptor descriptor() const override { return {BackendKind::edge, "fn-edge", true, 4}; }
    MapF detect_edges(const ImageRgb& image) override {
        ++calls;
        return fn_(image);
    }
    int calls = 0;

private:
    std::function<MapF(const ImageRgb&)> fn_;
};

MapF constant_map(int w, int h, float v) {
    MapF m(w, h);
    m.fill(v);
    return m;
}

}  // namespace

TEST_CASE("instance_depth accumulates masked depth in sum and mean modes", "[scene]") {
    DepthMap depth{MapF(2, 2)};
    depth.values.at(0, 0) = 1.0f;
    depth.values.at(1, 0) = 2.0f;
    depth.values.at(0, 1) = 4.0f;
    depth.values.at(1, 1) = 8.0f;
    Mask m(2, 2);
    m.at(1, 0) = 1;
    m.at(0, 1) = 1;
    CHECK(instance_depth(m, depth, DepthMode::sum) == 6.0);
    CHECK(instance_depth(m, depth, DepthMode::mean) == 3.0);

    Mask empty(2, 2);
    CHECK_THROWS_AS(instance_depth(empty, depth, DepthMode::sum), EmptyMaskError);
    Mask wrong(3, 2);
    wrong.at(0, 0) = 1;
    CHECK_THROWS_AS(instance_depth(wrong, depth, DepthMode::sum), DimensionError);
}

TEST_CASE("sum mode weighs size while mean mode does not", "[scene]") {
    // A large near object and a small far object: by sum the large one wins,
    // by mean the far one wins.
    DepthMap depth{MapF(8, 8)};
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) depth.values.at(x, y) = x < 4 ? 1.0f : 10.0f;
    }
    std::vector<Instance> instances;
    instances.push_back(box_instance("big_near", 8, 8, {0, 0, 3, 3}));   // 16 px of depth 1
    instances.push_back(box_instance("small_far", 8, 8, {5, 5, 5, 5}));  // 1 px of depth 10

    const auto by_sum = draw_order(instances, depth, DepthMode::sum);
    CHECK(by_sum == std::vector<std::size_t>{0, 1});
    const auto by_mean = draw_order(instances, depth, DepthMode::mean);
    CHECK(by_mean == std::vector<std::size_t>{1, 0});
}

TEST_CASE("equal depth scores fall back to ascending instance id", "[scene]") {
    DepthMap depth{constant_map(4, 4, 2.0f)};
    std::vector<Instance> instances;
    instances.push_back(box_instance("b", 4, 4, {0, 0, 1, 1}));
    instances.push_back(box_instance("a", 4, 4, {2, 2, 3, 3}));
    instances.push_back(box_instance("c", 4, 4, {0, 2, 1, 3}));
    const auto order = draw_order(instances, depth, DepthMode::sum);
    CHECK(order == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("draw order matches a brute-force reference on random scenes", "[scene]") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<int> coord(0, 9);
    std::uniform_real_distribution<float> depth_value(0.0f, 5.0f);
    std::uniform_int_distribution<int> quantize(0, 1);

    for (int trial = 0; trial < 300; ++trial) {
        DepthMap depth{MapF(10, 10)};
        const bool coarse = quantize(rng) == 1;
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 10; ++x) {
                const float v = depth_value(rng);
                // Coarse maps force plenty of exact score ties.
                depth.values.at(x, y) = coarse ? std::floor(v) : v;
            }
        }
        std::vector<Instance> instances;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            const int x0 = coord(rng), y0 = coord(rng);
            const int x1 = std::min(9, x0 + coord(rng) / 3);
            const int y1 = std::min(9, y0 + coord(rng) / 3);
            instances.push_back(
                box_instance("inst" + std::to_string(i), 10, 10, {x0, y0, x1, y1}));
        }
        const DepthMode mode = trial % 2 ? DepthMode::mean : DepthMode::sum;
        REQUIRE(draw_order(instances, depth, mode) == reference_order(instances, depth, mode));
    }
}

TEST_CASE("positive rescaling of the depth map keeps the order", "[scene]") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<float> dv(0.1f, 3.0f);
    DepthMap depth{MapF(6, 6)};
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) depth.values.at(x, y) = dv(rng);
    }
    std::vector<Instance> instances;
    instances.push_back(box_instance("a", 6, 6, {0, 0, 2, 2}));
    instances.push_back(box_instance("b", 6, 6, {3, 3, 5, 5}));
    instances.push_back(box_instance("c", 6, 6, {1, 2, 4, 4}));

    const auto base = draw_order(instances, depth, DepthMode::sum);
    for (float k : {0.25f, 3.0f, 100.0f}) {
        DepthMap scaled{MapF(6, 6)};
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 6; ++x) scaled.values.at(x, y) = depth.values.at(x, y) * k;
        }
        CHECK(draw_order(instances, scaled, DepthMode::sum) == base);
        CHECK(draw_order(instances, scaled, DepthMode::mean) ==
              draw_order(instances, depth, DepthMode::mean));
    }
}

TEST_CASE("quantized float maps round-trip within the quantization step", "[scene]") {
    const fs::path dir = temp_dir("scene_quant");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> dv(-3.0f, 42.0f);
    MapF map(20, 15);
    for (int y = 0; y < 15; ++y) {
        for (int x = 0; x < 20; ++x) map.at(x, y) = dv(rng);
    }
    detail::save_quantized_map(map, dir / "m.png", dir / "m.json");
    const auto back = detail::load_quantized_map(dir / "m.png", dir / "m.json");
    REQUIRE(back.has_value());
    REQUIRE(back->same_size(map));
    const float step = (42.0f - -3.0f) / 65535.0f;
    for (int y = 0; y < 15; ++y) {
        for (int x = 0; x < 20; ++x) {
            REQUIRE_THAT(back->at(x, y),
                         Catch::Matchers::WithinAbs(map.at(x, y), step));
        }
    }
}

TEST_CASE("constant maps survive quantization exactly", "[scene]") {
    const fs::path dir = temp_dir("scene_const");
    const MapF map = constant_map(7, 5, 3.25f);
    detail::save_quantized_map(map, dir / "c.png", dir / "c.json");
    const auto back = detail::load_quantized_map(dir / "c.png", dir / "c.json");
    REQUIRE(back.has_value());
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) REQUIRE(back->at(x, y) == 3.25f);
    }
}

TEST_CASE("scene map cache misses return nullopt", "[scene]") {
    const fs::path dir = temp_dir("scene_miss");
    CHECK_FALSE(load_scene_maps(dir, "nope").has_value());
    // A PNG without its sidecar is treated as absent, not as an error.
    const MapF map = constant_map(3, 3, 1.0f);
    detail::save_quantized_map(map, dir / "x.depth.png", dir / "x.depth.json");
    fs::remove(dir / "x.depth.json");
    CHECK_FALSE(detail::load_quantized_map(dir / "x.depth.png", dir / "x.depth.json").has_value());
}

TEST_CASE("scene analysis caches in memory and on disk", "[scene]") {
    const fs::path dir = temp_dir("scene_cache");
    ImageRgb image(6, 4);
    image.fill(100);

    FunctionDepth depth([](const ImageRgb& im) { return constant_map(im.width(), im.height(), 2.0f); });
    FunctionEdge edge([](const ImageRgb& im) { return constant_map(im.width(), im.height(), 0.5f); });

    {
        SceneAnalyzer analyzer(depth, edge, dir);
        const auto first = analyzer.analyze("img", image);
        CHECK(analyzer.backend_runs() == 1);
        CHECK(first->depth.values.at(0, 0) == 2.0f);
        const auto second = analyzer.analyze("img", image);
        CHECK(second.get() == first.get());
        CHECK(analyzer.memory_hits() == 1);
        CHECK(depth.calls == 1);
        CHECK(edge.calls == 1);
    }
    {
        // A fresh analyzer over the same cache directory reads from disk.
        SceneAnalyzer analyzer(depth, edge, dir);
        const auto maps = analyzer.analyze("img", image);
        CHECK(analyzer.disk_hits() == 1);
        CHECK(analyzer.backend_runs() == 0);
        CHECK(depth.calls == 1);
        CHECK_THAT(maps->edge.values.at(3, 2), Catch::Matchers::WithinAbs(0.5f, 1e-6));
    }
    {
        // Stale cache entries for a different image size are recomputed.
        ImageRgb larger(9, 9);
        larger.fill(10);
        SceneAnalyzer analyzer(depth, edge, dir);
        analyzer.analyze("img", larger);
        CHECK(analyzer.disk_hits() == 0);
        CHECK(analyzer.backend_runs() == 1);
        CHECK(depth.calls == 2);
    }
}

TEST_CASE("scene analysis validates backend output", "[scene]") {
    ImageRgb image(4, 4);
    image.fill(50);

    FunctionDepth bad_size([](const ImageRgb&) { return constant_map(2, 2, 1.0f); });
    FunctionEdge good_edge([](const ImageRgb& im) { return constant_map(im.width(), im.height(), 0.0f); });
    SceneAnalyzer a1(bad_size, good_edge);
    CHECK_THROWS_AS(a1.analyze("x", image), AnalysisError);

    FunctionDepth negative([](const ImageRgb& im) { return constant_map(im.width(), im.height(), -2.0f); });
    SceneAnalyzer a2(negative, good_edge);
    CHECK_THROWS_AS(a2.analyze("x", image), AnalysisError);

    FunctionDepth good_depth([](const ImageRgb& im) { return constant_map(im.width(), im.height(), 1.0f); });
    FunctionEdge hot_edge([](const ImageRgb& im) { return constant_map(im.width(), im.height(), 1.5f); });
    SceneAnalyzer a3(good_depth, hot_edge);
    CHECK_THROWS_AS(a3.analyze("x", image), AnalysisError);

    // Values inside the tolerance band are clamped, not rejected.
    FunctionDepth tiny_negative(
        [](const ImageRgb& im) { return constant_map(im.width(), im.height(), -0.5e-5f); });
    FunctionEdge slosh_edge(
        [](const ImageRgb& im) { return constant_map(im.width(), im.height(), 1.0f + 0.5e-5f); });
    SceneAnalyzer a4(tiny_negative, slosh_edge);
    const auto maps = a4.analyze("x", image);
    CHECK(maps->depth.values.at(0, 0) == 0.0f);
    CHECK(maps->edge.values.at(0, 0) == 1.0f);
}

TEST_CASE("bundled mock depth and edge backends produce valid maps", "[scene]") {
    ImageRgb image(8, 6);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 8; ++x) {
            image.at(x, y, 0) = static_cast<std::uint8_t>(x * 30);
            image.at(x, y, 1) = static_cast<std::uint8_t>(y * 40);
            image.at(x, y, 2) = 7;
        }
    }
    MockDepthEstimator depth;
    MockEdgeDetector edge;
    SceneAnalyzer analyzer(depth, edge);
    const auto maps = analyzer.analyze("img", image);
    // The synthetic depth ramp decreases from the top row downward, so a top
    // strip scores deeper than a bottom strip of the same size.
    CHECK(maps->depth.values.at(0, 0) > maps->depth.values.at(0, 5));
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 8; ++x) {
            REQUIRE(maps->edge.values.at(x, y) >= 0.0f);
            REQUIRE(maps->edge.values.at(x, y) <= 1.0f);
        }
    }
}
