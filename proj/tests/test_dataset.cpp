#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "instaug/coco.hpp"
#include "instaug/dataset.hpp"
#include "instaug/mock_backends.hpp"
#include "instaug/png_io.hpp"
#include "instaug/saliency_dataset.hpp"
#include "instaug/voc.hpp"

using namespace instaug;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("instaug_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Mask random_mask(int w, int h, std::uint64_t seed, double p = 0.4) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    Mask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.at(x, y) = coin(rng) ? 1 : 0;
    }
    return m;
}

void write_solid_png(const fs::path& path, int w, int h, std::uint8_t v) {
    ImageRgb img(w, h);
    img.fill(v);
    write_png(path, img);
}

// Crossing-number point-in-polygon test, written against the geometric
// definition rather than the scanline code: a center is inside when an odd
// number of edge crossings lie strictly to its right.
bool center_inside(const std::vector<double>& poly, double cx, double cy) {
    const std::size_t n = poly.size() / 2;
    int crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double py = poly[2 * i + 1];
        const double qy = poly[2 * j + 1];
        if ((py <= cy && qy > cy) || (qy <= cy && py > cy)) {
            const double px = poly[2 * i];
            const double qx = poly[2 * j];
            const double xc = px + (cy - py) * (qx - px) / (qy - py);
            if (xc > cx) ++crossings;
        }
    }
    return (crossings % 2) == 1;
}

}  // namespace

TEST_CASE("path_safe_id keeps safe ids and disambiguates unsafe ones", "[dataset]") {
    CHECK(path_safe_id("image_001.png") == "image_001.png");
    CHECK(path_safe_id("COCO-12") == "COCO-12");

    const std::string a = path_safe_id("a/b");
    const std::string b = path_safe_id("a:b");
    CHECK(a.substr(0, 3) == "a_b");
    CHECK(a != b);
    CHECK(a.find('/') == std::string::npos);
    CHECK(b.find(':') == std::string::npos);
    // Replacements append a fixed-width hash suffix.
    CHECK(a.size() == 3 + 1 + 7);
    CHECK(path_safe_id("").size() == 1 + 7);
}

TEST_CASE("normalize_label trims and lowercases", "[dataset]") {
    CHECK(normalize_label("  Cup ") == "cup");
    CHECK(normalize_label("PERSON") == "person");
    CHECK(normalize_label("dining table") == "dining table");
    CHECK(normalize_label("\t\n") == "");
}

TEST_CASE("binarize is strictly greater-than", "[dataset]") {
    ImageGray g(3, 1);
    g.at(0, 0) = 126;
    g.at(1, 0) = 127;
    g.at(2, 0) = 128;
    const Mask m = binarize(g, 127);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(1, 0) == 0);
    CHECK(m.at(2, 0) == 1);
}

TEST_CASE("bounding_rect and mask_area derive geometry from pixels", "[dataset]") {
    Mask m(10, 8);
    m.at(3, 2) = 1;
    m.at(7, 5) = 1;
    const Rect r = bounding_rect(m);
    CHECK(r.x0 == 3);
    CHECK(r.y0 == 2);
    CHECK(r.x1 == 7);
    CHECK(r.y1 == 5);
    CHECK(mask_area(m) == 2);

    Mask empty(4, 4);
    CHECK(mask_area(empty) == 0);
    CHECK_THROWS_AS(bounding_rect(empty), EmptyMaskError);
}

TEST_CASE("Instance::from_mask normalizes the label and derives bbox/area", "[dataset]") {
    Mask m(6, 6);
    m.at(1, 1) = 1;
    m.at(2, 1) = 1;
    m.at(2, 3) = 1;
    const Instance inst = Instance::from_mask("7", " Dog ", std::move(m));
    CHECK(inst.instance_id == "7");
    CHECK(inst.class_label == "dog");
    CHECK(inst.area == 3);
    CHECK(inst.bbox.x0 == 1);
    CHECK(inst.bbox.y0 == 1);
    CHECK(inst.bbox.x1 == 2);
    CHECK(inst.bbox.y1 == 3);
}

TEST_CASE("run-length counts follow column-major order", "[dataset][rle]") {
    // Only pixel (x=0, y=1) set in a 2x2 mask. Column-major traversal visits
    // (0,0),(0,1),(1,0),(1,1), so runs are 1 off, 1 on, 2 off.
    Mask m(2, 2);
    m.at(0, 1) = 1;
    const std::vector<std::uint32_t> counts = rle_counts_from_mask(m);
    REQUIRE(counts == std::vector<std::uint32_t>{1, 1, 2});
    CHECK(mask_from_rle_counts(counts, 2, 2) == m);
}

TEST_CASE("run-length string encoding matches frozen reference pairs", "[dataset][rle]") {
    // Both pairs were produced by executing the published 6-bit scheme by
    // hand and cross-checked against an independent transcription.
    const std::vector<std::uint32_t> v1{6, 1, 40, 4, 5};
    CHECK(rle_counts_to_string(v1) == "61X13mN");
    CHECK(rle_counts_from_string("61X13mN") == v1);
    CHECK(mask_from_rle_counts(v1, 8, 7).width() == 7);

    const std::vector<std::uint32_t> v2{0, 3, 10, 2, 80, 1, 31, 5, 33};
    CHECK(rle_counts_to_string(v2) == "03:OV2O_N42");
    CHECK(rle_counts_from_string("03:OV2O_N42") == v2);
}

TEST_CASE("run-length mask and string round-trip on random masks", "[dataset][rle]") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const int w = 1 + static_cast<int>(seed % 13);
        const int h = 1 + static_cast<int>((seed * 7) % 17);
        const Mask m = random_mask(w, h, seed);
        const auto counts = rle_counts_from_mask(m);
        REQUIRE(mask_from_rle_counts(counts, h, w) == m);
        REQUIRE(rle_counts_from_string(rle_counts_to_string(counts)) == counts);
    }
}

TEST_CASE("run-length validation failures raise ParseError", "[dataset][rle]") {
    const std::vector<std::uint32_t> wrong_sum{3, 2};
    CHECK_THROWS_AS(mask_from_rle_counts(wrong_sum, 2, 2), ParseError);
    CHECK_THROWS_AS(rle_counts_from_string("a\x01"), ParseError);
    // A lone continuation character has no terminating chunk.
    CHECK_THROWS_AS(rle_counts_from_string("Q"), ParseError);
}

TEST_CASE("polygon fill of an axis-aligned square covers exactly the interior centers",
          "[dataset][polygon]") {
    Mask m(6, 6);
    fill_polygon(m, std::vector<double>{1, 1, 4, 1, 4, 4, 1, 4});
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
            const bool expect = x >= 1 && x <= 3 && y >= 1 && y <= 3;
            REQUIRE(static_cast<bool>(m.at(x, y)) == expect);
        }
    }
    CHECK(mask_area(m) == 9);
}

TEST_CASE("polygon fill agrees with a point-in-polygon oracle on random polygons",
          "[dataset][polygon]") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> coord(-2.0, 18.0);
    std::uniform_int_distribution<int> vertices(3, 9);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = vertices(rng);
        std::vector<double> poly;
        for (int i = 0; i < n; ++i) {
            poly.push_back(coord(rng));
            poly.push_back(coord(rng));
        }
        Mask m(16, 16);
        fill_polygon(m, poly);
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                const bool expect = center_inside(poly, x + 0.5, y + 0.5);
                INFO("trial " << trial << " pixel " << x << "," << y);
                REQUIRE(static_cast<bool>(m.at(x, y)) == expect);
            }
        }
    }
}

TEST_CASE("multiple polygon rings are unioned", "[dataset][polygon]") {
    const Mask m = mask_from_polygons(
        {{0, 0, 3, 0, 3, 3, 0, 3}, {5, 5, 8, 5, 8, 8, 5, 8}}, 10, 10);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(6, 6) == 1);
    CHECK(m.at(4, 4) == 0);
    CHECK(mask_area(m) == 18);
}

TEST_CASE("detection JSON loader builds records and derives geometry", "[dataset][coco]") {
    const fs::path dir = temp_dir("coco_ok");
    write_solid_png(dir / "a.png", 8, 7, 10);
    write_solid_png(dir / "b.png", 5, 5, 20);

    nlohmann::json j;
    j["categories"] = {{{"id", 1}, {"name", "Cup"}}, {{"id", 2}, {"name", "dog"}}};
    j["images"] = {
        {{"id", 11}, {"file_name", "a.png"}, {"width", 8}, {"height", 7}},
        {{"id", "img-b"}, {"file_name", "b.png"}, {"width", 5}, {"height", 5}},
    };
    // bbox/area fields are deliberately nonsense: geometry must come from masks.
    j["annotations"] = {
        {{"id", 1},
         {"image_id", 11},
         {"category_id", 1},
         {"bbox", {999, 999, 1, 1}},
         {"area", 12345},
         {"segmentation", {{1, 1, 4, 1, 4, 4, 1, 4}}}},
        {{"id", 2},
         {"image_id", "img-b"},
         {"category_id", 2},
         {"segmentation",
          {{"size", {5, 5}}, {"counts", {6, 2, 3, 2, 12}}}}},
        {{"id", 3},
         {"image_id", "img-b"},
         {"category_id", 2},
         {"segmentation",
          {{"size", {5, 5}},
           {"counts", rle_counts_to_string(std::vector<std::uint32_t>{6, 2, 3, 2, 12})}}}},
        {{"id", 4},
         {"image_id", 11},
         {"category_id", 1},
         {"segmentation", {{0.1, 0.1, 0.2, 0.1, 0.2, 0.2}}}},
    };
    {
        std::ofstream out(dir / "trainset.json");
        out << j.dump();
    }

    LoadReport report;
    const Dataset ds = load_coco(dir / "trainset.json", dir, &report);
    CHECK(ds.dataset_id == "trainset");
    REQUIRE(ds.images.size() == 2);
    CHECK(ds.instance_count() == 3);

    const ImageRecord* a = ds.find_image("11");
    REQUIRE(a != nullptr);
    REQUIRE(a->instances.size() == 1);
    const Instance& square = a->instances[0];
    CHECK(square.class_label == "cup");
    CHECK(square.area == 9);
    CHECK(square.bbox.x0 == 1);
    CHECK(square.bbox.y1 == 3);

    const ImageRecord* b = ds.find_image("img-b");
    REQUIRE(b != nullptr);
    REQUIRE(b->instances.size() == 2);
    // Array and string run-length encodings of the same runs decode equally.
    CHECK(b->instances[0].mask == b->instances[1].mask);
    CHECK(b->instances[0].area == 4);

    // The degenerate polygon produced an empty mask and a warning.
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("annotation 4") != std::string::npos);
}

TEST_CASE("detection JSON loader failure modes", "[dataset][coco]") {
    const fs::path dir = temp_dir("coco_bad");
    write_solid_png(dir / "a.png", 4, 4, 10);

    nlohmann::json base;
    base["categories"] = {{{"id", 1}, {"name", "cat"}}};
    base["images"] = {{{"id", 1}, {"file_name", "a.png"}, {"width", 4}, {"height", 4}}};
    base["annotations"] = nlohmann::json::array();

    const auto write_and_load = [&](const nlohmann::json& j) {
        std::ofstream out(dir / "ann.json");
        out << j.dump();
        out.close();
        return load_coco(dir / "ann.json", dir);
    };

    SECTION("duplicate image ids") {
        nlohmann::json j = base;
        j["images"].push_back(j["images"][0]);
        CHECK_THROWS_AS(write_and_load(j), ParseError);
    }
    SECTION("unknown category") {
        nlohmann::json j = base;
        j["annotations"].push_back({{"id", 5},
                                    {"image_id", 1},
                                    {"category_id", 99},
                                    {"segmentation", {{0, 0, 3, 0, 3, 3}}}});
        CHECK_THROWS_MATCHES(write_and_load(j), ParseError,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                                 "annotation 5")));
    }
    SECTION("unknown image") {
        nlohmann::json j = base;
        j["annotations"].push_back({{"id", 6},
                                    {"image_id", 42},
                                    {"category_id", 1},
                                    {"segmentation", {{0, 0, 3, 0, 3, 3}}}});
        CHECK_THROWS_AS(write_and_load(j), ParseError);
    }
    SECTION("run-length size mismatch") {
        nlohmann::json j = base;
        j["annotations"].push_back(
            {{"id", 7},
             {"image_id", 1},
             {"category_id", 1},
             {"segmentation", {{"size", {9, 9}}, {"counts", {40, 1, 40}}}}});
        CHECK_THROWS_AS(write_and_load(j), ParseError);
    }
    SECTION("missing image file is fatal and names the path") {
        nlohmann::json j = base;
        j["images"].push_back(
            {{"id", 2}, {"file_name", "gone.png"}, {"width", 4}, {"height", 4}});
        CHECK_THROWS_MATCHES(write_and_load(j), LoadError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("gone.png")));
    }
    SECTION("malformed JSON") {
        std::ofstream out(dir / "ann.json");
        out << "{not json";
        out.close();
        CHECK_THROWS_AS(load_coco(dir / "ann.json", dir), ParseError);
    }
}

TEST_CASE("detection XML loader maps 1-based inclusive boxes to masks", "[dataset][voc]") {
    const fs::path dir = temp_dir("voc_ok");
    fs::create_directories(dir / "ann");
    fs::create_directories(dir / "img");
    write_solid_png(dir / "img" / "scene1.png", 10, 8, 30);
    {
        std::ofstream out(dir / "ann" / "scene1.xml");
        out << "<annotation><filename>scene1.png</filename>"
               "<size><width>10</width><height>8</height></size>"
               "<object><name>Dog</name><bndbox>"
               "<xmin>2</xmin><ymin>3</ymin><xmax>5</xmax><ymax>6</ymax>"
               "</bndbox></object>"
               "<object><name>cat</name><bndbox>"
               "<xmin>9</xmin><ymin>1</ymin><xmax>30</xmax><ymax>2</ymax>"
               "</bndbox></object>"
               "<object><name>bird</name><bndbox>"
               "<xmin>20</xmin><ymin>20</ymin><xmax>25</xmax><ymax>25</ymax>"
               "</bndbox></object>"
               "</annotation>";
    }

    LoadReport report;
    const Dataset ds = load_voc(dir / "ann", dir / "img", &report);
    REQUIRE(ds.images.size() == 1);
    const ImageRecord& rec = ds.images[0];
    CHECK(rec.image_id == "scene1");
    CHECK(rec.width == 10);
    CHECK(rec.height == 8);
    REQUIRE(rec.instances.size() == 2);

    // 1-based inclusive (2,3)-(5,6) becomes 0-based (1,2)-(4,5): a 4x4 box.
    const Instance& dog = rec.instances[0];
    CHECK(dog.instance_id == "0");
    CHECK(dog.class_label == "dog");
    CHECK(dog.bbox.x0 == 1);
    CHECK(dog.bbox.y0 == 2);
    CHECK(dog.bbox.x1 == 4);
    CHECK(dog.bbox.y1 == 5);
    CHECK(dog.area == 16);
    CHECK(dog.mask.at(1, 2) == 1);
    CHECK(dog.mask.at(0, 2) == 0);

    // The cat box sticks out of the image and is clamped.
    const Instance& cat = rec.instances[1];
    CHECK(cat.bbox.x1 == 9);
    CHECK(cat.area == 2 * 2);

    // The bird box lies fully outside: skipped with a warning.
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("empty box") != std::string::npos);
}

TEST_CASE("detection XML loader reports missing images once", "[dataset][voc]") {
    const fs::path dir = temp_dir("voc_missing");
    fs::create_directories(dir / "ann");
    fs::create_directories(dir / "img");
    {
        std::ofstream out(dir / "ann" / "x.xml");
        out << "<annotation><filename>x.png</filename>"
               "<size><width>4</width><height>4</height></size></annotation>";
    }
    CHECK_THROWS_MATCHES(load_voc(dir / "ann", dir / "img"), LoadError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("x.png")));
}

TEST_CASE("saliency loader binarizes maps and names objects via question answering",
          "[dataset][saliency]") {
    const fs::path dir = temp_dir("sal_ok");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "maps");

    write_solid_png(dir / "images" / "one.png", 8, 8, 100);
    {
        ImageGray map(8, 8);
        map.fill(0);
        for (int y = 2; y <= 4; ++y) {
            for (int x = 3; x <= 6; ++x) map.at(x, y) = 200;
        }
        // Midtone stays below the strict threshold.
        map.at(0, 0) = 127;
        write_png(dir / "maps" / "one.png", map);
    }
    write_solid_png(dir / "images" / "two.png", 6, 6, 50);
    {
        ImageGray map(6, 6);
        map.fill(0);
        write_png(dir / "maps" / "two.png", map);
    }

    MockVqa vqa;
    vqa.default_answer = " Swan ";
    LoadReport report;
    const Dataset ds = load_saliency_dataset(dir / "images", dir / "maps", vqa,
                                             kSaliencyBinarizeThreshold, kObjectNameQuestion,
                                             &report);
    REQUIRE(ds.images.size() == 2);
    const ImageRecord* one = ds.find_image("one");
    REQUIRE(one != nullptr);
    REQUIRE(one->instances.size() == 1);
    CHECK(one->instances[0].instance_id == "0");
    CHECK(one->instances[0].class_label == "swan");
    CHECK(one->instances[0].area == 12);
    CHECK(one->instances[0].bbox.x0 == 3);
    CHECK(one->instances[0].bbox.y1 == 4);
    CHECK(vqa.calls == 1);

    const ImageRecord* two = ds.find_image("two");
    REQUIRE(two != nullptr);
    CHECK(two->instances.empty());
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("two") != std::string::npos);
}

TEST_CASE("saliency loader falls back to a generic label when naming fails",
          "[dataset][saliency]") {
    const fs::path dir = temp_dir("sal_fallback");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "maps");
    write_solid_png(dir / "images" / "a.png", 4, 4, 10);
    {
        ImageGray map(4, 4);
        map.fill(255);
        write_png(dir / "maps" / "a.png", map);
    }

    MockVqa failing;
    failing.fail = true;
    LoadReport report;
    const Dataset ds = load_saliency_dataset(dir / "images", dir / "maps", failing);
    REQUIRE(ds.images.size() == 1);
    REQUIRE(ds.images[0].instances.size() == 1);
    CHECK(ds.images[0].instances[0].class_label == "object");
}

TEST_CASE("saliency loader collects structural problems into one error",
          "[dataset][saliency]") {
    const fs::path dir = temp_dir("sal_bad");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "maps");
    write_solid_png(dir / "images" / "no_map.png", 4, 4, 10);
    write_solid_png(dir / "images" / "wrong_size.png", 4, 4, 10);
    {
        ImageGray map(5, 5);
        map.fill(255);
        write_png(dir / "maps" / "wrong_size.png", map);
    }

    MockVqa vqa;
    vqa.default_answer = "thing";
    CHECK_THROWS_MATCHES(
        load_saliency_dataset(dir / "images", dir / "maps", vqa), LoadError,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("no_map.png") &&
            Catch::Matchers::ContainsSubstring("wrong_size.png")));
}
