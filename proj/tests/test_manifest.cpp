#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "instaug/manifest.hpp"
#include "instaug/png_io.hpp"

using namespace instaug;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("instaug_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

VariantEntry make_entry(const std::string& img, const std::string& inst, int k) {
    VariantEntry e;
    e.image_id = img;
    e.instance_id = inst;
    e.variant_index = k;
    e.asset_path = "assets/" + img + "/" + inst + "_k" + std::to_string(k) + ".png";
    e.prompt_text = "thing, blue";
    e.seed = 0xABCDull + static_cast<std::uint64_t>(k);
    return e;
}

Dataset tiny_dataset() {
    Dataset ds;
    ds.dataset_id = "tiny";
    ImageRecord rec;
    rec.image_id = "img1";
    rec.width = 4;
    rec.height = 4;
    Mask m(4, 4);
    m.at(1, 1) = 1;
    rec.instances.push_back(Instance::from_mask("a", "cup", std::move(m)));
    ds.images.push_back(std::move(rec));
    return ds;
}

}  // namespace

TEST_CASE("variant entries survive a JSON round-trip exactly", "[manifest]") {
    VariantEntry e = make_entry("img1", "a", 2);
    e.nsfw_attempts = 3;
    e.refined = true;
    e.refined_mask_path = "masks/img1/a_k2_refined.png";
    e.small_object = true;
    CHECK(entry_from_json(entry_to_json(e)) == e);

    VariantEntry kept;
    kept.image_id = "img1";
    kept.instance_id = "a";
    kept.variant_index = 0;
    kept.prompt_text = "cup";
    kept.seed = 7;
    kept.nsfw_attempts = 5;
    kept.kept_original = true;
    const nlohmann::json j = entry_to_json(kept);
    CHECK_FALSE(j.contains("asset"));
    CHECK(entry_from_json(j) == kept);
}

TEST_CASE("unknown manifest flags are rejected", "[manifest]") {
    nlohmann::json j = entry_to_json(make_entry("i", "x", 0));
    j["flags"].push_back("glittery");
    CHECK_THROWS_AS(entry_from_json(j), ParseError);
}

TEST_CASE("manifest file round-trip preserves everything", "[manifest]") {
    const fs::path dir = temp_dir("manifest_rt");
    VariantManifest m;
    m.dataset_id = "tiny";
    m.config_hash = "deadbeef00000000";
    m.generation_config = {{"variants_per_instance", 3}, {"master_seed", 42}};
    m.entries = {make_entry("img1", "a", 0), make_entry("img1", "a", 1),
                 make_entry("img2", "b", 0)};

    write_manifest(m, dir / "manifest.json");
    const VariantManifest back = read_manifest(dir / "manifest.json");
    CHECK(back.dataset_id == m.dataset_id);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.generation_config == m.generation_config);
    REQUIRE(back.entries.size() == 3);
    CHECK(back.entries[0] == m.entries[0]);
    CHECK(back.entries[2] == m.entries[2]);
    // No stray temp file is left behind.
    CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
}

TEST_CASE("rewriting a manifest replaces it atomically", "[manifest]") {
    const fs::path dir = temp_dir("manifest_rewrite");
    VariantManifest m;
    m.dataset_id = "tiny";
    m.config_hash = "c0ffee";
    m.entries = {make_entry("img1", "a", 0)};
    write_manifest(m, dir / "manifest.json");
    m.entries.push_back(make_entry("img1", "a", 1));
    write_manifest(m, dir / "manifest.json");
    CHECK(read_manifest(dir / "manifest.json").entries.size() == 2);
}

TEST_CASE("future manifest schemas are refused with VersionError", "[manifest]") {
    const fs::path dir = temp_dir("manifest_schema");
    {
        std::ofstream out(dir / "manifest.json");
        out << R"({"schema": 2, "dataset_id": "x", "config_hash": "y", "entries": []})";
    }
    CHECK_THROWS_AS(read_manifest(dir / "manifest.json"), VersionError);

    {
        std::ofstream out(dir / "manifest.json");
        out << R"({"dataset_id": "x", "config_hash": "y", "entries": []})";
    }
    CHECK_THROWS_AS(read_manifest(dir / "manifest.json"), ParseError);
    CHECK_THROWS_AS(read_manifest(dir / "missing.json"), IoError);
}

TEST_CASE("sort_entries orders by image, instance, then variant", "[manifest]") {
    std::vector<VariantEntry> entries = {make_entry("b", "x", 1), make_entry("a", "y", 0),
                                         make_entry("b", "x", 0), make_entry("a", "x", 2)};
    sort_entries(entries);
    CHECK(entries[0].image_id == "a");
    CHECK(entries[0].instance_id == "x");
    CHECK(entries[1].instance_id == "y");
    CHECK(entries[2].image_id == "b");
    CHECK(entries[2].variant_index == 0);
    CHECK(entries[3].variant_index == 1);
}

TEST_CASE("variant index groups and orders entries", "[manifest]") {
    VariantManifest m;
    m.entries = {make_entry("img1", "a", 2), make_entry("img1", "a", 0),
                 make_entry("img1", "b", 0), make_entry("img2", "a", 1)};
    const VariantIndex index(m);

    const auto* a = index.variants("img1", "a");
    REQUIRE(a != nullptr);
    REQUIRE(a->size() == 2);
    CHECK((*a)[0]->variant_index == 0);
    CHECK((*a)[1]->variant_index == 2);
    REQUIRE(index.variants("img1", "b") != nullptr);
    CHECK(index.variants("img1", "c") == nullptr);
    CHECK(index.variants("nope", "a") == nullptr);
}

TEST_CASE("manifest validation checks referential integrity", "[manifest]") {
    const fs::path dir = temp_dir("manifest_validate");
    const Dataset ds = tiny_dataset();

    VariantManifest m;
    m.dataset_id = "tiny";
    m.config_hash = "abc123";

    VariantEntry good = make_entry("img1", "a", 0);
    fs::create_directories((dir / good.asset_path).parent_path());
    {
        ImageRgb img(4, 4);
        img.fill(9);
        write_png(dir / good.asset_path, img);
    }
    m.entries.push_back(good);
    CHECK(validate_manifest(m, ds, dir).ok());

    SECTION("duplicate entry") {
        m.entries.push_back(good);
        const ValidationReport r = validate_manifest(m, ds, dir);
        REQUIRE(r.problems.size() == 1);
        CHECK(r.problems[0].find("duplicate") != std::string::npos);
    }
    SECTION("unknown ids") {
        m.entries.push_back(make_entry("ghost", "a", 0));
        VariantEntry bad_inst = make_entry("img1", "zz", 1);
        bad_inst.asset_path = good.asset_path;
        m.entries.push_back(bad_inst);
        const ValidationReport r = validate_manifest(m, ds, dir);
        REQUIRE(r.problems.size() == 2);
        CHECK(r.problems[0].find("unknown image id") != std::string::npos);
        CHECK(r.problems[1].find("unknown instance id") != std::string::npos);
    }
    SECTION("missing asset file") {
        VariantEntry gone = make_entry("img1", "a", 1);
        m.entries.push_back(gone);
        const ValidationReport r = validate_manifest(m, ds, dir);
        REQUIRE(r.problems.size() == 1);
        CHECK(r.problems[0].find("missing asset") != std::string::npos);
    }
    SECTION("kept_original must not carry an asset") {
        VariantEntry kept = make_entry("img1", "a", 1);
        kept.kept_original = true;
        kept.asset_path = good.asset_path;
        m.entries.push_back(kept);
        const ValidationReport r = validate_manifest(m, ds, dir);
        REQUIRE_FALSE(r.ok());
        CHECK(r.problems[0].find("kept_original") != std::string::npos);
    }
    SECTION("plain entry must carry an asset") {
        VariantEntry no_asset = make_entry("img1", "a", 1);
        no_asset.asset_path.clear();
        m.entries.push_back(no_asset);
        CHECK_FALSE(validate_manifest(m, ds, dir).ok());
    }
    SECTION("refined flag needs an existing refined mask") {
        VariantEntry refined = make_entry("img1", "a", 1);
        refined.asset_path = good.asset_path;
        refined.refined = true;
        m.entries.push_back(refined);
        const ValidationReport r1 = validate_manifest(m, ds, dir);
        REQUIRE(r1.problems.size() == 1);
        CHECK(r1.problems[0].find("disagree") != std::string::npos);

        m.entries.back().refined_mask_path = "masks/none.png";
        const ValidationReport r2 = validate_manifest(m, ds, dir);
        REQUIRE(r2.problems.size() == 1);
        CHECK(r2.problems[0].find("missing refined mask") != std::string::npos);
    }
    SECTION("dataset and hash checks") {
        m.dataset_id = "other";
        m.config_hash.clear();
        const ValidationReport r = validate_manifest(m, ds, dir);
        REQUIRE(r.problems.size() == 2);
        CHECK(r.problems[0].find("dataset_id") != std::string::npos);
        CHECK(r.problems[1].find("config_hash") != std::string::npos);
    }
}
