#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "instaug/dataset.hpp"
#include "instaug/error.hpp"

namespace instaug {

inline constexpr int kManifestSchema = 1;

// One generated variant of one instance. kept_original means every generation
// attempt was rejected and the pixels were left untouched; such entries have
// no asset.
struct VariantEntry {
    std::string image_id;
    std::string instance_id;
    int variant_index = 0;
    std::string asset_path;  // relative to the manifest directory
    std::string prompt_text;
    std::uint64_t seed = 0;
    int nsfw_attempts = 1;
    std::string refined_mask_path;  // relative; empty when not refined
    bool kept_original = false;
    bool refined = false;
    bool small_object = false;

    bool operator==(const VariantEntry&) const = default;
};

struct VariantManifest {
    std::string dataset_id;
    std::string config_hash;
    nlohmann::json generation_config = nlohmann::json::object();
    std::vector<VariantEntry> entries;
};

inline void sort_entries(std::vector<VariantEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const VariantEntry& a, const VariantEntry& b) {
        return std::tie(a.image_id, a.instance_id, a.variant_index) <
               std::tie(b.image_id, b.instance_id, b.variant_index);
    });
}

inline nlohmann::json entry_to_json(const VariantEntry& e) {
    nlohmann::json j{{"image_id", e.image_id},
                     {"instance_id", e.instance_id},
                     {"variant_index", e.variant_index},
                     {"prompt", e.prompt_text},
                     {"seed", e.seed},
                     {"nsfw_attempts", e.nsfw_attempts}};
    if (!e.asset_path.empty()) j["asset"] = e.asset_path;
    if (!e.refined_mask_path.empty()) j["refined_mask"] = e.refined_mask_path;
    std::vector<std::string> flags;
    if (e.kept_original) flags.push_back("kept_original");
    if (e.refined) flags.push_back("refined");
    if (e.small_object) flags.push_back("small_object");
    j["flags"] = flags;  // already alphabetical
    return j;
}

inline VariantEntry entry_from_json(const nlohmann::json& j) {
    VariantEntry e;
    e.image_id = j.at("image_id").get<std::string>();
    e.instance_id = j.at("instance_id").get<std::string>();
    e.variant_index = j.at("variant_index").get<int>();
    e.prompt_text = j.at("prompt").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.nsfw_attempts = j.at("nsfw_attempts").get<int>();
    e.asset_path = j.value("asset", "");
    e.refined_mask_path = j.value("refined_mask", "");
    for (const auto& flag : j.value("flags", nlohmann::json::array())) {
        const std::string f = flag.get<std::string>();
        if (f == "kept_original") e.kept_original = true;
        else if (f == "refined") e.refined = true;
        else if (f == "small_object") e.small_object = true;
        else throw ParseError("unknown manifest flag \"" + f + "\"");
    }
    return e;
}

// Writes the manifest atomically: the JSON goes to a sibling temp file that
// is renamed over the target, so readers never observe a half-written file
// and a crash leaves either the old or the new version.
inline void write_manifest(const VariantManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j{{"schema", kManifestSchema},
                     {"dataset_id", manifest.dataset_id},
                     {"config_hash", manifest.config_hash},
                     {"generation_config", manifest.generation_config}};
    auto entries = nlohmann::json::array();
    for (const auto& e : manifest.entries) entries.push_back(entry_to_json(e));
    j["entries"] = std::move(entries);

    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << j.dump(2) << '\n';
        out.flush();
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("failed to move " + tmp.string() + " into place: " + ec.message());
}

inline VariantManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    try {
        const int schema = j.at("schema").get<int>();
        if (schema != kManifestSchema) {
            throw VersionError(path.string() + ": schema " + std::to_string(schema) +
                               " is not supported (expected " + std::to_string(kManifestSchema) +
                               ")");
        }
        VariantManifest m;
        m.dataset_id = j.at("dataset_id").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.generation_config = j.value("generation_config", nlohmann::json::object());
        for (const auto& je : j.at("entries")) m.entries.push_back(entry_from_json(je));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Lookup structure: image id -> instance id -> entries ordered by variant
// index. Pointers reference the manifest they were built from.
class VariantIndex {
public:
    VariantIndex() = default;

    explicit VariantIndex(const VariantManifest& manifest) {
        for (const auto& e : manifest.entries) {
            by_image_[e.image_id][e.instance_id].push_back(&e);
        }
        for (auto& [img, instances] : by_image_) {
            for (auto& [inst, entries] : instances) {
                std::sort(entries.begin(), entries.end(),
                          [](const VariantEntry* a, const VariantEntry* b) {
                              return a->variant_index < b->variant_index;
                          });
            }
        }
    }

    const std::vector<const VariantEntry*>* variants(const std::string& image_id,
                                                     const std::string& instance_id) const {
        const auto img_it = by_image_.find(image_id);
        if (img_it == by_image_.end()) return nullptr;
        const auto inst_it = img_it->second.find(instance_id);
        if (inst_it == img_it->second.end()) return nullptr;
        return &inst_it->second;
    }

private:
    std::map<std::string, std::map<std::string, std::vector<const VariantEntry*>>> by_image_;
};

struct ValidationReport {
    std::vector<std::string> problems;

    bool ok() const { return problems.empty(); }

    std::string to_string() const {
        std::string out;
        for (const auto& p : problems) {
            out += p;
            out += '\n';
        }
        return out;
    }
};

// Referential integrity of a manifest against its dataset and the assets on
// disk. Returns problems instead of throwing so callers can show all of them.
inline ValidationReport validate_manifest(const VariantManifest& manifest, const Dataset& dataset,
                                          const std::filesystem::path& manifest_dir) {
    ValidationReport report;
    if (manifest.dataset_id != dataset.dataset_id) {
        report.problems.push_back("manifest dataset_id \"" + manifest.dataset_id +
                                  "\" does not match dataset \"" + dataset.dataset_id + "\"");
    }
    if (manifest.config_hash.empty()) {
        report.problems.push_back("manifest has an empty config_hash");
    }
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const auto& e : manifest.entries) {
        const std::string name = "entry " + e.image_id + "/" + e.instance_id + "/k" +
                                 std::to_string(e.variant_index);
        if (!seen.insert({e.image_id, e.instance_id, e.variant_index}).second) {
            report.problems.push_back(name + ": duplicate");
        }
        const ImageRecord* rec = dataset.find_image(e.image_id);
        if (!rec) {
            report.problems.push_back(name + ": unknown image id");
            continue;
        }
        if (!rec->find_instance(e.instance_id)) {
            report.problems.push_back(name + ": unknown instance id");
        }
        if (e.variant_index < 0) {
            report.problems.push_back(name + ": negative variant index");
        }
        if (e.kept_original != e.asset_path.empty()) {
            report.problems.push_back(e.kept_original ? name + ": kept_original entry has an asset"
                                                      : name + ": entry has no asset");
        }
        if (!e.asset_path.empty() && !std::filesystem::exists(manifest_dir / e.asset_path)) {
            report.problems.push_back(name + ": missing asset " + e.asset_path);
        }
        if (e.refined != !e.refined_mask_path.empty()) {
            report.problems.push_back(name + ": refined flag and refined_mask disagree");
        }
        if (!e.refined_mask_path.empty() &&
            !std::filesystem::exists(manifest_dir / e.refined_mask_path)) {
            report.problems.push_back(name + ": missing refined mask " + e.refined_mask_path);
        }
    }
    return report;
}

}  // namespace instaug
