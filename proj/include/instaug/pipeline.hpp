#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/hash.hpp"
#include "instaug/manifest.hpp"
#include "instaug/metrics.hpp"
#include "instaug/png_io.hpp"
#include "instaug/prompt.hpp"
#include "instaug/render.hpp"
#include "instaug/saliency_dataset.hpp"
#include "instaug/scene.hpp"

namespace instaug {

// ---------------------------------------------------------------------------
// Deterministic seeds. Every random decision in a run is keyed by what the
// decision is for, so outputs do not depend on scheduling, image order or
// how many worker threads ran.
// ---------------------------------------------------------------------------

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view image_id,
                                 std::string_view instance_id, int variant_index,
                                 int attempt = 0) {
    std::uint64_t h = mix64(master_seed);
    h = hash_combine(h, image_id);
    h = hash_combine(h, instance_id);
    h = hash_combine(h, static_cast<std::uint64_t>(variant_index));
    h = hash_combine(h, static_cast<std::uint64_t>(attempt));
    return h;
}

namespace detail {

// Distinct stream for appearance sampling so prompt randomness never shifts
// generation seeds.
inline constexpr std::uint64_t kAppearanceSalt = 0x617070656172616eull;  // "appearan"

inline double unit_interval(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
    std::uint64_t master_seed = 0;
    int variants_per_instance = 3;
    int max_attempts = 5;
    double repaint_probability = 0.30;
    DepthMode depth_mode = DepthMode::sum;
    int feather_radius = 0;
    std::set<std::string> target_classes;  // empty: every class
    SmallObjectSettings small_object;
    bool refine_masks = false;
    int saliency_threshold = 127;
    std::set<std::string> person_labels{"person"};
    std::string action_question = kPersonActionQuestion;
    std::string object_question = kObjectNameQuestion;
    std::string negative_hint;
    bool cache_scene_maps = true;
    AppearanceConfig appearance = AppearanceConfig::defaults();
    std::string lexicon_file;  // empty: bundled lexicon
    nlohmann::json backends = nlohmann::json::object();
    int jobs = 1;

    void validate() const {
        if (variants_per_instance < 1) throw ConfigError("variants_per_instance must be >= 1");
        if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
        if (!(repaint_probability >= 0.0 && repaint_probability <= 1.0)) {
            throw ConfigError("repaint_probability must be in [0, 1]");
        }
        if (feather_radius < 0) throw ConfigError("feather_radius must be >= 0");
        if (small_object.area_threshold < 0) {
            throw ConfigError("small object area threshold must be >= 0");
        }
        if (small_object.min_generation_side < 1 || small_object.context_margin < 0) {
            throw ConfigError("invalid small object settings");
        }
        if (saliency_threshold < 0 || saliency_threshold > 255) {
            throw ConfigError("saliency_threshold must be in [0, 255]");
        }
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        appearance.validate();
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"master_seed", master_seed},
            {"variants_per_instance", variants_per_instance},
            {"max_attempts", max_attempts},
            {"repaint_probability", repaint_probability},
            {"depth_mode", depth_mode_name(depth_mode)},
            {"feather_radius", feather_radius},
            {"target_classes", target_classes},
            {"small_object",
             {{"area_threshold", small_object.area_threshold},
              {"min_generation_side", small_object.min_generation_side},
              {"context_margin", small_object.context_margin}}},
            {"refine_masks", refine_masks},
            {"saliency_threshold", saliency_threshold},
            {"person_labels", person_labels},
            {"action_question", action_question},
            {"object_question", object_question},
            {"negative_hint", negative_hint},
            {"cache_scene_maps", cache_scene_maps},
            {"appearance", appearance.to_json()},
            {"lexicon_file", lexicon_file},
            {"backends", backends},
            {"jobs", jobs}};
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig cfg;
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        cfg.variants_per_instance = j.value("variants_per_instance", cfg.variants_per_instance);
        cfg.max_attempts = j.value("max_attempts", cfg.max_attempts);
        cfg.repaint_probability = j.value("repaint_probability", cfg.repaint_probability);
        if (j.contains("depth_mode")) {
            const auto mode = depth_mode_from_name(j.at("depth_mode").get<std::string>());
            if (!mode) throw ConfigError("depth_mode must be \"sum\" or \"mean\"");
            cfg.depth_mode = *mode;
        }
        cfg.feather_radius = j.value("feather_radius", cfg.feather_radius);
        if (j.contains("target_classes")) {
            cfg.target_classes.clear();
            for (const auto& c : j.at("target_classes")) {
                cfg.target_classes.insert(normalize_label(c.get<std::string>()));
            }
        }
        if (j.contains("small_object")) {
            const auto& so = j.at("small_object");
            cfg.small_object.area_threshold =
                so.value("area_threshold", cfg.small_object.area_threshold);
            cfg.small_object.min_generation_side =
                so.value("min_generation_side", cfg.small_object.min_generation_side);
            cfg.small_object.context_margin =
                so.value("context_margin", cfg.small_object.context_margin);
        }
        cfg.refine_masks = j.value("refine_masks", cfg.refine_masks);
        cfg.saliency_threshold = j.value("saliency_threshold", cfg.saliency_threshold);
        if (j.contains("person_labels")) {
            cfg.person_labels.clear();
            for (const auto& c : j.at("person_labels")) {
                cfg.person_labels.insert(normalize_label(c.get<std::string>()));
            }
        }
        cfg.action_question = j.value("action_question", cfg.action_question);
        cfg.object_question = j.value("object_question", cfg.object_question);
        cfg.negative_hint = j.value("negative_hint", cfg.negative_hint);
        cfg.cache_scene_maps = j.value("cache_scene_maps", cfg.cache_scene_maps);
        if (j.contains("appearance")) {
            cfg.appearance = AppearanceConfig::from_json(j.at("appearance"));
        }
        cfg.lexicon_file = j.value("lexicon_file", cfg.lexicon_file);
        if (j.contains("backends")) cfg.backends = j.at("backends");
        cfg.jobs = j.value("jobs", cfg.jobs);
        cfg.validate();
        return cfg;
    }
};

// Hash over everything that influences generated bytes. jobs is excluded on
// purpose: parallelism must not change outputs, so a resumed run may use a
// different worker count.
inline std::string config_hash(const PipelineConfig& cfg) {
    nlohmann::json j = cfg.to_json();
    j.erase("jobs");
    return detail::hex64(fnv1a64(j.dump()));
}

// ---------------------------------------------------------------------------
// Run reporting
// ---------------------------------------------------------------------------

struct RunReport {
    int images_total = 0;
    int images_done = 0;
    int images_failed = 0;
    int instances_processed = 0;
    int instances_skipped_resume = 0;
    int instances_skipped_class = 0;
    int variants_written = 0;
    int variants_kept_original = 0;
    int refinements_done = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> failures;             // one line per failed image
    std::vector<std::string> kept_original_names;  // entries that kept the original
    std::vector<std::string> refinement_skips;
    std::vector<std::string> warnings;

    bool clean() const { return failures.empty(); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"images_total", images_total},
                              {"images_done", images_done},
                              {"images_failed", images_failed},
                              {"instances_processed", instances_processed},
                              {"instances_skipped_resume", instances_skipped_resume},
                              {"instances_skipped_class", instances_skipped_class},
                              {"variants_written", variants_written},
                              {"variants_kept_original", variants_kept_original},
                              {"refinements_done", refinements_done},
                              {"wall_seconds", wall_seconds},
                              {"failures", failures},
                              {"kept_original", kept_original_names},
                              {"refinement_skips", refinement_skips},
                              {"warnings", warnings}};
    }

    std::string summary() const {
        std::string s = "images " + std::to_string(images_done) + "/" +
                        std::to_string(images_total) + " (" + std::to_string(images_failed) +
                        " failed), instances " + std::to_string(instances_processed) +
                        ", variants " + std::to_string(variants_written) + " (" +
                        std::to_string(variants_kept_original) + " kept original)";
        if (!failures.empty()) {
            s += "\nfailures:";
            for (const auto& f : failures) s += "\n  " + f;
        }
        return s;
    }
};

struct RunResult {
    VariantManifest manifest;
    RunReport report;
};

// ---------------------------------------------------------------------------
// Backends as a bundle. Non-owning: the caller decides lifetimes.
// ---------------------------------------------------------------------------

struct BackendSet {
    InpaintBackend* inpaint = nullptr;
    DepthBackend* depth = nullptr;
    EdgeBackend* edge = nullptr;
    VqaBackend* vqa = nullptr;
    NsfwBackend* nsfw = nullptr;
    SaliencyBackend* saliency = nullptr;

    void validate() const {
        if (!inpaint || !depth || !edge || !vqa || !nsfw || !saliency) {
            throw ConfigError("pipeline needs all six backends");
        }
    }
};

namespace detail {

// Serializes access to a backend that only tolerates a bounded number of
// in-flight requests.
class InpaintThrottle {
public:
    explicit InpaintThrottle(InpaintBackend& backend)
        : backend_(backend),
          sem_(std::max(1, backend.descriptor().max_in_flight)) {}

    ImageRgb inpaint(const GenerationRequest& request) {
        sem_.acquire();
        struct Release {
            std::counting_semaphore<256>& s;
            ~Release() { s.release(); }
        } release{sem_};
        return backend_.inpaint(request);
    }

private:
    InpaintBackend& backend_;
    std::counting_semaphore<256> sem_;
};

class ThrottledInpaint : public InpaintBackend {
public:
    explicit ThrottledInpaint(InpaintBackend& backend, InpaintThrottle& throttle)
        : backend_(backend), throttle_(throttle) {}

    BackendDescriptor descriptor() const override { return backend_.descriptor(); }
    ImageRgb inpaint(const GenerationRequest& request) override {
        return throttle_.inpaint(request);
    }

private:
    InpaintBackend& backend_;
    InpaintThrottle& throttle_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// The pipeline itself
// ---------------------------------------------------------------------------

enum class RunMode { augment, anonymize };

class PipelineRunner {
public:
    PipelineRunner(PipelineConfig config, BackendSet backends,
                   const Lexicon* lexicon = nullptr)
        : config_(std::move(config)), backends_(backends) {
        config_.validate();
        backends_.validate();
        if (lexicon) {
            lexicon_ = lexicon;
        } else if (!config_.lexicon_file.empty()) {
            owned_lexicon_ = Lexicon::from_file(config_.lexicon_file);
            lexicon_ = &owned_lexicon_;
        } else {
            lexicon_ = &Lexicon::builtin();
        }
    }

    // Test hook, called after an image has been fully generated and flushed.
    std::function<void(const std::string& image_id)> after_image_hook;

    RunResult run_augmentation(const Dataset& dataset, const std::filesystem::path& out_dir,
                               bool resume = false) {
        return run(dataset, out_dir, RunMode::augment, resume);
    }

    // Replaces every instance of the target classes. A target that could not
    // be repainted (content filter exhausted) is a reported failure, not a
    // silent keep: privacy removal must be complete or loud.
    RunResult run_anonymization(const Dataset& dataset, const std::filesystem::path& out_dir,
                                bool resume = false) {
        if (config_.target_classes.empty()) {
            throw ConfigError("anonymization needs at least one target class");
        }
        return run(dataset, out_dir, RunMode::anonymize, resume);
    }

    RunResult run(const Dataset& dataset, const std::filesystem::path& out_dir, RunMode mode,
                  bool resume) {
        const auto t0 = std::chrono::steady_clock::now();
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path manifest_path = out_dir / "manifest.json";
        const std::string cfg_hash = config_hash(config_);

        VariantManifest manifest;
        manifest.dataset_id = dataset.dataset_id;
        manifest.config_hash = cfg_hash;
        manifest.generation_config = config_.to_json();

        std::set<std::tuple<std::string, std::string, int>> done;
        if (resume && std::filesystem::exists(manifest_path)) {
            VariantManifest previous = read_manifest(manifest_path);
            if (previous.config_hash != cfg_hash) {
                throw ResumeError("existing manifest was generated with a different "
                                  "configuration (hash " + previous.config_hash + ", current " +
                                  cfg_hash + ")");
            }
            if (previous.dataset_id != dataset.dataset_id) {
                throw ResumeError("existing manifest belongs to dataset \"" +
                                  previous.dataset_id + "\", not \"" + dataset.dataset_id + "\"");
            }
            for (const auto& e : previous.entries) {
                done.insert({e.image_id, e.instance_id, e.variant_index});
            }
            manifest.entries = std::move(previous.entries);
        }

        RunReport report;
        report.images_total = static_cast<int>(dataset.images.size());

        std::optional<SceneAnalyzer> analyzer;
        analyzer.emplace(*backends_.depth, *backends_.edge,
                         config_.cache_scene_maps
                             ? std::optional<std::filesystem::path>(out_dir / "scene_cache")
                             : std::nullopt);

        detail::InpaintThrottle throttle(*backends_.inpaint);
        std::mutex manifest_mutex;
        std::mutex report_mutex;
        std::atomic<std::size_t> next{0};
        std::atomic<bool> aborted{false};
        std::exception_ptr fatal;
        std::mutex fatal_mutex;

        const auto worker = [&] {
            while (true) {
                if (aborted.load()) return;
                const std::size_t i = next.fetch_add(1);
                if (i >= dataset.images.size()) return;
                const ImageRecord& rec = dataset.images[i];
                try {
                    process_image(rec, mode, done, *analyzer, throttle, out_dir, manifest,
                                  manifest_mutex, manifest_path, report, report_mutex);
                    if (after_image_hook) after_image_hook(rec.image_id);
                    std::lock_guard lock(report_mutex);
                    ++report.images_done;
                } catch (const Error& e) {
                    std::lock_guard lock(report_mutex);
                    ++report.images_failed;
                    report.failures.push_back("image " + rec.image_id + ": " + e.what());
                } catch (...) {
                    {
                        std::lock_guard lock(fatal_mutex);
                        if (!fatal) fatal = std::current_exception();
                    }
                    aborted.store(true);
                    return;
                }
            }
        };

        const int thread_count =
            std::max(1, std::min<int>(config_.jobs, static_cast<int>(dataset.images.size())));
        if (thread_count == 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(thread_count);
            for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }
        if (fatal) std::rethrow_exception(fatal);

        sort_entries(manifest.entries);
        write_manifest(manifest, manifest_path);

        for (const auto& e : manifest.entries) {
            if (e.kept_original) {
                report.kept_original_names.push_back(e.image_id + "/" + e.instance_id + "/k" +
                                                     std::to_string(e.variant_index));
            }
        }
        if (mode == RunMode::anonymize) {
            for (const auto& name : report.kept_original_names) {
                report.failures.push_back("target not anonymized: " + name);
            }
        }
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return {std::move(manifest), std::move(report)};
    }

    const PipelineConfig& config() const { return config_; }
    const Lexicon& lexicon() const { return *lexicon_; }

private:
    bool targeted(const Instance& inst, RunMode mode) const {
        if (config_.target_classes.empty()) return mode == RunMode::augment;
        return config_.target_classes.contains(inst.class_label);
    }

    std::string appearance_prompt(const ImageRecord& rec, const Instance& inst, int k,
                                  const std::vector<std::string>& lemmas,
                                  const std::optional<std::string>& action) const {
        std::mt19937_64 rng(derive_seed(config_.master_seed ^ detail::kAppearanceSalt,
                                        rec.image_id, inst.instance_id, k));
        const AppearanceSample sample = sample_appearance(inst.class_label, config_.appearance, rng);
        PromptSpec spec;
        spec.class_label = inst.class_label;
        spec.action = action;
        spec.lemmas = lemmas;
        spec.color = sample.color;
        spec.color_qualifier = sample.color_qualifier;
        spec.lighting = sample.lighting;
        return build_prompt(spec);
    }

    void process_image(const ImageRecord& rec, RunMode mode,
                       const std::set<std::tuple<std::string, std::string, int>>& done,
                       SceneAnalyzer& analyzer, detail::InpaintThrottle& throttle,
                       const std::filesystem::path& out_dir, VariantManifest& manifest,
                       std::mutex& manifest_mutex, const std::filesystem::path& manifest_path,
                       RunReport& report, std::mutex& report_mutex) {
        ImageRecord work = rec;
        work.instances.clear();
        for (const auto& inst : rec.instances) {
            if (!targeted(inst, mode)) {
                std::lock_guard lock(report_mutex);
                ++report.instances_skipped_class;
                continue;
            }
            bool all_done = true;
            for (int k = 0; k < config_.variants_per_instance && all_done; ++k) {
                all_done = done.contains({rec.image_id, inst.instance_id, k});
            }
            if (all_done) {
                std::lock_guard lock(report_mutex);
                ++report.instances_skipped_resume;
                continue;
            }
            work.instances.push_back(inst);
        }
        if (work.instances.empty()) return;

        const ImageRgb image = read_png_rgb(rec.path);
        if (image.width() != rec.width || image.height() != rec.height) {
            throw LoadError(rec.path.string() + " is " + std::to_string(image.width()) + "x" +
                            std::to_string(image.height()) + ", expected " +
                            std::to_string(rec.width) + "x" + std::to_string(rec.height));
        }
        const auto scene = analyzer.analyze(rec.image_id, image);

        std::vector<std::vector<std::string>> prompts;
        prompts.reserve(work.instances.size());
        for (const auto& inst : work.instances) {
            const std::vector<std::string> lemmas =
                expand_class_description(inst.class_label, *lexicon_);
            const std::optional<std::string> action = person_action(
                image, inst, *backends_.vqa, config_.person_labels, config_.action_question);
            std::vector<std::string> per_variant;
            per_variant.reserve(config_.variants_per_instance);
            for (int k = 0; k < config_.variants_per_instance; ++k) {
                per_variant.push_back(appearance_prompt(rec, inst, k, lemmas, action));
            }
            prompts.push_back(std::move(per_variant));
        }

        GenerateSettings settings;
        settings.variants_per_instance = config_.variants_per_instance;
        settings.max_attempts = config_.max_attempts;
        settings.small_object = config_.small_object;
        settings.seed_for = [&](const Instance& inst, int k, int attempt) {
            return derive_seed(config_.master_seed, rec.image_id, inst.instance_id, k, attempt);
        };
        settings.skip = [&](const std::string& instance_id, int k) {
            return done.contains({rec.image_id, instance_id, k});
        };

        detail::ThrottledInpaint inpaint(*backends_.inpaint, throttle);
        const std::string safe_image = path_safe_id(rec.image_id);

        const InstanceSink sink = [&](const Instance& inst, std::vector<VariantResult>&& results) {
            std::vector<VariantEntry> entries;
            for (VariantResult& res : results) {
                VariantEntry entry;
                entry.image_id = rec.image_id;
                entry.instance_id = res.instance_id;
                entry.variant_index = res.variant_index;
                entry.prompt_text = res.prompt_text;
                entry.seed = res.seed;
                entry.nsfw_attempts = res.nsfw_attempts;
                entry.kept_original = res.kept_original;
                entry.small_object = res.small_object;
                const std::string base =
                    safe_image + "/" + path_safe_id(res.instance_id) + "_k" +
                    std::to_string(res.variant_index);
                if (!res.kept_original) {
                    entry.asset_path = "assets/" + base + ".png";
                    write_png(out_dir / entry.asset_path, res.asset);
                    if (config_.refine_masks) {
                        refine_entry(res, inst, base, out_dir, entry, report, report_mutex);
                    }
                }
                entries.push_back(std::move(entry));
            }
            {
                std::lock_guard lock(report_mutex);
                ++report.instances_processed;
                for (const auto& e : entries) {
                    ++report.variants_written;
                    if (e.kept_original) ++report.variants_kept_original;
                }
            }
            std::lock_guard lock(manifest_mutex);
            for (auto& e : entries) manifest.entries.push_back(std::move(e));
            VariantManifest snapshot;
            snapshot.dataset_id = manifest.dataset_id;
            snapshot.config_hash = manifest.config_hash;
            snapshot.generation_config = manifest.generation_config;
            snapshot.entries = manifest.entries;
            sort_entries(snapshot.entries);
            write_manifest(snapshot, manifest_path);
        };

        generate_variants(work, image, *scene, prompts, settings, inpaint, *backends_.nsfw, sink);
    }

    void refine_entry(const VariantResult& res, const Instance& inst, const std::string& base,
                      const std::filesystem::path& out_dir, VariantEntry& entry,
                      RunReport& report, std::mutex& report_mutex) {
        const std::string name = entry.image_id + "/" + entry.instance_id + "/k" +
                                 std::to_string(entry.variant_index);
        try {
            const std::optional<Mask> refined =
                refine_mask(res.asset, inst, *backends_.saliency, config_.saliency_threshold);
            if (!refined) {
                std::lock_guard lock(report_mutex);
                report.refinement_skips.push_back(name + ": refined mask came back empty");
                return;
            }
            entry.refined_mask_path = "masks/" + base + "_refined.png";
            write_png(out_dir / entry.refined_mask_path, mask_to_gray(*refined));
            entry.refined = true;
            std::lock_guard lock(report_mutex);
            ++report.refinements_done;
        } catch (const Error& e) {
            std::lock_guard lock(report_mutex);
            report.refinement_skips.push_back(name + ": " + e.what());
        }
    }

    PipelineConfig config_;
    BackendSet backends_;
    const Lexicon* lexicon_ = nullptr;
    Lexicon owned_lexicon_;
};

// ---------------------------------------------------------------------------
// Training-time sampling: per instance, an independent probability decides
// whether the original pixels or one of its variants (chosen uniformly) are
// shown. Annotations never change; only pixels do.
// ---------------------------------------------------------------------------

struct SampleView {
    ImageRgb image;
    ChoiceVector choice;
    int repainted = 0;
    // Instances that drew "replace" but had no usable variant and fell back
    // to the original pixels.
    int original_fallbacks = 0;
};

inline SampleView sample_training_view(const ImageRecord& record, const ImageRgb& original,
                                       const VariantIndex& variants, double repaint_probability,
                                       std::mt19937_64& rng, const DepthMap& depth,
                                       DepthMode depth_mode, const AssetLoader& load_asset,
                                       int feather_radius = 0) {
    if (!(repaint_probability >= 0.0 && repaint_probability <= 1.0)) {
        throw ConfigError("repaint_probability must be in [0, 1]");
    }
    SampleView view;
    view.choice = ChoiceVector::all_original(record.instances.size());

    for (std::size_t i = 0; i < record.instances.size(); ++i) {
        const double u = detail::unit_interval(rng);
        if (u >= repaint_probability) continue;
        const auto* entries = variants.variants(record.image_id, record.instances[i].instance_id);
        std::vector<int> usable;
        if (entries) {
            for (const auto* e : *entries) {
                if (!e->kept_original && !e->asset_path.empty()) usable.push_back(e->variant_index);
            }
        }
        if (usable.empty()) {
            ++view.original_fallbacks;
            continue;
        }
        view.choice.choices[i] =
            usable[static_cast<std::size_t>(rng() % usable.size())];
        ++view.repainted;
    }

    const std::vector<std::size_t> order = draw_order(record.instances, depth, depth_mode);
    view.image = assemble_image(original, record, variants, view.choice, order, load_asset,
                                feather_radius);
    return view;
}

}  // namespace instaug
