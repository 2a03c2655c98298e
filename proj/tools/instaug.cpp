// Command line front end: dataset in, repainted variants and reports out.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "instaug/instaug.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

constexpr std::uint64_t kSampleSalt = 0x73616d706c657278ull;

struct CommonOpts {
    std::string config_file;
    std::string dataset_format = "coco";
    std::string images_dir;
    std::string annotations;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> k;
    std::optional<double> probability;
    std::optional<std::string> target_classes;
    std::vector<std::string> endpoints;  // kind=url
    bool mock_backends = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_dataset) {
    cmd->add_option("--config", o.config_file, "run configuration JSON");
    if (needs_dataset) {
        cmd->add_option("--dataset-format", o.dataset_format,
                        "dataset layout: coco, voc or saliency")
            ->check(CLI::IsMember({"coco", "voc", "saliency"}));
        cmd->add_option("--images", o.images_dir, "image directory")->required();
        cmd->add_option("--annotations", o.annotations,
                        "annotation file (coco), annotation directory (voc) or "
                        "saliency map directory (saliency)")
            ->required();
    }
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--jobs", o.jobs, "worker threads");
    cmd->add_option("--k", o.k, "variants per instance");
    cmd->add_option("--probability", o.probability, "per-instance repaint probability");
    cmd->add_option("--target-classes", o.target_classes, "comma-separated class labels");
    cmd->add_option("--backend-endpoint", o.endpoints,
                    "remote backend as KIND=URL (repeatable); kinds: inpaint, depth, "
                    "edge, vqa, nsfw, saliency");
    cmd->add_flag("--mock-backends", o.mock_backends, "use the built-in mock backends");
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string part =
            s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) out.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

instaug::PipelineConfig load_config(const CommonOpts& o) {
    instaug::PipelineConfig cfg;
    if (!o.config_file.empty()) {
        std::ifstream in(o.config_file);
        if (!in) throw instaug::IoError("cannot open config " + o.config_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw instaug::ParseError(o.config_file + ": " + e.what());
        }
        cfg = instaug::PipelineConfig::from_json(j);
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.k) cfg.variants_per_instance = *o.k;
    if (o.probability) cfg.repaint_probability = *o.probability;
    if (o.target_classes) {
        cfg.target_classes.clear();
        for (const auto& c : split_commas(*o.target_classes)) {
            cfg.target_classes.insert(instaug::normalize_label(c));
        }
    }
    for (const auto& spec : o.endpoints) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos) {
            throw instaug::ConfigError("--backend-endpoint expects KIND=URL, got \"" + spec + "\"");
        }
        const std::string kind = spec.substr(0, eq);
        if (!instaug::backend_kind_from_name(kind)) {
            throw instaug::ConfigError("unknown backend kind \"" + kind + "\"");
        }
        cfg.backends[kind]["endpoint"] = spec.substr(eq + 1);
    }
    cfg.validate();
    return cfg;
}

instaug::Dataset load_dataset(const CommonOpts& o, const instaug::PipelineConfig& cfg,
                              instaug::VqaBackend& vqa, instaug::LoadReport& report) {
    if (o.dataset_format == "coco") {
        return instaug::load_coco(o.annotations, o.images_dir, &report);
    }
    if (o.dataset_format == "voc") {
        return instaug::load_voc(o.annotations, o.images_dir, &report);
    }
    return instaug::load_saliency_dataset(o.images_dir, o.annotations, vqa,
                                          cfg.saliency_threshold, cfg.object_question, &report);
}

void print_warnings(const instaug::LoadReport& report) {
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

void write_reports(const fs::path& out_dir, const instaug::RunReport& report) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "report.json", std::ios::trunc);
        out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "report.txt", std::ios::trunc);
        out << report.summary() << "\n";
    }
}

int run_generation(const CommonOpts& o, instaug::RunMode mode, bool resume) {
    instaug::PipelineConfig cfg = load_config(o);
    instaug::OwnedBackends backends = instaug::make_backends(cfg.backends, o.mock_backends);

    instaug::LoadReport load_report;
    const instaug::Dataset dataset = load_dataset(o, cfg, *backends.vqa, load_report);
    print_warnings(load_report);

    instaug::PipelineRunner runner(cfg, backends.set());
    const instaug::RunResult result = mode == instaug::RunMode::augment
                                          ? runner.run_augmentation(dataset, o.out_dir, resume)
                                          : runner.run_anonymization(dataset, o.out_dir, resume);
    write_reports(o.out_dir, result.report);
    std::cout << result.report.summary() << "\n";
    if (mode == instaug::RunMode::anonymize) {
        for (const auto& name : result.report.kept_original_names) {
            std::cerr << "ERROR: target not anonymized: " << name << "\n";
        }
    }
    return result.report.clean() ? kExitOk : kExitPartial;
}

// Tiny polyline plot (no text): PSNR in blue against its own range, SSIM in
// orange against [0, 1], on a white canvas with gray axes.
instaug::ImageRgb render_curve_plot(const instaug::DegradationCurve& curve) {
    using instaug::ImageRgb;
    const int W = 640;
    const int H = 400;
    const int margin = 32;
    ImageRgb img(W, H, 255);
    for (int x = margin; x < W - margin; ++x) {
        img.at(x, H - margin, 0) = img.at(x, H - margin, 1) = img.at(x, H - margin, 2) = 128;
    }
    for (int y = margin; y < H - margin; ++y) {
        img.at(margin, y, 0) = img.at(margin, y, 1) = img.at(margin, y, 2) = 128;
    }
    std::vector<instaug::DegradationCurve::Point> pts;
    for (const auto& p : curve.points) {
        if (!std::isinf(p.psnr_db)) pts.push_back(p);
    }
    if (pts.size() < 2) return img;
    double lo = pts.front().psnr_db;
    double hi = lo;
    for (const auto& p : pts) {
        lo = std::min(lo, p.psnr_db);
        hi = std::max(hi, p.psnr_db);
    }
    if (hi == lo) hi = lo + 1.0;
    const auto px = [&](std::size_t i) {
        return margin + static_cast<int>((W - 2.0 * margin) * i / (pts.size() - 1));
    };
    const auto put = [&](int x, int y, int r, int g, int b) {
        if (x >= 0 && x < W && y >= 0 && y < H) {
            img.at(x, y, 0) = static_cast<std::uint8_t>(r);
            img.at(x, y, 1) = static_cast<std::uint8_t>(g);
            img.at(x, y, 2) = static_cast<std::uint8_t>(b);
        }
    };
    const auto line = [&](int x0, int y0, int x1, int y1, int r, int g, int b) {
        const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
        for (int s = 0; s <= steps; ++s) {
            const double t = steps ? static_cast<double>(s) / steps : 0.0;
            put(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
                static_cast<int>(std::lround(y0 + t * (y1 - y0))), r, g, b);
        }
    };
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto py = [&](double v, double vlo, double vhi) {
            return H - margin -
                   static_cast<int>((H - 2.0 * margin) * (v - vlo) / (vhi - vlo));
        };
        line(px(i - 1), py(pts[i - 1].psnr_db, lo, hi), px(i), py(pts[i].psnr_db, lo, hi), 30, 80,
             200);
        line(px(i - 1), py(pts[i - 1].ssim, 0.0, 1.0), px(i), py(pts[i].ssim, 0.0, 1.0), 230, 140,
             30);
    }
    return img;
}

int run_eval_roundtrip(const std::string& input, int steps, int factor, const std::string& csv,
                       const std::string& plot) {
    const instaug::ImageRgb image = instaug::read_png_rgb(input);
    const instaug::LossyCodec codec(factor);
    const instaug::DegradationCurve curve = instaug::roundtrip_degradation(
        image, [&](const instaug::ImageRgb& im) { return codec.roundtrip(im); }, steps);
    const std::string text = curve.to_csv();
    if (csv == "-") {
        std::cout << text;
    } else {
        const fs::path path = csv;
        if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw instaug::IoError("cannot write " + csv);
        out << text;
        std::cout << "wrote " << csv << "\n";
    }
    if (!plot.empty()) {
        instaug::write_png(plot, render_curve_plot(curve));
        std::cout << "wrote " << plot << "\n";
    }
    return kExitOk;
}

int run_sample(const CommonOpts& o, const std::string& manifest_file, int count) {
    instaug::PipelineConfig cfg = load_config(o);
    instaug::OwnedBackends backends = instaug::make_backends(cfg.backends, o.mock_backends);

    instaug::LoadReport load_report;
    const instaug::Dataset dataset = load_dataset(o, cfg, *backends.vqa, load_report);
    print_warnings(load_report);

    const fs::path manifest_path =
        manifest_file.empty() ? fs::path(o.out_dir) / "manifest.json" : fs::path(manifest_file);
    const instaug::VariantManifest manifest = instaug::read_manifest(manifest_path);
    const instaug::VariantIndex index(manifest);
    const fs::path manifest_dir = manifest_path.parent_path();

    instaug::SceneAnalyzer analyzer(*backends.depth, *backends.edge,
                                    cfg.cache_scene_maps
                                        ? std::optional<fs::path>(manifest_dir / "scene_cache")
                                        : std::nullopt);
    const instaug::AssetLoader loader = [&](const instaug::VariantEntry& e) {
        return instaug::read_png_rgb(manifest_dir / e.asset_path);
    };

    const fs::path samples_dir = fs::path(o.out_dir) / "samples";
    fs::create_directories(samples_dir);
    int fallbacks = 0;
    int written = 0;
    for (const auto& rec : dataset.images) {
        const instaug::ImageRgb original = instaug::read_png_rgb(rec.path);
        const auto scene = analyzer.analyze(rec.image_id, original);
        for (int s = 0; s < count; ++s) {
            std::mt19937_64 rng(instaug::derive_seed(cfg.master_seed ^ kSampleSalt, rec.image_id,
                                                     "view", s));
            const instaug::SampleView view = instaug::sample_training_view(
                rec, original, index, cfg.repaint_probability, rng, scene->depth, cfg.depth_mode,
                loader, cfg.feather_radius);
            fallbacks += view.original_fallbacks;
            const std::string name =
                instaug::path_safe_id(rec.image_id) + "_s" + std::to_string(s) + ".png";
            instaug::write_png(samples_dir / name, view.image);
            ++written;
        }
    }
    if (o.dataset_format == "coco") {
        fs::copy_file(o.annotations, samples_dir / "annotations.json",
                      fs::copy_options::overwrite_existing);
    }
    std::cout << "wrote " << written << " sampled views to " << samples_dir.string() << " ("
              << fallbacks << " original fallbacks)\n";
    return kExitOk;
}

int run_validate(const CommonOpts& o, const std::string& manifest_file) {
    instaug::PipelineConfig cfg = load_config(o);
    instaug::OwnedBackends backends = instaug::make_backends(cfg.backends, o.mock_backends);

    instaug::LoadReport load_report;
    const instaug::Dataset dataset = load_dataset(o, cfg, *backends.vqa, load_report);
    print_warnings(load_report);

    const fs::path manifest_path =
        manifest_file.empty() ? fs::path(o.out_dir) / "manifest.json" : fs::path(manifest_file);
    const instaug::VariantManifest manifest = instaug::read_manifest(manifest_path);
    const instaug::ValidationReport report =
        instaug::validate_manifest(manifest, dataset, manifest_path.parent_path());
    if (!report.ok()) {
        std::cerr << report.to_string();
        std::cout << report.problems.size() << " problem(s) found\n";
        return kExitPartial;
    }
    std::cout << "manifest ok: " << manifest.entries.size() << " entries\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instance repainting toolkit"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    bool gen_resume = false;
    CLI::App* gen = app.add_subcommand("generate", "generate repainted variants for a dataset");
    add_common(gen, gen_opts, true);
    gen->add_flag("--resume", gen_resume, "continue an interrupted run");

    CommonOpts anon_opts;
    bool anon_resume = false;
    CLI::App* anon = app.add_subcommand("anonymize", "replace every instance of target classes");
    add_common(anon, anon_opts, true);
    anon->add_flag("--resume", anon_resume, "continue an interrupted run");

    CommonOpts sample_opts;
    std::string sample_manifest;
    int sample_count = 1;
    CLI::App* sample = app.add_subcommand("sample", "assemble randomized training views");
    add_common(sample, sample_opts, true);
    sample->add_option("--manifest", sample_manifest, "variant manifest (default <out>/manifest.json)");
    sample->add_option("--count", sample_count, "views per image")->check(CLI::PositiveNumber);

    std::string eval_input;
    int eval_steps = 10;
    int eval_factor = 2;
    std::string eval_csv = "-";
    std::string eval_plot;
    CLI::App* eval = app.add_subcommand("eval-roundtrip",
                                        "measure quality loss from repeated re-encoding");
    eval->add_option("--input", eval_input, "PNG image to degrade")->required();
    eval->add_option("--steps", eval_steps, "number of round trips")->check(CLI::PositiveNumber);
    eval->add_option("--factor", eval_factor, "codec downscale factor")
        ->check(CLI::Range(2, 64));
    eval->add_option("--csv", eval_csv, "CSV output path, - for stdout");
    eval->add_option("--plot", eval_plot, "optional PNG plot path");

    CommonOpts validate_opts;
    std::string validate_manifest_file;
    CLI::App* validate = app.add_subcommand("validate", "check a manifest against its dataset");
    add_common(validate, validate_opts, true);
    validate->add_option("--manifest", validate_manifest_file,
                         "variant manifest (default <out>/manifest.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_generation(gen_opts, instaug::RunMode::augment, gen_resume);
        if (anon->parsed()) {
            return run_generation(anon_opts, instaug::RunMode::anonymize, anon_resume);
        }
        if (sample->parsed()) return run_sample(sample_opts, sample_manifest, sample_count);
        if (eval->parsed()) {
            return run_eval_roundtrip(eval_input, eval_steps, eval_factor, eval_csv, eval_plot);
        }
        if (validate->parsed()) return run_validate(validate_opts, validate_manifest_file);
    } catch (const instaug::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
