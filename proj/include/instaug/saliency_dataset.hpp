#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/png_io.hpp"

namespace instaug {

inline constexpr int kSaliencyBinarizeThreshold = 127;
inline constexpr const char* kObjectNameQuestion = "what is the object?";

// Loads a salient-object dataset: a directory of images and a parallel
// directory of grayscale maps with matching file names. Maps are binarized
// into single-instance masks and, because such datasets carry no class
// labels, each object is named by asking the VQA backend about its crop.
inline Dataset load_saliency_dataset(const std::filesystem::path& images_dir,
                                     const std::filesystem::path& masks_dir, VqaBackend& vqa,
                                     int threshold = kSaliencyBinarizeThreshold,
                                     const std::string& question = kObjectNameQuestion,
                                     LoadReport* report = nullptr) {
    LoadReport fallback;
    LoadReport& rep = report ? *report : fallback;

    if (!std::filesystem::is_directory(images_dir)) {
        throw IoError(images_dir.string() + " is not a directory");
    }
    if (!std::filesystem::is_directory(masks_dir)) {
        throw IoError(masks_dir.string() + " is not a directory");
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(images_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    Dataset ds;
    ds.dataset_id = images_dir.filename().empty() ? images_dir.parent_path().filename().string()
                                                  : images_dir.filename().string();
    std::vector<std::string> problems;

    for (const auto& image_path : files) {
        const std::filesystem::path map_path = masks_dir / image_path.filename();
        if (!std::filesystem::exists(map_path)) {
            problems.push_back("missing map " + map_path.string());
            continue;
        }
        const ImageRgb image = read_png_rgb(image_path);
        const ImageGray map = read_png_gray(map_path);
        if (map.width() != image.width() || map.height() != image.height()) {
            problems.push_back("size mismatch between " + image_path.string() + " and " +
                               map_path.string());
            continue;
        }

        ImageRecord rec;
        rec.image_id = image_path.stem().string();
        rec.path = image_path;
        rec.width = image.width();
        rec.height = image.height();

        Mask mask = binarize(map, threshold);
        if (mask_area(mask) == 0) {
            rep.warn(rec.image_id + ": map is empty after binarization, no instance");
            ds.images.push_back(std::move(rec));
            continue;
        }

        std::string label;
        try {
            label = normalize_label(vqa.answer(crop(image, bounding_rect(mask)), question));
        } catch (const BackendError& e) {
            rep.warn(rec.image_id + ": object naming failed (" + e.what() + ")");
        }
        if (label.empty()) {
            label = "object";
            rep.warn(rec.image_id + ": no answer for object name, using \"object\"");
        }

        rec.instances.push_back(Instance::from_mask("0", label, std::move(mask)));
        ds.images.push_back(std::move(rec));
    }

    if (!problems.empty()) {
        std::string msg = "saliency dataset problems:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw LoadError(msg);
    }
    return ds;
}

}  // namespace instaug
