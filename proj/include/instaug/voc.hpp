#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "instaug/dataset.hpp"
#include "instaug/error.hpp"

namespace instaug {

namespace detail {

// Minimal tag extraction for the flat, attribute-free detection XML this
// loader consumes. Not a general XML parser on purpose.
inline std::optional<std::string> xml_text(const std::string& text, const std::string& tag,
                                           std::size_t from = 0, std::size_t* end_pos = nullptr) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const std::size_t begin = text.find(open, from);
    if (begin == std::string::npos) return std::nullopt;
    const std::size_t start = begin + open.size();
    const std::size_t end = text.find(close, start);
    if (end == std::string::npos) return std::nullopt;
    if (end_pos) *end_pos = end + close.size();
    std::string value = text.substr(start, end - start);
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    value.erase(value.begin(), std::find_if(value.begin(), value.end(), not_space));
    value.erase(std::find_if(value.rbegin(), value.rend(), not_space).base(), value.end());
    return value;
}

inline std::vector<std::string> xml_blocks(const std::string& text, const std::string& tag) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        std::size_t end = 0;
        const auto block = xml_text(text, tag, pos, &end);
        if (!block) break;
        blocks.push_back(*block);
        pos = end;
    }
    return blocks;
}

inline int xml_int(const std::string& text, const std::string& tag, const std::string& where) {
    const auto value = xml_text(text, tag);
    if (!value) throw ParseError(where + ": missing <" + tag + ">");
    try {
        return std::stoi(*value);
    } catch (const std::exception&) {
        throw ParseError(where + ": <" + tag + "> is not an integer");
    }
}

}  // namespace detail

// Loads detection XML annotations (one file per image, objects given as
// 1-based inclusive bounding boxes). Boxes carry no outline information, so
// each instance mask is the filled box.
inline Dataset load_voc(const std::filesystem::path& annotations_dir,
                        const std::filesystem::path& images_dir, LoadReport* report = nullptr) {
    LoadReport fallback;
    LoadReport& rep = report ? *report : fallback;

    if (!std::filesystem::is_directory(annotations_dir)) {
        throw IoError(annotations_dir.string() + " is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(annotations_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    Dataset ds;
    ds.dataset_id = annotations_dir.filename().empty()
                        ? annotations_dir.parent_path().filename().string()
                        : annotations_dir.filename().string();
    std::vector<std::string> missing;

    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open " + file.string());
        std::stringstream buffer;
        buffer << in.rdbuf();
        const std::string text = buffer.str();
        const std::string where = file.filename().string();

        ImageRecord rec;
        rec.image_id = file.stem().string();
        const auto filename = detail::xml_text(text, "filename");
        rec.path = images_dir / (filename ? *filename : file.stem().string() + ".png");
        const auto size = detail::xml_text(text, "size");
        if (!size) throw ParseError(where + ": missing <size>");
        rec.width = detail::xml_int(*size, "width", where);
        rec.height = detail::xml_int(*size, "height", where);
        if (rec.width < 1 || rec.height < 1) {
            throw ParseError(where + ": non-positive image size");
        }

        int index = 0;
        for (const auto& object : detail::xml_blocks(text, "object")) {
            const auto name = detail::xml_text(object, "name");
            if (!name) throw ParseError(where + ": object without <name>");
            const auto box = detail::xml_text(object, "bndbox");
            if (!box) throw ParseError(where + ": object without <bndbox>");
            Rect r;
            r.x0 = detail::xml_int(*box, "xmin", where) - 1;
            r.y0 = detail::xml_int(*box, "ymin", where) - 1;
            r.x1 = detail::xml_int(*box, "xmax", where) - 1;
            r.y1 = detail::xml_int(*box, "ymax", where) - 1;
            r = intersect(r, Rect{0, 0, rec.width - 1, rec.height - 1});
            const std::string instance_id = std::to_string(index++);
            if (r.empty()) {
                rep.warn(where + ": object " + instance_id + " has an empty box, skipped");
                continue;
            }
            Mask mask(rec.width, rec.height);
            for (int y = r.y0; y <= r.y1; ++y) {
                for (int x = r.x0; x <= r.x1; ++x) mask.at(x, y) = 1;
            }
            rec.instances.push_back(Instance::from_mask(instance_id, *name, std::move(mask)));
        }

        if (!std::filesystem::exists(rec.path)) missing.push_back(rec.path.string());
        ds.images.push_back(std::move(rec));
    }

    if (!missing.empty()) {
        std::string msg = "missing image files:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw LoadError(msg);
    }
    return ds;
}

}  // namespace instaug
