#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/lexicon_data.hpp"

namespace instaug {

// Sentinel meaning "do not mention this aspect in the prompt". Kept inside
// the sampling lists so plain prompts stay the most common outcome.
inline constexpr const char* kNoneOption = "none";

inline constexpr const char* kPersonActionQuestion = "what is the person doing?";

// Label -> synonym list. Lookups are by normalized label; a label without an
// entry simply has no synonyms.
class Lexicon {
public:
    static Lexicon from_json(const nlohmann::json& j) {
        Lexicon lex;
        for (const auto& [label, lemmas] : j.items()) {
            std::vector<std::string> values;
            for (const auto& lemma : lemmas) {
                values.push_back(normalize_label(lemma.get<std::string>()));
            }
            lex.synsets_[normalize_label(label)] = std::move(values);
        }
        return lex;
    }

    static Lexicon from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open lexicon " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        if (!j.is_object()) throw ParseError(path.string() + ": lexicon must be a JSON object");
        return from_json(j);
    }

    static const Lexicon& builtin() {
        static const Lexicon lex = from_json(nlohmann::json::parse(detail::kBuiltinLexiconJson));
        return lex;
    }

    const std::vector<std::string>* lookup(std::string_view label) const {
        const auto it = synsets_.find(normalize_label(label));
        return it == synsets_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return synsets_.size(); }

    bool operator==(const Lexicon&) const = default;

private:
    std::map<std::string, std::vector<std::string>, std::less<>> synsets_;
};

// Synonyms for a class label, in lexicon order. The label's own synset is
// returned as-is (it may or may not contain the label itself); an unknown
// label expands to just itself.
inline std::vector<std::string> expand_class_description(std::string_view label,
                                                         const Lexicon& lexicon) {
    const std::string normalized = normalize_label(label);
    if (const auto* lemmas = lexicon.lookup(normalized)) return *lemmas;
    return {normalized};
}

struct AppearanceConfig {
    // Labels eligible for color sampling; empty means every label.
    std::set<std::string> color_categories;
    std::vector<std::string> colors;
    std::vector<std::string> qualifiers;
    std::vector<std::string> lightings;

    static AppearanceConfig defaults() {
        AppearanceConfig cfg;
        cfg.colors = {kNoneOption, "red",    "orange", "yellow", "green", "blue",
                      "purple",    "pink",   "brown",  "black",  "white", "gray"};
        cfg.qualifiers = {kNoneOption, "bright", "dark", "pale", "vivid", "muted"};
        cfg.lightings = {kNoneOption,    "natural light", "studio light",
                         "dark",         "sunset light",  "neon light"};
        return cfg;
    }

    void validate() const {
        if (colors.empty() || qualifiers.empty() || lightings.empty()) {
            throw ConfigError("appearance lists must not be empty");
        }
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"color_categories", color_categories},
                              {"colors", colors},
                              {"qualifiers", qualifiers},
                              {"lightings", lightings}};
    }

    static AppearanceConfig from_json(const nlohmann::json& j) {
        AppearanceConfig cfg = defaults();
        if (j.contains("color_categories")) {
            cfg.color_categories.clear();
            for (const auto& c : j.at("color_categories")) {
                cfg.color_categories.insert(normalize_label(c.get<std::string>()));
            }
        }
        if (j.contains("colors")) cfg.colors = j.at("colors").get<std::vector<std::string>>();
        if (j.contains("qualifiers")) {
            cfg.qualifiers = j.at("qualifiers").get<std::vector<std::string>>();
        }
        if (j.contains("lightings")) {
            cfg.lightings = j.at("lightings").get<std::vector<std::string>>();
        }
        cfg.validate();
        return cfg;
    }

    bool operator==(const AppearanceConfig&) const = default;
};

struct AppearanceSample {
    std::optional<std::string> color;
    std::optional<std::string> color_qualifier;
    std::optional<std::string> lighting;
};

namespace detail {

inline const std::string& pick(const std::vector<std::string>& items, std::mt19937_64& rng) {
    // Modulo keeps the draw identical across standard libraries; the bias for
    // list sizes this small is far below anything the tests can detect.
    return items[static_cast<std::size_t>(rng() % items.size())];
}

}  // namespace detail

// Draws color, qualifier and lighting for one variant. Exactly three rng
// draws are consumed on the eligible path regardless of outcome, so streams
// stay aligned no matter which options happen to be "none". A qualifier
// without a color would dangle, so it is dropped when the color draw is none.
inline AppearanceSample sample_appearance(std::string_view label, const AppearanceConfig& config,
                                          std::mt19937_64& rng) {
    config.validate();
    AppearanceSample sample;
    const std::string normalized = normalize_label(label);
    const bool color_eligible =
        config.color_categories.empty() || config.color_categories.contains(normalized);
    const std::string color = detail::pick(config.colors, rng);
    const std::string qualifier = detail::pick(config.qualifiers, rng);
    const std::string lighting = detail::pick(config.lightings, rng);
    if (color_eligible && color != kNoneOption) {
        sample.color = color;
        if (qualifier != kNoneOption) sample.color_qualifier = qualifier;
    }
    if (lighting != kNoneOption) sample.lighting = lighting;
    return sample;
}

// Asks the VQA backend what a person is doing, given the instance crop.
// Returns nothing for non-person labels, empty answers and backend failures;
// a missing action never blocks generation.
inline std::optional<std::string> person_action(const ImageRgb& image, const Instance& instance,
                                                VqaBackend& vqa,
                                                const std::set<std::string>& person_labels = {"person"},
                                                const std::string& question = kPersonActionQuestion) {
    if (!person_labels.contains(instance.class_label)) return std::nullopt;
    try {
        const std::string answer = normalize_label(vqa.answer(crop(image, instance.bbox), question));
        if (answer.empty()) return std::nullopt;
        return answer;
    } catch (const BackendError&) {
        return std::nullopt;
    }
}

// Fully resolved description of what one generated variant should contain.
struct PromptSpec {
    std::string class_label;
    std::optional<std::string> action;
    std::vector<std::string> lemmas;
    std::optional<std::string> color;
    std::optional<std::string> color_qualifier;
    std::optional<std::string> lighting;
};

// Comma-joined prompt: the label (plus action for people), then synonyms that
// add information beyond the label, then appearance terms.
//   {class_label "cup"}                          -> "cup"
//   {class_label "cup", color "blue", lighting "dark"} -> "cup, blue, dark"
inline std::string build_prompt(const PromptSpec& spec) {
    std::vector<std::string> parts;
    std::string head = normalize_label(spec.class_label);
    if (head.empty()) throw ConfigError("prompt needs a class label");
    if (spec.action) head += " " + *spec.action;
    parts.push_back(head);

    std::set<std::string> seen{normalize_label(spec.class_label)};
    for (const auto& lemma : spec.lemmas) {
        const std::string n = normalize_label(lemma);
        if (n.empty() || !seen.insert(n).second) continue;
        parts.push_back(n);
    }
    if (spec.color) {
        parts.push_back(spec.color_qualifier ? *spec.color_qualifier + " " + *spec.color
                                             : *spec.color);
    }
    if (spec.lighting) parts.push_back(*spec.lighting);

    std::string prompt;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) prompt += ", ";
        prompt += parts[i];
    }
    return prompt;
}

}  // namespace instaug
