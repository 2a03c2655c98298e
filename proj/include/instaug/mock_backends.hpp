#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "instaug/backend.hpp"
#include "instaug/dataset.hpp"
#include "instaug/error.hpp"
#include "instaug/hash.hpp"
#include "instaug/image.hpp"

namespace instaug {

template <typename T, int C>
bool is_constant_image(const Image<T, C>& img) {
    if (img.empty()) return true;
    for (int c = 0; c < C; ++c) {
        const T first = img.at(0, 0, c);
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                if (img.at(x, y, c) != first) return false;
            }
        }
    }
    return true;
}

inline double mean_luminance(const ImageRgb& img) {
    double sum = 0.0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            sum += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
        }
    }
    return img.empty() ? 0.0 : sum / (static_cast<double>(img.width()) * img.height());
}

// Stand-in for the reconstruction loss of a learned autoencoder: downscale
// and upscale with bilinear filtering, then pull every pixel a sixteenth of
// the way toward mid-gray. Blur alone converges to a fixed point after a few
// passes; the contrast washout keeps every round trip strictly lossy, the
// behaviour the degradation metrics measure. The washout step is rounded away
// from zero so no pixel ever stalls short of mid-gray. A constant image
// survives exactly.
class LossyCodec {
public:
    explicit LossyCodec(int down_factor = 2) : down_factor_(down_factor) {
        if (down_factor < 2) throw ConfigError("codec down factor must be at least 2");
    }

    int down_factor() const { return down_factor_; }

    ImageRgb roundtrip(const ImageRgb& image) const {
        if (image.empty()) throw DimensionError("codec roundtrip of an empty image");
        if (is_constant_image(image)) return image;
        const int w = std::max(1, image.width() / down_factor_);
        const int h = std::max(1, image.height() / down_factor_);
        ImageRgb out = resize_bilinear(resize_bilinear(image, w, h), image.width(), image.height());

        constexpr int kWashout = 16;
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                for (int c = 0; c < 3; ++c) {
                    const int v = out.at(x, y, c);
                    const int d = v - 128;
                    const int step = d > 0 ? (d + kWashout - 1) / kWashout
                                           : -((-d + kWashout - 1) / kWashout);
                    out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v - step, 0, 255));
                }
            }
        }
        if (out == image) {
            out.at(0, 0, 0) ^= 1;  // keep the lossy guarantee even for resilient inputs
        }
        return out;
    }

private:
    int down_factor_;
};

// ---------------------------------------------------------------------------
// Inpainting mock. Fills the masked region with content derived only from
// (seed, prompt), so identical requests give identical pixels and any change
// in seed or prompt changes the fill. Optionally routes the whole frame
// through a lossy codec first, imitating generators that re-encode their
// input rather than editing it in place.
// ---------------------------------------------------------------------------

class MockInpainter : public InpaintBackend {
public:
    enum class FillMode { constant_color, textured };

    struct Options {
        FillMode mode = FillMode::constant_color;
        int codec_down_factor = 0;  // 0 disables the codec
        int max_in_flight = 4;
        std::set<std::string> fail_image_ids;  // fault injection
    };

    MockInpainter() = default;
    explicit MockInpainter(Options options) : options_(std::move(options)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::inpaint, "mock-inpaint", true, options_.max_in_flight};
    }

    ImageRgb inpaint(const GenerationRequest& request) override {
        request.validate();
        if (options_.fail_image_ids.contains(request.context.image_id)) {
            throw BackendError("mock-inpaint: configured to fail for image " +
                               request.context.image_id);
        }
        ImageRgb out = options_.codec_down_factor >= 2
                           ? LossyCodec(options_.codec_down_factor).roundtrip(request.base_image)
                           : request.base_image;

        const std::uint64_t h = hash_combine(mix64(request.seed), request.prompt_text);
        const std::uint8_t r = static_cast<std::uint8_t>(h & 0xff);
        const std::uint8_t g = static_cast<std::uint8_t>((h >> 8) & 0xff);
        const std::uint8_t b = static_cast<std::uint8_t>((h >> 16) & 0xff);

        bool changed = false;
        int first_x = -1;
        int first_y = -1;
        for (int y = 0; y < out.height(); ++y) {
            const std::uint8_t* m = request.mask.row(y);
            for (int x = 0; x < out.width(); ++x) {
                if (!m[x]) continue;
                if (first_x < 0) {
                    first_x = x;
                    first_y = y;
                }
                if (options_.mode == FillMode::constant_color) {
                    out.at(x, y, 0) = r;
                    out.at(x, y, 1) = g;
                    out.at(x, y, 2) = b;
                } else {
                    const std::uint64_t px = hash_combine(
                        h, (static_cast<std::uint64_t>(y) << 32) | static_cast<std::uint32_t>(x));
                    out.at(x, y, 0) = static_cast<std::uint8_t>(px & 0xff);
                    out.at(x, y, 1) = static_cast<std::uint8_t>((px >> 8) & 0xff);
                    out.at(x, y, 2) = static_cast<std::uint8_t>((px >> 16) & 0xff);
                }
                changed |= out.at(x, y, 0) != request.base_image.at(x, y, 0) ||
                           out.at(x, y, 1) != request.base_image.at(x, y, 1) ||
                           out.at(x, y, 2) != request.base_image.at(x, y, 2);
            }
        }
        if (first_x < 0) throw EmptyMaskError("inpaint request with an empty mask");
        if (!changed) {
            // The drawn color happened to equal the covered pixels; a repaint
            // must still be observable.
            out.at(first_x, first_y, 0) ^= 0x80;
        }
        return out;
    }

private:
    Options options_;
};

// Vertical depth ramp: top of the frame farthest, bottom nearest. Enough
// structure for ordering logic without a real monocular depth model.
class MockDepthEstimator : public DepthBackend {
public:
    BackendDescriptor descriptor() const override {
        return {BackendKind::depth, "mock-depth", true, 8};
    }

    MapF estimate_depth(const ImageRgb& image) override {
        MapF map(image.width(), image.height());
        const int h = image.height();
        for (int y = 0; y < h; ++y) {
            const float v = h > 1 ? static_cast<float>(h - 1 - y) / (h - 1) : 0.0f;
            float* row = map.row(y);
            std::fill(row, row + image.width(), v);
        }
        return map;
    }
};

// Central-difference gradient magnitude of the luma channel, normalized so
// the steepest representable edge maps to 1.
class MockEdgeDetector : public EdgeBackend {
public:
    BackendDescriptor descriptor() const override {
        return {BackendKind::edge, "mock-edge", true, 8};
    }

    MapF detect_edges(const ImageRgb& image) override {
        const MapF luma = luminance(image);
        MapF map(image.width(), image.height());
        const int w = image.width();
        const int h = image.height();
        constexpr double norm = 180.31222920256963;  // 127.5 * sqrt(2)
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double gx = (luma.at(std::min(x + 1, w - 1), y) -
                                   luma.at(std::max(x - 1, 0), y)) / 2.0;
                const double gy = (luma.at(x, std::min(y + 1, h - 1)) -
                                   luma.at(x, std::max(y - 1, 0))) / 2.0;
                map.at(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy) / norm);
            }
        }
        return map;
    }
};

// Question answering mock: scripted answers first, then per-question answers,
// then the default. An empty resolved answer means "no answer".
class MockVqa : public VqaBackend {
public:
    std::deque<std::string> script;
    std::map<std::string, std::string> answers_by_question;
    std::string default_answer;
    bool fail = false;

    BackendDescriptor descriptor() const override {
        return {BackendKind::vqa, "mock-vqa", true, 4};
    }

    std::string answer(const ImageRgb&, const std::string& question) override {
        ++calls;
        if (fail) throw BackendError("mock-vqa: configured to fail");
        if (!script.empty()) {
            const std::string a = script.front();
            script.pop_front();
            return a;
        }
        if (const auto it = answers_by_question.find(question); it != answers_by_question.end()) {
            return it->second;
        }
        return default_answer;
    }

    int calls = 0;
};

// Content filter mock. Verdicts come from a script when one is present;
// otherwise a region is flagged when its mean luma falls inside the
// configured band. The default band is empty, so everything passes.
class MockNsfwFilter : public NsfwBackend {
public:
    double band_lo = 1.0;
    double band_hi = 0.0;
    std::deque<bool> script;  // true = flagged

    BackendDescriptor descriptor() const override {
        return {BackendKind::nsfw, "mock-nsfw", true, 4};
    }

    NsfwVerdict check(const ImageRgb& region) override {
        ++checks;
        const double mean = mean_luminance(region);
        bool flagged;
        if (!script.empty()) {
            flagged = script.front();
            script.pop_front();
        } else {
            flagged = mean >= band_lo && mean <= band_hi;
        }
        return {!flagged, mean / 255.0};
    }

    int checks = 0;
};

// Score-based filter: flags anything whose score reaches the threshold.
// Raising the threshold can only reduce the set of flagged regions.
class ThresholdNsfwFilter : public NsfwBackend {
public:
    explicit ThresholdNsfwFilter(double threshold) : threshold_(threshold) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::nsfw, "threshold-nsfw", true, 4};
    }

    NsfwVerdict check(const ImageRgb& region) override {
        const double score = mean_luminance(region) / 255.0;
        return {score < threshold_, score};
    }

private:
    double threshold_;
};

// Salience equals brightness. Crude, but it gives mask refinement something
// meaningful to threshold in tests and offline runs.
class LuminanceSaliency : public SaliencyBackend {
public:
    BackendDescriptor descriptor() const override {
        return {BackendKind::saliency, "mock-saliency", true, 8};
    }

    ImageGray saliency(const ImageRgb& image) override { return to_gray(image); }
};

class FunctionSaliency : public SaliencyBackend {
public:
    explicit FunctionSaliency(std::function<ImageGray(const ImageRgb&)> fn) : fn_(std::move(fn)) {}

    BackendDescriptor descriptor() const override {
        return {BackendKind::saliency, "function-saliency", true, 8};
    }

    ImageGray saliency(const ImageRgb& image) override { return fn_(image); }

private:
    std::function<ImageGray(const ImageRgb&)> fn_;
};

}  // namespace instaug
