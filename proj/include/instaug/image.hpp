#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "instaug/error.hpp"

namespace instaug {

// Inclusive pixel rectangle. A default-constructed Rect is empty.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1;
    int y1 = -1;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    bool empty() const { return x1 < x0 || y1 < y0; }
    std::int64_t area() const {
        return empty() ? 0 : static_cast<std::int64_t>(width()) * height();
    }
    bool contains(int x, int y) const {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }

    bool operator==(const Rect&) const = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
    Rect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0),
           std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
    return r;
}

// Dense row-major interleaved raster. Pixel access is unchecked; dimension
// compatibility is validated at operation boundaries instead of per pixel.
template <typename T, int ChannelCount = 1>
class Image {
    static_assert(ChannelCount >= 1);

public:
    using value_type = T;
    static constexpr int channels = ChannelCount;

    Image() = default;

    Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw DimensionError("image dimensions must be positive, got " +
                                 std::to_string(width) + "x" + std::to_string(height));
        }
        pixels_.assign(static_cast<std::size_t>(width) * height * ChannelCount, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }
    std::size_t size() const { return pixels_.size(); }
    Rect bounds() const { return Rect{0, 0, width_ - 1, height_ - 1}; }

    T& at(int x, int y, int c = 0) { return pixels_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return pixels_[index(x, y, c)]; }

    T* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_ * ChannelCount; }
    const T* row(int y) const {
        return pixels_.data() + static_cast<std::size_t>(y) * width_ * ChannelCount;
    }

    T* data() { return pixels_.data(); }
    const T* data() const { return pixels_.data(); }

    bool same_size(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    void fill(T value) { std::fill(pixels_.begin(), pixels_.end(), value); }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * ChannelCount + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> pixels_;
};

using ImageRgb = Image<std::uint8_t, 3>;
using ImageGray = Image<std::uint8_t, 1>;
using ImageGray16 = Image<std::uint16_t, 1>;
using MapF = Image<float, 1>;

// Binary mask, values restricted to {0, 1}.
using Mask = Image<std::uint8_t, 1>;

template <typename T, int C>
void require_same_size(const Image<T, C>& a, const Image<T, C>& b, const char* what) {
    if (!a.same_size(b)) {
        throw DimensionError(std::string(what) + ": size mismatch, " +
                             std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                             " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

template <typename T, int C>
Image<T, C> crop(const Image<T, C>& src, const Rect& r) {
    if (r.empty()) throw DimensionError("crop rectangle is empty");
    if (r.x0 < 0 || r.y0 < 0 || r.x1 >= src.width() || r.y1 >= src.height()) {
        throw DimensionError("crop rectangle exceeds image bounds");
    }
    Image<T, C> out(r.width(), r.height());
    for (int y = 0; y < out.height(); ++y) {
        const T* s = src.row(r.y0 + y) + static_cast<std::size_t>(r.x0) * C;
        std::copy(s, s + static_cast<std::size_t>(out.width()) * C, out.row(y));
    }
    return out;
}

template <typename T, int C>
void paste(Image<T, C>& dst, const Image<T, C>& src, int x, int y) {
    if (x < 0 || y < 0 || x + src.width() > dst.width() || y + src.height() > dst.height()) {
        throw DimensionError("paste target exceeds image bounds");
    }
    for (int row = 0; row < src.height(); ++row) {
        const T* s = src.row(row);
        std::copy(s, s + static_cast<std::size_t>(src.width()) * C,
                  dst.row(y + row) + static_cast<std::size_t>(x) * C);
    }
}

// Bilinear resample with half-pixel aligned sample centers. Integral pixel
// types are rounded half away from zero; float maps are stored as computed.
template <typename T, int C>
Image<T, C> resize_bilinear(const Image<T, C>& src, int out_w, int out_h) {
    if (src.empty()) throw DimensionError("resize of an empty image");
    if (out_w < 1 || out_h < 1) throw DimensionError("resize target must be at least 1x1");
    if (out_w == src.width() && out_h == src.height()) return src;
    Image<T, C> out(out_w, out_h);
    const double sx = static_cast<double>(src.width()) / out_w;
    const double sy = static_cast<double>(src.height()) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int iy = static_cast<int>(std::floor(fy));
        const double wy = fy - iy;
        const int ya = std::clamp(iy, 0, src.height() - 1);
        const int yb = std::clamp(iy + 1, 0, src.height() - 1);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int ix = static_cast<int>(std::floor(fx));
            const double wx = fx - ix;
            const int xa = std::clamp(ix, 0, src.width() - 1);
            const int xb = std::clamp(ix + 1, 0, src.width() - 1);
            for (int c = 0; c < C; ++c) {
                const double top = (1.0 - wx) * src.at(xa, ya, c) + wx * src.at(xb, ya, c);
                const double bot = (1.0 - wx) * src.at(xa, yb, c) + wx * src.at(xb, yb, c);
                const double v = (1.0 - wy) * top + wy * bot;
                if constexpr (std::is_floating_point_v<T>) {
                    out.at(x, y, c) = static_cast<T>(v);
                } else {
                    out.at(x, y, c) = static_cast<T>(std::llround(v));
                }
            }
        }
    }
    return out;
}

// Nearest-neighbour resample; the right choice for masks, where interpolated
// values would leave the {0, 1} domain.
template <typename T, int C>
Image<T, C> resize_nearest(const Image<T, C>& src, int out_w, int out_h) {
    if (src.empty()) throw DimensionError("resize of an empty image");
    if (out_w < 1 || out_h < 1) throw DimensionError("resize target must be at least 1x1");
    if (out_w == src.width() && out_h == src.height()) return src;
    Image<T, C> out(out_w, out_h);
    const double sx = static_cast<double>(src.width()) / out_w;
    const double sy = static_cast<double>(src.height()) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const int iy = std::clamp(static_cast<int>((y + 0.5) * sy), 0, src.height() - 1);
        for (int x = 0; x < out_w; ++x) {
            const int ix = std::clamp(static_cast<int>((x + 0.5) * sx), 0, src.width() - 1);
            for (int c = 0; c < C; ++c) out.at(x, y, c) = src.at(ix, iy, c);
        }
    }
    return out;
}

// Rec. 601 luma, kept in the [0, 255] range of the source.
inline MapF luminance(const ImageRgb& rgb) {
    MapF out(rgb.width(), rgb.height());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            out.at(x, y) = static_cast<float>(0.299 * rgb.at(x, y, 0) +
                                              0.587 * rgb.at(x, y, 1) +
                                              0.114 * rgb.at(x, y, 2));
        }
    }
    return out;
}

inline ImageGray to_gray(const ImageRgb& rgb) {
    ImageGray out(rgb.width(), rgb.height());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            out.at(x, y) = static_cast<std::uint8_t>(std::llround(
                0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) + 0.114 * rgb.at(x, y, 2)));
        }
    }
    return out;
}

}  // namespace instaug
