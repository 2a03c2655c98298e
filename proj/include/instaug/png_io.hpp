#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "instaug/error.hpp"
#include "instaug/image.hpp"

namespace instaug {

namespace detail {

// libpng reports errors through a callback that must not return; throwing
// here unwinds cleanly through libpng (built with unwind tables) and the
// RAII handles below release the C-side state.
[[noreturn]] inline void png_throw(png_structp, png_const_charp msg) {
    throw ParseError(std::string("png: ") + (msg ? msg : "unknown error"));
}

inline void png_quiet_warning(png_structp, png_const_charp) {}

struct PngReadHandle {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    void create() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, &png_throw,
                                     &png_quiet_warning);
        if (!png) throw IoError("png_create_read_struct failed");
        info = png_create_info_struct(png);
        if (!info) throw IoError("png_create_info_struct failed");
    }

    ~PngReadHandle() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteHandle {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    void create() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, &png_throw,
                                      &png_quiet_warning);
        if (!png) throw IoError("png_create_write_struct failed");
        info = png_create_info_struct(png);
        if (!info) throw IoError("png_create_info_struct failed");
    }

    ~PngWriteHandle() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

struct MemoryReader {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos = 0;

    static void read(png_structp png, png_bytep out, png_size_t n) {
        auto* self = static_cast<MemoryReader*>(png_get_io_ptr(png));
        if (self->pos + n > self->size) png_error(png, "unexpected end of data");
        std::memcpy(out, self->data + self->pos, n);
        self->pos += n;
    }
};

struct MemoryWriter {
    std::string* out;

    static void write(png_structp png, png_bytep data, png_size_t n) {
        auto* self = static_cast<MemoryWriter*>(png_get_io_ptr(png));
        self->out->append(reinterpret_cast<const char*>(data), n);
    }

    static void flush(png_structp) {}
};

enum class PixelLayout { rgb8, gray8, gray16 };

template <typename ImageT>
ImageT decode_png(PngReadHandle& h, PixelLayout layout, const std::string& name) {
    png_read_info(h.png, h.info);
    switch (layout) {
        case PixelLayout::rgb8:
            png_set_palette_to_rgb(h.png);
            png_set_expand_gray_1_2_4_to_8(h.png);
            png_set_tRNS_to_alpha(h.png);
            png_set_strip_16(h.png);
            png_set_strip_alpha(h.png);
            png_set_gray_to_rgb(h.png);
            break;
        case PixelLayout::gray8:
            png_set_palette_to_rgb(h.png);
            png_set_expand_gray_1_2_4_to_8(h.png);
            png_set_strip_16(h.png);
            png_set_strip_alpha(h.png);
            if (png_get_color_type(h.png, h.info) & PNG_COLOR_MASK_COLOR) {
                png_set_rgb_to_gray(h.png, PNG_ERROR_ACTION_NONE, PNG_RGB_TO_GRAY_DEFAULT,
                                    PNG_RGB_TO_GRAY_DEFAULT);
            }
            break;
        case PixelLayout::gray16:
            if (png_get_color_type(h.png, h.info) != PNG_COLOR_TYPE_GRAY ||
                png_get_bit_depth(h.png, h.info) != 16) {
                throw ParseError(name + " is not a 16-bit grayscale PNG");
            }
            png_set_swap(h.png);
            break;
    }
    png_read_update_info(h.png, h.info);
    const int w = static_cast<int>(png_get_image_width(h.png, h.info));
    const int hgt = static_cast<int>(png_get_image_height(h.png, h.info));
    const int expected_channels = layout == PixelLayout::rgb8 ? 3 : 1;
    if (png_get_channels(h.png, h.info) != expected_channels) {
        throw ParseError(name + ": unexpected channel layout");
    }
    ImageT out(w, hgt);
    std::vector<png_bytep> rows(hgt);
    for (int y = 0; y < hgt; ++y) rows[y] = reinterpret_cast<png_bytep>(out.row(y));
    png_read_image(h.png, rows.data());
    png_read_end(h.png, nullptr);
    return out;
}

template <typename ImageT>
void encode_png(PngWriteHandle& h, const ImageT& image, int color_type, int bit_depth) {
    png_set_IHDR(h.png, h.info, image.width(), image.height(), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(h.png, h.info);
    if (bit_depth == 16) png_set_swap(h.png);
    std::vector<png_bytep> rows(image.height());
    for (int y = 0; y < image.height(); ++y) {
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<typename ImageT::value_type*>(image.row(y)));
    }
    png_write_image(h.png, rows.data());
    png_write_end(h.png, nullptr);
}

template <typename ImageT>
ImageT read_png_file(const std::filesystem::path& path, PixelLayout layout) {
    PngReadHandle h;
    h.fp = std::fopen(path.string().c_str(), "rb");
    if (!h.fp) throw IoError("cannot open " + path.string() + " for reading");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, h.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw ParseError(path.string() + " is not a PNG file");
    }
    h.create();
    png_init_io(h.png, h.fp);
    png_set_sig_bytes(h.png, 8);
    try {
        return decode_png<ImageT>(h, layout, path.string());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

template <typename ImageT>
ImageT read_png_bytes(std::string_view bytes, PixelLayout layout) {
    PngReadHandle h;
    h.create();
    MemoryReader reader{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    png_set_read_fn(h.png, &reader, &MemoryReader::read);
    return decode_png<ImageT>(h, layout, "png data");
}

template <typename ImageT>
void write_png_file(const std::filesystem::path& path, const ImageT& image, int color_type,
                    int bit_depth) {
    if (image.empty()) throw DimensionError("refusing to write an empty image");
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    PngWriteHandle h;
    h.fp = std::fopen(path.string().c_str(), "wb");
    if (!h.fp) throw IoError("cannot open " + path.string() + " for writing");
    h.create();
    png_init_io(h.png, h.fp);
    try {
        encode_png(h, image, color_type, bit_depth);
    } catch (const ParseError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (std::fflush(h.fp) != 0) throw IoError("failed to flush " + path.string());
}

template <typename ImageT>
std::string write_png_bytes(const ImageT& image, int color_type, int bit_depth) {
    if (image.empty()) throw DimensionError("refusing to encode an empty image");
    std::string out;
    PngWriteHandle h;
    h.create();
    MemoryWriter writer{&out};
    png_set_write_fn(h.png, &writer, &MemoryWriter::write, &MemoryWriter::flush);
    encode_png(h, image, color_type, bit_depth);
    return out;
}

}  // namespace detail

// Reads any well-formed PNG as 8-bit RGB: palettes are expanded, 16-bit
// samples are narrowed, alpha is dropped and grayscale is replicated.
inline ImageRgb read_png_rgb(const std::filesystem::path& path) {
    return detail::read_png_file<ImageRgb>(path, detail::PixelLayout::rgb8);
}

// Reads a PNG as 8-bit grayscale; color inputs are converted by libpng.
inline ImageGray read_png_gray(const std::filesystem::path& path) {
    return detail::read_png_file<ImageGray>(path, detail::PixelLayout::gray8);
}

// Strict reader for the 16-bit grayscale maps this library writes itself.
inline ImageGray16 read_png_gray16(const std::filesystem::path& path) {
    return detail::read_png_file<ImageGray16>(path, detail::PixelLayout::gray16);
}

inline void write_png(const std::filesystem::path& path, const ImageRgb& image) {
    detail::write_png_file(path, image, PNG_COLOR_TYPE_RGB, 8);
}

inline void write_png(const std::filesystem::path& path, const ImageGray& image) {
    detail::write_png_file(path, image, PNG_COLOR_TYPE_GRAY, 8);
}

inline void write_png(const std::filesystem::path& path, const ImageGray16& image) {
    detail::write_png_file(path, image, PNG_COLOR_TYPE_GRAY, 16);
}

// In-memory PNG round trips, used by the wire protocol.
inline std::string encode_png_bytes(const ImageRgb& image) {
    return detail::write_png_bytes(image, PNG_COLOR_TYPE_RGB, 8);
}

inline std::string encode_png_bytes(const ImageGray& image) {
    return detail::write_png_bytes(image, PNG_COLOR_TYPE_GRAY, 8);
}

inline std::string encode_png_bytes(const ImageGray16& image) {
    return detail::write_png_bytes(image, PNG_COLOR_TYPE_GRAY, 16);
}

inline ImageRgb decode_png_rgb(std::string_view bytes) {
    return detail::read_png_bytes<ImageRgb>(bytes, detail::PixelLayout::rgb8);
}

inline ImageGray decode_png_gray(std::string_view bytes) {
    return detail::read_png_bytes<ImageGray>(bytes, detail::PixelLayout::gray8);
}

inline ImageGray16 decode_png_gray16(std::string_view bytes) {
    return detail::read_png_bytes<ImageGray16>(bytes, detail::PixelLayout::gray16);
}

}  // namespace instaug
