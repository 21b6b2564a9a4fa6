#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "metmorph/error.hpp"
#include "metmorph/image.hpp"
#include "metmorph/io/files.hpp"

namespace metmorph::io {

namespace detail {

// libpng reports errors through longjmp; nothing with a destructor may live
// in the frames between setjmp and png_error, so the codec bodies below
// only touch raw buffers owned by the caller.
struct PngErrorState {
    char message[256] = {};
};

extern "C" inline void png_error_handler(png_structp png, png_const_charp msg)
{
    auto* st = static_cast<PngErrorState*>(png_get_error_ptr(png));
    if (st) std::snprintf(st->message, sizeof st->message, "%s", msg);
    png_longjmp(png, 1);
}

extern "C" inline void png_warning_handler(png_structp, png_const_charp) {}

struct MemReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

extern "C" inline void png_mem_read(png_structp png, png_bytep out, png_size_t n)
{
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + n > r->size) png_error(png, "truncated PNG data");
    std::memcpy(out, r->data + r->pos, n);
    r->pos += n;
}

struct MemWriter {
    std::vector<std::uint8_t>* out;
};

extern "C" inline void png_mem_write(png_structp png, png_bytep data, png_size_t n)
{
    auto* w = static_cast<MemWriter*>(png_get_io_ptr(png));
    w->out->insert(w->out->end(), data, data + n);
}

extern "C" inline void png_mem_flush(png_structp) {}

struct DecodedInfo {
    png_uint_32 width = 0, height = 0;
    int channels = 0;  // after transforms
    int bit_depth = 0; // after transforms
};

// Decodes to either 8-bit RGB (want_rgb) or single-channel 16-bit gray.
// Returns false with st.message set on failure.
inline bool decode_png(const std::vector<std::uint8_t>& bytes, bool want_rgb, std::vector<std::uint8_t>* pixels,
                       DecodedInfo* info, PngErrorState* st)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop pinfo = png_create_info_struct(png);
    MemReader reader{bytes.data(), bytes.size(), 0};
    std::vector<png_bytep>* rows = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        delete rows;
        png_destroy_read_struct(&png, &pinfo, nullptr);
        return false;
    }
    if (!pinfo) png_error(png, "out of memory");
    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, pinfo);
    const int color = png_get_color_type(png, pinfo);
    const int depth = png_get_bit_depth(png, pinfo);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, pinfo, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (want_rgb) {
        if (depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        png_set_strip_alpha(png);
    } else {
        if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA)
            png_error(png, "instance mask must be a single-channel grayscale PNG");
        png_set_strip_alpha(png);
        if (depth == 16) png_set_swap(png); // host little-endian
    }
    png_read_update_info(png, pinfo);
    info->width = png_get_image_width(png, pinfo);
    info->height = png_get_image_height(png, pinfo);
    info->channels = png_get_channels(png, pinfo);
    info->bit_depth = png_get_bit_depth(png, pinfo);
    const png_size_t stride = png_get_rowbytes(png, pinfo);
    pixels->assign(stride * info->height, 0);
    rows = new std::vector<png_bytep>(info->height);
    for (png_uint_32 r = 0; r < info->height; ++r) (*rows)[r] = pixels->data() + r * stride;
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
    delete rows;
    png_destroy_read_struct(&png, &pinfo, nullptr);
    return true;
}

inline bool encode_png(const std::uint8_t* pixels, png_uint_32 width, png_uint_32 height, int color_type,
                       int bit_depth, png_size_t stride, std::vector<std::uint8_t>* out, PngErrorState* st)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, st, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop pinfo = png_create_info_struct(png);
    MemWriter writer{out};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &pinfo);
        return false;
    }
    if (!pinfo) png_error(png, "out of memory");
    png_set_write_fn(png, &writer, png_mem_write, png_mem_flush);
    png_set_compression_level(png, 3);
    png_set_IHDR(png, pinfo, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, pinfo);
    if (bit_depth == 16) png_set_swap(png);
    for (png_uint_32 r = 0; r < height; ++r) png_write_row(png, pixels + r * stride);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &pinfo);
    return true;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png_rgb(const RgbImage& img)
{
    std::vector<std::uint8_t> out;
    detail::PngErrorState st;
    if (!detail::encode_png(img.data().data(), static_cast<png_uint_32>(img.width()),
                            static_cast<png_uint_32>(img.height()), PNG_COLOR_TYPE_RGB, 8,
                            static_cast<png_size_t>(img.width()) * 3, &out, &st))
        throw IoError(std::string("PNG encode failed: ") + st.message);
    return out;
}

inline std::vector<std::uint8_t> encode_png_gray16(const LabelImage& img)
{
    std::vector<std::uint8_t> out;
    detail::PngErrorState st;
    if (!detail::encode_png(reinterpret_cast<const std::uint8_t*>(img.data().data()),
                            static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
                            PNG_COLOR_TYPE_GRAY, 16, static_cast<png_size_t>(img.width()) * 2, &out, &st))
        throw IoError(std::string("PNG encode failed: ") + st.message);
    return out;
}

inline RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes, const std::string& what = "PNG")
{
    std::vector<std::uint8_t> px;
    detail::DecodedInfo info;
    detail::PngErrorState st;
    if (!detail::decode_png(bytes, true, &px, &info, &st)) throw SchemaError(what + ": " + st.message);
    RgbImage img(info.height, info.width);
    std::memcpy(img.data().data(), px.data(), px.size());
    return img;
}

inline LabelImage decode_png_labels(const std::vector<std::uint8_t>& bytes, const std::string& what = "PNG")
{
    std::vector<std::uint8_t> px;
    detail::DecodedInfo info;
    detail::PngErrorState st;
    if (!detail::decode_png(bytes, false, &px, &info, &st)) throw SchemaError(what + ": " + st.message);
    LabelImage img(info.height, info.width);
    auto& out = img.data();
    if (info.bit_depth == 16) {
        std::memcpy(out.data(), px.data(), px.size());
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[i];
    }
    return img;
}

inline RgbImage read_png_rgb(const fs::path& path) { return decode_png_rgb(read_bytes(path), path.string()); }
inline LabelImage read_png_labels(const fs::path& path) { return decode_png_labels(read_bytes(path), path.string()); }

inline void write_png_rgb(const fs::path& path, const RgbImage& img) { write_atomic(path, encode_png_rgb(img)); }
inline void write_png_labels(const fs::path& path, const LabelImage& img) { write_atomic(path, encode_png_gray16(img)); }

} // namespace metmorph::io
