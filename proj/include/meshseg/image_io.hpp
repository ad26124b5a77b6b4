/*
 * Copyright 2026 The meshseg Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#pragma once

#include <meshseg/mesh_io.hpp>
#include <meshseg/render.hpp>

#include <png.h>

#include <csetjmp>

namespace meshseg {

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t length)
{
    auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    buf->insert(buf->end(), data, data + length);
}

struct PngReadCursor
{
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

inline void png_consume(png_structp png, png_bytep out, png_size_t length)
{
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + length > cur->size) png_error(png, "truncated PNG stream");
    std::memcpy(out, cur->data + cur->pos, length);
    cur->pos += length;
}

} // namespace detail

/// Encodes an 8-bit RGB image as PNG.
inline std::vector<std::uint8_t> encode_png(const Image& img)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed");
    }
    png_set_write_fn(png, &buffer, detail::png_append, nullptr);
    png_set_IHDR(
        png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
        PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int row = 0; row < img.height; ++row) {
        auto* ptr = const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(row) * img.width * 3);
        png_write_row(png, ptr);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return buffer;
}

/// Decodes any 8-bit PNG to RGB; throws InputError on malformed data.
inline Image decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw InputError("not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("png_create_info_struct failed");
    }
    Image img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("malformed PNG stream");
    }
    detail::PngReadCursor cursor{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &cursor, detail::png_consume);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3)
        png_error(png, "unexpected PNG row layout");
    img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int row = 0; row < img.height; ++row)
        png_read_row(png, img.rgb.data() + static_cast<std::size_t>(row) * img.width * 3, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const std::filesystem::path& path, const Image& img)
{
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("cannot write '" + path.string() + "'");
}

/// Face-ID raster: uint32 width, uint32 height, then width*height int32 face IDs
/// (row 0 at the top, -1 for background), all little-endian.
inline void write_pixel2face(std::ostream& out, const RenderOutput& r)
{
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.width));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.height));
    for (auto f : r.pixel2face) detail::write_le<std::int32_t>(out, f);
}

inline std::vector<FaceId> read_pixel2face(std::istream& in, int& width, int& height)
{
    width = static_cast<int>(detail::read_le<std::uint32_t>(in));
    height = static_cast<int>(detail::read_le<std::uint32_t>(in));
    std::vector<FaceId> ids(static_cast<std::size_t>(width) * height);
    for (auto& f : ids) f = detail::read_le<std::int32_t>(in);
    return ids;
}

inline std::string base64_encode(std::span<const std::uint8_t> data)
{
    static constexpr char kTable[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < data.size(); i += 3) {
        const std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += kTable[(n >> 18) & 63];
        out += kTable[(n >> 12) & 63];
        out += kTable[(n >> 6) & 63];
        out += kTable[n & 63];
    }
    if (i + 1 == data.size()) {
        const std::uint32_t n = data[i] << 16;
        out += kTable[(n >> 18) & 63];
        out += kTable[(n >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        const std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
        out += kTable[(n >> 18) & 63];
        out += kTable[(n >> 12) & 63];
        out += kTable[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

/// Strict decoder: rejects characters outside the alphabet and bad padding.
inline std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw InputError("base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && last && k >= 2) {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0 || (v[k] = value(c)) < 0) throw InputError("invalid base64 character");
        }
        const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>(n >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(n & 0xff));
    }
    return out;
}

} // namespace meshseg
