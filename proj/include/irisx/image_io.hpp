#pragma once

// Grayscale image / mask file I/O. Supported formats: PGM (P5 binary and P2
// ASCII, maxval up to 65535) and 8/16-bit PNG. Color PNG inputs are reduced
// to luminance; mask thresholding is >127 on the 8-bit scale.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "irisx/errors.hpp"
#include "irisx/image.hpp"

namespace irisx {

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty()) return 0;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return tok.empty() ? -1 : 0;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

/// 8-bit grayscale raster, the common currency of the file formats below.
struct RawGray {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;
};

inline RawGray read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string tok;
    if (detail::pgm_next_token(in, tok) != 0) throw IoError(path + ": empty file");
    const bool ascii = tok == "P2";
    if (!ascii && tok != "P5") throw IoError(path + ": not a PGM file (magic " + tok + ")");
    auto next_int = [&](const char* what) {
        if (detail::pgm_next_token(in, tok) != 0) throw IoError(path + ": truncated header (" + what + ")");
        return std::stol(tok);
    };
    const long w = next_int("width");
    const long h = next_int("height");
    const long maxval = next_int("maxval");
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError(path + ": bad PGM header");
    RawGray img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.data.resize(static_cast<std::size_t>(w) * h);
    const std::size_t n = img.data.size();
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::pgm_next_token(in, tok) != 0) throw IoError(path + ": truncated pixel data");
            long v = std::stol(tok);
            img.data[i] = static_cast<std::uint8_t>(std::clamp(v * 255L / maxval, 0L, 255L));
        }
    } else if (maxval < 256) {
        std::vector<std::uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(path + ": truncated pixel data");
        for (std::size_t i = 0; i < n; ++i)
            img.data[i] = static_cast<std::uint8_t>(buf[i] * 255L / maxval);
    } else {
        std::vector<std::uint8_t> buf(n * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
        if (static_cast<std::size_t>(in.gcount()) != n * 2) throw IoError(path + ": truncated pixel data");
        for (std::size_t i = 0; i < n; ++i) {
            long v = (static_cast<long>(buf[2 * i]) << 8) | buf[2 * i + 1];  // big-endian per spec P5
            img.data[i] = static_cast<std::uint8_t>(std::clamp(v * 255L / maxval, 0L, 255L));
        }
    }
    return img;
}

inline void write_pgm(const std::string& path, const RawGray& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline RawGray read_png(const std::string& path) {
    detail::PngReadCloser c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw IoError("cannot open " + path);
    png_byte header[8];
    if (std::fread(header, 1, 8, c.fp) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError(path + ": not a PNG file");
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_read_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError(path + ": PNG decode error");
    png_init_io(c.png, c.fp);
    png_set_sig_bytes(c.png, 8);
    png_read_info(c.png, c.info);

    const png_uint_32 w = png_get_image_width(c.png, c.info);
    const png_uint_32 h = png_get_image_height(c.png, c.info);
    const int color = png_get_color_type(c.png, c.info);
    const int depth = png_get_bit_depth(c.png, c.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(c.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
    if (png_get_valid(c.png, c.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(c.png);
    if (depth == 16) png_set_strip_16(c.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(c.png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray(c.png, 1, -1, -1);  // luminance extraction, default ITU weights
    png_read_update_info(c.png, c.info);

    RawGray img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.data.resize(static_cast<std::size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.data.data() + static_cast<std::size_t>(y) * w;
    png_read_image(c.png, rows.data());
    return img;
}

inline void write_png(const std::string& path, const RawGray& img) {
    detail::PngWriteCloser c;
    c.fp = std::fopen(path.c_str(), "wb");
    if (!c.fp) throw IoError("cannot open " + path + " for writing");
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw IoError("png_create_write_struct failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(c.png))) throw IoError(path + ": PNG encode error");
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(c.png, const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width));
    png_write_end(c.png, nullptr);
}

inline bool has_png_extension(const std::string& path) {
    auto ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".png";
}

/// Reads a PGM or PNG file (chosen by extension) as intensities in [0,1].
inline GrayImage read_gray_image(const std::string& path) {
    const RawGray raw = has_png_extension(path) ? read_png(path) : read_pgm(path);
    GrayImage img(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.data.size(); ++i) img.pixels[i] = raw.data[i] / 255.0;
    return img;
}

/// Reads a PGM or PNG file as a mask; values >127 are true.
inline BinaryMask read_mask(const std::string& path) {
    const RawGray raw = has_png_extension(path) ? read_png(path) : read_pgm(path);
    BinaryMask mask(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.data.size(); ++i) mask.bits[i] = raw.data[i] > 127 ? 1 : 0;
    return mask;
}

inline void write_gray_image(const std::string& path, const GrayImage& img) {
    RawGray raw;
    raw.width = img.width;
    raw.height = img.height;
    raw.data.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = std::clamp(img.pixels[i], 0.0, 1.0);
        raw.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    if (has_png_extension(path)) write_png(path, raw);
    else write_pgm(path, raw);
}

inline void write_mask(const std::string& path, const BinaryMask& mask) {
    RawGray raw;
    raw.width = mask.width;
    raw.height = mask.height;
    raw.data.resize(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) raw.data[i] = mask.bits[i] ? 255 : 0;
    if (has_png_extension(path)) write_png(path, raw);
    else write_pgm(path, raw);
}

}  // namespace irisx
