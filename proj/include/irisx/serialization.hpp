#pragma once

// Two byte formats for templates.
//
// Canonical (.irxt), self-describing:
//   "IRXT" | version 0x01 | eye byte | kind byte | kind header | payload
//   kind 0 float embedding: header = dim u32le + metric byte, payload = dim f64le
//   kind 1 binary code:     header = k,rows,cols u32le, payload = each plane then
//                           the occlusion grid, each separately bit-packed
//                           row-major LSB-first into zero-padded u64le words
//   kind 2 crypt mask:      header = height,width u32le, payload = cells
//                           row-major bit-packed LSB-first into u64le words
//
// Wire (.irxw), raw exchange, shape known out of band:
//   eye byte | embedding: f64le values
//            | binary: one byte per bit, planes then occlusion, row-major
//            | crypt: one byte per cell, row-major

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "irisx/errors.hpp"
#include "irisx/templates.hpp"

namespace irisx {

namespace detail {

inline void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void append_f64_le(std::vector<std::uint8_t>& out, double v) {
    append_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint32_t u32_le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64_le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64_le() { return std::bit_cast<double>(u64_le()); }

    void bytes(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t n) const {
        if (size_ - pos_ < n) throw Corrupt("template data truncated");
    }
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline EyeLabel eye_from_byte(std::uint8_t b) {
    if (b > 2) throw Corrupt("bad eye byte");
    return static_cast<EyeLabel>(b);
}

// Row-major bit stream of one grid, flat-packed (no row alignment).
inline void append_grid_bits(std::vector<std::uint8_t>& out, const PackedGrid& g) {
    BitWriter bw;
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) bw.push(g.get(r, c));
    for (std::uint64_t w : bw.finish()) append_u64_le(out, w);
}

inline PackedGrid read_grid_bits(ByteReader& rd, int rows, int cols) {
    const std::size_t nbits = static_cast<std::size_t>(rows) * cols;
    const std::size_t nwords = (nbits + 63) / 64;
    std::vector<std::uint64_t> words(nwords);
    for (auto& w : words) w = rd.u64_le();
    BitReader br(words.data(), nwords);
    PackedGrid g(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g.set(r, c, br.next());
    return g;
}

}  // namespace detail

inline constexpr std::uint8_t kTemplateVersion = 0x01;
inline constexpr char kTemplateMagic[4] = {'I', 'R', 'X', 'T'};

inline std::vector<std::uint8_t> serialize_canonical(const Template& t) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kTemplateMagic, kTemplateMagic + 4);
    out.push_back(kTemplateVersion);
    out.push_back(static_cast<std::uint8_t>(eye_of(t)));

    if (const auto* e = std::get_if<FloatEmbeddingTemplate>(&t)) {
        out.push_back(0);
        detail::append_u32_le(out, static_cast<std::uint32_t>(e->values.size()));
        out.push_back(static_cast<std::uint8_t>(e->metric));
        for (double v : e->values) detail::append_f64_le(out, v);
    } else if (const auto* b = std::get_if<BinaryCodeTemplate>(&t)) {
        out.push_back(1);
        detail::append_u32_le(out, static_cast<std::uint32_t>(b->codes.size()));
        detail::append_u32_le(out, static_cast<std::uint32_t>(b->grid_rows()));
        detail::append_u32_le(out, static_cast<std::uint32_t>(b->grid_cols()));
        for (const auto& plane : b->codes) detail::append_grid_bits(out, plane);
        detail::append_grid_bits(out, b->occlusion);
    } else {
        const auto& c = std::get<CryptMaskTemplate>(t);
        out.push_back(2);
        detail::append_u32_le(out, static_cast<std::uint32_t>(c.height));
        detail::append_u32_le(out, static_cast<std::uint32_t>(c.width));
        BitWriter bw;
        for (std::uint8_t cell : c.cells) bw.push(cell != 0);
        for (std::uint64_t w : bw.finish()) detail::append_u64_le(out, w);
    }
    return out;
}

inline Template deserialize_canonical(const std::uint8_t* data, std::size_t size) {
    detail::ByteReader rd(data, size);
    char magic[4];
    rd.bytes(reinterpret_cast<std::uint8_t*>(magic), 4);
    if (std::memcmp(magic, kTemplateMagic, 4) != 0) throw NotATemplate("bad magic");
    const std::uint8_t version = rd.u8();
    if (version != kTemplateVersion)
        throw UnsupportedVersion("template version " + std::to_string(version));
    const EyeLabel eye = detail::eye_from_byte(rd.u8());
    const std::uint8_t kind = rd.u8();

    Template result;
    if (kind == 0) {
        FloatEmbeddingTemplate e;
        e.eye = eye;
        const std::uint32_t dim = rd.u32_le();
        const std::uint8_t metric = rd.u8();
        if (metric > 1) throw Corrupt("bad metric byte");
        e.metric = static_cast<DistanceMetric>(metric);
        e.values.resize(dim);
        for (auto& v : e.values) v = rd.f64_le();
        result = std::move(e);
    } else if (kind == 1) {
        BinaryCodeTemplate b;
        b.eye = eye;
        const std::uint32_t k = rd.u32_le();
        const std::uint32_t rows = rd.u32_le();
        const std::uint32_t cols = rd.u32_le();
        if (rows == 0 || cols == 0 || k == 0) throw Corrupt("empty binary template shape");
        b.codes.reserve(k);
        for (std::uint32_t i = 0; i < k; ++i)
            b.codes.push_back(detail::read_grid_bits(rd, static_cast<int>(rows), static_cast<int>(cols)));
        b.occlusion = detail::read_grid_bits(rd, static_cast<int>(rows), static_cast<int>(cols));
        result = std::move(b);
    } else if (kind == 2) {
        CryptMaskTemplate c;
        c.eye = eye;
        c.height = static_cast<int>(rd.u32_le());
        c.width = static_cast<int>(rd.u32_le());
        if (c.height <= 0 || c.width <= 0) throw Corrupt("empty crypt template shape");
        const std::size_t n = static_cast<std::size_t>(c.height) * c.width;
        const std::size_t nwords = (n + 63) / 64;
        std::vector<std::uint64_t> words(nwords);
        for (auto& w : words) w = rd.u64_le();
        BitReader br(words.data(), nwords);
        c.cells.resize(n);
        for (auto& cell : c.cells) cell = br.next() ? 1 : 0;
        result = std::move(c);
    } else {
        throw Corrupt("bad kind byte");
    }
    if (rd.remaining() != 0) throw Corrupt("trailing bytes after template payload");
    return result;
}

inline Template deserialize_canonical(const std::vector<std::uint8_t>& data) {
    return deserialize_canonical(data.data(), data.size());
}

inline std::vector<std::uint8_t> serialize_wire(const Template& t) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(eye_of(t)));
    if (const auto* e = std::get_if<FloatEmbeddingTemplate>(&t)) {
        for (double v : e->values) detail::append_f64_le(out, v);
    } else if (const auto* b = std::get_if<BinaryCodeTemplate>(&t)) {
        for (const auto& plane : b->codes)
            for (int r = 0; r < plane.rows; ++r)
                for (int c = 0; c < plane.cols; ++c) out.push_back(plane.get(r, c) ? 1 : 0);
        for (int r = 0; r < b->occlusion.rows; ++r)
            for (int c = 0; c < b->occlusion.cols; ++c)
                out.push_back(b->occlusion.get(r, c) ? 1 : 0);
    } else {
        const auto& c = std::get<CryptMaskTemplate>(t);
        for (std::uint8_t cell : c.cells) out.push_back(cell ? 1 : 0);
    }
    return out;
}

inline FloatEmbeddingTemplate deserialize_wire_embedding(const std::uint8_t* data, std::size_t size,
                                                         int dim, DistanceMetric metric) {
    if (dim <= 0) throw Corrupt("wire embedding dim must be positive");
    if (size != 1 + static_cast<std::size_t>(dim) * 8)
        throw Corrupt("wire embedding size mismatch");
    detail::ByteReader rd(data, size);
    FloatEmbeddingTemplate e;
    e.eye = detail::eye_from_byte(rd.u8());
    e.metric = metric;
    e.values.resize(dim);
    for (auto& v : e.values) v = rd.f64_le();
    return e;
}

inline BinaryCodeTemplate deserialize_wire_binary(const std::uint8_t* data, std::size_t size,
                                                  int k, int rows, int cols) {
    if (k <= 0 || rows <= 0 || cols <= 0) throw Corrupt("wire binary shape must be positive");
    const std::size_t per_grid = static_cast<std::size_t>(rows) * cols;
    if (size != 1 + per_grid * (static_cast<std::size_t>(k) + 1))
        throw Corrupt("wire binary size mismatch");
    detail::ByteReader rd(data, size);
    BinaryCodeTemplate b;
    b.eye = detail::eye_from_byte(rd.u8());
    auto read_grid = [&] {
        PackedGrid g(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const std::uint8_t v = rd.u8();
                if (v > 1) throw Corrupt("wire binary byte not 0 or 1");
                g.set(r, c, v != 0);
            }
        return g;
    };
    b.codes.reserve(k);
    for (int i = 0; i < k; ++i) b.codes.push_back(read_grid());
    b.occlusion = read_grid();
    return b;
}

inline CryptMaskTemplate deserialize_wire_crypt(const std::uint8_t* data, std::size_t size,
                                                int height, int width) {
    if (height <= 0 || width <= 0) throw Corrupt("wire crypt shape must be positive");
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (size != 1 + n) throw Corrupt("wire crypt size mismatch");
    detail::ByteReader rd(data, size);
    CryptMaskTemplate c;
    c.eye = detail::eye_from_byte(rd.u8());
    c.height = height;
    c.width = width;
    c.cells.resize(n);
    for (auto& cell : c.cells) {
        const std::uint8_t v = rd.u8();
        if (v > 1) throw Corrupt("wire crypt byte not 0 or 1");
        cell = v;
    }
    return c;
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw IoError("cannot open for read: " + path);
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(data.data()), size);
    if (!f) throw IoError("read failed: " + path);
    return data;
}

inline void save_template(const std::string& path, const Template& t) {
    write_bytes(path, serialize_canonical(t));
}

inline Template load_template(const std::string& path) {
    return deserialize_canonical(read_bytes(path));
}

}  // namespace irisx
