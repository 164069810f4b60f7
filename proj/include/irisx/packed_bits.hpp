#pragma once

// Bit matrices packed 64 bits per word, LSB-first within each word. Rows are
// word-aligned (each row starts on a word boundary, trailing pad bits zero)
// so circular column shifts and XOR/AND/popcount run word-wise.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace irisx {

struct PackedGrid {
    int rows = 0;
    int cols = 0;
    int words_per_row = 0;
    std::vector<std::uint64_t> words;

    PackedGrid() = default;
    PackedGrid(int r, int c)
        : rows(r), cols(c), words_per_row((c + 63) / 64),
          words(static_cast<std::size_t>(r) * ((c + 63) / 64), 0) {}

    bool get(int r, int c) const {
        const std::size_t w = static_cast<std::size_t>(r) * words_per_row + c / 64;
        return (words[w] >> (c % 64)) & 1u;
    }

    void set(int r, int c, bool v) {
        const std::size_t w = static_cast<std::size_t>(r) * words_per_row + c / 64;
        const std::uint64_t bit = std::uint64_t{1} << (c % 64);
        if (v) words[w] |= bit;
        else words[w] &= ~bit;
    }

    std::size_t bit_count() const { return static_cast<std::size_t>(rows) * cols; }

    std::uint64_t popcount() const {
        std::uint64_t n = 0;
        for (auto w : words) n += std::popcount(w);
        return n;
    }

    void fill(bool v) {
        if (!v) {
            std::fill(words.begin(), words.end(), std::uint64_t{0});
            return;
        }
        std::fill(words.begin(), words.end(), ~std::uint64_t{0});
        clear_row_padding();
    }

    // Pad bits must stay zero or word-wise popcounts overcount.
    void clear_row_padding() {
        const int tail = cols % 64;
        if (tail == 0) return;
        const std::uint64_t mask = (std::uint64_t{1} << tail) - 1;
        for (int r = 0; r < rows; ++r)
            words[static_cast<std::size_t>(r) * words_per_row + words_per_row - 1] &= mask;
    }

    bool operator==(const PackedGrid&) const = default;
};

/// Circularly shifts every row's columns: out[r][c] = in[r][(c + s) mod cols].
/// Positive s moves content toward lower column indices.
inline PackedGrid rotate_columns(const PackedGrid& in, int s) {
    PackedGrid out(in.rows, in.cols);
    if (in.cols == 0 || in.rows == 0) return out;
    s %= in.cols;
    if (s < 0) s += in.cols;
    if (s == 0) return in;

    if (in.cols % 64 == 0) {
        // Word path: output word j starts at source bit offset j*64 + s.
        const int wpr = in.words_per_row;
        const int word_off = s / 64;
        const int bit_off = s % 64;
        for (int r = 0; r < in.rows; ++r) {
            const std::uint64_t* src = in.words.data() + static_cast<std::size_t>(r) * wpr;
            std::uint64_t* dst = out.words.data() + static_cast<std::size_t>(r) * wpr;
            for (int j = 0; j < wpr; ++j) {
                const std::uint64_t lo = src[(j + word_off) % wpr];
                if (bit_off == 0) {
                    dst[j] = lo;
                } else {
                    const std::uint64_t hi = src[(j + word_off + 1) % wpr];
                    dst[j] = (lo >> bit_off) | (hi << (64 - bit_off));
                }
            }
        }
        return out;
    }
    for (int r = 0; r < in.rows; ++r)
        for (int c = 0; c < in.cols; ++c)
            out.set(r, c, in.get(r, (c + s) % in.cols));
    return out;
}

/// popcount((a XOR b) AND m) over three same-shape grids.
inline std::uint64_t popcount_xor_and(const PackedGrid& a, const PackedGrid& b, const PackedGrid& m) {
    std::uint64_t n = 0;
    const std::size_t nw = a.words.size();
    for (std::size_t i = 0; i < nw; ++i) n += std::popcount((a.words[i] ^ b.words[i]) & m.words[i]);
    return n;
}

/// m = a AND b, returning popcount(m). m must already have a/b's shape.
inline std::uint64_t and_into(const PackedGrid& a, const PackedGrid& b, PackedGrid& m) {
    std::uint64_t n = 0;
    const std::size_t nw = a.words.size();
    for (std::size_t i = 0; i < nw; ++i) {
        const std::uint64_t w = a.words[i] & b.words[i];
        m.words[i] = w;
        n += std::popcount(w);
    }
    return n;
}

/// Appends bits LSB-first into 64-bit words (flat packing, no row alignment).
class BitWriter {
public:
    void push(bool bit) {
        if (bit) current_ |= std::uint64_t{1} << used_;
        if (++used_ == 64) flush_word();
    }

    std::vector<std::uint64_t> finish() {
        if (used_ > 0) flush_word();
        return std::move(words_);
    }

private:
    void flush_word() {
        words_.push_back(current_);
        current_ = 0;
        used_ = 0;
    }
    std::vector<std::uint64_t> words_;
    std::uint64_t current_ = 0;
    int used_ = 0;
};

/// Reads bits LSB-first from 64-bit words.
class BitReader {
public:
    explicit BitReader(const std::uint64_t* words, std::size_t nwords)
        : words_(words), nwords_(nwords) {}

    bool next() {
        const bool bit = (words_[pos_ / 64] >> (pos_ % 64)) & 1u;
        ++pos_;
        return bit;
    }

    std::size_t capacity() const { return nwords_ * 64; }

private:
    const std::uint64_t* words_;
    std::size_t nwords_;
    std::size_t pos_ = 0;
};

}  // namespace irisx
