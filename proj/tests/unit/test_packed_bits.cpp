#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "irisx/packed_bits.hpp"

using irisx::BitReader;
using irisx::BitWriter;
using irisx::PackedGrid;

namespace {

PackedGrid random_grid(std::mt19937& rng, int rows, int cols, double density = 0.5) {
    PackedGrid g(rows, cols);
    std::bernoulli_distribution on(density);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g.set(r, c, on(rng));
    return g;
}

PackedGrid naive_rotate(const PackedGrid& in, int s) {
    PackedGrid out(in.rows, in.cols);
    for (int r = 0; r < in.rows; ++r)
        for (int c = 0; c < in.cols; ++c) {
            const int src = ((c + s) % in.cols + in.cols) % in.cols;
            out.set(r, c, in.get(r, src));
        }
    return out;
}

}  // namespace

TEST_CASE("words are row aligned with LSB-first packing", "[packed]") {
    PackedGrid g(2, 70);
    REQUIRE(g.words_per_row == 2);
    REQUIRE(g.words.size() == 4);

    g.set(0, 0, true);
    g.set(0, 2, true);
    g.set(1, 64, true);
    CHECK(g.words[0] == 0x5u);
    CHECK(g.words[1] == 0x0u);
    CHECK(g.words[2] == 0x0u);
    CHECK(g.words[3] == 0x1u);
    CHECK(g.get(0, 0));
    CHECK_FALSE(g.get(0, 1));
    CHECK(g.get(1, 64));
}

TEST_CASE("set and get round-trip over random positions", "[packed]") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 1 + static_cast<int>(rng() % 8);
        const int cols = 1 + static_cast<int>(rng() % 200);
        const PackedGrid g = random_grid(rng, rows, cols);
        std::uint64_t expected = 0;
        PackedGrid copy(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                copy.set(r, c, g.get(r, c));
                expected += g.get(r, c) ? 1 : 0;
            }
        CHECK(copy == g);
        CHECK(g.popcount() == expected);
    }
}

TEST_CASE("fill keeps padding bits clear", "[packed]") {
    PackedGrid g(3, 65);
    g.fill(true);
    CHECK(g.popcount() == 3u * 65u);
    CHECK(g.bit_count() == 3u * 65u);
    for (int r = 0; r < 3; ++r) CHECK(g.words[static_cast<std::size_t>(r) * 2 + 1] == 0x1u);

    g.fill(false);
    CHECK(g.popcount() == 0u);
}

TEST_CASE("column rotation matches per-bit reference", "[packed]") {
    std::mt19937 rng(202);
    SECTION("width a multiple of 64 takes the word path") {
        const PackedGrid g = random_grid(rng, 4, 128);
        for (int s : {-128, -127, -64, -63, -3, -1, 0, 1, 5, 63, 64, 65, 127, 128, 200}) {
            CAPTURE(s);
            CHECK(rotate_columns(g, s) == naive_rotate(g, s));
        }
    }
    SECTION("other widths take the generic path") {
        for (int cols : {1, 2, 63, 65, 70, 100}) {
            const PackedGrid g = random_grid(rng, 3, cols);
            for (int s = -cols - 1; s <= cols + 1; ++s) {
                CAPTURE(cols, s);
                CHECK(rotate_columns(g, s) == naive_rotate(g, s));
            }
        }
    }
}

TEST_CASE("rotation composes additively and zero is identity", "[packed]") {
    std::mt19937 rng(303);
    const PackedGrid g = random_grid(rng, 2, 192);
    CHECK(rotate_columns(g, 0) == g);
    CHECK(rotate_columns(g, 192) == g);
    CHECK(rotate_columns(g, -192) == g);
    const PackedGrid ab = rotate_columns(rotate_columns(g, 37), 91);
    CHECK(ab == rotate_columns(g, 128));
    CHECK(rotate_columns(rotate_columns(g, 37), -37) == g);
}

TEST_CASE("rotation example: single bit moves against the shift sign", "[packed]") {
    // out[c] = in[(c + s) mod cols]: the lone bit at column 3 appears at
    // column 0 for s = +3 and at column 6 for s = -3.
    PackedGrid g(1, 8);
    g.set(0, 3, true);
    const PackedGrid right = rotate_columns(g, 3);
    CHECK(right.get(0, 0));
    CHECK(right.popcount() == 1u);
    const PackedGrid left = rotate_columns(g, -3);
    CHECK(left.get(0, 6));
    CHECK(left.popcount() == 1u);
}

TEST_CASE("masked xor popcount and and_into match bitwise reference", "[packed]") {
    std::mt19937 rng(404);
    for (int cols : {64, 70, 512}) {
        const PackedGrid a = random_grid(rng, 5, cols);
        const PackedGrid b = random_grid(rng, 5, cols);
        const PackedGrid m = random_grid(rng, 5, cols, 0.8);

        std::uint64_t want_xor = 0, want_and = 0;
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < cols; ++c) {
                if (m.get(r, c) && a.get(r, c) != b.get(r, c)) ++want_xor;
                if (a.get(r, c) && b.get(r, c)) ++want_and;
            }
        CHECK(popcount_xor_and(a, b, m) == want_xor);

        PackedGrid out(5, cols);
        CHECK(and_into(a, b, out) == want_and);
        CHECK(out.popcount() == want_and);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < cols; ++c) CHECK(out.get(r, c) == (a.get(r, c) && b.get(r, c)));
    }
}

TEST_CASE("bit writer packs LSB-first and pads the final word with zeros", "[packed]") {
    BitWriter bw;
    bw.push(true);
    bw.push(false);
    bw.push(true);
    const auto words = bw.finish();
    REQUIRE(words.size() == 1u);
    CHECK(words[0] == 0x5u);
}

TEST_CASE("bit writer and reader round-trip across word boundaries", "[packed]") {
    std::mt19937 rng(505);
    std::bernoulli_distribution coin(0.5);
    for (int n : {1, 63, 64, 65, 130, 1000}) {
        std::vector<bool> bits(n);
        BitWriter bw;
        for (int i = 0; i < n; ++i) {
            bits[i] = coin(rng);
            bw.push(bits[i]);
        }
        const auto words = bw.finish();
        REQUIRE(words.size() == (static_cast<std::size_t>(n) + 63) / 64);
        BitReader br(words.data(), words.size());
        REQUIRE(br.capacity() >= static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            CAPTURE(n, i);
            CHECK(br.next() == bits[i]);
        }
    }
}
