#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "irisx/errors.hpp"
#include "irisx/packed_bits.hpp"

namespace irisx {

enum class EyeLabel : std::uint8_t { Unspecified = 0, Right = 1, Left = 2 };

inline std::string to_string(EyeLabel e) {
    switch (e) {
        case EyeLabel::Right: return "R";
        case EyeLabel::Left: return "L";
        default: return "U";
    }
}

inline EyeLabel eye_from_string(const std::string& s) {
    if (s == "R" || s == "r" || s == "right" || s == "Right") return EyeLabel::Right;
    if (s == "L" || s == "l" || s == "left" || s == "Left") return EyeLabel::Left;
    if (s == "U" || s == "u" || s == "unspecified" || s == "Unspecified") return EyeLabel::Unspecified;
    throw InvalidMarker("unknown eye label: " + s);
}

enum class DistanceMetric : std::uint8_t { Angular = 0, Euclidean = 1 };

/// Fixed-length real vector with its comparison metric.
struct FloatEmbeddingTemplate {
    EyeLabel eye = EyeLabel::Unspecified;
    DistanceMetric metric = DistanceMetric::Angular;
    std::vector<double> values;

    bool operator==(const FloatEmbeddingTemplate&) const = default;
};

/// k binary code planes over an R x A polar grid plus one shared occlusion
/// grid (true = bit usable). All k+1 grids share the same shape.
struct BinaryCodeTemplate {
    EyeLabel eye = EyeLabel::Unspecified;
    std::vector<PackedGrid> codes;
    PackedGrid occlusion;

    int plane_count() const { return static_cast<int>(codes.size()); }
    int grid_rows() const { return occlusion.rows; }
    int grid_cols() const { return occlusion.cols; }

    bool same_shape(const BinaryCodeTemplate& o) const {
        return codes.size() == o.codes.size() && occlusion.rows == o.occlusion.rows &&
               occlusion.cols == o.occlusion.cols;
    }

    bool operator==(const BinaryCodeTemplate&) const = default;
};

/// Binary crypt-region mask on an H x W grid (row-major).
struct CryptMaskTemplate {
    EyeLabel eye = EyeLabel::Unspecified;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> cells;  // 0/1, size height*width

    bool at(int y, int x) const { return cells[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { cells[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    bool operator==(const CryptMaskTemplate&) const = default;
};

using Template = std::variant<FloatEmbeddingTemplate, BinaryCodeTemplate, CryptMaskTemplate>;

/// Structural invariants: non-empty payloads, matching grid shapes, finite
/// embedding values, unit norm (within 1e-9) for Angular embeddings.
inline void validate_template(const Template& t) {
    if (const auto* e = std::get_if<FloatEmbeddingTemplate>(&t)) {
        if (e->values.empty()) throw Corrupt("embedding has no values");
        double sq = 0;
        for (double v : e->values) {
            if (!(v == v) || v > 1e308 || v < -1e308) throw Corrupt("non-finite embedding value");
            sq += v * v;
        }
        if (e->metric == DistanceMetric::Angular && std::abs(std::sqrt(sq) - 1.0) > 1e-9)
            throw DegenerateEmbedding("angular embedding must be unit length");
    } else if (const auto* b = std::get_if<BinaryCodeTemplate>(&t)) {
        if (b->codes.empty()) throw Corrupt("binary template has no code planes");
        if (b->occlusion.rows <= 0 || b->occlusion.cols <= 0)
            throw Corrupt("binary template grid is empty");
        for (const auto& plane : b->codes)
            if (plane.rows != b->occlusion.rows || plane.cols != b->occlusion.cols)
                throw Corrupt("code plane shape differs from occlusion grid");
    } else {
        const auto& c = std::get<CryptMaskTemplate>(t);
        if (c.height <= 0 || c.width <= 0) throw Corrupt("crypt template grid is empty");
        if (c.cells.size() != static_cast<std::size_t>(c.height) * c.width)
            throw Corrupt("crypt cell count does not match its dimensions");
    }
}

inline EyeLabel eye_of(const Template& t) {
    return std::visit([](const auto& v) { return v.eye; }, t);
}

inline void set_eye(Template& t, EyeLabel e) {
    std::visit([e](auto& v) { v.eye = e; }, t);
}

}  // namespace irisx
