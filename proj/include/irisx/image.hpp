#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "irisx/errors.hpp"

namespace irisx {

/// Row-major grayscale image, intensities in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw InvalidImage("image dimensions must be positive");
    }

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    bool operator==(const GrayImage&) const = default;
};

/// Row-major boolean mask, true = foreground (iris / crypt / valid) pixel.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {
        if (w <= 0 || h <= 0) throw InvalidImage("mask dimensions must be positive");
    }

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    bool operator==(const BinaryMask&) const = default;
};

/// Samples img at a real-valued position with bilinear interpolation.
/// Source pixel centers sit at integer coordinates; positions outside
/// [0,w-1]x[0,h-1] contribute 0 for the out-of-bounds corners.
inline double bilinear_sample(const GrayImage& img, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto px = [&](int xi, int yi) -> double {
        return img.contains(xi, yi) ? img.at(xi, yi) : 0.0;
    };
    const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    const double bot = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

/// Nearest-neighbor mask sample; out-of-bounds positions are false.
inline bool nearest_sample(const BinaryMask& mask, double x, double y) {
    const int xi = static_cast<int>(std::lround(x));
    const int yi = static_cast<int>(std::lround(y));
    return mask.contains(xi, yi) && mask.at(xi, yi);
}

}  // namespace irisx
