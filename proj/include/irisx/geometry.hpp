#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "irisx/detail/csv.hpp"
#include "irisx/errors.hpp"
#include "irisx/image.hpp"

namespace irisx {

/// Pupil and iris boundary circles in one image frame.
struct CircleParams {
    double px = 0, py = 0, pr = 0;
    double ix = 0, iy = 0, ir = 0;

    bool finite() const {
        return std::isfinite(px) && std::isfinite(py) && std::isfinite(pr) &&
               std::isfinite(ix) && std::isfinite(iy) && std::isfinite(ir);
    }

    bool operator==(const CircleParams&) const = default;
};

enum class RejectReason {
    AbnormalRadii,
    InsufficientRadii,
    AbnormalRatio,
    InsufficientIrisVisible,
    ExcessiveConcentricDeviation,
};

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::AbnormalRadii: return "AbnormalRadii";
        case RejectReason::InsufficientRadii: return "InsufficientRadii";
        case RejectReason::AbnormalRatio: return "AbnormalRatio";
        case RejectReason::InsufficientIrisVisible: return "InsufficientIrisVisible";
        case RejectReason::ExcessiveConcentricDeviation: return "ExcessiveConcentricDeviation";
    }
    return "?";
}

struct QualityVerdict {
    bool accepted = false;
    std::vector<RejectReason> reasons;
};

/// Screens circle parameters for biological viability. Rules run in a fixed
/// order and every violated rule is reported. Boundary values are inclusive
/// on the accepting side: pr=12 fails rule 2, alpha=0.1 passes rule 3, a
/// visibility ratio of exactly 0.1 passes rule 4, offset/ir of exactly 0.5
/// passes rule 5.
inline QualityVerdict quality_gate(const CircleParams& c, const BinaryMask* mask = nullptr) {
    QualityVerdict v;
    if (c.ir <= c.pr) v.reasons.push_back(RejectReason::AbnormalRadii);
    if (c.pr <= 12.0 || c.ir <= 16.0) v.reasons.push_back(RejectReason::InsufficientRadii);
    const double alpha = c.pr / c.ir;
    if (!(alpha >= 0.1 && alpha <= 0.8)) v.reasons.push_back(RejectReason::AbnormalRatio);
    if (mask != nullptr) {
        const double annulus = std::numbers::pi * (c.ir + c.pr) * (c.ir - c.pr);
        const double visible = static_cast<double>(mask->count()) / annulus;
        if (visible < 0.1) v.reasons.push_back(RejectReason::InsufficientIrisVisible);
    }
    const double dev = std::hypot(c.px - c.ix, c.py - c.iy) / c.ir;
    if (dev > 0.5) v.reasons.push_back(RejectReason::ExcessiveConcentricDeviation);
    v.accepted = v.reasons.empty();
    return v;
}

/// Affine map between a source image frame and the preprocessed target frame:
/// target = (source + pad) * scale, with one uniform scale for both axes so
/// circles stay circles. Exactly invertible.
struct FrameMap {
    double scale = 1.0;
    int pad_left = 0;
    int pad_top = 0;

    CircleParams to_target(const CircleParams& c) const {
        return {(c.px + pad_left) * scale, (c.py + pad_top) * scale, c.pr * scale,
                (c.ix + pad_left) * scale, (c.iy + pad_top) * scale, c.ir * scale};
    }

    CircleParams to_source(const CircleParams& c) const {
        return {c.px / scale - pad_left, c.py / scale - pad_top, c.pr / scale,
                c.ix / scale - pad_left, c.iy / scale - pad_top, c.ir / scale};
    }
};

struct PreprocessPlan {
    int padded_width = 0;
    int padded_height = 0;
    FrameMap map;
};

/// Pads symmetrically to the target aspect ratio, then scales uniformly down
/// to the target size. k is the smallest multiple of the reduced aspect that
/// covers the input, so padding never crops.
inline PreprocessPlan plan_preprocess(int width, int height, int target_width, int target_height) {
    if (width <= 0 || height <= 0) throw InvalidImage("zero-area input image");
    if (target_width <= 0 || target_height <= 0) throw InvalidImage("zero-area target");
    const int g = std::gcd(target_width, target_height);
    const int aw = target_width / g;
    const int ah = target_height / g;
    const int k = std::max((width + aw - 1) / aw, (height + ah - 1) / ah);
    PreprocessPlan plan;
    plan.padded_width = k * aw;
    plan.padded_height = k * ah;
    plan.map.pad_left = (plan.padded_width - width) / 2;
    plan.map.pad_top = (plan.padded_height - height) / 2;
    plan.map.scale = static_cast<double>(g) / static_cast<double>(k);
    return plan;
}

struct PreprocessResult {
    GrayImage image;
    FrameMap map;
};

inline PreprocessResult preprocess_image(const GrayImage& raw, int target_width, int target_height) {
    const PreprocessPlan plan = plan_preprocess(raw.width, raw.height, target_width, target_height);
    GrayImage padded(plan.padded_width, plan.padded_height);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            padded.at(x + plan.map.pad_left, y + plan.map.pad_top) = raw.at(x, y);

    GrayImage out(target_width, target_height);
    const double inv = 1.0 / plan.map.scale;
    for (int y = 0; y < target_height; ++y)
        for (int x = 0; x < target_width; ++x)
            out.at(x, y) = bilinear_sample(padded, x * inv, y * inv);
    return {std::move(out), plan.map};
}

/// Same geometry as preprocess_image, nearest-neighbor; padding is false.
inline BinaryMask preprocess_mask(const BinaryMask& raw, int target_width, int target_height) {
    const PreprocessPlan plan = plan_preprocess(raw.width, raw.height, target_width, target_height);
    BinaryMask padded(plan.padded_width, plan.padded_height);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            if (raw.at(x, y)) padded.set(x + plan.map.pad_left, y + plan.map.pad_top, true);

    BinaryMask out(target_width, target_height);
    const double inv = 1.0 / plan.map.scale;
    for (int y = 0; y < target_height; ++y)
        for (int x = 0; x < target_width; ++x)
            out.set(x, y, nearest_sample(padded, x * inv, y * inv));
    return out;
}

struct HoughFit {
    CircleParams circles;
    bool degenerate = false;  // no inner boundary found, pupil synthesized as 0.3*ir
};

namespace detail {

struct CircleEstimate {
    int cx = 0, cy = 0, r = 0;
    int votes = 0;
};

// Votes over integer centers inside the point cloud's bounding box, radius
// histogram per center. Best = most votes, ties to smaller r, then cy, then cx.
inline CircleEstimate hough_best_circle(const std::vector<std::pair<int, int>>& pts,
                                        int rmin, int rmax) {
    int min_x = pts[0].first, max_x = pts[0].first;
    int min_y = pts[0].second, max_y = pts[0].second;
    for (const auto& [x, y] : pts) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
    }
    CircleEstimate best;
    best.votes = 0;
    std::vector<int> hist(static_cast<std::size_t>(std::max(rmax + 1, 1)), 0);
    for (int cy = min_y; cy <= max_y; ++cy) {
        for (int cx = min_x; cx <= max_x; ++cx) {
            std::fill(hist.begin(), hist.end(), 0);
            for (const auto& [x, y] : pts) {
                const double d = std::hypot(static_cast<double>(x - cx), static_cast<double>(y - cy));
                const int r = static_cast<int>(std::lround(d));
                if (r >= rmin && r <= rmax) ++hist[r];
            }
            int local_r = -1, local_votes = 0;
            for (int r = rmin; r <= rmax; ++r) {
                if (hist[r] > local_votes) {
                    local_votes = hist[r];
                    local_r = r;
                }
            }
            if (local_votes > best.votes ||
                (local_votes == best.votes && local_r >= 0 && local_r < best.r)) {
                best = {cx, cy, local_r, local_votes};
            }
        }
    }
    return best;
}

}  // namespace detail

/// Fits pupil and iris circles to a segmentation mask. Boundary pixels are
/// split by what background they touch: pixels next to an enclosed hole vote
/// for the pupil circle, pixels next to border-connected background (or the
/// image edge) vote for the iris circle. Masks with no hole fall back to a
/// synthesized pupil at the iris center with pr = 0.3*ir.
inline HoughFit fit_circles_hough(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    if (mask.count() == 0) throw EmptyMask("mask has no iris pixels");

    // Label background components; -1 = unvisited, component ids from 0.
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<char> touches_border;
    std::vector<int> stack;
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (mask.at(x0, y0) || label[idx(x0, y0)] != -1) continue;
            const int comp = static_cast<int>(touches_border.size());
            touches_border.push_back(0);
            label[idx(x0, y0)] = comp;
            stack.push_back(static_cast<int>(idx(x0, y0)));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int x = p % w, y = p / w;
                if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border[comp] = 1;
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int i = 0; i < 4; ++i) {
                    if (nx[i] < 0 || ny[i] < 0 || nx[i] >= w || ny[i] >= h) continue;
                    if (mask.at(nx[i], ny[i]) || label[idx(nx[i], ny[i])] != -1) continue;
                    label[idx(nx[i], ny[i])] = comp;
                    stack.push_back(static_cast<int>(idx(nx[i], ny[i])));
                }
            }
        }
    }

    std::vector<std::pair<int, int>> outer_pts, inner_pts;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            bool outer = false, inner = false;
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int i = 0; i < 4; ++i) {
                if (nx[i] < 0 || ny[i] < 0 || nx[i] >= w || ny[i] >= h) {
                    outer = true;
                } else if (!mask.at(nx[i], ny[i])) {
                    if (touches_border[label[idx(nx[i], ny[i])]]) outer = true;
                    else inner = true;
                }
            }
            if (outer) outer_pts.emplace_back(x, y);
            if (inner) inner_pts.emplace_back(x, y);
        }
    }

    const int rmin = 8;
    const int rmax = std::min(w, h) / 2;
    if (outer_pts.empty() || rmax < rmin)
        throw InvalidGeometry("no circular structure within the searchable radius range");
    const detail::CircleEstimate outer = detail::hough_best_circle(outer_pts, rmin, rmax);
    if (outer.votes == 0)
        throw InvalidGeometry("no circular structure within the searchable radius range");

    HoughFit fit;
    fit.circles.ix = outer.cx;
    fit.circles.iy = outer.cy;
    fit.circles.ir = outer.r;
    if (inner_pts.empty()) {
        fit.degenerate = true;
        fit.circles.px = outer.cx;
        fit.circles.py = outer.cy;
        fit.circles.pr = 0.3 * outer.r;
        return fit;
    }
    const detail::CircleEstimate inner = detail::hough_best_circle(inner_pts, rmin, rmax);
    if (inner.votes == 0) {
        fit.degenerate = true;
        fit.circles.px = outer.cx;
        fit.circles.py = outer.cy;
        fit.circles.pr = 0.3 * outer.r;
        return fit;
    }
    fit.circles.px = inner.cx;
    fit.circles.py = inner.cy;
    fit.circles.pr = inner.r;
    return fit;
}

/// Polar-unwrapped iris: row 0 at the pupil boundary, row R-1 at the iris
/// boundary, columns sweep angle 0..2pi.
struct NormalizedIris {
    int radial_res = 0;
    int angular_res = 0;
    GrayImage polar_image;  // height = radial_res, width = angular_res
    BinaryMask polar_mask;
};

/// Daugman rubber-sheet unwrapping. Per column a the sample ray runs from the
/// pupil boundary point to the iris boundary point at angle 2*pi*a/A; rows
/// interpolate linearly along it with t = r/(R-1). Intensity is bilinear,
/// mask nearest-neighbor; out-of-bounds samples give 0 intensity and a false
/// mask bit even when no mask was supplied.
inline NormalizedIris rubber_sheet(const GrayImage& img, const CircleParams& c,
                                   const BinaryMask* mask, int radial_res, int angular_res) {
    if (radial_res < 2 || angular_res < 4)
        throw InvalidGeometry("polar resolution too small");
    if (!c.finite() || c.pr <= 0 || c.ir <= 0 || !quality_gate(c).accepted)
        throw InvalidGeometry("circle parameters failed the quality gate");

    NormalizedIris out;
    out.radial_res = radial_res;
    out.angular_res = angular_res;
    out.polar_image = GrayImage(angular_res, radial_res);
    out.polar_mask = BinaryMask(angular_res, radial_res);

    std::vector<double> cos_a(angular_res), sin_a(angular_res);
    for (int a = 0; a < angular_res; ++a) {
        const double theta = 2.0 * std::numbers::pi * a / angular_res;
        cos_a[a] = std::cos(theta);
        sin_a[a] = std::sin(theta);
    }

    for (int r = 0; r < radial_res; ++r) {
        const double t = static_cast<double>(r) / (radial_res - 1);
        for (int a = 0; a < angular_res; ++a) {
            const double x0 = c.px + c.pr * cos_a[a];
            const double y0 = c.py + c.pr * sin_a[a];
            const double x1 = c.ix + c.ir * cos_a[a];
            const double y1 = c.iy + c.ir * sin_a[a];
            const double x = (1.0 - t) * x0 + t * x1;
            const double y = (1.0 - t) * y0 + t * y1;
            out.polar_image.at(a, r) = bilinear_sample(img, x, y);
            const long xi = std::lround(x), yi = std::lround(y);
            const bool in_img = xi >= 0 && yi >= 0 && xi < img.width && yi < img.height;
            bool visible = in_img;
            if (visible && mask != nullptr) visible = nearest_sample(*mask, x, y);
            out.polar_mask.set(a, r, visible);
        }
    }
    return out;
}

/// Circle parameters CSV: image_id,px,py,pr,ix,iy,ir. Header row written on
/// output and skipped on input when present.
struct CircleRecord {
    std::string image_id;
    CircleParams circles;
};

inline std::vector<CircleRecord> read_circles_csv(const std::string& path) {
    std::vector<CircleRecord> records;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "image_id") continue;
        if (fields.size() != 7)
            throw Corrupt("expected 7 fields per circle row in " + path);
        CircleRecord rec;
        rec.image_id = fields[0];
        rec.circles.px = detail::parse_double(fields[1], path);
        rec.circles.py = detail::parse_double(fields[2], path);
        rec.circles.pr = detail::parse_double(fields[3], path);
        rec.circles.ix = detail::parse_double(fields[4], path);
        rec.circles.iy = detail::parse_double(fields[5], path);
        rec.circles.ir = detail::parse_double(fields[6], path);
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_circles_csv(const std::string& path, const std::vector<CircleRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "image_id,px,py,pr,ix,iy,ir\n";
    for (const auto& rec : records) {
        f << rec.image_id << ',' << detail::format_double(rec.circles.px) << ','
          << detail::format_double(rec.circles.py) << ',' << detail::format_double(rec.circles.pr)
          << ',' << detail::format_double(rec.circles.ix) << ','
          << detail::format_double(rec.circles.iy) << ',' << detail::format_double(rec.circles.ir)
          << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace irisx
