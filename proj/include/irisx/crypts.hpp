#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <vector>

#include "irisx/errors.hpp"
#include "irisx/image.hpp"
#include "irisx/templates.hpp"
#include "irisx/transport.hpp"

namespace irisx {

/// Component labels over a crypt mask; 0 = background, components numbered
/// 1..count in raster order of first occurrence.
struct LabeledMask {
    int height = 0;
    int width = 0;
    std::vector<int> labels;
    int count = 0;

    int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Two-pass union-find labeling, then renumbering by first raster occurrence.
inline LabeledMask connected_components(const CryptMaskTemplate& m, int connectivity = 8) {
    if (connectivity != 4 && connectivity != 8)
        throw InvalidGeometry("connectivity must be 4 or 8");
    LabeledMask out;
    out.height = m.height;
    out.width = m.width;
    out.labels.assign(static_cast<std::size_t>(m.height) * m.width, 0);

    std::vector<int> parent(1, 0);  // provisional labels from 1; parent[0] unused
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    std::vector<int> prov(out.labels.size(), 0);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(y, x)) continue;
            int neighbors[4];
            int nn = 0;
            if (x > 0 && m.at(y, x - 1)) neighbors[nn++] = prov[static_cast<std::size_t>(y) * m.width + x - 1];
            if (y > 0 && m.at(y - 1, x)) neighbors[nn++] = prov[static_cast<std::size_t>(y - 1) * m.width + x];
            if (connectivity == 8 && y > 0) {
                if (x > 0 && m.at(y - 1, x - 1))
                    neighbors[nn++] = prov[static_cast<std::size_t>(y - 1) * m.width + x - 1];
                if (x + 1 < m.width && m.at(y - 1, x + 1))
                    neighbors[nn++] = prov[static_cast<std::size_t>(y - 1) * m.width + x + 1];
            }
            int label;
            if (nn == 0) {
                label = static_cast<int>(parent.size());
                parent.push_back(label);
            } else {
                label = neighbors[0];
                for (int i = 1; i < nn; ++i) unite(neighbors[i], label);
            }
            prov[static_cast<std::size_t>(y) * m.width + x] = label;
        }
    }

    std::vector<int> renumber(parent.size(), 0);
    for (std::size_t p = 0; p < out.labels.size(); ++p) {
        if (prov[p] == 0) continue;
        const int root = find(prov[p]);
        if (renumber[root] == 0) renumber[root] = ++out.count;
        out.labels[p] = renumber[root];
    }
    return out;
}

/// Removes components smaller than min_area pixels.
inline CryptMaskTemplate area_open(const CryptMaskTemplate& m, int min_area,
                                   int connectivity = 8) {
    if (min_area <= 0) throw InvalidGeometry("min_area must be positive");
    const LabeledMask lm = connected_components(m, connectivity);
    std::vector<int> area(static_cast<std::size_t>(lm.count) + 1, 0);
    for (int l : lm.labels) ++area[l];
    CryptMaskTemplate out = m;
    for (std::size_t p = 0; p < lm.labels.size(); ++p)
        if (lm.labels[p] != 0 && area[lm.labels[p]] < min_area) out.cells[p] = 0;
    return out;
}

/// Grayscale reconstruction by dilation, Vincent's hybrid algorithm: one
/// raster sweep, one anti-raster sweep, then queue-driven propagation.
/// 8-connectivity. Fixed point of (dilate marker, min with mask_img).
inline GrayImage morph_reconstruct(const GrayImage& marker, const GrayImage& mask_img) {
    if (marker.width != mask_img.width || marker.height != mask_img.height)
        throw InvalidMarker("marker and mask dimensions differ");
    const int w = marker.width, h = marker.height;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (marker.at(x, y) > mask_img.at(x, y))
                throw InvalidMarker("marker exceeds mask");

    GrayImage j = marker;
    const int fwd_dx[4] = {-1, 0, 1, -1};
    const int fwd_dy[4] = {-1, -1, -1, 0};
    const int bwd_dx[4] = {1, -1, 0, 1};
    const int bwd_dy[4] = {0, 1, 1, 1};

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = j.at(x, y);
            for (int i = 0; i < 4; ++i) {
                const int nx = x + fwd_dx[i], ny = y + fwd_dy[i];
                if (nx >= 0 && ny >= 0 && nx < w && ny < h) v = std::max(v, j.at(nx, ny));
            }
            j.at(x, y) = std::min(v, mask_img.at(x, y));
        }
    }

    std::deque<std::pair<int, int>> fifo;
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            double v = j.at(x, y);
            for (int i = 0; i < 4; ++i) {
                const int nx = x + bwd_dx[i], ny = y + bwd_dy[i];
                if (nx >= 0 && ny >= 0 && nx < w && ny < h) v = std::max(v, j.at(nx, ny));
            }
            j.at(x, y) = std::min(v, mask_img.at(x, y));
            for (int i = 0; i < 4; ++i) {
                const int nx = x + bwd_dx[i], ny = y + bwd_dy[i];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (j.at(nx, ny) < j.at(x, y) && j.at(nx, ny) < mask_img.at(nx, ny)) {
                    fifo.emplace_back(x, y);
                    break;
                }
            }
        }
    }

    const int all_dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int all_dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    while (!fifo.empty()) {
        const auto [x, y] = fifo.front();
        fifo.pop_front();
        for (int i = 0; i < 8; ++i) {
            const int nx = x + all_dx[i], ny = y + all_dy[i];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (j.at(nx, ny) < j.at(x, y) && mask_img.at(nx, ny) != j.at(nx, ny)) {
                j.at(nx, ny) = std::min(j.at(x, y), mask_img.at(nx, ny));
                fifo.emplace_back(nx, ny);
            }
        }
    }
    return j;
}

/// Background cells not reachable from the border (4-connectivity) become true.
inline CryptMaskTemplate fill_holes(const CryptMaskTemplate& m) {
    const int w = m.width, h = m.height;
    std::vector<char> outside(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> stack;
    auto push = [&](int x, int y) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (!outside[p] && !m.at(y, x)) {
            outside[p] = 1;
            stack.push_back(static_cast<int>(p));
        }
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int x = p % w, y = p / w;
        if (x > 0) push(x - 1, y);
        if (x + 1 < w) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < h) push(x, y + 1);
    }
    CryptMaskTemplate out = m;
    for (std::size_t p = 0; p < out.cells.size(); ++p)
        if (!outside[p]) out.cells[p] = 1;
    return out;
}

inline std::size_t mask_area(const CryptMaskTemplate& m) {
    std::size_t n = 0;
    for (std::uint8_t c : m.cells) n += c ? 1 : 0;
    return n;
}

/// Size-and-overlap screen before the EMD solve. Empty masks always fail.
inline bool emd_pre_check(const CryptMaskTemplate& a, const CryptMaskTemplate& b,
                          double size_ratio_max = 2.0, double min_overlap = 0.1) {
    if (a.height != b.height || a.width != b.width)
        throw IncompatibleTemplates("crypt mask dimensions differ");
    const double na = static_cast<double>(mask_area(a));
    const double nb = static_cast<double>(mask_area(b));
    if (na == 0 || nb == 0) return false;
    if (std::max(na, nb) / std::min(na, nb) > size_ratio_max) return false;
    std::size_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < a.cells.size(); ++p) {
        const bool in_a = a.cells[p] != 0, in_b = b.cells[p] != 0;
        inter += (in_a && in_b) ? 1 : 0;
        uni += (in_a || in_b) ? 1 : 0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni) >= min_overlap;
}

struct EmdConfig {
    double size_ratio_max = 2.0;
    double min_overlap = 0.1;
    bool pre_check = true;
    int max_iterations = 0;              // 0 = solver default
    std::size_t max_cost_cells = std::size_t{1} << 24;
};

/// Earth mover's distance between two crypt masks, normalized by the grid
/// diagonal into [0,1]. Every failure (pre-check, oversized problem, solver
/// non-convergence) scores exactly 1.0. Unit mass per true cell, rescaled to
/// total mass 1 on each side; solved in integer masses (Nb per supplier, Na
/// per consumer) and divided back, which is exact.
inline double emd_2d(const CryptMaskTemplate& a, const CryptMaskTemplate& b,
                     const EmdConfig& config = {}) {
    if (a.height != b.height || a.width != b.width)
        throw IncompatibleTemplates("crypt mask dimensions differ");
    if (config.pre_check && !emd_pre_check(a, b, config.size_ratio_max, config.min_overlap))
        return 1.0;

    std::vector<std::pair<int, int>> cells_a, cells_b;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (a.at(y, x)) cells_a.emplace_back(y, x);
            if (b.at(y, x)) cells_b.emplace_back(y, x);
        }
    const std::size_t na = cells_a.size(), nb = cells_b.size();
    if (na == 0 || nb == 0) return 1.0;
    if (na * nb > config.max_cost_cells) return 1.0;

    std::vector<double> supplies(na, static_cast<double>(nb));
    std::vector<double> demands(nb, static_cast<double>(na));
    std::vector<double> costs(na * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            costs[i * nb + j] = std::hypot(
                static_cast<double>(cells_a[i].first - cells_b[j].first),
                static_cast<double>(cells_a[i].second - cells_b[j].second));

    const TransportSolution sol =
        solve_transportation(supplies, demands, costs, config.max_iterations);
    if (!sol.converged) return 1.0;

    const double raw = sol.cost / (static_cast<double>(na) * static_cast<double>(nb));
    const double diag = std::hypot(a.width - 1, a.height - 1);
    if (diag == 0.0) return 0.0;
    const double normalized = raw / diag;
    return std::min(std::max(normalized, 0.0), 1.0);
}

}  // namespace irisx
