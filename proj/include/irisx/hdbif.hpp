#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "irisx/detail/csv.hpp"
#include "irisx/errors.hpp"
#include "irisx/geometry.hpp"
#include "irisx/packed_bits.hpp"
#include "irisx/templates.hpp"

namespace irisx {

/// k square zero-mean kernels of odd side s, row-major per kernel.
struct FilterBank {
    int k = 0;
    int s = 0;
    std::vector<double> weights;
    int recentered = 0;  // kernels that needed mean subtraction at load

    double at(int kernel, int row, int col) const {
        return weights[(static_cast<std::size_t>(kernel) * s + row) * s + col];
    }
};

inline FilterBank load_filter_bank(std::istream& in) {
    std::string tag;
    int k = 0, s = 0;
    if (!(in >> tag >> k >> s) || tag != "HDBIF-FILTERS")
        throw BadFilterFile("expected header 'HDBIF-FILTERS k s'");
    if (k <= 0 || s <= 0 || s % 2 == 0)
        throw BadFilterFile("filter count must be positive and kernel side odd");
    FilterBank bank;
    bank.k = k;
    bank.s = s;
    const std::size_t n = static_cast<std::size_t>(k) * s * s;
    bank.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> bank.weights[i]))
            throw BadFilterFile("expected " + std::to_string(n) + " kernel values");
        if (!std::isfinite(bank.weights[i])) throw BadFilterFile("non-finite kernel value");
    }
    std::string extra;
    if (in >> extra) throw BadFilterFile("trailing data after kernel values");

    const std::size_t per = static_cast<std::size_t>(s) * s;
    for (int i = 0; i < k; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < per; ++j) sum += bank.weights[i * per + j];
        if (std::abs(sum) > 1e-6) {
            const double mean = sum / static_cast<double>(per);
            for (std::size_t j = 0; j < per; ++j) bank.weights[i * per + j] -= mean;
            ++bank.recentered;
        }
    }
    return bank;
}

inline FilterBank load_filter_bank_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path);
    return load_filter_bank(f);
}

inline void save_filter_bank(const std::string& path, const FilterBank& bank) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "HDBIF-FILTERS " << bank.k << ' ' << bank.s << '\n';
    for (int i = 0; i < bank.k; ++i) {
        for (int r = 0; r < bank.s; ++r) {
            for (int c = 0; c < bank.s; ++c) {
                if (c) f << ' ';
                f << detail::format_double(bank.at(i, r, c));
            }
            f << '\n';
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

inline constexpr std::uint64_t kDefaultFilterSeed = 20240401;

/// Deterministic stand-in bank: seeded Gaussian weights, exactly re-centered
/// per kernel so every kernel is zero-mean.
inline FilterBank default_filter_bank(int k = 7, int s = 9,
                                      std::uint64_t seed = kDefaultFilterSeed) {
    if (k <= 0 || s <= 0 || s % 2 == 0)
        throw BadFilterFile("filter count must be positive and kernel side odd");
    FilterBank bank;
    bank.k = k;
    bank.s = s;
    const std::size_t per = static_cast<std::size_t>(s) * s;
    bank.weights.resize(static_cast<std::size_t>(k) * per);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& w : bank.weights) w = gauss(rng);
    for (int i = 0; i < k; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < per; ++j) sum += bank.weights[i * per + j];
        const double mean = sum / static_cast<double>(per);
        for (std::size_t j = 0; j < per; ++j) bank.weights[i * per + j] -= mean;
    }
    return bank;
}

/// Cross-correlates each kernel with the polar image and thresholds strictly
/// at zero. Angular axis wraps circularly, radial axis clamps to the edge.
/// The occlusion grid is the polar mask eroded by the kernel footprint: a bit
/// survives only if every pixel under the kernel was visible.
inline BinaryCodeTemplate encode(const NormalizedIris& n, const FilterBank& bank) {
    const int rows = n.radial_res, cols = n.angular_res;
    if (bank.s > std::min(rows, cols))
        throw KernelTooLarge("kernel side exceeds polar image dimensions");
    const int half = bank.s / 2;

    BinaryCodeTemplate out;
    out.occlusion = PackedGrid(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int a = 0; a < cols; ++a) {
            bool visible = true;
            for (int u = -half; visible && u <= half; ++u) {
                int rr = r + u;
                rr = rr < 0 ? 0 : (rr >= rows ? rows - 1 : rr);
                for (int v = -half; v <= half; ++v) {
                    const int aa = ((a + v) % cols + cols) % cols;
                    if (!n.polar_mask.at(aa, rr)) {
                        visible = false;
                        break;
                    }
                }
            }
            if (visible) out.occlusion.set(r, a, true);
        }
    }

    out.codes.reserve(bank.k);
    for (int f = 0; f < bank.k; ++f) {
        PackedGrid plane(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int a = 0; a < cols; ++a) {
                double resp = 0;
                for (int u = -half; u <= half; ++u) {
                    int rr = r + u;
                    rr = rr < 0 ? 0 : (rr >= rows ? rows - 1 : rr);
                    for (int v = -half; v <= half; ++v) {
                        const int aa = ((a + v) % cols + cols) % cols;
                        resp += bank.at(f, u + half, v + half) * n.polar_image.at(aa, rr);
                    }
                }
                if (resp > 0.0) plane.set(r, a, true);
            }
        }
        out.codes.push_back(std::move(plane));
    }
    return out;
}

struct MatchScore {
    double score = 0;
    int shift = 0;
    std::uint64_t bits_compared = 0;
};

inline std::uint64_t default_min_bits(const BinaryCodeTemplate& t) {
    return static_cast<std::uint64_t>(t.plane_count()) * t.grid_rows() * t.grid_cols() / 100;
}

/// Masked fractional Hamming distance at one angular shift. b's code and
/// occlusion columns are rotated so shifted_b[c] = b[(c + shift) mod A]:
/// when b equals a rotated right by 3 columns, the match lands at shift +3.
/// Returns nullopt when fewer than min_bits bits are mutually unoccluded
/// (an empty overlap always fails).
inline std::optional<MatchScore> fractional_hamming(
    const BinaryCodeTemplate& a, const BinaryCodeTemplate& b, int shift,
    std::optional<std::uint64_t> min_bits = std::nullopt) {
    if (!a.same_shape(b)) throw IncompatibleTemplates("binary template shapes differ");
    const int cols = a.grid_cols();
    if (shift > cols / 2 || shift < -cols / 2)
        throw InvalidGeometry("shift exceeds half the angular resolution");

    const PackedGrid shifted_occ = rotate_columns(b.occlusion, shift);
    PackedGrid combined(a.occlusion.rows, a.occlusion.cols);
    const std::uint64_t overlap = and_into(a.occlusion, shifted_occ, combined);
    const std::uint64_t threshold = min_bits ? *min_bits : default_min_bits(a);
    const std::uint64_t compared = overlap * a.codes.size();
    if (overlap == 0 || compared < threshold) return std::nullopt;

    std::uint64_t disagree = 0;
    for (std::size_t i = 0; i < a.codes.size(); ++i) {
        const PackedGrid shifted = rotate_columns(b.codes[i], shift);
        disagree += popcount_xor_and(a.codes[i], shifted, combined);
    }
    MatchScore m;
    m.score = static_cast<double>(disagree) / static_cast<double>(compared);
    m.shift = shift;
    m.bits_compared = compared;
    return m;
}

enum class ShiftStrategy { Exhaustive, EvenThenNeighbors };

namespace detail {

inline bool match_improves(const MatchScore& cand, const MatchScore& best) {
    if (cand.score != best.score) return cand.score < best.score;
    const int ca = std::abs(cand.shift), ba = std::abs(best.shift);
    if (ca != ba) return ca < ba;
    return cand.shift < best.shift;
}

}  // namespace detail

/// Minimum-score shift search. Exhaustive walks every shift in the range;
/// EvenThenNeighbors walks even shifts first, then only the two odd shifts
/// adjacent to the best even one. Ties prefer smaller |shift|, then the
/// negative shift. Fails only if every evaluated shift fails.
inline std::optional<MatchScore> best_match(
    const BinaryCodeTemplate& a, const BinaryCodeTemplate& b, int max_shift = 16,
    ShiftStrategy strategy = ShiftStrategy::EvenThenNeighbors,
    std::optional<std::uint64_t> min_bits = std::nullopt) {
    if (!a.same_shape(b)) throw IncompatibleTemplates("binary template shapes differ");
    if (max_shift < 0) throw InvalidGeometry("max_shift must be non-negative");
    const int m = std::min(max_shift, a.grid_cols() / 2);

    std::optional<MatchScore> best;
    auto consider = [&](int s) {
        const auto r = fractional_hamming(a, b, s, min_bits);
        if (r && (!best || detail::match_improves(*r, *best))) best = r;
    };

    if (strategy == ShiftStrategy::Exhaustive) {
        for (int s = -m; s <= m; ++s) consider(s);
        return best;
    }

    for (int s = -(m - (m % 2 == 1)); s <= m; s += 2) consider(s);
    if (!best) return std::nullopt;
    const int center = best->shift;
    for (int s : {center - 1, center + 1}) {
        if (s < -m || s > m) continue;
        consider(s);
    }
    return best;
}

/// Probe with all shifted variants precomputed so each gallery comparison is
/// pure XOR/AND/popcount. Uses fractional_hamming(a,b,s) = (b,a,-s): variant
/// i holds the probe rotated by -(i - max_shift) columns.
class PreparedProbe {
public:
    PreparedProbe(const BinaryCodeTemplate& probe, int max_shift,
                  std::optional<std::uint64_t> min_bits = std::nullopt)
        : max_shift_(std::min(max_shift, probe.grid_cols() / 2)),
          min_bits_(min_bits ? *min_bits : default_min_bits(probe)) {
        if (max_shift < 0) throw InvalidGeometry("max_shift must be non-negative");
        variants_.reserve(2 * max_shift_ + 1);
        for (int s = -max_shift_; s <= max_shift_; ++s) {
            Variant v;
            v.codes.reserve(probe.codes.size());
            for (const auto& plane : probe.codes) v.codes.push_back(rotate_columns(plane, -s));
            v.occlusion = rotate_columns(probe.occlusion, -s);
            variants_.push_back(std::move(v));
        }
        rows_ = probe.grid_rows();
        cols_ = probe.grid_cols();
        planes_ = probe.plane_count();
    }

    int max_shift() const { return max_shift_; }

    std::optional<MatchScore> score_at(const BinaryCodeTemplate& gallery, int shift,
                                       PackedGrid& scratch) const {
        const Variant& v = variants_[static_cast<std::size_t>(shift + max_shift_)];
        const std::uint64_t overlap = and_into(v.occlusion, gallery.occlusion, scratch);
        const std::uint64_t compared = overlap * v.codes.size();
        if (overlap == 0 || compared < min_bits_) return std::nullopt;
        std::uint64_t disagree = 0;
        for (std::size_t i = 0; i < v.codes.size(); ++i)
            disagree += popcount_xor_and(v.codes[i], gallery.codes[i], scratch);
        MatchScore m;
        m.score = static_cast<double>(disagree) / static_cast<double>(compared);
        m.shift = shift;
        m.bits_compared = compared;
        return m;
    }

    std::optional<MatchScore> best_against(const BinaryCodeTemplate& gallery,
                                           ShiftStrategy strategy, PackedGrid& scratch) const {
        if (gallery.plane_count() != planes_ || gallery.grid_rows() != rows_ ||
            gallery.grid_cols() != cols_)
            throw IncompatibleTemplates("binary template shapes differ");
        const int m = max_shift_;
        std::optional<MatchScore> best;
        auto consider = [&](int s) {
            const auto r = score_at(gallery, s, scratch);
            if (r && (!best || detail::match_improves(*r, *best))) best = r;
        };
        if (strategy == ShiftStrategy::Exhaustive) {
            for (int s = -m; s <= m; ++s) consider(s);
            return best;
        }
        for (int s = -(m - (m % 2 == 1)); s <= m; s += 2) consider(s);
        if (!best) return std::nullopt;
        const int center = best->shift;
        for (int s : {center - 1, center + 1}) {
            if (s < -m || s > m) continue;
            consider(s);
        }
        return best;
    }

    PackedGrid make_scratch() const { return PackedGrid(rows_, cols_); }

private:
    struct Variant {
        std::vector<PackedGrid> codes;
        PackedGrid occlusion;
    };
    int max_shift_;
    std::uint64_t min_bits_;
    int rows_ = 0, cols_ = 0, planes_ = 0;
    std::vector<Variant> variants_;
};

}  // namespace irisx
