#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irisx/detail/csv.hpp"
#include "irisx/errors.hpp"

namespace irisx {

/// One comparison outcome. A missing score is a failed comparison (the
/// -1.0/NaN convention in source data maps to this uniformly).
struct ScoreRecord {
    std::string method_id;
    std::string probe_id;
    std::string gallery_id;
    bool genuine = false;
    std::optional<double> score;
};

/// Failure substitute per method plus score orientation.
struct SentinelEntry {
    double value = 0;
    bool similarity = false;  // false: dissimilarity (lower is better)
};

struct SentinelTable {
    std::map<std::string, SentinelEntry> entries;

    static SentinelTable defaults() {
        SentinelTable t;
        t.entries["angular"] = {3.2, false};
        t.entries["arciris"] = {3.2, false};
        t.entries["euclidean"] = {10000.0, false};
        t.entries["tripletiris"] = {10000.0, false};
        t.entries["hdbif"] = {1.0, false};
        t.entries["osiris"] = {1.0, false};
        t.entries["usitv3"] = {1.0, false};
        t.entries["wci"] = {1.0, false};
        t.entries["cryptsemd"] = {1.0, false};
        t.entries["crypts"] = {1.0, false};
        t.entries["dgr"] = {0.0, true};
        t.entries["verieye"] = {0.0, true};
        return t;
    }

    const SentinelEntry& lookup(const std::string& method_id) const {
        std::string key = method_id;
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        const auto it = entries.find(key);
        if (it == entries.end()) throw Corrupt("no sentinel entry for method '" + method_id + "'");
        return it->second;
    }
};

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> imposter;
    bool similarity = false;
    std::size_t total_records = 0;
    std::size_t failed_records = 0;

    double fte() const {
        return total_records == 0
                   ? 0.0
                   : static_cast<double>(failed_records) / static_cast<double>(total_records);
    }
};

/// Drops failed comparisons; the failure proportion survives as FTE.
inline ScoreSet protocol_discard(const std::vector<ScoreRecord>& records) {
    ScoreSet s;
    s.total_records = records.size();
    for (const auto& r : records) {
        if (!r.score) {
            ++s.failed_records;
            continue;
        }
        (r.genuine ? s.genuine : s.imposter).push_back(*r.score);
    }
    return s;
}

/// Substitutes each failure with its method's worst-case sentinel; keeps every
/// record. All records must share one score orientation.
inline ScoreSet protocol_failure_as_nonmatch(const std::vector<ScoreRecord>& records,
                                             const SentinelTable& sentinels) {
    ScoreSet s;
    s.total_records = records.size();
    bool orientation_set = false;
    for (const auto& r : records) {
        const SentinelEntry& entry = sentinels.lookup(r.method_id);
        if (!orientation_set) {
            s.similarity = entry.similarity;
            orientation_set = true;
        } else if (s.similarity != entry.similarity) {
            throw Corrupt("mixed score orientations in one score set");
        }
        double value;
        if (r.score) {
            value = *r.score;
        } else {
            value = entry.value;
            ++s.failed_records;
        }
        (r.genuine ? s.genuine : s.imposter).push_back(value);
    }
    return s;
}

namespace detail {

inline std::string pair_key(const std::string& probe_id, const std::string& gallery_id) {
    // Unordered pair identity: (p,g) and (g,p) are the same comparison.
    if (gallery_id < probe_id) return gallery_id + '\x1f' + probe_id;
    return probe_id + '\x1f' + gallery_id;
}

}  // namespace detail

/// Restricts each surviving method to the pairs every surviving method
/// scored. Methods whose FTE exceeds fte_threshold are dropped first.
inline std::map<std::string, ScoreSet> protocol_intersection(
    const std::vector<ScoreRecord>& records, double fte_threshold = 0.30) {
    std::map<std::string, std::vector<const ScoreRecord*>> by_method;
    for (const auto& r : records) by_method[r.method_id].push_back(&r);

    std::map<std::string, std::map<std::string, const ScoreRecord*>> scored;  // method -> key -> rec
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;        // failed, total
    for (const auto& [method, recs] : by_method) {
        std::size_t failed = 0;
        auto& keyed = scored[method];
        for (const ScoreRecord* r : recs) {
            if (!r->score) {
                ++failed;
                continue;
            }
            keyed.emplace(detail::pair_key(r->probe_id, r->gallery_id), r);
        }
        counts[method] = {failed, recs.size()};
        const double fte =
            static_cast<double>(failed) / static_cast<double>(std::max<std::size_t>(recs.size(), 1));
        if (fte > fte_threshold) scored.erase(method);
    }
    if (scored.empty()) return {};

    std::vector<std::string> common;
    bool first = true;
    for (const auto& [method, keyed] : scored) {
        std::vector<std::string> keys;
        keys.reserve(keyed.size());
        for (const auto& [key, rec] : keyed) keys.push_back(key);
        if (first) {
            common = std::move(keys);
            first = false;
        } else {
            std::vector<std::string> next;
            std::set_intersection(common.begin(), common.end(), keys.begin(), keys.end(),
                                  std::back_inserter(next));
            common = std::move(next);
        }
    }

    std::map<std::string, ScoreSet> out;
    for (const auto& [method, keyed] : scored) {
        ScoreSet s;
        s.failed_records = counts[method].first;
        s.total_records = counts[method].second;
        for (const std::string& key : common) {
            const ScoreRecord* r = keyed.at(key);
            (r->genuine ? s.genuine : s.imposter).push_back(*r->score);
        }
        out[method] = std::move(s);
    }
    return out;
}

/// One probe's identification outcome: whether its true mate is enrolled and,
/// if returned, the mate's rank (0 = mate enrolled but absent from the list).
struct RankObservation {
    bool has_mate = false;
    int mate_rank = 0;
};

struct MetricsReport {
    double auc = 0;
    double eer = 0;
    double dprime = 0;
    std::map<double, double> fnmr_at_fmr;
    std::map<int, double> rank_k_mated;  // denominator: probes with an enrolled mate
    std::map<int, double> rank_k_all;    // denominator: all probes
    double fte = 0;
    std::size_t n_genuine = 0;
    std::size_t n_imposter = 0;
    std::size_t n_failed = 0;
};

/// Verification metrics by threshold sweep in dissimilarity orientation
/// (accept when score <= t); similarity sets are negated internally. The
/// sweep starts from a virtual (FMR 0, FNMR 1) point below every score.
inline MetricsReport compute_metrics(const ScoreSet& s, const std::vector<double>& fmr_targets,
                                     const std::vector<RankObservation>* rank_source = nullptr,
                                     const std::vector<int>& rank_ks = {1, 5}) {
    if (s.genuine.empty() || s.imposter.empty())
        throw InsufficientScores("need at least one genuine and one imposter score");

    std::vector<double> g = s.genuine, i = s.imposter;
    if (s.similarity) {
        for (double& v : g) v = -v;
        for (double& v : i) v = -v;
    }
    std::sort(g.begin(), g.end());
    std::sort(i.begin(), i.end());
    const double ng = static_cast<double>(g.size());
    const double ni = static_cast<double>(i.size());

    std::vector<double> thresholds;
    thresholds.reserve(g.size() + i.size());
    std::merge(g.begin(), g.end(), i.begin(), i.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    // One pass: counts of scores <= t for each distinct threshold.
    std::vector<double> fmr(thresholds.size()), fnmr(thresholds.size());
    {
        std::size_t gi = 0, ii = 0;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            while (gi < g.size() && g[gi] <= thresholds[t]) ++gi;
            while (ii < i.size() && i[ii] <= thresholds[t]) ++ii;
            fmr[t] = static_cast<double>(ii) / ni;
            fnmr[t] = (ng - static_cast<double>(gi)) / ng;
        }
    }

    MetricsReport rep;
    rep.n_genuine = g.size();
    rep.n_imposter = i.size();
    rep.n_failed = s.failed_records;
    rep.fte = s.fte();

    double auc = 0, px = 0, py = 0;  // virtual start: FMR 0, TPR 0
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        const double x = fmr[t], y = 1.0 - fnmr[t];
        auc += (x - px) * (y + py) / 2.0;
        px = x;
        py = y;
    }
    rep.auc = auc;

    {
        double f0 = 0, n0 = 1;  // virtual point below all thresholds
        rep.eer = 1.0;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            if (fmr[t] - fnmr[t] >= 0) {
                const double df = fmr[t] - f0, dn = fnmr[t] - n0;
                const double denom = df - dn;
                const double lambda = denom == 0 ? 0.0 : (n0 - f0) / denom;
                rep.eer = f0 + lambda * df;
                break;
            }
            f0 = fmr[t];
            n0 = fnmr[t];
        }
    }

    for (double target : fmr_targets) {
        double best = 1.0;  // virtual point: FMR 0, FNMR 1
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            if (fmr[t] <= target) best = fnmr[t];
            else break;
        }
        rep.fnmr_at_fmr[target] = best;
    }

    {
        double mg = 0, mi = 0;
        for (double v : g) mg += v;
        for (double v : i) mi += v;
        mg /= ng;
        mi /= ni;
        double vg = 0, vi = 0;
        for (double v : g) vg += (v - mg) * (v - mg);
        for (double v : i) vi += (v - mi) * (v - mi);
        vg = g.size() > 1 ? vg / (ng - 1) : 0.0;
        vi = i.size() > 1 ? vi / (ni - 1) : 0.0;
        const double denom = std::sqrt((vg + vi) / 2.0);
        if (denom == 0)
            rep.dprime = mg == mi ? 0.0 : std::numeric_limits<double>::infinity();
        else
            rep.dprime = std::abs(mg - mi) / denom;
    }

    if (rank_source != nullptr) {
        std::size_t mated = 0;
        for (const auto& obs : *rank_source) mated += obs.has_mate ? 1 : 0;
        for (int k : rank_ks) {
            std::size_t hits = 0;
            for (const auto& obs : *rank_source)
                if (obs.has_mate && obs.mate_rank >= 1 && obs.mate_rank <= k) ++hits;
            rep.rank_k_mated[k] =
                mated == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(mated);
            rep.rank_k_all[k] = rank_source->empty()
                                    ? 0.0
                                    : static_cast<double>(hits) /
                                          static_cast<double>(rank_source->size());
        }
    }
    return rep;
}

struct ParityStats {
    std::size_t n = 0;
    double mad = 0;
    double max_delta = 0;
    double r2 = 0;  // -inf when the reference subset is constant
};

struct ParityReport {
    ParityStats genuine;
    ParityStats imposter;
    std::size_t only_a = 0;  // pairs scored by exactly one side, excluded
    std::size_t only_b = 0;
    std::size_t failed_pairs = 0;  // failed on either side, excluded
};

namespace detail {

inline ParityStats parity_stats(const std::vector<std::pair<double, double>>& ab) {
    ParityStats st;
    st.n = ab.size();
    if (ab.empty()) {
        st.r2 = std::numeric_limits<double>::quiet_NaN();
        return st;
    }
    double sum_abs = 0, max_abs = 0, mean_b = 0;
    for (const auto& [a, b] : ab) {
        sum_abs += std::abs(a - b);
        max_abs = std::max(max_abs, std::abs(a - b));
        mean_b += b;
    }
    mean_b /= static_cast<double>(ab.size());
    double ss_res = 0, ss_ref = 0;
    for (const auto& [a, b] : ab) {
        ss_res += (a - b) * (a - b);
        ss_ref += (b - mean_b) * (b - mean_b);
    }
    st.mad = sum_abs / static_cast<double>(ab.size());
    st.max_delta = max_abs;
    if (ss_ref == 0)
        st.r2 = ss_res == 0 ? 1.0 : -std::numeric_limits<double>::infinity();
    else
        st.r2 = 1.0 - ss_res / ss_ref;
    return st;
}

}  // namespace detail

/// Cross-implementation agreement. b is the reference side (its variance is
/// the R-squared denominator). Pair keys are unordered; pairs present on one
/// side only or failed on either side are excluded and counted.
inline ParityReport parity(const std::vector<ScoreRecord>& a, const std::vector<ScoreRecord>& b) {
    std::map<std::string, const ScoreRecord*> bk;
    for (const auto& r : b) bk.emplace(detail::pair_key(r.probe_id, r.gallery_id), &r);

    std::vector<std::pair<double, double>> gen, imp;
    std::size_t matched_b = 0;
    ParityReport rep;
    std::map<std::string, char> seen_a;
    for (const auto& r : a) {
        const std::string key = detail::pair_key(r.probe_id, r.gallery_id);
        if (!seen_a.emplace(key, 1).second) continue;
        const auto it = bk.find(key);
        if (it == bk.end()) {
            ++rep.only_a;
            continue;
        }
        ++matched_b;
        const ScoreRecord& rb = *it->second;
        if (!r.score || !rb.score) {
            ++rep.failed_pairs;
            continue;
        }
        if (r.genuine != rb.genuine) throw Corrupt("genuine flag disagrees for pair " + key);
        (r.genuine ? gen : imp).emplace_back(*r.score, *rb.score);
    }
    rep.only_b = bk.size() - matched_b;
    if (gen.empty() && imp.empty() && rep.failed_pairs == 0)
        throw NoCommonPairs("score files share no pairs");
    rep.genuine = detail::parity_stats(gen);
    rep.imposter = detail::parity_stats(imp);
    return rep;
}

struct DeltaHistogram {
    std::vector<double> edges;       // bins + 1, covering [min delta, max delta]
    std::vector<std::size_t> counts;
};

/// Histogram of a-b over pairs scored on both sides. Equal min and max
/// collapse to a single degenerate bin.
inline DeltaHistogram emit_delta_histogram(const std::vector<ScoreRecord>& a,
                                           const std::vector<ScoreRecord>& b, int bins) {
    if (bins <= 0) throw InvalidGeometry("histogram needs at least one bin");
    std::map<std::string, const ScoreRecord*> bk;
    for (const auto& r : b) bk.emplace(detail::pair_key(r.probe_id, r.gallery_id), &r);
    std::vector<double> deltas;
    std::map<std::string, char> seen_a;
    for (const auto& r : a) {
        const std::string key = detail::pair_key(r.probe_id, r.gallery_id);
        if (!seen_a.emplace(key, 1).second) continue;
        const auto it = bk.find(key);
        if (it == bk.end() || !r.score || !it->second->score) continue;
        deltas.push_back(*r.score - *it->second->score);
    }
    if (deltas.empty()) throw NoCommonPairs("no mutually scored pairs to histogram");

    const auto [mn_it, mx_it] = std::minmax_element(deltas.begin(), deltas.end());
    const double lo = *mn_it, hi = *mx_it;
    DeltaHistogram hist;
    if (lo == hi) {
        hist.edges = {lo, hi};
        hist.counts = {deltas.size()};
        return hist;
    }
    hist.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int e = 0; e <= bins; ++e)
        hist.edges[e] = lo + (hi - lo) * static_cast<double>(e) / static_cast<double>(bins);
    hist.edges.front() = lo;
    hist.edges.back() = hi;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double d : deltas) {
        int idx = static_cast<int>((d - lo) / (hi - lo) * bins);
        if (idx >= bins) idx = bins - 1;
        if (idx < 0) idx = 0;
        ++hist.counts[idx];
    }
    return hist;
}

/// Score file rows: method_id,probe_id,gallery_id,genuine(0|1),score with the
/// literal FAIL marking a failed comparison.
inline std::vector<ScoreRecord> read_scores_csv(const std::string& path) {
    std::vector<ScoreRecord> records;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "method_id") continue;
        if (fields.size() != 5) throw Corrupt("expected 5 fields per score row in " + path);
        ScoreRecord rec;
        rec.method_id = fields[0];
        rec.probe_id = fields[1];
        rec.gallery_id = fields[2];
        if (fields[3] == "1") rec.genuine = true;
        else if (fields[3] == "0") rec.genuine = false;
        else throw Corrupt("genuine flag must be 0 or 1 in " + path);
        if (fields[4] != "FAIL") rec.score = detail::parse_double(fields[4], path);
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_scores_csv(const std::string& path, const std::vector<ScoreRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "method_id,probe_id,gallery_id,genuine,score\n";
    for (const auto& r : records) {
        f << r.method_id << ',' << r.probe_id << ',' << r.gallery_id << ',' << (r.genuine ? 1 : 0)
          << ',' << (r.score ? detail::format_double(*r.score) : std::string("FAIL")) << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace irisx
