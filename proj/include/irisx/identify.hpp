#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "irisx/crypts.hpp"
#include "irisx/detail/csv.hpp"
#include "irisx/embedding.hpp"
#include "irisx/errors.hpp"
#include "irisx/eval.hpp"
#include "irisx/hdbif.hpp"
#include "irisx/serialization.hpp"
#include "irisx/templates.hpp"

namespace irisx {

struct GalleryEntry {
    std::string identity_id;
    std::vector<Template> templates;
};

struct Candidate {
    std::string identity_id;
    double score = 0;
    int rank = 0;
};

enum class Matcher { Hdbif, Angular, Euclidean, CryptsEmd };

inline const char* method_id_of(Matcher m) {
    switch (m) {
        case Matcher::Hdbif: return "hdbif";
        case Matcher::Angular: return "angular";
        case Matcher::Euclidean: return "euclidean";
        case Matcher::CryptsEmd: return "cryptsemd";
    }
    return "?";
}

enum class FailurePolicy { Propagate, Sentinel };

struct SearchConfig {
    int candidate_list_length = 20;
    Matcher matcher = Matcher::Hdbif;
    int max_shift = 16;
    ShiftStrategy strategy = ShiftStrategy::EvenThenNeighbors;
    std::optional<std::uint64_t> min_bits;
    EmdConfig emd;
    FailurePolicy failure_policy = FailurePolicy::Propagate;
    int threads = 1;  // 0 = hardware concurrency
};

/// Eyes may be compared when equal or when either side is Unspecified;
/// Left never meets Right.
inline bool eyes_comparable(EyeLabel probe, EyeLabel gallery) {
    return probe == gallery || probe == EyeLabel::Unspecified ||
           gallery == EyeLabel::Unspecified;
}

inline std::vector<std::pair<const Template*, const Template*>> pair_comparisons(
    const std::vector<Template>& probe, const GalleryEntry& entry) {
    std::vector<std::pair<const Template*, const Template*>> pairs;
    for (const Template& p : probe)
        for (const Template& g : entry.templates)
            if (eyes_comparable(eye_of(p), eye_of(g))) pairs.emplace_back(&p, &g);
    if (pairs.empty())
        throw NoComparablePair("no admissible eye pairing against " + entry.identity_id);
    return pairs;
}

/// Median; even-sized input averages the two middle values.
inline double aggregate_identity(std::vector<double> scores) {
    if (scores.empty()) throw InsufficientScores("cannot aggregate zero scores");
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    if (n % 2 == 1) return scores[n / 2];
    return (scores[n / 2 - 1] + scores[n / 2]) / 2.0;
}

inline double matcher_sentinel(Matcher m) {
    return SentinelTable::defaults().lookup(method_id_of(m)).value;
}

namespace detail {

inline bool template_matches(Matcher m, const Template& t) {
    switch (m) {
        case Matcher::Hdbif: return std::holds_alternative<BinaryCodeTemplate>(t);
        case Matcher::Angular: {
            const auto* e = std::get_if<FloatEmbeddingTemplate>(&t);
            return e != nullptr && e->metric == DistanceMetric::Angular;
        }
        case Matcher::Euclidean: {
            const auto* e = std::get_if<FloatEmbeddingTemplate>(&t);
            return e != nullptr && e->metric == DistanceMetric::Euclidean;
        }
        case Matcher::CryptsEmd: return std::holds_alternative<CryptMaskTemplate>(t);
    }
    return false;
}

}  // namespace detail

/// One probe-vs-gallery template comparison; nullopt is a failed comparison
/// (insufficient code overlap or a degenerate embedding).
inline std::optional<double> score_pair(const Template& probe, const Template& gallery,
                                        const SearchConfig& cfg) {
    if (!detail::template_matches(cfg.matcher, probe) ||
        !detail::template_matches(cfg.matcher, gallery))
        throw IncompatibleTemplates("template kind does not match the configured matcher");
    switch (cfg.matcher) {
        case Matcher::Hdbif: {
            const auto r = best_match(std::get<BinaryCodeTemplate>(probe),
                                      std::get<BinaryCodeTemplate>(gallery), cfg.max_shift,
                                      cfg.strategy, cfg.min_bits);
            if (!r) return std::nullopt;
            return r->score;
        }
        case Matcher::Angular:
            try {
                return angular_distance(std::get<FloatEmbeddingTemplate>(probe),
                                        std::get<FloatEmbeddingTemplate>(gallery));
            } catch (const DegenerateEmbedding&) {
                return std::nullopt;
            }
        case Matcher::Euclidean:
            return euclidean_distance(std::get<FloatEmbeddingTemplate>(probe),
                                      std::get<FloatEmbeddingTemplate>(gallery));
        case Matcher::CryptsEmd:
            return emd_2d(std::get<CryptMaskTemplate>(probe),
                          std::get<CryptMaskTemplate>(gallery), cfg.emd);
    }
    return std::nullopt;
}

struct SearchResult {
    std::vector<Candidate> candidates;
    std::vector<std::string> failed_identities;  // Propagate policy only
};

namespace detail {

// Scores one identity. Unspecified probe templates fold their admissible
// gallery scores with min before aggregation; Left/Right probes contribute
// every admissible pair. Median across the collected values.
template <typename PairScorer>
std::optional<double> identity_score(const std::vector<Template>& probe,
                                     const GalleryEntry& entry, PairScorer&& score_one) {
    std::vector<double> values;
    for (std::size_t pi = 0; pi < probe.size(); ++pi) {
        const EyeLabel pe = eye_of(probe[pi]);
        if (pe == EyeLabel::Unspecified) {
            std::optional<double> best;
            for (std::size_t gi = 0; gi < entry.templates.size(); ++gi) {
                if (!eyes_comparable(pe, eye_of(entry.templates[gi]))) continue;
                const auto s = score_one(pi, gi);
                if (s && (!best || *s < *best)) best = s;
            }
            if (best) values.push_back(*best);
        } else {
            for (std::size_t gi = 0; gi < entry.templates.size(); ++gi) {
                if (!eyes_comparable(pe, eye_of(entry.templates[gi]))) continue;
                const auto s = score_one(pi, gi);
                if (s) values.push_back(*s);
            }
        }
    }
    if (values.empty()) return std::nullopt;
    return aggregate_identity(std::move(values));
}

}  // namespace detail

/// 1:N identification. Deterministic regardless of thread count: per-identity
/// scores land in index-stable slots, then one sorted merge with ties broken
/// by identity_id.
inline SearchResult search_1n(const std::vector<Template>& probe,
                              const std::vector<GalleryEntry>& gallery,
                              const SearchConfig& cfg) {
    if (gallery.empty()) throw EmptyGallery("gallery has no entries");
    if (probe.empty()) throw NoComparablePair("probe has no templates");
    if (cfg.candidate_list_length <= 0)
        throw InvalidGeometry("candidate_list_length must be positive");
    for (const Template& t : probe)
        if (!detail::template_matches(cfg.matcher, t))
            throw IncompatibleTemplates("probe template kind does not match the matcher");
    for (const GalleryEntry& e : gallery) {
        if (e.templates.empty()) throw EmptyGallery("gallery entry without templates");
        for (const Template& t : e.templates)
            if (!detail::template_matches(cfg.matcher, t))
                throw IncompatibleTemplates("gallery template kind does not match the matcher");
    }

    // Fast path for binary codes: every probe shift precomputed once.
    std::vector<PreparedProbe> prepared;
    if (cfg.matcher == Matcher::Hdbif) {
        prepared.reserve(probe.size());
        for (const Template& t : probe)
            prepared.emplace_back(std::get<BinaryCodeTemplate>(t), cfg.max_shift, cfg.min_bits);
    }

    std::vector<std::optional<double>> slots(gallery.size());
    const auto score_range = [&](std::size_t begin, std::size_t end) {
        PackedGrid scratch;
        if (!prepared.empty()) scratch = prepared[0].make_scratch();
        for (std::size_t idx = begin; idx < end; ++idx) {
            const GalleryEntry& entry = gallery[idx];
            slots[idx] = detail::identity_score(
                probe, entry, [&](std::size_t pi, std::size_t gi) -> std::optional<double> {
                    if (cfg.matcher == Matcher::Hdbif) {
                        const auto r = prepared[pi].best_against(
                            std::get<BinaryCodeTemplate>(entry.templates[gi]), cfg.strategy,
                            scratch);
                        if (!r) return std::nullopt;
                        return r->score;
                    }
                    return score_pair(probe[pi], entry.templates[gi], cfg);
                });
        }
    };

    int threads = cfg.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || gallery.size() < 2) {
        score_range(0, gallery.size());
    } else {
        threads = std::min<int>(threads, static_cast<int>(gallery.size()));
        std::vector<std::thread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (gallery.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(gallery.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(score_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    SearchResult result;
    std::vector<Candidate> all;
    all.reserve(gallery.size());
    for (std::size_t idx = 0; idx < gallery.size(); ++idx) {
        if (slots[idx]) {
            all.push_back({gallery[idx].identity_id, *slots[idx], 0});
        } else if (cfg.failure_policy == FailurePolicy::Sentinel) {
            all.push_back({gallery[idx].identity_id, matcher_sentinel(cfg.matcher), 0});
        } else {
            result.failed_identities.push_back(gallery[idx].identity_id);
        }
    }
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.identity_id < b.identity_id;
    });
    if (all.size() > static_cast<std::size_t>(cfg.candidate_list_length))
        all.resize(static_cast<std::size_t>(cfg.candidate_list_length));
    for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i) + 1;
    result.candidates = std::move(all);
    return result;
}

enum class TimedKind { TemplateCreation, Search };

struct TimedEvent {
    TimedKind kind = TimedKind::TemplateCreation;
    std::string label;
    double seconds = 0;
};

struct TimingBudgets {
    double template_creation = 1.5;
    double search = 25.0;
};

struct TimingSummary {
    std::size_t count = 0;
    double p50 = 0, p90 = 0, p99 = 0, max = 0;
    double budget = 0;
    std::size_t violations = 0;
};

struct TimingReport {
    std::vector<std::pair<TimedEvent, bool>> events;  // bool: within budget
    std::optional<TimingSummary> template_creation;
    std::optional<TimingSummary> search;
};

namespace detail {

inline double percentile_nearest_rank(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

inline TimingSummary summarize_timings(std::vector<double> secs, double budget) {
    TimingSummary s;
    s.count = secs.size();
    s.budget = budget;
    std::sort(secs.begin(), secs.end());
    s.p50 = percentile_nearest_rank(secs, 0.50);
    s.p90 = percentile_nearest_rank(secs, 0.90);
    s.p99 = percentile_nearest_rank(secs, 0.99);
    s.max = secs.back();
    for (double v : secs) s.violations += v > budget ? 1 : 0;
    return s;
}

}  // namespace detail

inline TimingReport timing_report(const std::vector<TimedEvent>& events,
                                  const TimingBudgets& budgets = {}) {
    TimingReport rep;
    std::vector<double> creation, search;
    for (const TimedEvent& e : events) {
        const double budget =
            e.kind == TimedKind::TemplateCreation ? budgets.template_creation : budgets.search;
        rep.events.emplace_back(e, e.seconds <= budget);
        (e.kind == TimedKind::TemplateCreation ? creation : search).push_back(e.seconds);
    }
    if (!creation.empty())
        rep.template_creation =
            detail::summarize_timings(std::move(creation), budgets.template_creation);
    if (!search.empty())
        rep.search = detail::summarize_timings(std::move(search), budgets.search);
    return rep;
}

/// Gallery directory: manifest.csv rows identity_id,eye,template_path with
/// canonical template files alongside. Identity grouping preserves first
/// occurrence order.
inline void save_gallery(const std::string& dir, const std::vector<GalleryEntry>& entries) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.csv");
    if (!manifest) throw IoError("cannot open for write: " + dir + "/manifest.csv");
    manifest << "identity_id,eye,template_path\n";
    std::size_t row = 0;
    for (const GalleryEntry& entry : entries) {
        for (const Template& t : entry.templates) {
            std::string safe = entry.identity_id;
            for (char& c : safe)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
            const std::string name = "tpl_" + std::to_string(row++) + "_" + safe + ".irxt";
            save_template((fs::path(dir) / name).string(), t);
            manifest << entry.identity_id << ',' << to_string(eye_of(t)) << ',' << name << '\n';
        }
    }
    if (!manifest) throw IoError("write failed: " + dir + "/manifest.csv");
}

inline std::vector<GalleryEntry> load_gallery(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto lines = detail::read_lines((fs::path(dir) / "manifest.csv").string());
    std::vector<GalleryEntry> entries;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "identity_id") continue;
        if (fields.size() != 3) throw Corrupt("expected 3 fields per manifest row");
        Template t = load_template((fs::path(dir) / fields[2]).string());
        if (to_string(eye_of(t)) != fields[1])
            throw Corrupt("manifest eye label disagrees with template " + fields[2]);
        const auto [it, inserted] = index.emplace(fields[0], entries.size());
        if (inserted) entries.push_back({fields[0], {}});
        entries[it->second].templates.push_back(std::move(t));
    }
    return entries;
}

struct CandidateRow {
    std::string probe_id;
    int rank = 0;
    std::string identity_id;
    double score = 0;
};

inline void write_candidates_csv(const std::string& path, const std::vector<CandidateRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "probe_id,rank,identity_id,score\n";
    for (const auto& r : rows)
        f << r.probe_id << ',' << r.rank << ',' << r.identity_id << ','
          << detail::format_double(r.score) << '\n';
    if (!f) throw IoError("write failed: " + path);
}

inline std::vector<CandidateRow> read_candidates_csv(const std::string& path) {
    std::vector<CandidateRow> rows;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "probe_id") continue;
        if (fields.size() != 4) throw Corrupt("expected 4 fields per candidate row in " + path);
        CandidateRow r;
        r.probe_id = fields[0];
        r.rank = static_cast<int>(detail::parse_long(fields[1], path));
        r.identity_id = fields[2];
        r.score = detail::parse_double(fields[3], path);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace irisx
