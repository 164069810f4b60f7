#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "irisx/irisx.hpp"

using namespace irisx;

namespace {

FloatEmbeddingTemplate unit_embedding(EyeLabel eye, std::vector<double> values) {
    FloatEmbeddingTemplate e;
    e.eye = eye;
    e.metric = DistanceMetric::Angular;
    e.values = normalize_embedding(values);
    return e;
}

BinaryCodeTemplate random_code(std::mt19937& rng, EyeLabel eye, int k = 2, int rows = 8,
                               int cols = 64) {
    auto t = oracle::to_packed(oracle::random_naive_code(rng, k, rows, cols));
    t.eye = eye;
    return t;
}

}  // namespace

// ------------------------------------------------------------------- pairing

TEST_CASE("eye comparability truth table", "[identify]") {
    const EyeLabel U = EyeLabel::Unspecified, R = EyeLabel::Right, L = EyeLabel::Left;
    CHECK(eyes_comparable(U, U));
    CHECK(eyes_comparable(U, R));
    CHECK(eyes_comparable(U, L));
    CHECK(eyes_comparable(R, U));
    CHECK(eyes_comparable(L, U));
    CHECK(eyes_comparable(R, R));
    CHECK(eyes_comparable(L, L));
    CHECK_FALSE(eyes_comparable(L, R));
    CHECK_FALSE(eyes_comparable(R, L));
}

TEST_CASE("pair enumeration respects eye labels", "[identify]") {
    std::vector<Template> probe_l = {unit_embedding(EyeLabel::Left, {1, 0})};
    std::vector<Template> probe_u = {unit_embedding(EyeLabel::Unspecified, {1, 0})};
    GalleryEntry entry;
    entry.identity_id = "id1";
    entry.templates = {unit_embedding(EyeLabel::Left, {0, 1}),
                       unit_embedding(EyeLabel::Right, {0, 1})};

    const auto pairs_l = pair_comparisons(probe_l, entry);
    REQUIRE(pairs_l.size() == 1u);
    CHECK(pairs_l[0].first == &probe_l[0]);
    CHECK(pairs_l[0].second == &entry.templates[0]);

    CHECK(pair_comparisons(probe_u, entry).size() == 2u);

    GalleryEntry right_only;
    right_only.identity_id = "id2";
    right_only.templates = {unit_embedding(EyeLabel::Right, {0, 1})};
    CHECK_THROWS_AS(pair_comparisons(probe_l, right_only), NoComparablePair);
}

TEST_CASE("identity aggregation is the median", "[identify]") {
    CHECK(aggregate_identity({3.0, 1.0, 2.0}) == 2.0);
    CHECK(aggregate_identity({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(aggregate_identity({7.0}) == 7.0);
    CHECK_THROWS_AS(aggregate_identity({}), InsufficientScores);
}

TEST_CASE("matcher sentinels match the failure-substitution table", "[identify]") {
    CHECK(matcher_sentinel(Matcher::Hdbif) == 1.0);
    CHECK(matcher_sentinel(Matcher::Angular) == 3.2);
    CHECK(matcher_sentinel(Matcher::Euclidean) == 10000.0);
    CHECK(matcher_sentinel(Matcher::CryptsEmd) == 1.0);
}

// -------------------------------------------------------------------- search

TEST_CASE("search ranks an exact-copy probe first", "[identify]") {
    std::mt19937 rng(3001);
    std::vector<GalleryEntry> gallery;
    for (int i = 0; i < 5; ++i)
        gallery.push_back({"id" + std::to_string(i),
                           {oracle::random_embedding(rng, 8, DistanceMetric::Angular,
                                                     EyeLabel::Left)}});
    const std::vector<Template> probe = {gallery[3].templates[0]};

    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    const SearchResult res = search_1n(probe, gallery, cfg);
    REQUIRE(res.candidates.size() == 5u);
    CHECK(res.candidates[0].identity_id == "id3");
    CHECK(res.candidates[0].score < 1e-6);
    CHECK(res.failed_identities.empty());
    for (std::size_t i = 0; i < res.candidates.size(); ++i) {
        CHECK(res.candidates[i].rank == static_cast<int>(i) + 1);
        if (i > 0) CHECK(res.candidates[i - 1].score <= res.candidates[i].score);
    }
}

TEST_CASE("equal scores break ties by identity id", "[identify]") {
    const auto shared = unit_embedding(EyeLabel::Left, {0.6, 0.8});
    std::vector<GalleryEntry> gallery = {{"zeta", {shared}}, {"alpha", {shared}}};
    const std::vector<Template> probe = {shared};
    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    const SearchResult res = search_1n(probe, gallery, cfg);
    REQUIRE(res.candidates.size() == 2u);
    CHECK(res.candidates[0].score == res.candidates[1].score);
    CHECK(res.candidates[0].identity_id == "alpha");
    CHECK(res.candidates[1].identity_id == "zeta");
}

TEST_CASE("candidate lists truncate to the configured length", "[identify]") {
    std::mt19937 rng(3002);
    std::vector<GalleryEntry> gallery;
    for (int i = 0; i < 6; ++i)
        gallery.push_back({"id" + std::to_string(i),
                           {oracle::random_embedding(rng, 6, DistanceMetric::Angular,
                                                     EyeLabel::Unspecified)}});
    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    cfg.candidate_list_length = 3;
    const std::vector<Template> probe = {
        oracle::random_embedding(rng, 6, DistanceMetric::Angular, EyeLabel::Unspecified)};
    const SearchResult res = search_1n(probe, gallery, cfg);
    REQUIRE(res.candidates.size() == 3u);
    CHECK(res.candidates[0].rank == 1);
    CHECK(res.candidates[2].rank == 3);
}

TEST_CASE("unspecified probes fold multiple gallery eyes with min", "[identify]") {
    const auto probe_t = unit_embedding(EyeLabel::Unspecified, {1, 0, 0});
    const auto near = unit_embedding(EyeLabel::Left, {0.9, 0.1, 0});
    const auto far = unit_embedding(EyeLabel::Right, {0, 1, 0});
    std::vector<GalleryEntry> gallery = {{"only", {near, far}}};
    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    const SearchResult res = search_1n({probe_t}, gallery, cfg);
    REQUIRE(res.candidates.size() == 1u);
    const double expect = angular_distance(probe_t, near);
    CHECK(res.candidates[0].score == expect);
}

TEST_CASE("specified probes contribute every admissible pair to the median", "[identify]") {
    const auto probe_t = unit_embedding(EyeLabel::Left, {1, 0, 0});
    const auto g1 = unit_embedding(EyeLabel::Left, {0.9, 0.1, 0});
    const auto g2 = unit_embedding(EyeLabel::Left, {0.5, 0.5, 0});
    std::vector<GalleryEntry> gallery = {{"only", {g1, g2}}};
    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    const SearchResult res = search_1n({probe_t}, gallery, cfg);
    REQUIRE(res.candidates.size() == 1u);
    const double expect = (angular_distance(probe_t, g1) + angular_distance(probe_t, g2)) / 2.0;
    CHECK(res.candidates[0].score == Catch::Approx(expect).margin(1e-15));
}

TEST_CASE("search validates its inputs", "[identify]") {
    std::mt19937 rng(3003);
    const std::vector<Template> probe = {
        oracle::random_embedding(rng, 4, DistanceMetric::Angular, EyeLabel::Left)};
    std::vector<GalleryEntry> gallery = {
        {"id0", {oracle::random_embedding(rng, 4, DistanceMetric::Angular, EyeLabel::Left)}}};
    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;

    CHECK_THROWS_AS(search_1n(probe, {}, cfg), EmptyGallery);
    CHECK_THROWS_AS(search_1n({}, gallery, cfg), NoComparablePair);

    std::vector<GalleryEntry> hollow = {{"id0", {}}};
    CHECK_THROWS_AS(search_1n(probe, hollow, cfg), EmptyGallery);

    SearchConfig bad_len = cfg;
    bad_len.candidate_list_length = 0;
    CHECK_THROWS_AS(search_1n(probe, gallery, bad_len), InvalidGeometry);

    SearchConfig wrong_kind = cfg;
    wrong_kind.matcher = Matcher::Hdbif;
    CHECK_THROWS_AS(search_1n(probe, gallery, wrong_kind), IncompatibleTemplates);

    SearchConfig euclid = cfg;
    euclid.matcher = Matcher::Euclidean;  // angular-metric templates do not qualify
    CHECK_THROWS_AS(search_1n(probe, gallery, euclid), IncompatibleTemplates);
}

TEST_CASE("failure policy routes unscoreable identities", "[identify]") {
    std::mt19937 rng(3004);
    const auto probe_t = oracle::random_embedding(rng, 5, DistanceMetric::Angular, EyeLabel::Left);
    FloatEmbeddingTemplate zero;  // degenerate: angular distance fails
    zero.eye = EyeLabel::Left;
    zero.metric = DistanceMetric::Angular;
    zero.values.assign(5, 0.0);
    std::vector<GalleryEntry> gallery = {
        {"good", {oracle::random_embedding(rng, 5, DistanceMetric::Angular, EyeLabel::Left)}},
        {"broken", {zero}},
    };

    SearchConfig cfg;
    cfg.matcher = Matcher::Angular;
    SECTION("propagate lists failures separately") {
        const SearchResult res = search_1n({probe_t}, gallery, cfg);
        REQUIRE(res.candidates.size() == 1u);
        CHECK(res.candidates[0].identity_id == "good");
        CHECK(res.failed_identities == std::vector<std::string>{"broken"});
    }
    SECTION("sentinel keeps failures in the list at the worst score") {
        cfg.failure_policy = FailurePolicy::Sentinel;
        const SearchResult res = search_1n({probe_t}, gallery, cfg);
        REQUIRE(res.candidates.size() == 2u);
        CHECK(res.failed_identities.empty());
        CHECK(res.candidates[1].identity_id == "broken");
        CHECK(res.candidates[1].score == 3.2);
    }
    SECTION("eye-incompatible entries are failures, not errors") {
        gallery[1].templates = {
            oracle::random_embedding(rng, 5, DistanceMetric::Angular, EyeLabel::Right)};
        const SearchResult res = search_1n({probe_t}, gallery, cfg);
        REQUIRE(res.candidates.size() == 1u);
        CHECK(res.failed_identities == std::vector<std::string>{"broken"});
    }
}

TEST_CASE("binary-code search equals per-pair best match", "[identify]") {
    std::mt19937 rng(3005);
    std::vector<GalleryEntry> gallery;
    for (int i = 0; i < 4; ++i)
        gallery.push_back({"id" + std::to_string(i), {random_code(rng, EyeLabel::Left)}});
    const std::vector<Template> probe = {random_code(rng, EyeLabel::Left)};

    SearchConfig cfg;
    cfg.matcher = Matcher::Hdbif;
    cfg.max_shift = 6;
    const SearchResult res = search_1n(probe, gallery, cfg);
    REQUIRE(res.candidates.size() == 4u);
    for (const Candidate& c : res.candidates) {
        const auto& g = std::get<BinaryCodeTemplate>(
            std::find_if(gallery.begin(), gallery.end(),
                         [&](const GalleryEntry& e) { return e.identity_id == c.identity_id; })
                ->templates[0]);
        const auto want = best_match(std::get<BinaryCodeTemplate>(probe[0]), g, cfg.max_shift,
                                     cfg.strategy, cfg.min_bits);
        REQUIRE(want.has_value());
        CHECK(c.score == want->score);
    }
}

TEST_CASE("search output is identical across thread counts", "[identify]") {
    std::mt19937 rng(3006);
    std::vector<GalleryEntry> gallery;
    for (int i = 0; i < 7; ++i)
        gallery.push_back({"id" + std::to_string(i), {random_code(rng, EyeLabel::Unspecified)}});
    // One unscoreable entry: no occlusion overlap anywhere.
    auto blind = random_code(rng, EyeLabel::Unspecified);
    blind.occlusion = PackedGrid(blind.grid_rows(), blind.grid_cols());
    gallery.push_back({"blind", {blind}});
    const std::vector<Template> probe = {random_code(rng, EyeLabel::Unspecified)};

    SearchConfig one;
    one.matcher = Matcher::Hdbif;
    one.max_shift = 4;
    SearchConfig three = one;
    three.threads = 3;

    const SearchResult a = search_1n(probe, gallery, one);
    const SearchResult b = search_1n(probe, gallery, three);
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].identity_id == b.candidates[i].identity_id);
        CHECK(a.candidates[i].score == b.candidates[i].score);
        CHECK(a.candidates[i].rank == b.candidates[i].rank);
    }
    CHECK(a.failed_identities == b.failed_identities);
    CHECK(a.failed_identities == std::vector<std::string>{"blind"});
}

// -------------------------------------------------------------------- timing

TEST_CASE("timing report flags budget violations per event kind", "[identify]") {
    const std::vector<TimedEvent> events = {
        {TimedKind::TemplateCreation, "t0", 0.4},
        {TimedKind::TemplateCreation, "t1", 2.0},
        {TimedKind::Search, "s0", 26.0},
        {TimedKind::Search, "s1", 1.0},
    };
    const TimingReport rep = timing_report(events);
    REQUIRE(rep.events.size() == 4u);
    CHECK(rep.events[0].second);
    CHECK_FALSE(rep.events[1].second);
    CHECK_FALSE(rep.events[2].second);
    CHECK(rep.events[3].second);

    REQUIRE(rep.template_creation.has_value());
    CHECK(rep.template_creation->count == 2u);
    CHECK(rep.template_creation->violations == 1u);
    CHECK(rep.template_creation->budget == 1.5);
    CHECK(rep.template_creation->max == 2.0);

    REQUIRE(rep.search.has_value());
    CHECK(rep.search->violations == 1u);
    CHECK(rep.search->budget == 25.0);
}

TEST_CASE("timing percentiles use nearest rank", "[identify]") {
    std::vector<TimedEvent> events;
    for (int i = 10; i >= 1; --i)
        events.push_back({TimedKind::Search, "s", static_cast<double>(i)});
    const TimingReport rep = timing_report(events);
    REQUIRE(rep.search.has_value());
    CHECK(rep.search->p50 == 5.0);
    CHECK(rep.search->p90 == 9.0);
    CHECK(rep.search->p99 == 10.0);
    CHECK(rep.search->max == 10.0);
    CHECK_FALSE(rep.template_creation.has_value());

    const TimingReport empty = timing_report({});
    CHECK(empty.events.empty());
    CHECK_FALSE(empty.search.has_value());
}

// ------------------------------------------------------------------- storage

TEST_CASE("galleries round-trip through a manifest directory", "[identify]") {
    std::mt19937 rng(3007);
    std::vector<GalleryEntry> entries;
    entries.push_back({"subject/01",
                       {random_code(rng, EyeLabel::Left),
                        oracle::random_embedding(rng, 6, DistanceMetric::Angular,
                                                 EyeLabel::Right)}});
    entries.push_back({"subject-02", {random_code(rng, EyeLabel::Unspecified)}});

    const std::string dir = std::string(IRISX_TEST_TMP) + "/gallery_rt";
    std::filesystem::remove_all(dir);
    save_gallery(dir, entries);
    const auto back = load_gallery(dir);
    REQUIRE(back.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(back[i].identity_id == entries[i].identity_id);
        REQUIRE(back[i].templates.size() == entries[i].templates.size());
        for (std::size_t j = 0; j < entries[i].templates.size(); ++j)
            CHECK(back[i].templates[j] == entries[i].templates[j]);
    }
}

TEST_CASE("gallery loading rejects manifest eye mismatches", "[identify]") {
    std::mt19937 rng(3008);
    const std::vector<GalleryEntry> entries = {{"one", {random_code(rng, EyeLabel::Left)}}};
    const std::string dir = std::string(IRISX_TEST_TMP) + "/gallery_tamper";
    std::filesystem::remove_all(dir);
    save_gallery(dir, entries);

    const std::string manifest = dir + "/manifest.csv";
    std::ifstream in(manifest);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find(",L,");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 3, ",R,");
    std::ofstream out(manifest);
    out << text;
    out.close();

    CHECK_THROWS_AS(load_gallery(dir), Corrupt);
}

TEST_CASE("candidate lists round-trip through csv", "[identify]") {
    const std::string path = std::string(IRISX_TEST_TMP) + "/candidates_rt.csv";
    const std::vector<CandidateRow> rows = {
        {"probe1", 1, "idA", 0.125},
        {"probe1", 2, "idB", 0.5},
        {"probe2", 1, "idC", 0.0625},
    };
    write_candidates_csv(path, rows);
    const auto back = read_candidates_csv(path);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].probe_id == rows[i].probe_id);
        CHECK(back[i].rank == rows[i].rank);
        CHECK(back[i].identity_id == rows[i].identity_id);
        CHECK(back[i].score == rows[i].score);
    }

    std::ofstream bad(path);
    bad << "probe_id,rank,identity_id,score\np,1,idA\n";
    bad.close();
    CHECK_THROWS_AS(read_candidates_csv(path), Corrupt);
    std::ofstream bad2(path);
    bad2 << "p,notanint,idA,0.5\n";
    bad2.close();
    CHECK_THROWS_AS(read_candidates_csv(path), Corrupt);
}
