#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "../support/oracles.hpp"
#include "irisx/irisx.hpp"

using namespace irisx;

namespace {

FloatEmbeddingTemplate make(DistanceMetric metric, std::vector<double> values,
                            EyeLabel eye = EyeLabel::Unspecified) {
    FloatEmbeddingTemplate e;
    e.eye = eye;
    e.metric = metric;
    e.values = std::move(values);
    return e;
}

// Kahan-compensated dot and norm as an independent high-precision reference.
double compensated_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0, c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double y = a[i] * b[i] - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

TEST_CASE("normalization scales (3,4) to (0.6,0.8)", "[embedding]") {
    const auto u = normalize_embedding({3.0, 4.0});
    REQUIRE(u.size() == 2u);
    CHECK(u[0] == Catch::Approx(0.6).margin(1e-15));
    CHECK(u[1] == Catch::Approx(0.8).margin(1e-15));
}

TEST_CASE("normalization leaves unit vectors fixed and rejects zero", "[embedding]") {
    const std::vector<double> unit = {1.0, 0.0, 0.0};
    CHECK(normalize_embedding(unit) == unit);
    CHECK_THROWS_AS(normalize_embedding({0.0, 0.0}), DegenerateEmbedding);
    CHECK_THROWS_AS(normalize_embedding({1.0, std::nan("")}), DegenerateEmbedding);
}

TEST_CASE("normalized vectors have unit norm within 1e-12", "[embedding]") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(1 + rng() % 64);
        for (auto& x : v) x = u(rng);
        if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
        const auto n = normalize_embedding(v);
        double sq = 0;
        for (double x : n) sq += x * x;
        CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-12);
    }
}

TEST_CASE("angular distance hits 0, pi/2 and pi on exact inputs", "[embedding]") {
    const auto ex = make(DistanceMetric::Angular, {1.0, 0.0});
    const auto ey = make(DistanceMetric::Angular, {0.0, 1.0});
    const auto neg = make(DistanceMetric::Angular, {-1.0, 0.0});
    CHECK(angular_distance(ex, ex) == 0.0);
    CHECK(angular_distance(ex, ey) == Catch::Approx(std::numbers::pi / 2).margin(1e-15));
    CHECK(angular_distance(ex, neg) == Catch::Approx(std::numbers::pi).margin(1e-15));
}

TEST_CASE("angular distance is invariant to positive scaling", "[embedding]") {
    std::mt19937 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = oracle::random_embedding(rng, 16, DistanceMetric::Angular,
                                                EyeLabel::Unspecified);
        auto b = oracle::random_embedding(rng, 16, DistanceMetric::Angular,
                                          EyeLabel::Unspecified);
        auto scaled = b;
        for (auto& v : scaled.values) v *= 37.5;
        CHECK(angular_distance(a, b) == Catch::Approx(angular_distance(a, scaled)).margin(1e-12));
    }
}

TEST_CASE("angular distance agrees with a compensated-arithmetic reference", "[embedding]") {
    std::mt19937 rng(44);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> va(128), vb(128);
        for (auto& x : va) x = u(rng);
        for (auto& x : vb) x = u(rng);
        const auto a = make(DistanceMetric::Angular, va);
        const auto b = make(DistanceMetric::Angular, vb);

        const double na = std::sqrt(compensated_dot(va, va));
        const double nb = std::sqrt(compensated_dot(vb, vb));
        const double cosv = std::clamp(compensated_dot(va, vb) / (na * nb), -1.0, 1.0);
        const double want = std::acos(cosv);
        CHECK(angular_distance(a, b) == Catch::Approx(want).margin(1e-7));
    }
}

TEST_CASE("angular distance validates metric and dimension", "[embedding]") {
    const auto ang = make(DistanceMetric::Angular, {1.0, 0.0});
    const auto euc = make(DistanceMetric::Euclidean, {1.0, 0.0});
    const auto wide = make(DistanceMetric::Angular, {1.0, 0.0, 0.0});
    CHECK_THROWS_AS(angular_distance(ang, euc), IncompatibleTemplates);
    CHECK_THROWS_AS(angular_distance(ang, wide), IncompatibleTemplates);
    CHECK_THROWS_AS(angular_distance(ang, make(DistanceMetric::Angular, {0.0, 0.0})),
                    DegenerateEmbedding);
}

TEST_CASE("euclidean distance matches hand values and the reference", "[embedding]") {
    const auto a = make(DistanceMetric::Euclidean, {1.0, 2.0, 2.0});
    const auto b = make(DistanceMetric::Euclidean, {0.0, 0.0, 0.0});
    CHECK(euclidean_distance(a, b) == 3.0);
    CHECK(euclidean_distance(a, a) == 0.0);

    std::mt19937 rng(55);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> va(64), vb(64);
        for (auto& x : va) x = u(rng);
        for (auto& x : vb) x = u(rng);
        std::vector<double> diff(64);
        for (int i = 0; i < 64; ++i) diff[i] = va[i] - vb[i];
        const double want = std::sqrt(compensated_dot(diff, diff));
        CHECK(euclidean_distance(make(DistanceMetric::Euclidean, va),
                                 make(DistanceMetric::Euclidean, vb)) ==
              Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("euclidean distance validates metric and dimension", "[embedding]") {
    const auto a = make(DistanceMetric::Euclidean, {1.0});
    CHECK_THROWS_AS(euclidean_distance(a, make(DistanceMetric::Angular, {1.0})),
                    IncompatibleTemplates);
    CHECK_THROWS_AS(euclidean_distance(a, make(DistanceMetric::Euclidean, {1.0, 2.0})),
                    IncompatibleTemplates);
}

TEST_CASE("both distances satisfy the triangle inequality", "[embedding]") {
    std::mt19937 rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = oracle::random_embedding(rng, 8, DistanceMetric::Angular,
                                                EyeLabel::Unspecified);
        const auto b = oracle::random_embedding(rng, 8, DistanceMetric::Angular,
                                                EyeLabel::Unspecified);
        const auto c = oracle::random_embedding(rng, 8, DistanceMetric::Angular,
                                                EyeLabel::Unspecified);
        CHECK(angular_distance(a, c) <=
              angular_distance(a, b) + angular_distance(b, c) + 1e-12);

        const auto ea = oracle::random_embedding(rng, 8, DistanceMetric::Euclidean,
                                                 EyeLabel::Unspecified);
        const auto eb = oracle::random_embedding(rng, 8, DistanceMetric::Euclidean,
                                                 EyeLabel::Unspecified);
        const auto ec = oracle::random_embedding(rng, 8, DistanceMetric::Euclidean,
                                                 EyeLabel::Unspecified);
        CHECK(euclidean_distance(ea, ec) <=
              euclidean_distance(ea, eb) + euclidean_distance(eb, ec) + 1e-12);
    }
}

TEST_CASE("embedding csv round-trips and enforces one dimension", "[embedding]") {
    const std::string path = std::string(IRISX_TEST_TMP) + "/embeddings.csv";
    std::vector<EmbeddingRecord> recs;
    recs.push_back({"img_a", make(DistanceMetric::Angular, {0.6, 0.8}, EyeLabel::Left)});
    recs.push_back({"img_b", make(DistanceMetric::Angular, {1.0, 0.0}, EyeLabel::Right)});
    write_embeddings_csv(path, recs);

    const auto back = read_embeddings_csv(path, DistanceMetric::Angular);
    REQUIRE(back.size() == 2u);
    CHECK(back[0].image_id == "img_a");
    CHECK(back[0].embedding == recs[0].embedding);
    CHECK(back[1].embedding.eye == EyeLabel::Right);

    {
        std::ofstream f(path);
        f << "img_a,L,0.5,0.5\nimg_b,R,1.0\n";
    }
    CHECK_THROWS_AS(read_embeddings_csv(path, DistanceMetric::Angular), Corrupt);
    {
        std::ofstream f(path);
        f << "img_a,X,0.5,0.5\n";
    }
    CHECK_THROWS_AS(read_embeddings_csv(path, DistanceMetric::Angular), InvalidMarker);
}
