#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "irisx/detail/csv.hpp"
#include "irisx/errors.hpp"
#include "irisx/templates.hpp"

namespace irisx {

inline std::vector<double> normalize_embedding(const std::vector<double>& v) {
    double sq = 0;
    for (double x : v) {
        if (!std::isfinite(x)) throw DegenerateEmbedding("non-finite embedding value");
        sq += x * x;
    }
    if (sq == 0.0) throw DegenerateEmbedding("zero embedding cannot be normalized");
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
    return out;
}

/// Angle between the unit-normalized vectors, in [0, pi]. The dot product is
/// clamped to [-1, 1] before acos so rounding never produces NaN.
inline double angular_distance(const FloatEmbeddingTemplate& a, const FloatEmbeddingTemplate& b) {
    if (a.metric != DistanceMetric::Angular || b.metric != DistanceMetric::Angular)
        throw IncompatibleTemplates("angular_distance requires Angular templates");
    if (a.values.size() != b.values.size())
        throw IncompatibleTemplates("embedding dimensions differ");
    const std::vector<double> ua = normalize_embedding(a.values);
    const std::vector<double> ub = normalize_embedding(b.values);
    double dot = 0;
    for (std::size_t i = 0; i < ua.size(); ++i) dot += ua[i] * ub[i];
    return std::acos(std::clamp(dot, -1.0, 1.0));
}

inline double euclidean_distance(const FloatEmbeddingTemplate& a, const FloatEmbeddingTemplate& b) {
    if (a.metric != DistanceMetric::Euclidean || b.metric != DistanceMetric::Euclidean)
        throw IncompatibleTemplates("euclidean_distance requires Euclidean templates");
    if (a.values.size() != b.values.size())
        throw IncompatibleTemplates("embedding dimensions differ");
    double sq = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

/// CSV rows: image_id,eye,v1,...,vdim. All rows must share one dimension.
struct EmbeddingRecord {
    std::string image_id;
    FloatEmbeddingTemplate embedding;
};

inline std::vector<EmbeddingRecord> read_embeddings_csv(const std::string& path,
                                                        DistanceMetric metric) {
    std::vector<EmbeddingRecord> records;
    const auto lines = detail::read_lines(path);
    std::size_t dim = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "image_id") continue;
        if (fields.size() < 3) throw Corrupt("embedding row needs image_id,eye,values in " + path);
        EmbeddingRecord rec;
        rec.image_id = fields[0];
        rec.embedding.eye = eye_from_string(fields[1]);
        rec.embedding.metric = metric;
        rec.embedding.values.reserve(fields.size() - 2);
        for (std::size_t j = 2; j < fields.size(); ++j)
            rec.embedding.values.push_back(detail::parse_double(fields[j], path));
        if (dim == 0) dim = rec.embedding.values.size();
        else if (rec.embedding.values.size() != dim)
            throw Corrupt("inconsistent embedding dimension in " + path);
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_embeddings_csv(const std::string& path,
                                 const std::vector<EmbeddingRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "image_id,eye,values\n";
    for (const auto& rec : records) {
        f << rec.image_id << ',' << to_string(rec.embedding.eye);
        for (double v : rec.embedding.values) f << ',' << detail::format_double(v);
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace irisx
