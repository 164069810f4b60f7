// irisx: batch front end for the iris template library. Subcommands cover the
// pipeline from segmentation masks to identification candidate lists, plus
// score evaluation and cross-implementation parity checks.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 processing failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irisx/irisx.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Polar images are written as <id>_polar; templates derived from them should
// carry the plain <id> again.
std::string strip_suffix(const std::string& name, const std::string& suffix) {
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
        return name.substr(0, name.size() - suffix.size());
    return name;
}

irisx::CryptMaskTemplate crypt_from_mask(const irisx::BinaryMask& m, irisx::EyeLabel eye) {
    irisx::CryptMaskTemplate t;
    t.eye = eye;
    t.height = m.height;
    t.width = m.width;
    t.cells.resize(static_cast<std::size_t>(m.height) * m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) t.set(y, x, m.at(x, y));
    return t;
}

irisx::Matcher matcher_from(const std::string& name) {
    if (name == "hdbif") return irisx::Matcher::Hdbif;
    if (name == "angular") return irisx::Matcher::Angular;
    if (name == "euclidean") return irisx::Matcher::Euclidean;
    if (name == "cryptsemd") return irisx::Matcher::CryptsEmd;
    throw irisx::Corrupt("unknown matcher: " + name);
}

// JSON cannot carry non-finite numbers; map them to tokens.
json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json metrics_to_json(const irisx::MetricsReport& rep) {
    json j;
    j["auc"] = json_number(rep.auc);
    j["eer"] = json_number(rep.eer);
    j["dprime"] = json_number(rep.dprime);
    j["fte"] = json_number(rep.fte);
    j["n_genuine"] = rep.n_genuine;
    j["n_imposter"] = rep.n_imposter;
    j["n_failed"] = rep.n_failed;
    json fnmr = json::object();
    for (const auto& [target, value] : rep.fnmr_at_fmr)
        fnmr[irisx::detail::format_double(target)] = json_number(value);
    j["fnmr_at_fmr"] = fnmr;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream f(path);
    if (!f) throw irisx::IoError("cannot open for write: " + path);
    f << text;
    if (!f) throw irisx::IoError("write failed: " + path);
}

// ------------------------------------------------------------------ commands

struct FitCirclesOpts {
    std::vector<std::string> masks;
    std::string out;
};

int cmd_fit_circles(const FitCirclesOpts& o) {
    std::vector<irisx::CircleRecord> records;
    for (const std::string& path : o.masks) {
        const irisx::BinaryMask mask = irisx::read_mask(path);
        const irisx::HoughFit fit = irisx::fit_circles_hough(mask);
        if (fit.degenerate)
            std::cout << "DEGENERATE " << stem_of(path) << " pupil synthesized at 0.3*ir\n";
        records.push_back({stem_of(path), fit.circles});
    }
    irisx::write_circles_csv(o.out, records);
    std::cout << "wrote " << records.size() << " circle rows to " << o.out << "\n";
    return 0;
}

struct NormalizeOpts {
    std::vector<std::string> images;
    std::vector<std::string> masks;
    std::string circles;
    std::string out_dir;
    int width = 640;
    int height = 480;
    int radial = 64;
    int angular = 512;
};

int cmd_normalize(const NormalizeOpts& o) {
    const auto rows = irisx::read_circles_csv(o.circles);
    std::map<std::string, irisx::CircleParams> by_id;
    for (const auto& r : rows) by_id[r.image_id] = r.circles;

    std::map<std::string, std::string> mask_by_id;
    for (const std::string& m : o.masks) mask_by_id[stem_of(m)] = m;

    fs::create_directories(o.out_dir);
    std::size_t accepted = 0, rejected = 0;
    for (const std::string& path : o.images) {
        const std::string id = stem_of(path);
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw irisx::Corrupt("no circle row for image " + id);

        const irisx::GrayImage raw = irisx::read_gray_image(path);
        auto [image, map] = irisx::preprocess_image(raw, o.width, o.height);
        const irisx::CircleParams circles = map.to_target(it->second);

        std::optional<irisx::BinaryMask> mask;
        if (const auto mit = mask_by_id.find(id); mit != mask_by_id.end())
            mask = irisx::preprocess_mask(irisx::read_mask(mit->second), o.width, o.height);

        const irisx::QualityVerdict verdict =
            irisx::quality_gate(circles, mask ? &*mask : nullptr);
        if (!verdict.accepted) {
            std::cout << "REJECTED " << id;
            for (std::size_t i = 0; i < verdict.reasons.size(); ++i)
                std::cout << (i ? ";" : " ") << irisx::to_string(verdict.reasons[i]);
            std::cout << "\n";
            ++rejected;
            continue;
        }

        const irisx::NormalizedIris polar =
            irisx::rubber_sheet(image, circles, mask ? &*mask : nullptr, o.radial, o.angular);
        irisx::write_gray_image((fs::path(o.out_dir) / (id + "_polar.pgm")).string(),
                                polar.polar_image);
        irisx::write_mask((fs::path(o.out_dir) / (id + "_polarmask.pgm")).string(),
                          polar.polar_mask);
        std::cout << "OK " << id << "\n";
        ++accepted;
    }
    std::cout << "normalized " << accepted << ", rejected " << rejected << "\n";
    return 0;
}

struct EncodeOpts {
    std::vector<std::string> images;
    std::vector<std::string> masks;
    std::string out_dir;
    std::string filters;
    int kernels = 7;
    int kernel_size = 9;
    std::uint64_t seed = irisx::kDefaultFilterSeed;
    std::string eye = "U";
};

int cmd_encode(const EncodeOpts& o) {
    if (o.images.size() != o.masks.size())
        throw irisx::Corrupt("need one polar mask per polar image");
    const irisx::FilterBank bank =
        o.filters.empty() ? irisx::default_filter_bank(o.kernels, o.kernel_size, o.seed)
                          : irisx::load_filter_bank_file(o.filters);
    const irisx::EyeLabel eye = irisx::eye_from_string(o.eye);

    fs::create_directories(o.out_dir);
    for (std::size_t i = 0; i < o.images.size(); ++i) {
        irisx::NormalizedIris polar;
        polar.polar_image = irisx::read_gray_image(o.images[i]);
        polar.polar_mask = irisx::read_mask(o.masks[i]);
        polar.radial_res = polar.polar_image.height;
        polar.angular_res = polar.polar_image.width;
        if (polar.polar_mask.width != polar.polar_image.width ||
            polar.polar_mask.height != polar.polar_image.height)
            throw irisx::Corrupt("polar mask dimensions disagree with " + o.images[i]);

        irisx::BinaryCodeTemplate t = irisx::encode(polar, bank);
        t.eye = eye;
        const std::string id = strip_suffix(stem_of(o.images[i]), "_polar");
        irisx::save_template((fs::path(o.out_dir) / (id + ".irxt")).string(), irisx::Template(t));
        std::cout << "OK " << id << "\n";
    }
    return 0;
}

struct EnrollOpts {
    std::string manifest;
    std::string out_dir;
};

// Manifest rows: identity_id,template_path (relative to the manifest file).
int cmd_enroll(const EnrollOpts& o) {
    const auto lines = irisx::detail::read_lines(o.manifest);
    const fs::path base = fs::path(o.manifest).parent_path();
    std::vector<irisx::GalleryEntry> entries;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = irisx::detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "identity_id") continue;
        if (fields.size() != 2)
            throw irisx::Corrupt("expected identity_id,template_path rows in " + o.manifest);
        fs::path tpl = fields[1];
        if (tpl.is_relative()) tpl = base / tpl;
        const auto [it, inserted] = index.emplace(fields[0], entries.size());
        if (inserted) entries.push_back({fields[0], {}});
        entries[it->second].templates.push_back(irisx::load_template(tpl.string()));
    }
    if (entries.empty()) throw irisx::EmptyGallery("manifest lists no templates");
    irisx::save_gallery(o.out_dir, entries);
    std::cout << "enrolled " << entries.size() << " identities into " << o.out_dir << "\n";
    return 0;
}

struct MatchOpts {
    std::string matcher = "hdbif";
    int max_shift = 16;
    std::string strategy = "even";
    long long min_bits = -1;
    double size_ratio_max = 2.0;
    double min_overlap = 0.1;
    bool no_pre_check = false;
    int max_iterations = 0;

    irisx::SearchConfig to_config() const {
        irisx::SearchConfig cfg;
        cfg.matcher = matcher_from(matcher);
        cfg.max_shift = max_shift;
        if (strategy == "even") cfg.strategy = irisx::ShiftStrategy::EvenThenNeighbors;
        else if (strategy == "exhaustive") cfg.strategy = irisx::ShiftStrategy::Exhaustive;
        else throw irisx::Corrupt("unknown shift strategy: " + strategy);
        if (min_bits >= 0) cfg.min_bits = static_cast<std::uint64_t>(min_bits);
        cfg.emd.size_ratio_max = size_ratio_max;
        cfg.emd.min_overlap = min_overlap;
        cfg.emd.pre_check = !no_pre_check;
        cfg.emd.max_iterations = max_iterations;
        return cfg;
    }
};

struct SearchOpts {
    std::vector<std::string> probes;
    std::string gallery;
    std::string out;
    std::string probe_id = "probe";
    std::string timing_out;
    MatchOpts match;
    int candidates = 20;
    std::string failure_policy = "propagate";
    int threads = 1;
};

int cmd_search(const SearchOpts& o) {
    irisx::SearchConfig cfg = o.match.to_config();
    cfg.candidate_list_length = o.candidates;
    cfg.threads = o.threads;
    if (o.failure_policy == "propagate") cfg.failure_policy = irisx::FailurePolicy::Propagate;
    else if (o.failure_policy == "sentinel") cfg.failure_policy = irisx::FailurePolicy::Sentinel;
    else throw irisx::Corrupt("unknown failure policy: " + o.failure_policy);

    std::vector<irisx::Template> probe;
    for (const std::string& p : o.probes) probe.push_back(irisx::load_template(p));
    const std::vector<irisx::GalleryEntry> gallery = irisx::load_gallery(o.gallery);

    const auto t0 = std::chrono::steady_clock::now();
    const irisx::SearchResult result = irisx::search_1n(probe, gallery, cfg);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<irisx::CandidateRow> rows;
    rows.reserve(result.candidates.size());
    for (const irisx::Candidate& c : result.candidates)
        rows.push_back({o.probe_id, c.rank, c.identity_id, c.score});
    irisx::write_candidates_csv(o.out, rows);
    for (const std::string& id : result.failed_identities) std::cout << "FAILED " << id << "\n";

    if (!o.timing_out.empty()) {
        const irisx::TimingReport rep =
            irisx::timing_report({{irisx::TimedKind::Search, o.probe_id, elapsed}});
        json j;
        j["search"]["seconds"] = elapsed;
        j["search"]["budget"] = rep.search->budget;
        j["search"]["within_budget"] = rep.search->violations == 0;
        write_text_file(o.timing_out, j.dump(2) + "\n");
    }
    std::cout << "wrote " << rows.size() << " candidates to " << o.out << "\n";
    return 0;
}

struct VerifyOpts {
    std::string pairs;
    std::string out;
    MatchOpts match;
};

// Pair rows: probe_path,gallery_path,genuine(0|1); paths relative to the list.
int cmd_verify(const VerifyOpts& o) {
    const irisx::SearchConfig cfg = o.match.to_config();
    const auto lines = irisx::detail::read_lines(o.pairs);
    const fs::path base = fs::path(o.pairs).parent_path();
    std::vector<irisx::ScoreRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = irisx::detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "probe_path") continue;
        if (fields.size() != 3)
            throw irisx::Corrupt("expected probe_path,gallery_path,genuine rows in " + o.pairs);
        auto resolve = [&base](const std::string& p) {
            fs::path q = p;
            if (q.is_relative()) q = base / q;
            return q.string();
        };
        const irisx::Template probe = irisx::load_template(resolve(fields[0]));
        const irisx::Template gallery = irisx::load_template(resolve(fields[1]));
        irisx::ScoreRecord rec;
        rec.method_id = irisx::method_id_of(cfg.matcher);
        rec.probe_id = stem_of(fields[0]);
        rec.gallery_id = stem_of(fields[1]);
        if (fields[2] == "1") rec.genuine = true;
        else if (fields[2] == "0") rec.genuine = false;
        else throw irisx::Corrupt("genuine flag must be 0 or 1 in " + o.pairs);
        rec.score = irisx::score_pair(probe, gallery, cfg);
        records.push_back(std::move(rec));
    }
    irisx::write_scores_csv(o.out, records);
    std::cout << "wrote " << records.size() << " scores to " << o.out << "\n";
    return 0;
}

struct EvalOpts {
    std::vector<std::string> scores;
    std::string out;
    std::string protocol = "discard";
    std::vector<double> fmr_targets = {0.01, 0.001};
    double fte_threshold = 0.30;
};

int cmd_eval(const EvalOpts& o) {
    std::vector<irisx::ScoreRecord> records;
    for (const std::string& path : o.scores) {
        auto part = irisx::read_scores_csv(path);
        records.insert(records.end(), std::make_move_iterator(part.begin()),
                       std::make_move_iterator(part.end()));
    }

    json methods = json::object();
    if (o.protocol == "intersection") {
        const auto sets = irisx::protocol_intersection(records, o.fte_threshold);
        for (const auto& [method, set] : sets)
            methods[method] = metrics_to_json(irisx::compute_metrics(set, o.fmr_targets));
    } else {
        std::map<std::string, std::vector<irisx::ScoreRecord>> by_method;
        for (auto& r : records) by_method[r.method_id].push_back(std::move(r));
        for (const auto& [method, recs] : by_method) {
            irisx::ScoreSet set;
            if (o.protocol == "discard") set = irisx::protocol_discard(recs);
            else if (o.protocol == "nonmatch")
                set = irisx::protocol_failure_as_nonmatch(recs, irisx::SentinelTable::defaults());
            else throw irisx::Corrupt("unknown protocol: " + o.protocol);
            methods[method] = metrics_to_json(irisx::compute_metrics(set, o.fmr_targets));
        }
    }

    json j;
    j["protocol"] = o.protocol;
    j["methods"] = methods;
    write_text_file(o.out, j.dump(2) + "\n");
    std::cout << "wrote metrics for " << methods.size() << " method(s) to " << o.out << "\n";
    return 0;
}

struct ParityOpts {
    std::string a;
    std::string b;
    std::string out;
    std::string hist_out;
    int bins = 50;
};

int cmd_parity(const ParityOpts& o) {
    const auto ra = irisx::read_scores_csv(o.a);
    const auto rb = irisx::read_scores_csv(o.b);
    const irisx::ParityReport rep = irisx::parity(ra, rb);

    auto stats_json = [](const irisx::ParityStats& st) {
        json j;
        j["n"] = st.n;
        j["mad"] = json_number(st.mad);
        j["max_delta"] = json_number(st.max_delta);
        j["r2"] = json_number(st.r2);
        return j;
    };
    json j;
    j["genuine"] = stats_json(rep.genuine);
    j["imposter"] = stats_json(rep.imposter);
    j["only_a"] = rep.only_a;
    j["only_b"] = rep.only_b;
    j["failed_pairs"] = rep.failed_pairs;
    write_text_file(o.out, j.dump(2) + "\n");

    if (!o.hist_out.empty()) {
        const irisx::DeltaHistogram hist = irisx::emit_delta_histogram(ra, rb, o.bins);
        std::string text = "bin_lo,bin_hi,count\n";
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            text += irisx::detail::format_double(hist.edges[i]) + "," +
                    irisx::detail::format_double(hist.edges[i + 1]) + "," +
                    std::to_string(hist.counts[i]) + "\n";
        }
        write_text_file(o.hist_out, text);
    }
    std::cout << "wrote parity report to " << o.out << "\n";
    return 0;
}

struct CryptsMatchOpts {
    std::string pairs;
    std::string out;
    MatchOpts match;
};

// Pair rows: a_path,b_path,genuine(0|1) of crypt mask images.
int cmd_crypts_match(const CryptsMatchOpts& o) {
    irisx::SearchConfig cfg = o.match.to_config();
    const auto lines = irisx::detail::read_lines(o.pairs);
    const fs::path base = fs::path(o.pairs).parent_path();
    std::vector<irisx::ScoreRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = irisx::detail::split_csv(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "a_path") continue;
        if (fields.size() != 3)
            throw irisx::Corrupt("expected a_path,b_path,genuine rows in " + o.pairs);
        auto load = [&base](const std::string& p) {
            fs::path q = p;
            if (q.is_relative()) q = base / q;
            return crypt_from_mask(irisx::read_mask(q.string()), irisx::EyeLabel::Unspecified);
        };
        irisx::ScoreRecord rec;
        rec.method_id = "cryptsemd";
        rec.probe_id = stem_of(fields[0]);
        rec.gallery_id = stem_of(fields[1]);
        if (fields[2] == "1") rec.genuine = true;
        else if (fields[2] == "0") rec.genuine = false;
        else throw irisx::Corrupt("genuine flag must be 0 or 1 in " + o.pairs);
        rec.score = irisx::emd_2d(load(fields[0]), load(fields[1]), cfg.emd);
        records.push_back(std::move(rec));
    }
    irisx::write_scores_csv(o.out, records);
    std::cout << "wrote " << records.size() << " scores to " << o.out << "\n";
    return 0;
}

// Flat key=value file: '#' starts a comment, blank lines are skipped, keys name
// long options without the leading dashes. Values given on the command line win.
void apply_config_file(CLI::App& sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw irisx::IoError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = irisx::detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw irisx::Corrupt("expected key=value at " + where);
        const std::string key = irisx::detail::trim(s.substr(0, eq));
        const std::string value = irisx::detail::trim(s.substr(eq + 1));
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) throw irisx::Corrupt("unknown config key '" + key + "' at " + where);
        if (opt->count() > 0) continue;
        try {
            opt->add_result(value);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw irisx::Corrupt("bad value for config key '" + key + "' at " + where + ": " +
                                 e.what());
        }
    }
}

void add_match_options(CLI::App* sub, MatchOpts& m, bool with_matcher = true) {
    if (with_matcher)
        sub->add_option("--matcher", m.matcher, "hdbif | angular | euclidean | cryptsemd")
            ->capture_default_str();
    sub->add_option("--max-shift", m.max_shift, "maximum angular shift in columns")
        ->capture_default_str();
    sub->add_option("--strategy", m.strategy, "shift search: even | exhaustive")
        ->capture_default_str();
    sub->add_option("--min-bits", m.min_bits,
                    "minimum overlapping code bits per comparison (-1 = k*R*A/100)")
        ->capture_default_str();
    sub->add_option("--size-ratio-max", m.size_ratio_max, "emd pre-check: max mask area ratio")
        ->capture_default_str();
    sub->add_option("--min-overlap", m.min_overlap, "emd pre-check: min mask IoU")
        ->capture_default_str();
    sub->add_flag("--no-pre-check", m.no_pre_check, "disable the emd pre-check");
    sub->add_option("--max-iterations", m.max_iterations,
                    "emd solver iteration cap (0 = default)")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iris template toolkit: normalization, encoding, matching, evaluation"};
    app.require_subcommand(1);

    std::map<std::string, std::string> config_paths;
    auto add_config = [&config_paths](CLI::App* sub) {
        sub->add_option("--config", config_paths[sub->get_name()],
                        "key=value config file, command-line flags override it")
            ->check(CLI::ExistingFile);
    };

    FitCirclesOpts fit_opts;
    CLI::App* fit = app.add_subcommand("fit-circles", "fit pupil/iris circles to mask images");
    fit->add_option("--masks", fit_opts.masks, "segmentation mask images (PGM/PNG)")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--out", fit_opts.out, "output circles CSV")->required();
    add_config(fit);

    NormalizeOpts norm_opts;
    CLI::App* norm = app.add_subcommand("normalize", "unwrap iris images to polar rasters");
    norm->add_option("--images", norm_opts.images, "iris images (PGM/PNG)")
        ->required()
        ->check(CLI::ExistingFile);
    norm->add_option("--circles", norm_opts.circles, "circles CSV from fit-circles")
        ->required()
        ->check(CLI::ExistingFile);
    norm->add_option("--masks", norm_opts.masks, "segmentation masks matched by file stem")
        ->check(CLI::ExistingFile);
    norm->add_option("--out-dir", norm_opts.out_dir, "output directory")->required();
    norm->add_option("--width", norm_opts.width, "preprocess target width")->capture_default_str();
    norm->add_option("--height", norm_opts.height, "preprocess target height")
        ->capture_default_str();
    norm->add_option("--radial", norm_opts.radial, "polar radial resolution")
        ->capture_default_str();
    norm->add_option("--angular", norm_opts.angular, "polar angular resolution")
        ->capture_default_str();
    add_config(norm);

    EncodeOpts enc_opts;
    CLI::App* enc = app.add_subcommand("encode", "filter polar images into binary templates");
    enc->add_option("--images", enc_opts.images, "polar images from normalize")
        ->required()
        ->check(CLI::ExistingFile);
    enc->add_option("--masks", enc_opts.masks, "polar masks, one per image")
        ->required()
        ->check(CLI::ExistingFile);
    enc->add_option("--out-dir", enc_opts.out_dir, "output directory for .irxt templates")
        ->required();
    enc->add_option("--filters", enc_opts.filters, "filter bank file (default: seeded bank)")
        ->check(CLI::ExistingFile);
    enc->add_option("--kernels", enc_opts.kernels, "default bank: kernel count")
        ->capture_default_str();
    enc->add_option("--kernel-size", enc_opts.kernel_size, "default bank: odd kernel side")
        ->capture_default_str();
    enc->add_option("--seed", enc_opts.seed, "default bank: RNG seed")->capture_default_str();
    enc->add_option("--eye", enc_opts.eye, "eye label for all templates: U | R | L")
        ->capture_default_str();
    add_config(enc);

    EnrollOpts enroll_opts;
    CLI::App* enroll = app.add_subcommand("enroll", "build a gallery from a template manifest");
    enroll->add_option("--manifest", enroll_opts.manifest,
                       "CSV of identity_id,template_path rows")
        ->required()
        ->check(CLI::ExistingFile);
    enroll->add_option("--out-dir", enroll_opts.out_dir, "gallery output directory")->required();
    add_config(enroll);

    SearchOpts search_opts;
    CLI::App* search = app.add_subcommand("search", "1:N identification against a gallery");
    search->add_option("--probe", search_opts.probes, "probe template files (.irxt)")
        ->required()
        ->check(CLI::ExistingFile);
    search->add_option("--gallery", search_opts.gallery, "gallery directory from enroll")
        ->required()
        ->check(CLI::ExistingDirectory);
    search->add_option("--out", search_opts.out, "output candidates CSV")->required();
    search->add_option("--probe-id", search_opts.probe_id, "probe label in the output")
        ->capture_default_str();
    search->add_option("--candidates", search_opts.candidates, "candidate list length")
        ->capture_default_str();
    search->add_option("--failure-policy", search_opts.failure_policy,
                       "unscoreable identities: propagate | sentinel")
        ->capture_default_str();
    search->add_option("--threads", search_opts.threads, "worker threads (0 = hardware)")
        ->capture_default_str();
    search->add_option("--timing-out", search_opts.timing_out, "optional timing report JSON");
    add_match_options(search, search_opts.match);
    add_config(search);

    VerifyOpts verify_opts;
    CLI::App* verify = app.add_subcommand("verify", "1:1 comparisons over a pair list");
    verify->add_option("--pairs", verify_opts.pairs, "CSV of probe_path,gallery_path,genuine")
        ->required()
        ->check(CLI::ExistingFile);
    verify->add_option("--out", verify_opts.out, "output score CSV")->required();
    add_match_options(verify, verify_opts.match);
    add_config(verify);

    EvalOpts eval_opts;
    CLI::App* eval = app.add_subcommand("eval", "verification metrics from score CSVs");
    eval->add_option("--scores", eval_opts.scores, "score CSV files")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--out", eval_opts.out, "output metrics JSON")->required();
    eval->add_option("--protocol", eval_opts.protocol,
                     "failure handling: discard | nonmatch | intersection")
        ->capture_default_str();
    eval->add_option("--fmr", eval_opts.fmr_targets, "FMR targets for FNMR lookup")
        ->capture_default_str();
    eval->add_option("--fte-threshold", eval_opts.fte_threshold,
                     "intersection: drop methods above this FTE")
        ->capture_default_str();
    add_config(eval);

    ParityOpts parity_opts;
    CLI::App* par = app.add_subcommand("parity", "cross-implementation score agreement");
    par->add_option("--a", parity_opts.a, "score CSV under test")
        ->required()
        ->check(CLI::ExistingFile);
    par->add_option("--b", parity_opts.b, "reference score CSV")
        ->required()
        ->check(CLI::ExistingFile);
    par->add_option("--out", parity_opts.out, "output parity JSON")->required();
    par->add_option("--hist-out", parity_opts.hist_out, "optional delta histogram CSV");
    par->add_option("--bins", parity_opts.bins, "histogram bin count")->capture_default_str();
    add_config(par);

    CryptsMatchOpts crypts_opts;
    CLI::App* crypts = app.add_subcommand("crypts-match", "earth mover's distance on mask pairs");
    crypts->add_option("--pairs", crypts_opts.pairs, "CSV of a_path,b_path,genuine mask images")
        ->required()
        ->check(CLI::ExistingFile);
    crypts->add_option("--out", crypts_opts.out, "output score CSV")->required();
    add_match_options(crypts, crypts_opts.match, false);
    add_config(crypts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        for (CLI::App* sub : app.get_subcommands())
            apply_config_file(*sub, config_paths[sub->get_name()]);
        if (*fit) return cmd_fit_circles(fit_opts);
        if (*norm) return cmd_normalize(norm_opts);
        if (*enc) return cmd_encode(enc_opts);
        if (*enroll) return cmd_enroll(enroll_opts);
        if (*search) return cmd_search(search_opts);
        if (*verify) return cmd_verify(verify_opts);
        if (*eval) return cmd_eval(eval_opts);
        if (*par) return cmd_parity(parity_opts);
        if (*crypts) return cmd_crypts_match(crypts_opts);
    } catch (const irisx::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
