#include "reprbench/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "reprbench/errors.hpp"
#include "reprbench/format.hpp"
#include "reprbench/parallel.hpp"
#include "reprbench/rng.hpp"

namespace reprbench {

std::string_view to_string(ClassifierKind kind) { return kind == ClassifierKind::knn ? "knn" : "linear"; }

ClassifierKind parse_classifier_kind(std::string_view text) {
    if (text == "knn") return ClassifierKind::knn;
    if (text == "linear") return ClassifierKind::linear;
    throw ConfigError("unknown classifier kind '" + std::string(text) + "'");
}

void FewshotConfig::validate() const {
    if (grid.empty()) throw ConfigError("fewshot: grid must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == 0) throw ConfigError("fewshot: grid values must be positive");
        if (i && grid[i] <= grid[i - 1]) throw ConfigError("fewshot: grid must be strictly ascending");
    }
    if (repeats < 2) throw ConfigError("fewshot: repeats must be >= 2");
    knn.validate();
    probe.validate();
}

std::string test_fingerprint(const TaskDataset& dataset, const SplitAssignment& split) {
    std::vector<std::string> ids;
    for (std::size_t r : split.rows(dataset, SplitTag::test)) ids.push_back(dataset.sample_id(r));
    std::sort(ids.begin(), ids.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& id : ids) {
        for (unsigned char c : id) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;  // separator
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::size_t> sample_subset(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                                       std::size_t n_per_class, std::uint64_t seed) {
    if (train_rows.empty()) throw ValidationError("sample_subset: train split is empty");
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
    for (std::size_t r : train_rows) by_class[dataset.class_index()[r]].push_back(r);
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        std::sort(members.begin(), members.end());
        const std::size_t take = std::min(n_per_class, members.size());
        Rng rng(seed, c);
        // Partial Fisher-Yates: the first `take` slots become the sample.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(members.size() - i));
            std::swap(members[i], members[j]);
        }
        out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

EfficiencyCurve efficiency_curve(const TaskDataset& dataset, const SplitAssignment& split,
                                 ClassifierKind kind, const FewshotConfig& config, std::uint64_t base_seed,
                                 std::size_t jobs) {
    config.validate();
    const auto train_rows = split.rows(dataset, SplitTag::train);
    const auto test_rows = split.rows(dataset, SplitTag::test);
    if (test_rows.empty()) throw ValidationError("efficiency_curve: test split is empty");
    if (train_rows.empty()) throw ValidationError("efficiency_curve: train split is empty");

    std::vector<std::size_t> class_sizes(dataset.num_classes(), 0);
    for (std::size_t r : train_rows) ++class_sizes[dataset.class_index()[r]];
    const std::size_t largest_class = *std::max_element(class_sizes.begin(), class_sizes.end());

    EfficiencyCurve curve;
    curve.classifier_kind = kind;
    curve.task = dataset.name();
    curve.model = dataset.embeddings().source_tag();
    curve.test_fingerprint = test_fingerprint(dataset, split);

    // Flatten (grid point, repeat) into one job list; exhausted grid points
    // collapse to a single evaluation.
    struct Job {
        std::size_t point;
        std::size_t repeat;
    };
    std::vector<Job> job_list;
    curve.points.resize(config.grid.size());
    for (std::size_t p = 0; p < config.grid.size(); ++p) {
        auto& point = curve.points[p];
        point.n_per_class = config.grid[p];
        for (std::size_t size : class_sizes) point.effective_n += std::min(point.n_per_class, size);
        point.repeats = point.n_per_class >= largest_class ? 1 : config.repeats;
        point.scores.assign(point.repeats, 0.0);
        for (std::size_t r = 0; r < point.repeats; ++r) job_list.push_back({p, r});
    }

    std::vector<KnnSubsetScore> knn_meta(job_list.size());
    parallel_for(job_list.size(), jobs, [&](std::size_t j) {
        const auto [p, r] = job_list[j];
        const std::uint64_t seed = base_seed + r;
        const auto subset = sample_subset(dataset, train_rows, config.grid[p], seed);
        double score = 0.0;
        if (kind == ClassifierKind::knn) {
            knn_meta[j] = knn_subset_score(dataset, subset, test_rows, config.knn);
            score = knn_meta[j].macro_f1;
        } else {
            score = probe_subset_score(dataset, subset, test_rows, config.probe, seed);
        }
        curve.points[p].scores[r] = score;
    });

    for (std::size_t j = 0; j < job_list.size(); ++j) {
        auto& point = curve.points[job_list[j].point];
        point.k_used = std::max(point.k_used, knn_meta[j].k_used);
        point.k_clamped = point.k_clamped || knn_meta[j].k_clamped;
    }
    for (auto& point : curve.points) {
        const auto summary = aggregate(point.scores);
        point.mean = summary.mean;
        point.standard_error = summary.std / std::sqrt(static_cast<double>(point.repeats));
    }
    return curve;
}

void write_curve_csv(const EfficiencyCurve& curve, std::ostream& out) {
    out << "n_per_class,effective_n,mean,stderr,repeats\n";
    for (const auto& p : curve.points) {
        out << p.n_per_class << ',' << p.effective_n << ',' << format_real(p.mean) << ','
            << format_real(p.standard_error) << ',' << p.repeats << '\n';
    }
}

std::string curve_to_json(const EfficiencyCurve& curve) {
    nlohmann::ordered_json j;
    j["classifier_kind"] = to_string(curve.classifier_kind);
    j["task"] = curve.task;
    j["model"] = curve.model;
    j["test_fingerprint"] = curve.test_fingerprint;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : curve.points) {
        nlohmann::ordered_json jp;
        jp["n_per_class"] = p.n_per_class;
        jp["effective_n"] = p.effective_n;
        jp["mean"] = p.mean;
        jp["stderr"] = p.standard_error;
        jp["repeats"] = p.repeats;
        jp["k_used"] = p.k_used;
        jp["k_clamped"] = p.k_clamped;
        jp["scores"] = p.scores;
        j["points"].push_back(std::move(jp));
    }
    return j.dump(2) + "\n";
}

EfficiencyCurve curve_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        EfficiencyCurve curve;
        curve.classifier_kind = parse_classifier_kind(j.at("classifier_kind").get<std::string>());
        curve.task = j.at("task").get<std::string>();
        curve.model = j.value("model", "");
        curve.test_fingerprint = j.at("test_fingerprint").get<std::string>();
        for (const auto& jp : j.at("points")) {
            CurvePoint p;
            p.n_per_class = jp.at("n_per_class").get<std::size_t>();
            p.effective_n = jp.value("effective_n", std::size_t{0});
            p.mean = jp.at("mean").get<double>();
            p.standard_error = jp.value("stderr", 0.0);
            p.repeats = jp.value("repeats", std::size_t{1});
            p.k_used = jp.value("k_used", std::size_t{0});
            p.k_clamped = jp.value("k_clamped", false);
            p.scores = jp.value("scores", std::vector<double>{});
            curve.points.push_back(std::move(p));
        }
        if (curve.points.empty()) throw FormatError("curve JSON has no points");
        return curve;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("curve JSON: ") + e.what());
    }
}

void save_curve(const EfficiencyCurve& curve, const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path) {
    {
        std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + csv_path.string() + " for writing");
        write_curve_csv(curve, out);
    }
    std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + json_path.string() + " for writing");
    out << curve_to_json(curve);
}

EfficiencyCurve load_curve_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open curve file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return curve_from_json(ss.str());
}

}  // namespace reprbench
