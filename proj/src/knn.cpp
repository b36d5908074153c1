#include "reprbench/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reprbench/errors.hpp"
#include "reprbench/parallel.hpp"
#include "reprbench/rng.hpp"

namespace reprbench {

namespace {

constexpr std::uint64_t kBootstrapStream = 0x6b6e6e2d626f6f74ULL;  // "knn-boot"

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::string_view to_string(Similarity s) {
    return s == Similarity::cosine ? "cosine" : "negative-euclidean";
}

Similarity parse_similarity(std::string_view text) {
    if (text == "cosine") return Similarity::cosine;
    if (text == "negative-euclidean" || text == "negative_euclidean") return Similarity::negative_euclidean;
    throw ConfigError("unknown similarity '" + std::string(text) + "'");
}

void KnnConfig::validate() const {
    if (k < 1) throw ConfigError("knn: k must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("knn: temperature must be > 0");
}

double knn_similarity(std::span<const double> a, std::span<const double> b, Similarity similarity) {
    if (similarity == Similarity::cosine) {
        const double na = std::sqrt(dot(a, a));
        const double nb = std::sqrt(dot(b, b));
        if (na == 0.0 || nb == 0.0) return 0.0;
        return dot(a, b) / (na * nb);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return -std::sqrt(s);
}

void l2_normalize_rows(RealMatrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double norm = std::sqrt(dot(row, row));
        if (norm > 0.0)
            for (double& v : row) v /= norm;
    }
}

KnnPrediction knn_predict(const RealMatrix& train, std::span<const int> train_labels,
                          std::size_t num_classes, const RealMatrix& queries, const KnnConfig& config) {
    config.validate();
    if (train.rows() == 0) throw ValidationError("knn: empty training set");
    if (queries.rows() == 0) throw ValidationError("knn: empty query set");
    if (train.cols() != queries.cols())
        throw ValidationError("knn: dimension mismatch (train " + std::to_string(train.cols()) + ", query " +
                              std::to_string(queries.cols()) + ")");
    if (train_labels.size() != train.rows()) throw ValidationError("knn: one label per training row required");
    for (int y : train_labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ValidationError("knn: label out of range");

    RealMatrix train_n = train;
    RealMatrix query_n = queries;
    if (config.l2_normalize_inputs) {
        l2_normalize_rows(train_n);
        l2_normalize_rows(query_n);
    }

    KnnPrediction out;
    out.k_used = std::min<std::size_t>(static_cast<std::size_t>(config.k), train.rows());
    out.k_clamped = out.k_used < static_cast<std::size_t>(config.k);
    out.predicted.resize(queries.rows());
    out.class_weights = RealMatrix(queries.rows(), num_classes);
    out.log_scale.resize(queries.rows());

    std::vector<std::pair<double, std::size_t>> sims(train.rows());
    // Higher similarity first; equal similarities by training index.
    const auto closer = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        for (std::size_t i = 0; i < train.rows(); ++i)
            sims[i] = {knn_similarity(query_n.row(q), train_n.row(i), config.similarity), i};
        std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(out.k_used), sims.end(),
                          closer);
        const double top = sims.front().first;
        auto weights = out.class_weights.row(q);
        for (std::size_t j = 0; j < out.k_used; ++j)
            weights[train_labels[sims[j].second]] += std::exp((sims[j].first - top) / config.temperature);
        out.log_scale[q] = top / config.temperature;
        out.predicted[q] = static_cast<int>(std::max_element(weights.begin(), weights.end()) - weights.begin());
    }
    return out;
}

KnnSubsetScore knn_subset_score(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                                std::span<const std::size_t> test_rows, const KnnConfig& config) {
    if (test_rows.empty()) throw ValidationError("knn: test split is empty");
    const auto& vectors = dataset.embeddings().vectors();
    const RealMatrix train = gather_rows(vectors, train_rows);
    const RealMatrix test = gather_rows(vectors, test_rows);
    std::vector<int> train_labels, test_labels;
    for (std::size_t r : train_rows) train_labels.push_back(dataset.class_index()[r]);
    for (std::size_t r : test_rows) test_labels.push_back(dataset.class_index()[r]);

    const auto pred = knn_predict(train, train_labels, dataset.num_classes(), test, config);
    return {macro_f1(pred.predicted, test_labels, dataset.num_classes()), pred.k_used, pred.k_clamped};
}

std::vector<std::size_t> stratified_bootstrap(const TaskDataset& dataset, std::span<const std::size_t> rows,
                                              std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
    for (std::size_t r : rows) by_class[dataset.class_index()[r]].push_back(r);
    Rng rng(seed, kBootstrapStream);
    std::vector<std::size_t> out;
    out.reserve(rows.size());
    for (const auto& members : by_class)
        for (std::size_t i = 0; i < members.size(); ++i) out.push_back(members[rng.uniform_index(members.size())]);
    return out;
}

ScoreSummary knn_frozen_eval(const TaskDataset& dataset, const SplitAssignment& split,
                             const KnnConfig& config, std::span<const std::uint64_t> seeds, std::size_t jobs) {
    config.validate();
    if (seeds.empty()) throw ConfigError("knn_frozen_eval: at least one seed required");
    const auto train_rows = split.rows(dataset, SplitTag::train);
    const auto test_rows = split.rows(dataset, SplitTag::test);
    if (test_rows.empty()) throw ValidationError("knn_frozen_eval: test split is empty");
    if (train_rows.empty()) throw ValidationError("knn_frozen_eval: train split is empty");

    std::vector<double> scores(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        const auto resample = stratified_bootstrap(dataset, train_rows, seeds[i]);
        scores[i] = knn_subset_score(dataset, resample, test_rows, config).macro_f1;
    });
    return aggregate(scores);
}

}  // namespace reprbench
