#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "reprbench/data_model.hpp"
#include "reprbench/matrix.hpp"
#include "reprbench/metrics.hpp"
#include "reprbench/splitter.hpp"

namespace reprbench {

enum class Similarity { cosine, negative_euclidean };

std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view text);

struct KnnConfig {
    int k = 20;
    double temperature = 0.07;
    Similarity similarity = Similarity::cosine;
    bool l2_normalize_inputs = true;

    void validate() const;
};

/// Per-query kNN output.
///
/// class_weights(q, c) is sum over top-k neighbours of class c of
/// exp((sim - sim_top) / T), i.e. the temperature-weighted vote scaled by
/// exp(-sim_top / T) so it cannot overflow or underflow. log_scale[q] holds
/// sim_top / T, so the unscaled vote is class_weights * exp(log_scale).
struct KnnPrediction {
    std::vector<int> predicted;
    RealMatrix class_weights;
    std::vector<double> log_scale;
    std::size_t k_used = 0;
    bool k_clamped = false;
};

// Similarity between two rows after the configured input normalization.
// Exposed so that independent checks can reuse the exact same arithmetic.
double knn_similarity(std::span<const double> a, std::span<const double> b, Similarity similarity);

// In-place row L2 normalization; zero rows stay zero.
void l2_normalize_rows(RealMatrix& m);

KnnPrediction knn_predict(const RealMatrix& train, std::span<const int> train_labels,
                          std::size_t num_classes, const RealMatrix& queries, const KnnConfig& config);

struct KnnSubsetScore {
    double macro_f1 = 0.0;
    std::size_t k_used = 0;
    bool k_clamped = false;
};

// Fits on dataset rows `train_rows` (duplicates allowed) and scores macro-F1
// on `test_rows` over the full class list.
KnnSubsetScore knn_subset_score(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                                std::span<const std::size_t> test_rows, const KnnConfig& config);

// Class-stratified bootstrap of `rows`: each class keeps its size, drawn with
// replacement.
std::vector<std::size_t> stratified_bootstrap(const TaskDataset& dataset, std::span<const std::size_t> rows,
                                              std::uint64_t seed);

ScoreSummary knn_frozen_eval(const TaskDataset& dataset, const SplitAssignment& split,
                             const KnnConfig& config, std::span<const std::uint64_t> seeds,
                             std::size_t jobs = 1);

}  // namespace reprbench
