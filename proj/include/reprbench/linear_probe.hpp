#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reprbench/data_model.hpp"
#include "reprbench/matrix.hpp"
#include "reprbench/metrics.hpp"
#include "reprbench/splitter.hpp"

namespace reprbench {

enum class OptimizerMode { lbfgs, gradient_descent };

std::string_view to_string(OptimizerMode mode);
OptimizerMode parse_optimizer_mode(std::string_view text);

struct ProbeConfig {
    double l2_penalty = 1e-4;
    int max_epochs = 500;
    int patience = 20;
    double tolerance = 1e-6;      // minimum val-loss improvement that resets patience
    double learning_rate = 0.1;   // initial step of the gradient-descent mode
    OptimizerMode mode = OptimizerMode::lbfgs;
    double holdout_fraction = 0.1;  // carved from train when no validation rows are given
    bool standardize = true;

    void validate() const;
};

struct TrainingTrace {
    std::vector<double> train_loss;  // regularized objective after each accepted epoch
    std::vector<double> val_loss;    // unregularized cross-entropy on the early-stopping set
    std::size_t best_epoch = 0;
    std::string stop_reason;
};

/// Multinomial logistic regression over raw (unstandardized) features.
/// Classes absent from training keep zero weights and are never predicted.
struct ProbeModel {
    RealMatrix weights;           // C x D
    std::vector<double> biases;   // C
    std::vector<std::string> class_list;
    std::vector<bool> class_trained;
    TrainingTrace trace;
};

/// Mean softmax cross-entropy + l2/2 * ||W||^2 over a fixed design matrix.
/// Parameters are packed as C*D weights (row-major) followed by C biases.
class SoftmaxObjective {
public:
    SoftmaxObjective(const RealMatrix& features, std::span<const int> labels, std::size_t num_classes,
                     double l2_penalty);

    std::size_t num_params() const noexcept { return num_classes_ * (dim_ + 1); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t dim() const noexcept { return dim_; }

    double value(std::span<const double> params) const;
    double value_and_gradient(std::span<const double> params, std::span<double> gradient) const;

    // Unregularized mean cross-entropy of `features`/`labels` under params.
    double cross_entropy(std::span<const double> params, const RealMatrix& features,
                         std::span<const int> labels) const;

private:
    const RealMatrix& features_;
    std::vector<int> labels_;
    std::size_t num_classes_;
    std::size_t dim_;
    double l2_penalty_;
};

struct OptimizeResult {
    std::vector<double> params;
    TrainingTrace trace;
};

// Full-batch minimization with backtracking (Armijo) line search. When
// `val_features` has rows, stops after `patience` epochs without a val-loss
// improvement greater than `tolerance` and returns the best-val parameters.
OptimizeResult minimize(const SoftmaxObjective& objective, std::vector<double> initial,
                        const ProbeConfig& config, const RealMatrix& val_features,
                        std::span<const int> val_labels);

ProbeModel train_probe(const RealMatrix& train_features, std::span<const int> train_labels,
                       const RealMatrix& val_features, std::span<const int> val_labels,
                       std::span<const std::string> class_list, const ProbeConfig& config, std::uint64_t seed);

struct ProbePrediction {
    std::vector<int> predicted;
    RealMatrix probabilities;  // rows sum to 1
};

ProbePrediction probe_predict(const ProbeModel& model, const RealMatrix& features);

// Trains on dataset rows `train_rows` (validation carved per seed) and
// returns macro-F1 on `test_rows`.
double probe_subset_score(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows, const ProbeConfig& config,
                          std::uint64_t seed);

ScoreSummary linear_frozen_eval(const TaskDataset& dataset, const SplitAssignment& split,
                                const ProbeConfig& config, std::span<const std::uint64_t> seeds,
                                std::size_t jobs = 1);

// C rows of D+1 values (bias last), ids = class labels.
EmbeddingSet probe_to_embeddings(const ProbeModel& model, std::string_view task, std::uint64_t seed);
void save_probe(const ProbeModel& model, std::string_view task, std::uint64_t seed,
                const std::filesystem::path& path);

}  // namespace reprbench
