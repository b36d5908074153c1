#pragma once

#include <span>
#include <string>
#include <vector>

namespace reprbench {

/// Multi-seed score summary, rendered as "mean ± std" in reports.
struct ScoreSummary {
    std::vector<double> per_seed;
    double mean = 0.0;
    double std = 0.0;  // sample std (ddof = 1); 0 for a single seed
    std::string metric_name = "macro_f1";

    bool operator==(const ScoreSummary&) const = default;
};

// Macro-averaged F1 over `num_classes` classes; labels and predictions are
// class indices. Classes never labeled and never predicted contribute 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes);

// String-label overload; both sequences must only contain members of class_list.
double macro_f1(std::span<const std::string> predictions, std::span<const std::string> labels,
                std::span<const std::string> class_list);

ScoreSummary aggregate(std::span<const double> per_seed, std::string metric_name = "macro_f1");

double sample_std(std::span<const double> values);

}  // namespace reprbench
