#include "reprbench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "reprbench/errors.hpp"

namespace reprbench {

double macro_f1(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes) {
    if (predictions.size() != labels.size())
        throw ValidationError("macro_f1: predictions and labels differ in length");
    if (labels.empty()) throw ValidationError("macro_f1: no samples");
    if (num_classes == 0) throw ValidationError("macro_f1: empty class list");

    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    const auto in_range = [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < num_classes; };
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if (!in_range(p)) throw ValidationError("macro_f1: prediction outside class list");
        if (!in_range(y)) throw ValidationError("macro_f1: label outside class list");
        if (p == y) {
            ++tp[y];
        } else {
            ++fp[p];
            ++fn[y];
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double t = static_cast<double>(tp[c]);
        const double precision = tp[c] + fp[c] ? t / static_cast<double>(tp[c] + fp[c]) : 0.0;
        const double recall = tp[c] + fn[c] ? t / static_cast<double>(tp[c] + fn[c]) : 0.0;
        if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
    }
    return sum / static_cast<double>(num_classes);
}

double macro_f1(std::span<const std::string> predictions, std::span<const std::string> labels,
                std::span<const std::string> class_list) {
    std::vector<std::string> sorted(class_list.begin(), class_list.end());
    std::sort(sorted.begin(), sorted.end());
    const auto index = [&](const std::string& s, const char* what) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
        if (it == sorted.end() || *it != s)
            throw ValidationError(std::string("macro_f1: ") + what + " '" + s + "' not in class list");
        return static_cast<int>(it - sorted.begin());
    };
    std::vector<int> p, y;
    for (const auto& s : predictions) p.push_back(index(s, "prediction"));
    for (const auto& s : labels) y.push_back(index(s, "label"));
    return macro_f1(p, y, sorted.size());
}

namespace {

// Summation over a sorted copy makes the result independent of input order.
double ordered_mean(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace

double sample_std(std::span<const double> values) {
    if (values.size() <= 1) return 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    const double mean = ordered_mean(sorted);
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

ScoreSummary aggregate(std::span<const double> per_seed, std::string metric_name) {
    if (per_seed.empty()) throw ValidationError("aggregate: no scores");
    ScoreSummary s;
    s.per_seed.assign(per_seed.begin(), per_seed.end());
    std::vector<double> sorted(per_seed.begin(), per_seed.end());
    s.mean = ordered_mean(sorted);
    s.std = sample_std(per_seed);
    s.metric_name = std::move(metric_name);
    return s;
}

}  // namespace reprbench
