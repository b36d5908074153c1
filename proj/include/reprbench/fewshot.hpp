#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reprbench/data_model.hpp"
#include "reprbench/knn.hpp"
#include "reprbench/linear_probe.hpp"
#include "reprbench/splitter.hpp"

namespace reprbench {

enum class ClassifierKind { knn, linear };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);

struct CurvePoint {
    std::size_t n_per_class = 0;
    std::size_t effective_n = 0;  // total subset size
    double mean = 0.0;
    double standard_error = 0.0;  // std(ddof=1) / sqrt(repeats)
    std::size_t repeats = 0;
    std::size_t k_used = 0;       // kNN only; 0 for linear
    bool k_clamped = false;
    std::vector<double> scores;   // per repeat

    bool operator==(const CurvePoint&) const = default;
};

/// Score versus labels-per-class, averaged over repeated subsamples.
struct EfficiencyCurve {
    ClassifierKind classifier_kind = ClassifierKind::knn;
    std::string task;
    std::string model;
    std::string test_fingerprint;  // identifies the test split the curve was scored on
    std::vector<CurvePoint> points;

    bool operator==(const EfficiencyCurve&) const = default;
};

struct FewshotConfig {
    std::vector<std::size_t> grid{1, 2, 5, 10, 20, 50, 100};
    std::size_t repeats = 50;
    KnnConfig knn;
    ProbeConfig probe;

    void validate() const;
};

// Hex FNV-1a digest of the sorted test-split ids.
std::string test_fingerprint(const TaskDataset& dataset, const SplitAssignment& split);

// Per class, min(n_per_class, class size) rows drawn without replacement
// with a generator seeded by (seed, class index). Returned in row order.
std::vector<std::size_t> sample_subset(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                                       std::size_t n_per_class, std::uint64_t seed);

EfficiencyCurve efficiency_curve(const TaskDataset& dataset, const SplitAssignment& split,
                                 ClassifierKind kind, const FewshotConfig& config, std::uint64_t base_seed,
                                 std::size_t jobs = 1);

// CSV `n_per_class,effective_n,mean,stderr,repeats`.
void write_curve_csv(const EfficiencyCurve& curve, std::ostream& out);
std::string curve_to_json(const EfficiencyCurve& curve);
EfficiencyCurve curve_from_json(std::string_view text);
void save_curve(const EfficiencyCurve& curve, const std::filesystem::path& csv_path,
                const std::filesystem::path& json_path);
EfficiencyCurve load_curve_json(const std::filesystem::path& path);

}  // namespace reprbench
