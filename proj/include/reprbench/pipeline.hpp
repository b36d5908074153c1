#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "reprbench/fewshot.hpp"
#include "reprbench/knn.hpp"
#include "reprbench/linear_probe.hpp"
#include "reprbench/report.hpp"
#include "reprbench/splitter.hpp"
#include "reprbench/stats.hpp"

namespace reprbench {

inline constexpr std::string_view kEngineVersion = "0.1.0";

enum class Evaluation { knn_frozen, linear_frozen, fewshot_knn, fewshot_linear, utility, stats };

std::string_view to_string(Evaluation e);
std::optional<Evaluation> parse_evaluation(std::string_view text);

struct TaskSpec {
    std::string name;
    std::map<std::string, std::filesystem::path> embeddings;  // model tag -> container
    std::filesystem::path labels;
    std::optional<std::filesystem::path> split;
};

/// One JSON document describing a full benchmark. Relative paths resolve
/// against the config file's directory.
struct RunConfig {
    std::vector<TaskSpec> tasks;
    std::vector<std::string> models;
    std::set<Evaluation> evaluations;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    double test_fraction = 0.15;
    double val_fraction = 0.15;
    std::uint64_t split_seed = 0;
    FewshotConfig fewshot;
    std::uint64_t fewshot_base_seed = 0;
    KnnConfig knn;
    ProbeConfig probe;
    std::optional<std::string> baseline_model;
    double alpha = 0.05;
    StarRule star_rule = StarRule::vs_all;
    std::filesystem::path output_dir = "reprbench_out";
    std::string canonical_json;  // sorted-key dump of the parsed document

    bool wants(Evaluation e) const { return evaluations.contains(e); }
    // Adds `base` to every evaluation seed and to the few-shot base seed.
    void apply_seed_base(std::uint64_t base);
};

// Throws ConfigError listing every problem found.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stage-wise benchmark driver. Each stage persists its results under the
/// output directory so that later stages can run as separate invocations.
///
///   splits/<task>.csv                      split stage
///   scores/<task>.json                     eval stage (frozen kNN / linear)
///   curves/<task>__<model>__<kind>.{csv,json}   fewshot stage
///   utility/<task>__<model>__<kind>.csv    utility stage
///   stats/<task>__<probe>.json             stats stage
///   report.{csv,md,json}, plots/*.svg      report stage
class Pipeline {
public:
    Pipeline(RunConfig config, std::size_t jobs);

    void split_stage();
    void eval_stage();
    void fewshot_stage();
    void utility_stage();
    void stats_stage();
    EvalReport report_stage();
    EvalReport run_all();

    const RunConfig& config() const noexcept { return config_; }

private:
    struct LoadedTask {
        std::string name;
        std::vector<TaskDataset> datasets;  // parallel to config.models
        SplitAssignment split;
    };

    const std::vector<LoadedTask>& tasks();
    std::filesystem::path dir(std::string_view sub) const;

    RunConfig config_;
    std::size_t jobs_;
    std::optional<std::vector<LoadedTask>> tasks_;
    std::string started_at_;
};

// Filesystem-safe rendering of a task or model name.
std::string safe_name(std::string_view name);

}  // namespace reprbench
