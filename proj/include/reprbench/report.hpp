#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reprbench/fewshot.hpp"
#include "reprbench/metrics.hpp"
#include "reprbench/stats.hpp"
#include "reprbench/utility.hpp"

namespace reprbench {

// "84.5 ± 2.9": percentages, one decimal, half-up; "*" appended when starred.
std::string format_cell(const ScoreSummary& summary, bool starred = false);

struct ReportCell {
    std::string task;
    ClassifierKind probe = ClassifierKind::knn;
    std::string model;
    ScoreSummary summary;
    bool best = false;
    bool starred = false;
};

struct UtilityRow {
    std::string task;
    ClassifierKind kind = ClassifierKind::knn;
    std::string model;
    std::string baseline;
    UtilityResult result;
};

struct StatsRow {
    std::string task;
    ClassifierKind probe = ClassifierKind::knn;
    std::vector<std::string> models;
    SignificanceAnnotation annotation;
};

struct Provenance {
    std::string config_hash;
    std::string engine_version;
    std::string started_at;
    std::string finished_at;
};

/// Table-style summary of a benchmark. Everything except `provenance` is
/// a pure function of the configuration and input files.
struct EvalReport {
    std::vector<std::string> tasks;
    std::vector<std::string> models;
    std::vector<ReportCell> cells;  // task-major, then probe (linear, knn), then model order
    std::vector<UtilityRow> utilities;
    std::vector<StatsRow> stats;
    Provenance provenance;

    const ReportCell* find(std::string_view task, ClassifierKind probe, std::string_view model) const;
};

// Flags the maximum mean of every (task, probe) column; ties are all flagged.
void mark_best(std::vector<ReportCell>& cells);

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_markdown(const EvalReport& report, std::ostream& out);
// JSON with "body" and "provenance" members; body_only omits provenance.
std::string report_to_json(const EvalReport& report, bool body_only = false);

// One SVG per task and figure kind; returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<EfficiencyCurve>& curves,
                                              const std::vector<UtilityRow>& utilities,
                                              const std::filesystem::path& out_dir);

std::string render_curve_svg(const std::string& title, const std::vector<EfficiencyCurve>& curves);
std::string render_utility_svg(const std::string& title, const std::vector<UtilityRow>& rows);

}  // namespace reprbench
