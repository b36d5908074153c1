#include "reprbench/report.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"

#include "reprbench/csv.hpp"
#include "reprbench/format.hpp"

namespace reprbench {

namespace {

nlohmann::ordered_json real_or_null(double v) {
    if (std::isfinite(v)) return v;
    return format_real(v);
}

}  // namespace

std::string format_cell(const ScoreSummary& summary, bool starred) {
    std::string cell = format_fixed_half_up(summary.mean * 100.0, 1) + " ± " +
                       format_fixed_half_up(summary.std * 100.0, 1);
    if (starred) cell += "*";
    return cell;
}

const ReportCell* EvalReport::find(std::string_view task, ClassifierKind probe, std::string_view model) const {
    for (const auto& c : cells)
        if (c.task == task && c.probe == probe && c.model == model) return &c;
    return nullptr;
}

void mark_best(std::vector<ReportCell>& cells) {
    std::map<std::pair<std::string, ClassifierKind>, double> best;
    for (const auto& c : cells) {
        auto key = std::make_pair(c.task, c.probe);
        auto it = best.find(key);
        if (it == best.end() || c.summary.mean > it->second) best[key] = c.summary.mean;
    }
    for (auto& c : cells) c.best = c.summary.mean == best.at({c.task, c.probe});
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
    csv::write_record(out, {"task", "probe", "model", "mean", "std", "n_seeds", "cell", "best", "starred"});
    for (const auto& c : report.cells) {
        csv::write_record(out, {c.task, std::string(to_string(c.probe)), c.model, format_real(c.summary.mean),
                                format_real(c.summary.std), std::to_string(c.summary.per_seed.size()),
                                format_cell(c.summary, c.starred), c.best ? "1" : "0", c.starred ? "1" : "0"});
    }
}

void write_report_markdown(const EvalReport& report, std::ostream& out) {
    std::vector<ClassifierKind> probes;
    for (ClassifierKind k : {ClassifierKind::linear, ClassifierKind::knn})
        if (std::any_of(report.cells.begin(), report.cells.end(), [&](const auto& c) { return c.probe == k; }))
            probes.push_back(k);

    out << "| Task |";
    for (const auto& m : report.models)
        for (auto k : probes) out << ' ' << m << (k == ClassifierKind::linear ? " lin." : " kNN") << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < report.models.size() * probes.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& task : report.tasks) {
        out << "| " << task << " |";
        for (const auto& m : report.models) {
            for (auto k : probes) {
                const ReportCell* c = report.find(task, k, m);
                if (!c) {
                    out << " - |";
                    continue;
                }
                const std::string cell = format_cell(c->summary, c->starred);
                out << ' ' << (c->best ? "**" + cell + "**" : cell) << " |";
            }
        }
        out << '\n';
    }
    if (!report.utilities.empty()) {
        out << "\n| Task | Classifier | Model | Baseline | Mean utility | Infinite points |\n"
               "|---|---|---|---|---|---|\n";
        for (const auto& u : report.utilities) {
            out << "| " << u.task << " | " << to_string(u.kind) << " | " << u.model << " | " << u.baseline << " | "
                << (u.result.finite_count ? format_fixed_half_up(u.result.aggregate_mean, 2) : std::string("n/a"))
                << " | " << u.result.infinite_count << " |\n";
        }
    }
}

std::string report_to_json(const EvalReport& report, bool body_only) {
    nlohmann::ordered_json body;
    body["tasks"] = report.tasks;
    body["models"] = report.models;
    body["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json jc;
        jc["task"] = c.task;
        jc["probe"] = to_string(c.probe);
        jc["model"] = c.model;
        jc["per_seed"] = c.summary.per_seed;
        jc["mean"] = c.summary.mean;
        jc["std"] = c.summary.std;
        jc["metric"] = c.summary.metric_name;
        jc["cell"] = format_cell(c.summary, c.starred);
        jc["best"] = c.best;
        jc["starred"] = c.starred;
        body["cells"].push_back(std::move(jc));
    }
    body["utility"] = nlohmann::ordered_json::array();
    for (const auto& u : report.utilities) {
        nlohmann::ordered_json ju;
        ju["task"] = u.task;
        ju["classifier_kind"] = to_string(u.kind);
        ju["model"] = u.model;
        ju["baseline"] = u.baseline;
        ju["aggregate_mean"] = real_or_null(u.result.aggregate_mean);
        ju["finite_count"] = u.result.finite_count;
        ju["infinite_count"] = u.result.infinite_count;
        ju["points"] = nlohmann::ordered_json::array();
        for (const auto& p : u.result.per_n) {
            ju["points"].push_back({{"n", p.n},
                                    {"target", p.target},
                                    {"needed", real_or_null(p.needed)},
                                    {"utility", real_or_null(p.utility)}});
        }
        body["utility"].push_back(std::move(ju));
    }
    body["stats"] = nlohmann::ordered_json::array();
    for (const auto& s : report.stats) {
        nlohmann::ordered_json js;
        js["task"] = s.task;
        js["probe"] = to_string(s.probe);
        js["models"] = s.models;
        js["starred"] = s.annotation.starred;
        if (s.annotation.anova) {
            const auto& a = *s.annotation.anova;
            js["anova"] = {{"f_stat", a.f_stat},
                           {"df_between", a.df_between},
                           {"df_within", a.df_within},
                           {"p_value", a.p_value}};
        }
        if (s.annotation.tukey) {
            js["tukey"] = nlohmann::ordered_json::array();
            for (const auto& p : s.annotation.tukey->pairs) {
                js["tukey"].push_back({{"a", s.models[p.group_a]},
                                       {"b", s.models[p.group_b]},
                                       {"mean_diff", p.mean_diff},
                                       {"q_stat", p.q_stat},
                                       {"p_adjusted", p.p_adjusted},
                                       {"significant", p.significant}});
            }
        }
        if (!s.annotation.note.empty()) js["note"] = s.annotation.note;
        body["stats"].push_back(std::move(js));
    }
    if (body_only) return body.dump(2) + "\n";

    nlohmann::ordered_json doc;
    doc["body"] = std::move(body);
    doc["provenance"] = {{"config_hash", report.provenance.config_hash},
                         {"engine_version", report.provenance.engine_version},
                         {"started_at", report.provenance.started_at},
                         {"finished_at", report.provenance.finished_at}};
    return doc.dump(2) + "\n";
}

}  // namespace reprbench
