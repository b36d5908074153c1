#include "reprbench/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "reprbench/errors.hpp"
#include "reprbench/format.hpp"
#include "reprbench/parallel.hpp"
#include "reprbench/utility.hpp"

namespace reprbench {

namespace {

using nlohmann::json;

constexpr std::pair<Evaluation, std::string_view> kEvaluationNames[] = {
    {Evaluation::knn_frozen, "knn_frozen"},   {Evaluation::linear_frozen, "linear_frozen"},
    {Evaluation::fewshot_knn, "fewshot_knn"}, {Evaluation::fewshot_linear, "fewshot_linear"},
    {Evaluation::utility, "utility"},         {Evaluation::stats, "stats"},
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
}

// Collects config problems so they can be reported together.
class Problems {
public:
    void add(std::string msg) { items_.push_back(std::move(msg)); }
    bool empty() const { return items_.empty(); }
    [[noreturn]] void raise() const {
        std::string msg = "invalid run config:";
        for (const auto& p : items_) msg += "\n  - " + p;
        throw ConfigError(msg);
    }

    template <typename T, typename Fn>
    void field(const json& obj, const char* key, const std::string& where, Fn&& assign) {
        if (!obj.contains(key)) return;
        try {
            assign(obj.at(key).get<T>());
        } catch (const json::exception&) {
            add(where + "." + key + " has the wrong type");
        } catch (const Error& e) {
            add(where + "." + key + ": " + e.what());
        }
    }

    void unknown_keys(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
        for (const auto& [key, value] : obj.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end())
                add("unknown key '" + where + "." + key + "'");
        }
    }

private:
    std::vector<std::string> items_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string curve_stem(std::string_view task, std::string_view model, ClassifierKind kind) {
    return safe_name(task) + "__" + safe_name(model) + "__" + std::string(to_string(kind));
}

}  // namespace

std::string safe_name(std::string_view name) {
    std::string s(name);
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

std::string_view to_string(Evaluation e) {
    for (const auto& [value, name] : kEvaluationNames)
        if (value == e) return name;
    return "?";
}

std::optional<Evaluation> parse_evaluation(std::string_view text) {
    for (const auto& [value, name] : kEvaluationNames)
        if (name == text) return value;
    return std::nullopt;
}

void RunConfig::apply_seed_base(std::uint64_t base) {
    for (auto& s : seeds) s += base;
    fewshot_base_seed += base;
}

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");

    Problems problems;
    RunConfig cfg;
    cfg.canonical_json = doc.dump();
    cfg.output_dir = base_dir / "reprbench_out";
    problems.unknown_keys(doc,
                          {"tasks", "models", "evaluations", "seeds", "split", "fewshot", "knn", "probe",
                           "baseline_model", "stats", "output_dir"},
                          "config");

    problems.field<std::vector<std::string>>(doc, "models", "config", [&](auto v) { cfg.models = std::move(v); });
    if (cfg.models.empty()) problems.add("config.models must list at least one model");
    {
        std::set<std::string> seen;
        for (const auto& m : cfg.models)
            if (!seen.insert(m).second) problems.add("model '" + m + "' listed twice");
    }

    if (!doc.contains("tasks") || !doc["tasks"].is_array() || doc["tasks"].empty()) {
        problems.add("config.tasks must be a non-empty array");
    } else {
        std::set<std::string> names;
        for (std::size_t i = 0; i < doc["tasks"].size(); ++i) {
            const auto& jt = doc["tasks"][i];
            const std::string where = "tasks[" + std::to_string(i) + "]";
            if (!jt.is_object()) {
                problems.add(where + " must be an object");
                continue;
            }
            problems.unknown_keys(jt, {"name", "labels", "embeddings", "split"}, where);
            TaskSpec task;
            problems.field<std::string>(jt, "name", where, [&](auto v) { task.name = std::move(v); });
            problems.field<std::string>(jt, "labels", where, [&](auto v) { task.labels = resolve(base_dir, v); });
            problems.field<std::string>(jt, "split", where, [&](auto v) { task.split = resolve(base_dir, v); });
            problems.field<std::map<std::string, std::string>>(jt, "embeddings", where, [&](auto v) {
                for (auto& [model, path] : v) task.embeddings[model] = resolve(base_dir, path);
            });
            if (task.name.empty()) problems.add(where + ".name is required");
            else if (!names.insert(task.name).second) problems.add("task '" + task.name + "' listed twice");
            if (task.labels.empty()) problems.add(where + ".labels is required");
            for (const auto& m : cfg.models)
                if (!task.embeddings.contains(m)) problems.add(where + ".embeddings has no entry for model '" + m + "'");
            cfg.tasks.push_back(std::move(task));
        }
    }

    if (doc.contains("evaluations")) {
        problems.field<std::vector<std::string>>(doc, "evaluations", "config", [&](const auto& v) {
            for (const auto& name : v) {
                if (auto e = parse_evaluation(name)) cfg.evaluations.insert(*e);
                else problems.add("unknown evaluation '" + name + "'");
            }
        });
    } else {
        for (const auto& [value, name] : kEvaluationNames) cfg.evaluations.insert(value);
    }
    if (cfg.evaluations.empty()) problems.add("config.evaluations must not be empty");

    problems.field<std::vector<std::uint64_t>>(doc, "seeds", "config", [&](auto v) { cfg.seeds = std::move(v); });
    if (cfg.seeds.empty()) problems.add("config.seeds must not be empty");

    if (doc.contains("split")) {
        const auto& js = doc["split"];
        problems.unknown_keys(js, {"test_fraction", "val_fraction", "seed"}, "split");
        problems.field<double>(js, "test_fraction", "split", [&](double v) { cfg.test_fraction = v; });
        problems.field<double>(js, "val_fraction", "split", [&](double v) { cfg.val_fraction = v; });
        problems.field<std::uint64_t>(js, "seed", "split", [&](auto v) { cfg.split_seed = v; });
    }
    if (!(cfg.test_fraction > 0 && cfg.test_fraction < 1)) problems.add("split.test_fraction must lie in (0, 1)");
    if (!(cfg.val_fraction > 0 && cfg.val_fraction < 1)) problems.add("split.val_fraction must lie in (0, 1)");

    if (doc.contains("knn")) {
        const auto& jk = doc["knn"];
        problems.unknown_keys(jk, {"k", "temperature", "similarity", "l2_normalize_inputs"}, "knn");
        problems.field<int>(jk, "k", "knn", [&](int v) { cfg.knn.k = v; });
        problems.field<double>(jk, "temperature", "knn", [&](double v) { cfg.knn.temperature = v; });
        problems.field<std::string>(jk, "similarity", "knn", [&](const auto& v) { cfg.knn.similarity = parse_similarity(v); });
        problems.field<bool>(jk, "l2_normalize_inputs", "knn", [&](bool v) { cfg.knn.l2_normalize_inputs = v; });
    }
    try {
        cfg.knn.validate();
    } catch (const ConfigError& e) {
        problems.add(e.what());
    }

    if (doc.contains("probe")) {
        const auto& jp = doc["probe"];
        problems.unknown_keys(jp,
                              {"l2_penalty", "max_epochs", "patience", "tolerance", "learning_rate", "mode",
                               "holdout_fraction", "standardize"},
                              "probe");
        problems.field<double>(jp, "l2_penalty", "probe", [&](double v) { cfg.probe.l2_penalty = v; });
        problems.field<int>(jp, "max_epochs", "probe", [&](int v) { cfg.probe.max_epochs = v; });
        problems.field<int>(jp, "patience", "probe", [&](int v) { cfg.probe.patience = v; });
        problems.field<double>(jp, "tolerance", "probe", [&](double v) { cfg.probe.tolerance = v; });
        problems.field<double>(jp, "learning_rate", "probe", [&](double v) { cfg.probe.learning_rate = v; });
        problems.field<std::string>(jp, "mode", "probe", [&](const auto& v) { cfg.probe.mode = parse_optimizer_mode(v); });
        problems.field<double>(jp, "holdout_fraction", "probe", [&](double v) { cfg.probe.holdout_fraction = v; });
        problems.field<bool>(jp, "standardize", "probe", [&](bool v) { cfg.probe.standardize = v; });
    }
    try {
        cfg.probe.validate();
    } catch (const ConfigError& e) {
        problems.add(e.what());
    }

    if (doc.contains("fewshot")) {
        const auto& jf = doc["fewshot"];
        problems.unknown_keys(jf, {"grid", "repeats", "base_seed"}, "fewshot");
        problems.field<std::vector<std::size_t>>(jf, "grid", "fewshot", [&](auto v) { cfg.fewshot.grid = std::move(v); });
        problems.field<std::size_t>(jf, "repeats", "fewshot", [&](auto v) { cfg.fewshot.repeats = v; });
        problems.field<std::uint64_t>(jf, "base_seed", "fewshot", [&](auto v) { cfg.fewshot_base_seed = v; });
    }
    cfg.fewshot.knn = cfg.knn;
    cfg.fewshot.probe = cfg.probe;
    if (cfg.wants(Evaluation::fewshot_knn) || cfg.wants(Evaluation::fewshot_linear)) {
        try {
            cfg.fewshot.validate();
        } catch (const ConfigError& e) {
            problems.add(e.what());
        }
    }

    problems.field<std::string>(doc, "baseline_model", "config", [&](auto v) { cfg.baseline_model = std::move(v); });
    if (cfg.wants(Evaluation::utility)) {
        if (!cfg.baseline_model) {
            problems.add("utility requires config.baseline_model");
        } else if (std::find(cfg.models.begin(), cfg.models.end(), *cfg.baseline_model) == cfg.models.end()) {
            problems.add("baseline_model '" + *cfg.baseline_model + "' is not among config.models");
        }
    }

    if (doc.contains("stats")) {
        const auto& js = doc["stats"];
        problems.unknown_keys(js, {"alpha", "star_rule"}, "stats");
        problems.field<double>(js, "alpha", "stats", [&](double v) { cfg.alpha = v; });
        problems.field<std::string>(js, "star_rule", "stats", [&](const auto& v) { cfg.star_rule = parse_star_rule(v); });
    }
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) problems.add("stats.alpha must lie in (0, 1)");

    problems.field<std::string>(doc, "output_dir", "config", [&](auto v) { cfg.output_dir = resolve(base_dir, v); });

    if (!problems.empty()) problems.raise();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open run config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    auto cfg = parse_run_config(ss.str(), base);
    return cfg;
}

Pipeline::Pipeline(RunConfig config, std::size_t jobs)
    : config_(std::move(config)), jobs_(std::max<std::size_t>(jobs, 1)), started_at_(utc_now()) {}

std::filesystem::path Pipeline::dir(std::string_view sub) const {
    auto path = config_.output_dir / sub;
    std::filesystem::create_directories(path);
    return path;
}

const std::vector<Pipeline::LoadedTask>& Pipeline::tasks() {
    if (tasks_) return *tasks_;
    std::vector<std::string> missing;
    for (const auto& t : config_.tasks) {
        if (!std::filesystem::exists(t.labels)) missing.push_back(t.labels.string());
        for (const auto& [model, path] : t.embeddings)
            if (!std::filesystem::exists(path)) missing.push_back(path.string());
        if (t.split && !std::filesystem::exists(*t.split)) missing.push_back(t.split->string());
    }
    if (!missing.empty()) {
        std::string msg = "missing input files:";
        for (const auto& m : missing) msg += "\n  - " + m;
        throw IoError(msg);
    }

    std::vector<LoadedTask> loaded;
    for (const auto& spec : config_.tasks) {
        LoadedTask task;
        task.name = spec.name;
        const auto labels = load_labels(spec.labels);
        for (const auto& model : config_.models) {
            const auto embeddings = load_embeddings(spec.embeddings.at(model));
            auto joined = join(embeddings, labels, spec.name);
            task.datasets.push_back(std::move(joined.dataset));
        }
        // Every model must describe the same samples.
        std::set<std::string> reference(task.datasets.front().embeddings().sample_ids().begin(),
                                        task.datasets.front().embeddings().sample_ids().end());
        for (std::size_t m = 1; m < task.datasets.size(); ++m) {
            const auto& ids = task.datasets[m].embeddings().sample_ids();
            if (std::set<std::string>(ids.begin(), ids.end()) != reference) {
                throw ValidationError("task '" + spec.name + "': models '" + config_.models.front() + "' and '" +
                                      config_.models[m] + "' cover different labeled samples");
            }
        }
        const auto& first = task.datasets.front();
        if (spec.split) {
            task.split = load_split(*spec.split);
            const auto audit = audit_split(first, task.split);
            if (!audit.unassigned_ids.empty())
                throw ValidationError("task '" + spec.name + "': split file does not cover sample '" +
                                      audit.unassigned_ids.front() + "'");
        } else {
            task.split = make_splits(first, config_.test_fraction, config_.val_fraction, config_.split_seed);
        }
        loaded.push_back(std::move(task));
    }
    tasks_ = std::move(loaded);
    return *tasks_;
}

void Pipeline::split_stage() {
    const auto out = dir("splits");
    for (const auto& task : tasks()) {
        save_split(task.split, out / (safe_name(task.name) + ".csv"));
        for (const auto& w : task.split.warnings) std::fprintf(stderr, "warning: task %s: %s\n", task.name.c_str(), w.c_str());
    }
}

void Pipeline::eval_stage() {
    split_stage();
    std::vector<ClassifierKind> kinds;
    if (config_.wants(Evaluation::linear_frozen)) kinds.push_back(ClassifierKind::linear);
    if (config_.wants(Evaluation::knn_frozen)) kinds.push_back(ClassifierKind::knn);
    if (kinds.empty()) return;

    const auto& loaded = tasks();
    struct Job {
        std::size_t task, model;
        ClassifierKind kind;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < loaded.size(); ++t)
        for (std::size_t m = 0; m < config_.models.size(); ++m)
            for (auto kind : kinds) jobs.push_back({t, m, kind});

    std::vector<ScoreSummary> results(jobs.size());
    parallel_for(jobs.size(), jobs_, [&](std::size_t j) {
        const auto& job = jobs[j];
        const auto& task = loaded[job.task];
        const auto& dataset = task.datasets[job.model];
        results[j] = job.kind == ClassifierKind::knn
                         ? knn_frozen_eval(dataset, task.split, config_.knn, config_.seeds)
                         : linear_frozen_eval(dataset, task.split, config_.probe, config_.seeds);
    });

    const auto out = dir("scores");
    for (std::size_t t = 0; t < loaded.size(); ++t) {
        nlohmann::ordered_json doc;
        doc["task"] = loaded[t].name;
        doc["test_fingerprint"] = test_fingerprint(loaded[t].datasets.front(), loaded[t].split);
        doc["seeds"] = config_.seeds;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].task != t) continue;
            doc[std::string(to_string(jobs[j].kind))][config_.models[jobs[j].model]] = results[j].per_seed;
        }
        write_text(out / (safe_name(loaded[t].name) + ".json"), doc.dump(2) + "\n");
    }
}

void Pipeline::fewshot_stage() {
    split_stage();
    std::vector<ClassifierKind> kinds;
    if (config_.wants(Evaluation::fewshot_knn)) kinds.push_back(ClassifierKind::knn);
    if (config_.wants(Evaluation::fewshot_linear)) kinds.push_back(ClassifierKind::linear);
    if (kinds.empty()) return;

    const auto& loaded = tasks();
    struct Job {
        std::size_t task, model;
        ClassifierKind kind;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < loaded.size(); ++t)
        for (std::size_t m = 0; m < config_.models.size(); ++m)
            for (auto kind : kinds) jobs.push_back({t, m, kind});

    // Outer jobs share the thread budget with the repeats inside each curve.
    const std::size_t outer = std::min(jobs_, jobs.size());
    const std::size_t inner = std::max<std::size_t>(1, jobs_ / std::max<std::size_t>(outer, 1));
    const auto out = dir("curves");
    parallel_for(jobs.size(), outer, [&](std::size_t j) {
        const auto& job = jobs[j];
        const auto& task = loaded[job.task];
        auto curve = efficiency_curve(task.datasets[job.model], task.split, job.kind, config_.fewshot,
                                      config_.fewshot_base_seed, inner);
        curve.model = config_.models[job.model];
        const auto stem = curve_stem(task.name, curve.model, job.kind);
        save_curve(curve, out / (stem + ".csv"), out / (stem + ".json"));
    });
}

void Pipeline::utility_stage() {
    if (!config_.wants(Evaluation::utility)) return;
    const auto out = dir("utility");
    const auto curves_dir = config_.output_dir / "curves";
    for (const auto& spec : config_.tasks) {
        for (auto kind : {ClassifierKind::knn, ClassifierKind::linear}) {
            const auto baseline_path = curves_dir / (curve_stem(spec.name, *config_.baseline_model, kind) + ".json");
            if (!std::filesystem::exists(baseline_path)) continue;
            const auto baseline = load_curve_json(baseline_path);
            for (const auto& model : config_.models) {
                if (model == *config_.baseline_model) continue;
                const auto curve = load_curve_json(curves_dir / (curve_stem(spec.name, model, kind) + ".json"));
                std::ofstream csv(out / (curve_stem(spec.name, model, kind) + ".csv"), std::ios::binary | std::ios::trunc);
                if (!csv) throw IoError("cannot write utility CSV for task " + spec.name);
                write_utility_csv(utility_score(curve, baseline), csv);
            }
        }
    }
}

namespace {

struct StoredScores {
    std::string task;
    std::map<ClassifierKind, std::map<std::string, ScoreSummary>> by_probe;
};

StoredScores load_scores(const std::filesystem::path& path) {
    const auto doc = nlohmann::json::parse(read_text(path));
    StoredScores s;
    s.task = doc.at("task").get<std::string>();
    for (auto kind : {ClassifierKind::linear, ClassifierKind::knn}) {
        const std::string key(to_string(kind));
        if (!doc.contains(key)) continue;
        for (const auto& [model, values] : doc.at(key).items())
            s.by_probe[kind][model] = aggregate(values.get<std::vector<double>>());
    }
    return s;
}

}  // namespace

void Pipeline::stats_stage() {
    if (!config_.wants(Evaluation::stats) || config_.models.size() < 2) return;
    const auto out = dir("stats");
    for (const auto& spec : config_.tasks) {
        const auto path = config_.output_dir / "scores" / (safe_name(spec.name) + ".json");
        if (!std::filesystem::exists(path)) throw IoError("stats: no scores for task '" + spec.name + "' (run eval first)");
        const auto stored = load_scores(path);
        for (const auto& [kind, per_model] : stored.by_probe) {
            std::vector<ScoreSummary> summaries;
            for (const auto& m : config_.models) summaries.push_back(per_model.at(m));
            EvalReport one;
            one.stats.push_back({spec.name, kind, config_.models,
                                 annotate_significance(summaries, config_.alpha, config_.star_rule)});
            const auto body = nlohmann::json::parse(report_to_json(one, true));
            write_text(out / (safe_name(spec.name) + "__" + std::string(to_string(kind)) + ".json"),
                       body.at("stats").at(0).dump(2) + "\n");
        }
    }
}

EvalReport Pipeline::report_stage() {
    EvalReport report;
    report.models = config_.models;
    std::vector<EfficiencyCurve> curves;
    for (const auto& spec : config_.tasks) {
        report.tasks.push_back(spec.name);

        const auto scores_path = config_.output_dir / "scores" / (safe_name(spec.name) + ".json");
        if (std::filesystem::exists(scores_path)) {
            const auto stored = load_scores(scores_path);
            for (auto kind : {ClassifierKind::linear, ClassifierKind::knn}) {
                auto it = stored.by_probe.find(kind);
                if (it == stored.by_probe.end()) continue;
                std::vector<ScoreSummary> summaries;
                for (const auto& m : config_.models) {
                    auto found = it->second.find(m);
                    if (found == it->second.end())
                        throw ValidationError("report: scores for task '" + spec.name + "' lack model '" + m + "'");
                    summaries.push_back(found->second);
                    report.cells.push_back({spec.name, kind, m, found->second, false, false});
                }
                if (config_.wants(Evaluation::stats) && summaries.size() >= 2) {
                    auto annotation = annotate_significance(summaries, config_.alpha, config_.star_rule);
                    for (std::size_t m = 0; m < summaries.size(); ++m)
                        report.cells[report.cells.size() - summaries.size() + m].starred = annotation.starred[m];
                    report.stats.push_back({spec.name, kind, config_.models, std::move(annotation)});
                }
            }
        }

        for (auto kind : {ClassifierKind::knn, ClassifierKind::linear}) {
            std::vector<EfficiencyCurve> task_curves;
            for (const auto& m : config_.models) {
                const auto path = config_.output_dir / "curves" / (curve_stem(spec.name, m, kind) + ".json");
                if (std::filesystem::exists(path)) task_curves.push_back(load_curve_json(path));
            }
            if (task_curves.empty()) continue;
            if (config_.wants(Evaluation::utility)) {
                const auto base = std::find_if(task_curves.begin(), task_curves.end(),
                                               [&](const auto& c) { return c.model == *config_.baseline_model; });
                if (base != task_curves.end()) {
                    for (const auto& c : task_curves) {
                        if (c.model == base->model) continue;
                        report.utilities.push_back({spec.name, kind, c.model, base->model, utility_score(c, *base)});
                    }
                }
            }
            curves.insert(curves.end(), task_curves.begin(), task_curves.end());
        }
    }
    mark_best(report.cells);

    report.provenance = {fnv1a_hex(config_.canonical_json), std::string(kEngineVersion), started_at_, utc_now()};
    std::filesystem::create_directories(config_.output_dir);
    {
        std::ostringstream csv;
        write_report_csv(report, csv);
        write_text(config_.output_dir / "report.csv", csv.str());
        std::ostringstream md;
        write_report_markdown(report, md);
        write_text(config_.output_dir / "report.md", md.str());
    }
    write_text(config_.output_dir / "report.json", report_to_json(report));
    if (!curves.empty() || !report.utilities.empty()) emit_plots(curves, report.utilities, dir("plots"));
    return report;
}

EvalReport Pipeline::run_all() {
    split_stage();
    eval_stage();
    fewshot_stage();
    utility_stage();
    stats_stage();
    return report_stage();
}

}  // namespace reprbench
