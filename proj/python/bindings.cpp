#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "reprbench/data_model.hpp"
#include "reprbench/errors.hpp"
#include "reprbench/knn.hpp"
#include "reprbench/linear_probe.hpp"
#include "reprbench/metrics.hpp"
#include "reprbench/pipeline.hpp"
#include "reprbench/report.hpp"
#include "reprbench/stats.hpp"
#include "reprbench/synthetic.hpp"
#include "reprbench/utility.hpp"

namespace py = pybind11;
using namespace reprbench;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

RealMatrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return RealMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

template <typename T>
py::array_t<T> to_array(const Matrix<T>& m) {
    py::array_t<T> out({m.rows(), m.cols()});
    std::copy(m.flat().begin(), m.flat().end(), out.mutable_data());
    return out;
}

EfficiencyCurve make_curve(const std::vector<std::size_t>& ns, const std::vector<double>& means) {
    if (ns.size() != means.size()) throw py::value_error("n and mean lists differ in length");
    EfficiencyCurve c;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        CurvePoint p;
        p.n_per_class = ns[i];
        p.mean = means[i];
        c.points.push_back(p);
    }
    return c;
}

py::dict summary_dict(const ScoreSummary& s) {
    py::dict d;
    d["per_seed"] = s.per_seed;
    d["mean"] = s.mean;
    d["std"] = s.std;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Frozen-embedding benchmark engine";
    m.attr("__version__") = std::string(kEngineVersion);

    auto base = py::register_exception<Error>(m, "ReprbenchError", PyExc_RuntimeError);
    auto format = py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<TruncationError>(m, "TruncationError", format.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<EmbeddingSet>(m, "EmbeddingSet")
        .def(py::init([](std::vector<std::string> ids, const FloatArray& vectors, std::string source_tag) {
                 if (vectors.ndim() != 2) throw py::value_error("vectors must be a 2-D array");
                 const auto n = static_cast<std::size_t>(vectors.shape(0));
                 const auto d = static_cast<std::size_t>(vectors.shape(1));
                 if (n != ids.size()) throw py::value_error("one sample id per row required");
                 FloatMatrix mat(n, d, std::vector<float>(vectors.data(), vectors.data() + n * d));
                 return EmbeddingSet(std::move(ids), std::move(mat), std::move(source_tag));
             }),
             py::arg("sample_ids"), py::arg("vectors"), py::arg("source_tag"))
        .def_property_readonly("sample_ids", &EmbeddingSet::sample_ids)
        .def_property_readonly("source_tag", &EmbeddingSet::source_tag)
        .def_property_readonly("vectors", [](const EmbeddingSet& s) { return to_array(s.vectors()); })
        .def_property_readonly("size", &EmbeddingSet::size)
        .def_property_readonly("dim", &EmbeddingSet::dim)
        .def("__len__", &EmbeddingSet::size)
        .def("__eq__", &EmbeddingSet::operator==);

    m.def("load_embeddings", &load_embeddings, py::arg("path"));
    m.def("save_embeddings", &save_embeddings, py::arg("embeddings"), py::arg("path"));

    m.def(
        "load_labels",
        [](const std::filesystem::path& path) {
            const auto table = load_labels(path);
            py::dict out;
            for (const auto& [id, e] : table.entries()) {
                py::dict row;
                row["label"] = e.label;
                row["patient_id"] = e.patient_id;
                row["split_tag"] = e.split_tag ? std::optional<std::string>(to_string(*e.split_tag)) : std::nullopt;
                out[py::cast(id)] = row;
            }
            return out;
        },
        py::arg("path"), "sample_id -> {label, patient_id, split_tag}");

    m.def(
        "write_gaussian_task",
        [](std::size_t classes, std::size_t per_class, std::size_t dim, double separation, std::uint64_t seed,
           const std::string& source_tag, const std::filesystem::path& embeddings_path,
           const std::filesystem::path& labels_path) {
            const auto task = make_gaussian_task(classes, per_class, dim, separation, seed, source_tag);
            save_embeddings(task.embeddings, embeddings_path);
            save_labels(task.labels, labels_path);
        },
        py::arg("classes"), py::arg("per_class"), py::arg("dim"), py::arg("separation"), py::arg("seed"),
        py::arg("source_tag"), py::arg("embeddings_path"), py::arg("labels_path"),
        "Write an isotropic Gaussian task (container + label CSV).");

    m.def(
        "knn_predict",
        [](const DoubleArray& train, const std::vector<int>& labels, std::size_t num_classes,
           const DoubleArray& queries, int k, double temperature, const std::string& similarity,
           bool l2_normalize_inputs) {
            const KnnConfig cfg{k, temperature, parse_similarity(similarity), l2_normalize_inputs};
            const auto pred = knn_predict(to_matrix(train), labels, num_classes, to_matrix(queries), cfg);
            py::dict out;
            out["predicted"] = pred.predicted;
            out["k_used"] = pred.k_used;
            out["k_clamped"] = pred.k_clamped;
            return out;
        },
        py::arg("train"), py::arg("labels"), py::arg("num_classes"), py::arg("queries"), py::arg("k") = 20,
        py::arg("temperature") = 0.07, py::arg("similarity") = "cosine", py::arg("l2_normalize_inputs") = true);

    m.def(
        "probe_fit_predict",
        [](const DoubleArray& train, const std::vector<int>& labels, std::size_t num_classes,
           const DoubleArray& queries, double l2_penalty, const std::string& mode, std::uint64_t seed) {
            ProbeConfig cfg;
            cfg.l2_penalty = l2_penalty;
            cfg.mode = parse_optimizer_mode(mode);
            std::vector<std::string> classes;
            for (std::size_t c = 0; c < num_classes; ++c) classes.push_back(std::to_string(c));
            const auto x = to_matrix(train);
            const auto model = train_probe(x, labels, RealMatrix(0, x.cols()), {}, classes, cfg, seed);
            const auto pred = probe_predict(model, to_matrix(queries));
            py::dict out;
            out["predicted"] = pred.predicted;
            out["probabilities"] = to_array(pred.probabilities);
            out["weights"] = to_array(model.weights);
            out["biases"] = model.biases;
            return out;
        },
        py::arg("train"), py::arg("labels"), py::arg("num_classes"), py::arg("queries"),
        py::arg("l2_penalty") = 1e-4, py::arg("mode") = "lbfgs", py::arg("seed") = 0);

    m.def(
        "macro_f1",
        [](const std::vector<std::string>& predictions, const std::vector<std::string>& labels,
           const std::vector<std::string>& class_list) { return macro_f1(predictions, labels, class_list); },
        py::arg("predictions"), py::arg("labels"), py::arg("class_list"));
    m.def(
        "aggregate", [](const std::vector<double>& scores) { return summary_dict(aggregate(scores)); },
        py::arg("scores"));
    m.def(
        "format_cell",
        [](double mean, double std, bool starred) {
            ScoreSummary s;
            s.mean = mean;
            s.std = std;
            return format_cell(s, starred);
        },
        py::arg("mean"), py::arg("std"), py::arg("starred") = false);

    m.def(
        "one_way_anova",
        [](const std::vector<std::vector<double>>& groups) {
            const auto r = one_way_anova(groups);
            py::dict out;
            out["f_stat"] = r.f_stat;
            out["df_between"] = r.df_between;
            out["df_within"] = r.df_within;
            out["p_value"] = r.p_value;
            return out;
        },
        py::arg("groups"));
    m.def(
        "tukey_hsd",
        [](const std::vector<std::vector<double>>& groups, double alpha) {
            py::list out;
            for (const auto& p : tukey_hsd(groups, alpha).pairs) {
                py::dict d;
                d["group_a"] = p.group_a;
                d["group_b"] = p.group_b;
                d["mean_diff"] = p.mean_diff;
                d["q_stat"] = p.q_stat;
                d["p_adjusted"] = p.p_adjusted;
                d["significant"] = p.significant;
                out.append(d);
            }
            return out;
        },
        py::arg("groups"), py::arg("alpha") = 0.05);
    m.def("studentized_range_cdf", &studentized_range_cdf, py::arg("q"), py::arg("groups"), py::arg("df"));

    m.def(
        "labels_to_match",
        [](const std::vector<std::size_t>& ns, const std::vector<double>& means, double target) {
            return labels_to_match(make_curve(ns, means), target);
        },
        py::arg("n"), py::arg("means"), py::arg("target"), "Baseline labels per class reaching target; inf if none.");
    m.def(
        "utility_score",
        [](const std::vector<std::size_t>& model_n, const std::vector<double>& model_means,
           const std::vector<std::size_t>& base_n, const std::vector<double>& base_means) {
            const auto r = utility_score(make_curve(model_n, model_means), make_curve(base_n, base_means));
            py::dict out;
            std::vector<double> needed, utility;
            for (const auto& u : r.per_n) {
                needed.push_back(u.needed);
                utility.push_back(u.utility);
            }
            out["needed"] = needed;
            out["utility"] = utility;
            out["aggregate_mean"] = r.aggregate_mean;
            out["finite_count"] = r.finite_count;
            out["infinite_count"] = r.infinite_count;
            return out;
        },
        py::arg("model_n"), py::arg("model_means"), py::arg("baseline_n"), py::arg("baseline_means"));

    m.def(
        "run_benchmark",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> out_dir,
           std::size_t jobs, std::uint64_t seed_base) {
            auto cfg = load_run_config(config_path);
            if (out_dir) cfg.output_dir = *out_dir;
            cfg.apply_seed_base(seed_base);
            EvalReport report;
            {
                py::gil_scoped_release release;
                report = Pipeline(std::move(cfg), jobs).run_all();
            }
            return report_to_json(report);
        },
        py::arg("config_path"), py::arg("out_dir") = py::none(), py::arg("jobs") = 1, py::arg("seed_base") = 0,
        "Run every configured stage and return the report as a JSON string.");
}
