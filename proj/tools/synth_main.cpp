// Writes a synthetic two-model benchmark (containers, labels, run config).
#include <cstdio>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "reprbench/data_model.hpp"
#include "reprbench/errors.hpp"
#include "reprbench/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic benchmark with a well-separated and a weakly separated model"};
    std::string out = "synthetic";
    std::size_t tasks = 2, classes = 4, per_class = 200, dim = 8, repeats = 50;
    double strong = 3.0, weak = 1.0;
    app.add_option("--out", out, "Output directory");
    app.add_option("--tasks", tasks, "Number of tasks")->check(CLI::PositiveNumber);
    app.add_option("--classes", classes, "Classes per task")->check(CLI::Range(2, 1000));
    app.add_option("--per-class", per_class, "Samples per class")->check(CLI::PositiveNumber);
    app.add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
    app.add_option("--strong", strong, "Class-mean separation of the strong model (in sigma)");
    app.add_option("--weak", weak, "Class-mean separation of the weak model (in sigma)");
    app.add_option("--repeats", repeats, "Few-shot repeats written to the config")->check(CLI::Range(2, 100000));
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out);
        nlohmann::ordered_json config;
        config["models"] = {"strong", "weak"};
        config["tasks"] = nlohmann::ordered_json::array();
        for (std::size_t t = 0; t < tasks; ++t) {
            const std::string name = "task" + std::to_string(t);
            const auto a = reprbench::make_gaussian_task(classes, per_class, dim, strong, 1000 + 2 * t, "strong");
            const auto b = reprbench::make_gaussian_task(classes, per_class, dim, weak, 1001 + 2 * t, "weak");
            reprbench::save_embeddings(a.embeddings, std::filesystem::path(out) / (name + "_strong.reprb"));
            reprbench::save_embeddings(b.embeddings, std::filesystem::path(out) / (name + "_weak.reprb"));
            reprbench::save_labels(a.labels, std::filesystem::path(out) / (name + "_labels.csv"));
            config["tasks"].push_back({{"name", name},
                                       {"labels", name + "_labels.csv"},
                                       {"embeddings", {{"strong", name + "_strong.reprb"}, {"weak", name + "_weak.reprb"}}}});
        }
        config["evaluations"] = {"knn_frozen", "linear_frozen", "fewshot_knn", "fewshot_linear", "utility", "stats"};
        config["seeds"] = {0, 1, 2, 3, 4};
        config["fewshot"] = {{"grid", {1, 2, 5, 10, 20, 50}}, {"repeats", repeats}};
        config["baseline_model"] = "weak";
        config["output_dir"] = "out";
        std::ofstream cfg(std::filesystem::path(out) / "config.json");
        cfg << config.dump(2) << "\n";
    } catch (const reprbench::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.exit_code());
    }
    return 0;
}
