// Command-line driver for the benchmark pipeline.
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "reprbench/errors.hpp"
#include "reprbench/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::uint64_t seed_base = 0;
    bool seed_base_set = false;
    std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory (overrides config.output_dir)");
    cmd->add_option_function<std::uint64_t>(
        "--seed-base",
        [&opts](const std::uint64_t& v) {
            opts.seed_base = v;
            opts.seed_base_set = true;
        },
        "Offset added to every evaluation seed and the few-shot base seed");
    cmd->add_option("--jobs", opts.jobs, "Worker threads (never changes results)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reprbench: frozen-embedding benchmark (kNN / linear probes, label efficiency, utility, stats)"};
    app.require_subcommand(1);
    CommonOptions opts;

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"split", "Compute patient-level train/val/test splits"},
        {"eval", "Frozen kNN and linear evaluation over seeds"},
        {"fewshot", "Label-efficiency curves"},
        {"utility", "Utility scores against the baseline model (reads curves)"},
        {"stats", "ANOVA + Tukey HSD over per-seed scores (reads scores)"},
        {"report", "Assemble report tables and plots from stored results"},
        {"run", "All stages"},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), opts);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        auto config = reprbench::load_run_config(opts.config);
        if (!opts.out.empty()) config.output_dir = opts.out;
        if (opts.seed_base_set) config.apply_seed_base(opts.seed_base);
        reprbench::Pipeline pipeline(std::move(config), opts.jobs);

        if (command == "split") pipeline.split_stage();
        else if (command == "eval") pipeline.eval_stage();
        else if (command == "fewshot") pipeline.fewshot_stage();
        else if (command == "utility") pipeline.utility_stage();
        else if (command == "stats") pipeline.stats_stage();
        else if (command == "report") pipeline.report_stage();
        else pipeline.run_all();
        return static_cast<int>(reprbench::ExitCode::ok);
    } catch (const reprbench::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.exit_code());
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: malformed intermediate file: %s\n", e.what());
        return static_cast<int>(reprbench::ExitCode::data_error);
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(reprbench::ExitCode::data_error);
    }
}
