// Command-line front end: simulate | discover | predict | report.

#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sparsedde/cli.hpp"

int main(int argc, char **argv) {
    CLI::App app{"sparse Bayesian discovery of constant-delay differential equations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool trace = false;

    auto add_common = [&](CLI::App *sub, bool with_trace) {
        sub->add_option("--config", config_path, "run config JSON (or a previously emitted manifest)")
            ->required();
        sub->add_option("--out", out_dir, "output directory (default: current directory)");
        sub->add_option("--seed", seed, "override the config seed");
        if (with_trace) sub->add_flag("--trace", trace, "dump per-iteration chain traces");
    };

    add_common(app.add_subcommand("simulate", "integrate a delay model and write a dataset"), false);
    add_common(app.add_subcommand("discover", "discover a delay model from a dataset"), true);
    add_common(app.add_subcommand("predict", "re-simulate a discovered model, with uncertainty bands"), false);
    add_common(app.add_subcommand("report", "parameter-error table against a truth model"), false);

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    return sparsedde::run_cli(command, config_path, out_dir, seed, trace);
}
