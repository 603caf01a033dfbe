// pentropy: batch driver for sequence-entropy experiments.
//
//   pentropy <entropy|orthogonality|spectral|theorem1-demo>
//            --config <path> [--seed N] [--samples N] [--out DIR]
//            [--format json|csv] [--kernels auto|scalar|avx2]
//
// Exit codes: 0 success, 1 runtime failure, 2 config error.

#include <iostream>

#include <CLI11.hpp>

#include "../src/cli/experiment.hpp"

namespace {

void add_common_options(CLI::App* cmd, pentropy::cli::RunOptions& options) {
    cmd->add_option("--config", options.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--seed", options.seed_override, "override the config seed");
    cmd->add_option("--samples", options.samples_override, "override the sample budget");
    cmd->add_option("--out", options.out_dir, "output directory");
    cmd->add_option("--format", options.format, "stdout format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--kernels", options.kernels, "kernel lane: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequence-entropy laboratory for measure-preserving systems"};
    app.require_subcommand(1);

    pentropy::cli::RunOptions options;
    int (*runner)(const pentropy::cli::RunOptions&) = nullptr;

    auto* entropy = app.add_subcommand("entropy", "h_j / h_P reports for one system");
    add_common_options(entropy, options);
    entropy->callback([&] { runner = pentropy::cli::run_entropy; });

    auto* orth = app.add_subcommand(
        "orthogonality", "Sidon spacer synthesis and exact disjointness verdicts");
    add_common_options(orth, options);
    orth->callback([&] { runner = pentropy::cli::run_orthogonality; });

    auto* spectral = app.add_subcommand(
        "spectral", "Fourier coefficients, convolution powers, continuity diagnostics");
    add_common_options(spectral, options);
    spectral->callback([&] { runner = pentropy::cli::run_spectral; });

    auto* demo = app.add_subcommand(
        "theorem1-demo",
        "contrast run: vanishing h_j for a deterministic system vs maximal h_j for a "
        "Gaussian system on one shared progression sequence");
    add_common_options(demo, options);
    demo->callback([&] { runner = pentropy::cli::run_theorem1_demo; });

    CLI11_PARSE(app, argc, argv);

    try {
        return runner(options);
    } catch (const pentropy::cli::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 1;
    }
}
