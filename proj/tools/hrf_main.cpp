// hrf: bracket maps, reproducing-formula checks and fibre dual
// classification for translation-generated systems on the Heisenberg group.
//
//   hrf bracket    --config run.json [--out DIR] [--grid N] [--jobs N]
//   hrf check orth|bio|repro|bessel|parseval --config run.json ...
//   hrf gabor-scan --config run.json ...
//   hrf classify   --config run.json [--instance FILE] ...
//
// Exit status: 0 pass, 1 fail, 2 hypothesis failure or invalid input.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hrf/commands.hpp"
#include "hrf/config.hpp"
#include "hrf/error.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> instance;
    int jobs = 1;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "run configuration (JSON)")->required();
    cmd->add_option("--out", f.out, "output directory (overrides output.dir)");
    cmd->add_option("--grid", f.grid, "torus grid size n_alpha")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", f.tol, "verdict tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "seed for random test vectors");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bracket-map and reproducing-formula verification on the Heisenberg group", "hrf"};
    app.require_subcommand(1);
    Flags flags;
    std::string which;

    auto* bracket = app.add_subcommand("bracket", "bracket traces [phi,phi] and [phi,psi]");
    auto* check = app.add_subcommand("check", "orthogonality, biorthogonality, reproducing, Bessel, Parseval checks");
    auto* scan = app.add_subcommand("gabor-scan", "Gabor condition profile against reproducing residuals");
    auto* classify = app.add_subcommand("classify", "fibrewise dual classification of an instance file");
    for (auto* c : {bracket, check, scan, classify}) add_common(c, flags);
    check->add_option("which", which, "orth | bio | repro | bessel | parseval")
        ->required()
        ->check(CLI::IsMember({"orth", "bio", "repro", "bessel", "parseval"}));
    classify->add_option("--instance", flags.instance, "instance file (overrides classify.instance)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        hrf::RunConfig cfg = hrf::load_config(flags.config);
        if (flags.grid) {
            cfg.n_alpha = *flags.grid;
            cfg.torus_points.clear();
        }
        if (flags.tol) cfg.tol = *flags.tol;
        if (flags.seed) cfg.seed = *flags.seed;
        if (flags.instance) cfg.instance = std::filesystem::absolute(*flags.instance).string();
        const std::string out_dir = flags.out.empty() ? cfg.out_dir : flags.out;

        const auto start = std::chrono::steady_clock::now();
        const hrf::CommandResult result = hrf::run_command(command, which, cfg, flags.jobs);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        hrf::write_outputs(result, out_dir, wall, flags.jobs);

        std::cout << result.command << ": exit " << result.exit_code << " (" << out_dir << "/" << result.command
                  << ".json)\n";
        return result.exit_code;
    } catch (const hrf::Error& e) {
        std::cerr << "hrf: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hrf: " << e.what() << "\n";
        return 2;
    }
}
