// kmpc: run, validate and compare Koopman MPC scenarios.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kmpc/errors.hpp"
#include "kmpc/harness.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_out_dir() {
    if (const char* env = std::getenv("KMPC_OUT_DIR"); env != nullptr && *env != '\0') return env;
    return "kmpc_out";
}

int run_many(const std::vector<std::string>& configs, const fs::path& out,
             std::optional<std::uint64_t> seed, unsigned jobs) {
    if (configs.size() == 1 || jobs <= 1) {
        int worst = 0;
        for (const auto& c : configs) worst = std::max(worst, kmpc::run_scenario(c, out, seed));
        return worst;
    }
    // Scenarios share nothing mutable, so each one gets its own worker.
    std::vector<std::future<int>> pending;
    int worst = 0;
    for (const auto& c : configs) {
        if (pending.size() >= jobs) {
            worst = std::max(worst, pending.front().get());
            pending.erase(pending.begin());
        }
        pending.push_back(std::async(std::launch::async,
                                     [c, &out, seed] { return kmpc::run_scenario(c, out, seed); }));
    }
    for (auto& f : pending) worst = std::max(worst, f.get());
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive Koopman MPC experiment harness"};
    app.require_subcommand(1);

    std::vector<std::string> run_configs;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    auto* run = app.add_subcommand("run", "Run one or more scenario configs");
    run->add_option("config", run_configs, "Scenario JSON file(s)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output root (default $KMPC_OUT_DIR or ./kmpc_out)");
    run->add_option("--seed", seed, "Override the clock seed");
    run->add_option("-j,--jobs", jobs, "Scenarios to run concurrently")->check(CLI::PositiveNumber);

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Parse and check a scenario config");
    validate->add_option("config", validate_config, "Scenario JSON file")->required();

    std::vector<std::string> metric_files;
    std::string csv_out;
    auto* cmp = app.add_subcommand("compare", "Tabulate metrics from several runs");
    cmp->add_option("metrics", metric_files, "metrics.json files")->required();
    cmp->add_option("--csv", csv_out, "Write the table as CSV to this file (default: comparison.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*run) {
        const fs::path out = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
        return run_many(run_configs, out, seed, jobs);
    }

    if (*validate) {
        try {
            const kmpc::Scenario sc = kmpc::load_scenario(validate_config);
            std::cout << sc.name << ": ok (" << sc.joints << "R, "
                      << kmpc::to_string(sc.episode.mode) << ")\n";
            return 0;
        } catch (const kmpc::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }

    if (*cmp) {
        try {
            std::vector<fs::path> paths(metric_files.begin(), metric_files.end());
            const kmpc::Comparison c = kmpc::compare_files(paths);
            std::cout << c.text();
            const fs::path csv_path = csv_out.empty() ? fs::path("comparison.csv") : fs::path(csv_out);
            std::ofstream f(csv_path);
            f << c.csv();
            return 0;
        } catch (const kmpc::Error& e) {
            std::cerr << "compare: " << e.what() << "\n";
            return 2;
        }
    }
    return 0;
}
