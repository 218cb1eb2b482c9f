// fblab command line: run experiment configs and write reports.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fblab/error.hpp"
#include "fblab/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Free-boundary experiment runner"};
    app.set_version_flag("--version", std::string("fblab ") + fblab::version());
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "fblab-out";
    bool check = false;
    bool quiet = false;
    CLI::App* run = app.add_subcommand("run", "Run every experiment of a JSON config");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_flag("--check", check, "Evaluate built-in checks; exit 1 when one fails");
    run->add_flag("-q,--quiet", quiet, "Only print failures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fblab::kExitUsage;
    }

    try {
        const auto config = fblab::load_config(config_path);
        const auto result = fblab::run_suite(config, out_dir, check, config_path);
        for (const auto& r : result.reports) {
            if (!quiet || r.status != fblab::kExitOk) {
                std::printf("%-24s %-16s status %d  %.2f s\n", r.name.c_str(), r.kind.c_str(), r.status, r.wall_time);
            }
            if (!r.error.empty()) std::printf("  error: %s\n", r.error.c_str());
            for (const auto& c : r.checks) {
                if (quiet && c.pass) continue;
                std::printf("  %s %-28s value %.6g target %.6g tol %.3g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                            c.target, c.tolerance);
            }
        }
        if (!quiet) std::printf("manifest: %s\n", result.manifest.string().c_str());
        return result.status;
    } catch (const fblab::ConfigError& e) {
        std::cerr << "fblab: invalid config: " << e.what() << '\n';
        std::cerr << "usage: fblab run <config.json> --out <dir> [--check]\n";
        return fblab::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "fblab: " << e.what() << '\n';
        return fblab::kExitSolverFailed;
    }
}
