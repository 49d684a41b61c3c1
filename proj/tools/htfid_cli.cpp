#include "htfid/cli.hpp"
#include "htfid/error.hpp"
#include "htfid/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

htfid::RunConfig resolve(const std::string& path, const htfid::Overrides& o) {
    htfid::RunConfig config = path.empty() ? htfid::RunConfig{} : htfid::load_config(path);
    htfid::apply_overrides(config, o);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic transfer function identification of a clock-driven hopping leg"};
    app.require_subcommand(1);

    std::string config_path;
    htfid::Overrides overrides;
    std::string out;
    double alpha = 0.0, dt = 0.0;
    int nh = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--alpha", alpha, "curvature regularization weight (dimensionless)");
        cmd->add_option("--nh", nh, "harmonic truncation of the theoretical model");
        cmd->add_option("--dt", dt, "integration and sampling step [s]");
    };

    auto* simulate = app.add_subcommand("simulate", "settle the limit cycle and write trajectories");
    auto* theory = app.add_subcommand("htf-theory", "theoretical harmonic transfer functions");
    auto* identify = app.add_subcommand("identify", "chirp experiments, estimation and parametric fit");
    for (auto* cmd : {simulate, theory, identify}) add_common(cmd);

    auto* compare = app.add_subcommand("compare", "diff two HTF CSV files");
    std::string file_a, file_b;
    double tolerance = 0.01;
    compare->add_option("a", file_a, "candidate HTF CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("b", file_b, "reference HTF CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--tol", tolerance, "relative tolerance")->capture_default_str();
    compare->add_option("--out", out, "directory for compare.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto given = [](CLI::App* cmd, const char* name) { return cmd->count(name) > 0; };
    try {
        for (auto* cmd : {simulate, theory, identify}) {
            if (!cmd->parsed()) continue;
            if (given(cmd, "--out")) overrides.out = out;
            if (given(cmd, "--alpha")) overrides.alpha = alpha;
            if (given(cmd, "--nh")) overrides.nh = nh;
            if (given(cmd, "--dt")) overrides.dt = dt;
            const auto config = resolve(config_path, overrides);
            if (cmd == simulate) htfid::run_simulate(config);
            if (cmd == theory) htfid::run_htf_theory(config);
            if (cmd == identify) htfid::run_identify(config);
            std::cout << "wrote " << config.output_dir << '\n';
        }
        if (compare->parsed()) {
            const auto report = htfid::compare_htf_files(file_a, file_b, tolerance);
            const auto j = htfid::to_json(report);
            std::cout << j.dump(2) << '\n';
            if (given(compare, "--out")) {
                std::filesystem::create_directories(out);
                htfid::write_json(j, out + "/compare.json");
            }
        }
    } catch (const htfid::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return htfid::exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
