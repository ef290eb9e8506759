// Batch front door: read a run configuration, build the frame and the
// truncated conserved-quantity series, run the requested residual checks and
// detectors, and emit machine-readable reports.
//
// Exit codes: 0 all requested checks pass, 1 a check failed, 2 a check was
// inconclusive, 3 configuration error.

#include <cctype>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isoq/runner.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    int depth = -1;
    int grid_n = -1;
    double tol = -1.0;
    std::string out_dir;
    bool json_stdout = false;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "run configuration (JSON)")->required();
    cmd->add_option("--depth", opt.depth, "series truncation depth override");
    cmd->add_option("--grid-n", opt.grid_n, "grid sample count override");
    cmd->add_option("--tol", opt.tol, "detection tolerance override");
    cmd->add_option("--out", opt.out_dir, "output directory override");
    cmd->add_flag("--json", opt.json_stdout, "print the report JSON to stdout");
}

int execute(const CliOptions& opt, const std::vector<std::string>& preset_checks) {
    isoq::RunConfig cfg = isoq::load_config(opt.config_path);
    if (opt.depth > 0) cfg.depth = opt.depth;
    if (opt.grid_n > 0) cfg.surface.grid.n = opt.grid_n;
    if (opt.tol > 0) cfg.tolerances["detect"] = opt.tol;
    if (!opt.out_dir.empty()) cfg.output.dir = opt.out_dir;
    if (!preset_checks.empty()) {
        cfg.checks = preset_checks;
        if (cfg.depth < 2) {
            std::erase(cfg.checks, "type1");
        }
    }

    cfg.surface.grid.validate();
    if (cfg.surface.profile.kind == isoq::ProfileKind::samples) {
        if (cfg.depth > 4)
            throw isoq::ConfigError("insufficient smoothness: sampled profiles cap depth at 4");
        if (static_cast<int>(cfg.surface.profile.sample_values.size()) != cfg.surface.grid.n)
            throw isoq::ConfigError("profile: sample count does not match grid n");
    }
    for (const std::string& name : cfg.checks)
        if (name.rfind("type", 0) == 0 && name.size() == 5 && isdigit(name[4]) &&
            cfg.depth < (name[4] - '0') + 1)
            throw isoq::ConfigError("depth must be at least d+1 for type-d checks");

    isoq::RunOutput out = isoq::run(cfg);
    if (!cfg.output.dir.empty()) isoq::write_outputs(out, cfg.output.dir);
    if (opt.json_stdout) std::cout << out.report << "\n";
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"truncated formal conserved quantities for isothermic profile surfaces"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* frame_check = app.add_subcommand("frame-check", "frame structure residuals only");
    CLI::App* fcq = app.add_subcommand("fcq", "build the series; conservation and parallelism");
    CLI::App* detect = app.add_subcommand("detect", "special-isothermic type tests");
    CLI::App* report = app.add_subcommand("report", "everything requested by the config");
    for (CLI::App* c : {frame_check, fcq, detect, report}) add_common(c, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    std::vector<std::string> preset;
    if (frame_check->parsed()) preset = {"frame"};
    if (fcq->parsed()) preset = {"frame", "conservation", "parallelism", "consistency"};
    if (detect->parsed())
        preset = {"cmc", "musso_nicolodi", "type1", "type2_conformal", "profile_ode"};

    try {
        return execute(opt, preset);
    } catch (const isoq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
