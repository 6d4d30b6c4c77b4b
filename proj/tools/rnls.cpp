#include <iostream>

#include "CLI11.hpp"
#include "rnls/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Spectral simulator for the rotating trapped NLS / Gross-Pitaevskii equation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rnls::code_version());

    std::string config, out, resume;
    bool serial = false;
    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"groundstate", "constrained energy minimizer and the radial profile Q"},
        {"evolve", "time evolution with diagnostics series and checkpoints"},
        {"sweep", "mass-threshold sweep for scaled-Q or Gaussian data"},
        {"stability", "orbit distance of perturbed standing waves"},
        {"vortex", "vortex-state energies under fast rotation"},
        {"inhom", "threshold sweep for an inhomogeneous coefficient"}};
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides [io] output)");
        if (name == "evolve") sub->add_option("--resume", resume, "checkpoint to continue from");
        sub->add_flag("--serial", serial, "use the serial kernels");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        rnls::RunConfig cfg = rnls::load_config(config);
        if (cfg.experiment != rnls::experiment_from_string(name))
            throw rnls::ConfigError("config declares experiment = " + rnls::to_string(cfg.experiment) +
                                    " but the subcommand is " + name);
        rnls::RunnerOptions opt;
        opt.output = out;
        opt.resume = resume;
        opt.exec = serial ? rnls::kernels::Exec::serial : rnls::kernels::Exec::parallel;
        const rnls::RunOutcome res = rnls::run_experiment(cfg, opt);
        std::cout << "wrote " << res.output_dir << " (" << res.wall_seconds << " s)\n";
        if (res.exit_code != 0) std::cerr << "error: resolution lost without a blowup verdict\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rnls::exit_code_for(e);
    }
}
