#include <cstdio>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fit/errors.hpp"
#include "fit/runners.hpp"
#include "fit/toml_lite.hpp"
#include "fit/version.hpp"

namespace {

struct SubSpec {
    const char* name;
    const char* desc;
    bool needs_config;
};

constexpr SubSpec kSubs[] = {
    {"spectrum", "steady-state absorption spectra and peak tables", true},
    {"dressed", "dressed-state resonance detunings and gap scaling", true},
    {"switch", "photon-switch propagation, cw or time-dependent", true},
    {"montecarlo", "Monte-Carlo averaging over control-atom delocalization", true},
    {"multichannel", "spectra for several targets sharing one control", true},
    {"validate", "fast internal consistency suite", false},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fit: facilitation-induced transparency in Rydberg pairs"};
    app.set_version_flag("--version", std::string(fit::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    fit::runners::CommonArgs args;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, CLI::Option*> seed_opts;
    for (const SubSpec& spec : kSubs) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.desc);
        if (spec.needs_config)
            sub->add_option("--config", config_path, "TOML or JSON config (or a run manifest)")
                ->required()
                ->check(CLI::ExistingFile);
        sub->add_option("--out", args.out_dir, "output directory");
        seed_opts[spec.name] = sub->add_option("--seed", args.seed, "RNG seed override");
        sub->add_option("--threads", args.threads, "worker threads (0 = hardware)");
        sub->add_option("--mode", args.mode, "propagation mode")
            ->check(CLI::IsMember({"cw", "td"}));
        subs[spec.name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::string active;
        for (const SubSpec& spec : kSubs)
            if (subs[spec.name]->parsed()) active = spec.name;
        args.seed_set = seed_opts[active]->count() > 0;

        nlohmann::json cfg = nlohmann::json::object();
        if (!config_path.empty()) {
            cfg = fit::load_config_file(config_path);
            if (cfg.is_object() && cfg.value("fit_manifest", false)) {
                // rerun from a recorded manifest: adopt its config and seed
                if (!args.seed_set && cfg.contains("seed")) {
                    args.seed = cfg.at("seed").get<std::uint64_t>();
                    args.seed_set = true;
                }
                cfg = cfg.at("config");
            }
        }

        if (active == "spectrum") return fit::runners::run_spectrum(cfg, args);
        if (active == "dressed") return fit::runners::run_dressed(cfg, args);
        if (active == "switch") return fit::runners::run_switch(cfg, args);
        if (active == "montecarlo") return fit::runners::run_montecarlo(cfg, args);
        if (active == "multichannel") return fit::runners::run_multichannel(cfg, args);
        if (active == "validate") return fit::runners::run_validate(args);
        std::fprintf(stderr, "unknown subcommand\n");
        return 2;
    } catch (const fit::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const fit::FitError& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 3;
    }
}
