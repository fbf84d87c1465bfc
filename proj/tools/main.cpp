#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbpcg/harness.hpp"
#include "lbpcg/rng.hpp"

namespace {

struct CommonArgs {
    std::string config_file;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "flat key = value config file");
    cmd->add_option("--out", args.out_dir, "artifact output directory");
    cmd->add_option("--seed", args.seed, "master random seed");
    cmd->add_option("--stage-overrides", args.overrides,
                    "config overrides as key=value (repeatable)");
}

lbpcg::PipelineConfig resolve(const CommonArgs& args) {
    lbpcg::KeyValueConfig kv;
    if (!args.config_file.empty()) {
        kv = lbpcg::KeyValueConfig::parse_file(args.config_file);
    }
    for (const auto& o : args.overrides) kv.apply_override(o);
    lbpcg::PipelineConfig config = lbpcg::PipelineConfig::from_kv(kv);
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (args.seed) config.seed = *args.seed;
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learning-based content pipeline"};
    app.require_subcommand(1);

    struct Verb {
        const char* name;
        const char* help;
        lbpcg::Stage stage;
    };
    const Verb verbs[] = {
        {"cluster", "partition the content space and sample the reduced set",
         lbpcg::Stage::Cluster},
        {"icq-train", "actively learn the acceptability classifier",
         lbpcg::Stage::Icq},
        {"cc-train", "actively learn the per-feature categorizers",
         lbpcg::Stage::Cc},
        {"beta-sim", "simulate the public beta cohort", lbpcg::Stage::Beta},
        {"gpe-fit", "fit consensus popularity from beta surveys",
         lbpcg::Stage::Gpe},
        {"pdc-train", "train the reliability-weighted preference ensemble",
         lbpcg::Stage::Pdc},
        {"ip-run", "run a demo personalization session", lbpcg::Stage::Ip},
        {"evaluate", "score the adaptive policy against baselines",
         lbpcg::Stage::Evaluate},
    };

    std::vector<CommonArgs> verb_args(std::size(verbs));
    std::vector<CLI::App*> verb_cmds;
    for (std::size_t i = 0; i < std::size(verbs); ++i) {
        CLI::App* cmd = app.add_subcommand(verbs[i].name, verbs[i].help);
        add_common(cmd, verb_args[i]);
        verb_cmds.push_back(cmd);
    }

    CommonArgs pipeline_args;
    CLI::App* pipeline_cmd =
        app.add_subcommand("pipeline", "run every stage in order");
    add_common(pipeline_cmd, pipeline_args);

    CommonArgs sweep_args;
    int sweep_seeds = 3;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "repeat the pipeline across derived seeds");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds to run")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < std::size(verbs); ++i) {
            if (verb_cmds[i]->parsed()) {
                lbpcg::run_stage(verbs[i].stage, resolve(verb_args[i]));
                return 0;
            }
        }
        if (pipeline_cmd->parsed()) {
            lbpcg::run_pipeline(resolve(pipeline_args));
            return 0;
        }
        if (sweep_cmd->parsed()) {
            const lbpcg::PipelineConfig base = resolve(sweep_args);
            for (int s = 0; s < sweep_seeds; ++s) {
                lbpcg::PipelineConfig config = base;
                config.seed = lbpcg::derive_seed(base.seed, 1000 + s);
                config.out_dir = base.out_dir / ("seed_" + std::to_string(s));
                std::cerr << "[sweep] seed index " << s << " -> " << config.seed
                          << "\n";
                lbpcg::run_pipeline(config);
            }
            return 0;
        }
    } catch (const lbpcg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lbpcg::DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return 3;
    } catch (const lbpcg::DegenerateDataError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
