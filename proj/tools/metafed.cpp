#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "metafed/cli_commands.hpp"
#include "metafed/config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitBadConfig = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-federated traffic-state learning simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config or run manifest");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed, "override the config's seed list with one seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--out", out_dir, "override the config's output directory");
    };

    auto* generate = app.add_subcommand("generate", "write the scenario dataset CSV");
    add_common(generate, true);

    auto* train = app.add_subcommand("train", "train one variant and write checkpoint + logs");
    add_common(train, true);
    train->add_option("--mode", mode, "centralized|fedavg|metafl");

    auto* compare = app.add_subcommand("compare", "run the three-way comparison");
    add_common(compare, true);

    auto* report = app.add_subcommand("report", "re-render summary.json from comparison.csv");
    add_common(report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadConfig;
    }

    try {
        metafed::CliOptions opts;
        if (seed_set) opts.seed_override = seed;
        if (!out_dir.empty()) opts.out_override = out_dir;

        if (report->parsed()) {
            std::string dir = out_dir;
            if (dir.empty() && !config_path.empty()) {
                dir = metafed::resolve_config(config_path, opts).output_dir;
            }
            if (dir.empty()) {
                std::cerr << "error: report needs --out or --config to locate comparison.csv\n";
                return kExitBadConfig;
            }
            return metafed::cmd_report(dir);
        }

        std::string manifest_mode;
        const metafed::ExperimentConfig config =
            metafed::resolve_config(config_path, opts, &manifest_mode);

        if (generate->parsed()) return metafed::cmd_generate(config);
        if (train->parsed()) {
            // --mode wins; otherwise fall back to the mode recorded in a manifest.
            const std::string effective = !mode.empty() ? mode : manifest_mode;
            if (effective.empty()) {
                std::cerr << "error: train needs --mode (or a manifest that records one)\n";
                return kExitBadConfig;
            }
            return metafed::cmd_train(config, effective);
        }
        if (compare->parsed()) return metafed::cmd_compare(config);

        std::cerr << "error: no subcommand\n";
        return kExitRuntime;
    } catch (const metafed::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
