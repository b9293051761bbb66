#include "metafed/cli_commands.hpp"

#include <filesystem>
#include <iostream>
#include <set>

#include "metafed/eval.hpp"
#include "metafed/io.hpp"
#include "metafed/rng.hpp"

namespace metafed {

namespace {

namespace fs = std::filesystem;

std::string out_path(const ExperimentConfig& config, const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
}

std::vector<ClientDataset> build_clients(const ExperimentConfig& config, std::uint64_t seed) {
    std::vector<ClientDataset> clients;
    clients.reserve(static_cast<std::size_t>(config.scenario.num_nodes));
    for (int i = 0; i < config.scenario.num_nodes; ++i) {
        clients.push_back(gen_node_stream(config.scenario, i, seed));
    }
    return clients;
}

}  // namespace

ExperimentConfig resolve_config(const std::string& config_path, const CliOptions& opts,
                                std::string* manifest_mode) {
    ExperimentConfig config = load_config_file(config_path, nullptr, manifest_mode);
    if (opts.seed_override) config.seeds = {*opts.seed_override};
    if (opts.out_override) config.output_dir = *opts.out_override;
    validate_config(config);
    return config;
}

int cmd_generate(const ExperimentConfig& config) {
    const std::uint64_t seed = config.seeds.front();
    const auto clients = build_clients(config, seed);

    const std::string dataset = out_path(
        config, std::string("dataset_") + regime_name(config.scenario.density_regime) + ".csv");
    write_dataset_csv(dataset, clients);
    write_manifest(out_path(config, "run_manifest.json"), "generate", "", config);

    std::size_t rows = 0;
    for (const auto& c : clients) rows += c.samples.size();
    std::cout << "wrote " << rows << " data rows (" << clients.size() << " nodes) to " << dataset
              << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& config, const std::string& mode) {
    if (mode != "centralized" && mode != "fedavg" && mode != "metafl") {
        throw ConfigError("mode must be one of centralized|fedavg|metafl, got '" + mode + "'");
    }
    const std::uint64_t seed = config.seeds.front();
    const ModelArch arch = config.arch();
    const auto clients = build_clients(config, seed);

    ParamVector theta;
    std::vector<RoundRecord> history;
    std::vector<SimEvent> events;
    double final_loss = 0.0;

    if (mode == "centralized") {
        std::vector<TrafficSample> pool;
        for (const auto& c : clients) pool.insert(pool.end(), c.samples.begin(), c.samples.end());
        auto res = train_centralized(pool, config.hyper, seed, arch);
        theta = std::move(res.params);
        history = std::move(res.history);
        final_loss = loss(theta, pool);
    } else if (mode == "fedavg") {
        auto [params, hist] =
            run_training(config.hyper, clients, config.cost, seed, arch, &events);
        theta = std::move(params);
        history = std::move(hist);
        final_loss = weighted_mean_loss(theta, clients,
                                        client_weights(clients, config.hyper.weight_scheme));
    } else {
        auto [params, hist] = run_meta_training(
            config.hyper, config.meta, clients,
            make_regime_task_source(config.scenario, config.meta, seed), config.cost, seed, arch,
            &events);
        theta = std::move(params);
        history = std::move(hist);
        final_loss = weighted_mean_loss(theta, clients,
                                        client_weights(clients, config.hyper.weight_scheme));
    }

    write_checkpoint(out_path(config, mode + "_checkpoint.bin"), theta,
                     static_cast<std::uint32_t>(history.size()));
    write_round_log_csv(out_path(config, mode + "_rounds.csv"), history);
    if (mode != "centralized") {
        write_events_jsonl(out_path(config, mode + "_events.jsonl"), events);
    }
    write_manifest(out_path(config, "run_manifest.json"), "train", mode, config);

    std::cout << "mode=" << mode << " rounds=" << history.size()
              << " final_mean_loss=" << fmt_g9(final_loss) << "\n";
    return 0;
}

int cmd_compare(const ExperimentConfig& config) {
    const ComparisonReport report = run_comparison(config);

    write_comparison_csv(out_path(config, "comparison.csv"), report.cells);
    write_summary_json(out_path(config, "summary.json"), report);
    write_manifest(out_path(config, "run_manifest.json"), "compare", "", config);

    for (const auto& [key, stats] : report.stats) {
        std::cout << variant_name(key.first) << "/" << regime_name(key.second)
                  << " accuracy=" << fmt_g9(stats.accuracy_mean)
                  << " response_time_s=" << fmt_g9(stats.response_time_mean)
                  << " steps=" << fmt_g9(stats.steps_mean) << "\n";
    }
    std::cout << "wrote " << report.cells.size() << " cells to "
              << out_path(config, "comparison.csv") << "\n";
    return 0;
}

int cmd_report(const std::string& dir) {
    const std::string csv = (fs::path(dir) / "comparison.csv").string();
    auto cells = read_comparison_csv(csv);
    if (cells.empty()) throw std::runtime_error("no cells in " + csv);

    std::set<std::uint64_t> seed_set;
    for (const auto& c : cells) seed_set.insert(c.seed);
    const ComparisonReport report = assemble_report(
        std::move(cells), std::vector<std::uint64_t>(seed_set.begin(), seed_set.end()));

    const std::string summary = (fs::path(dir) / "summary.json").string();
    write_summary_json(summary, report);
    std::cout << "re-rendered " << summary << "\n";
    return 0;
}

}  // namespace metafed
