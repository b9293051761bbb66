#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "metafed/config.hpp"

namespace metafed {

// Shared CLI options after config resolution. seed_override replaces the
// config's seed list; out_override replaces output_dir.
struct CliOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
};

ExperimentConfig resolve_config(const std::string& config_path, const CliOptions& opts,
                                std::string* manifest_mode = nullptr);

// Each command returns the process exit code: 0 on success. Invalid configs
// throw ConfigError before any command runs (mapped to exit 2 by the CLI);
// runtime failures throw and map to exit 1.

// Writes the configured scenario as a dataset CSV plus a run manifest and
// prints the row count.
int cmd_generate(const ExperimentConfig& config);

// Trains one variant, writes checkpoint.bin, rounds.csv, events.jsonl (for
// the federated modes) and the manifest; prints the final mean loss.
int cmd_train(const ExperimentConfig& config, const std::string& mode);

// Runs the three-way comparison and writes comparison.csv + summary.json.
int cmd_compare(const ExperimentConfig& config);

// Re-renders summary.json from an existing comparison.csv in `dir`.
int cmd_report(const std::string& dir);

}  // namespace metafed
