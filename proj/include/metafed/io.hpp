#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metafed/config.hpp"
#include "metafed/eval.hpp"
#include "metafed/federation.hpp"
#include "metafed/format.hpp"
#include "metafed/model.hpp"
#include "metafed/simnet.hpp"
#include "metafed/traffic.hpp"

namespace metafed {

// Checkpoint file: serialized ParamVector followed by one little-endian u32
// round index.
void write_checkpoint(const std::string& path, const ParamVector& params, std::uint32_t round);
std::pair<ParamVector, std::uint32_t> read_checkpoint(const std::string& path);

// Dataset CSV: header
//   node_id,vehicle_count,mean_speed,occupancy,tod_sin,tod_cos,label
// one row per sample, floats with 9 significant digits.
void write_dataset_csv(const std::string& path, std::span<const ClientDataset> clients);

// Round log CSV: header round,loss_before,loss_after,delta_loss,eta,duration_s.
void write_round_log_csv(const std::string& path, std::span<const RoundRecord> history);

void write_events_jsonl(const std::string& path, std::span<const SimEvent> events);

// Comparison CSV: header
//   variant,regime,seed,accuracy,response_time_s,steps_to_threshold
void write_comparison_csv(const std::string& path, std::span<const CellResult> cells);
std::vector<CellResult> read_comparison_csv(const std::string& path);

// JSON summary of the comparison: per variant x regime means and standard
// deviations across seeds.
std::string render_summary_json(const ComparisonReport& report);
void write_summary_json(const std::string& path, const ComparisonReport& report);

// Run manifest: the executed command plus the fully resolved config; feeding
// a manifest back through --config reproduces the run byte for byte.
std::string render_manifest_json(const std::string& command, const std::string& mode,
                                 const ExperimentConfig& config);
void write_manifest(const std::string& path, const std::string& command, const std::string& mode,
                    const ExperimentConfig& config);

}  // namespace metafed
