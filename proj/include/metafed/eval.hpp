#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metafed/config.hpp"
#include "metafed/federation.hpp"
#include "metafed/meta.hpp"

namespace metafed {

// Fraction of samples whose argmax class probability equals the label;
// ties break toward the lowest class index.
double accuracy(const ParamVector& theta, std::span<const TrafficSample> data);

struct CentralizedResult {
    ParamVector params;
    std::int64_t steps_taken = 0;
    std::vector<RoundRecord> history;
};

// Plain pooled mini-batch SGD at a constant eta0, stopped after exactly
// `step_budget` gradient steps (partial epochs allowed) so the baseline does
// the same gradient work as a federated run. step_budget < 0 derives the
// budget from the pool: rounds * epochs * ceil(|pool| / batch_size).
CentralizedResult train_centralized(std::span<const TrafficSample> pool,
                                    const HyperParams& config, std::uint64_t seed,
                                    const ModelArch& arch, std::int64_t step_budget = -1);

// Total gradient steps a federated run performs across all clients and rounds.
std::int64_t fed_step_budget(std::span<const ClientDataset> clients, const HyperParams& hyper);
// Same total for a meta-federated run.
std::int64_t meta_step_budget(int num_clients, const HyperParams& hyper, const MetaConfig& meta);

struct AdaptationTrace {
    int steps_used = 0;
    std::uint64_t param_bytes = 0;
    std::uint64_t support_bytes = 0;  // paid only by the centralized variant
};

// Simulated seconds from shift injection to recovery: one model push plus the
// adaptation compute; the centralized variant additionally uploads the new
// support data before it can adapt.
double response_time(Variant variant, const CostModel& cost, const AdaptationTrace& trace);

struct CellResult {
    Variant variant;
    Regime regime;
    std::uint64_t seed = 0;
    double accuracy = 0.0;          // shifted-regime query accuracy after adaptation
    double response_time_s = 0.0;
    int steps_to_threshold = 0;
    double pre_shift_accuracy = 0.0;
};

struct CellStats {
    double accuracy_mean = 0.0, accuracy_sd = 0.0;
    double response_time_mean = 0.0, response_time_sd = 0.0;
    double steps_mean = 0.0, steps_sd = 0.0;
};

struct ComparisonReport {
    std::vector<CellResult> cells;  // sorted by (variant, regime, seed)
    std::map<std::pair<Variant, Regime>, CellStats> stats;
    std::vector<std::uint64_t> seeds;
};

CellStats summarize_cells(std::span<const CellResult> cells);
ComparisonReport assemble_report(std::vector<CellResult> cells,
                                 std::vector<std::uint64_t> seeds);

// Trains every configured variant on pre-shift data, injects the incident
// burst, adapts each variant on the same support set and evaluates on the
// same held-out query set. Step budgets are equalized across variants and
// asserted at runtime. Deterministic in the config's seed list.
ComparisonReport run_comparison(const ExperimentConfig& config);

}  // namespace metafed
