#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "metafed/controller.hpp"
#include "metafed/model.hpp"
#include "metafed/simnet.hpp"
#include "metafed/traffic.hpp"

namespace metafed {

enum class WeightScheme { Uniform, DataSize };

const char* weight_scheme_name(WeightScheme s);
WeightScheme weight_scheme_from_name(const std::string& name);

struct HyperParams {
    double eta0 = 0.3;        // initial learning rate
    double alpha = 0.3;       // meta outer rate
    double beta = 0.5;        // deployment adaptation rate
    int local_epochs = 1;
    int batch_size = 32;
    int rounds = 30;
    WeightScheme weight_scheme = WeightScheme::DataSize;
    ControllerConfig controller;
};

// Per-round audit trail. delta_loss = loss_before - loss_after, so positive
// means the round improved the weighted mean client loss.
struct RoundRecord {
    int round = 0;
    double mean_client_loss_before = 0.0;
    double mean_client_loss_after = 0.0;
    double delta_loss = 0.0;
    double eta_used = 0.0;
    double round_duration_s = 0.0;
    std::vector<double> per_client_losses;  // per client, at the new global params
};

struct FedState {
    ParamVector global_params;
    double eta = 0.0;
    int round = 0;
    std::vector<ClientDataset> clients;
    std::vector<double> weights;
    std::vector<RoundRecord> history;
};

// Uniform -> all ones; DataSize -> w_i = n_i. Aggregation normalizes, so only
// the ratios matter.
std::vector<double> client_weights(std::span<const ClientDataset> clients, WeightScheme scheme);

// Weighted mean of per-client losses at theta, weights normalized to sum 1.
double weighted_mean_loss(const ParamVector& theta, std::span<const ClientDataset> clients,
                          std::span<const double> weights);

// Epochs of seeded-shuffle mini-batch SGD from theta on one client's data.
// Batches are consecutive chunks of the shuffled index order; the final
// partial batch is included. Pure in all inputs.
ParamVector local_training(const ClientDataset& dataset, const ParamVector& theta, double eta,
                           int epochs, int batch_size, std::uint64_t seed);

// Coordinate-wise weighted average: sum_i w_i * theta_i / sum_i w_i.
ParamVector aggregate(std::span<const ParamVector> params_list, std::span<const double> weights);

// Number of gradient steps one client performs per round.
std::int64_t local_steps_per_round(int n_samples, int epochs, int batch_size);

// One synchronous round: every client trains from the current global params
// with the current eta, the results are aggregated in ascending node_id
// order, and the controller updates eta from the observed loss reduction.
// Appends a RoundRecord; the round duration is the slowest client's
// round-trip time under the log's cost model. run_seed scopes the per-client
// shuffle streams.
FedState run_round(FedState state, const HyperParams& hyper, std::uint64_t run_seed,
                   EventLog& log);

// Full run: init_params, then `rounds` calls to run_round. Returns the final
// global params and the complete history. If `log_out` is non-null the event
// log is moved there.
std::pair<ParamVector, std::vector<RoundRecord>> run_training(
    const HyperParams& hyper, std::vector<ClientDataset> clients, const CostModel& cost,
    std::uint64_t seed, const ModelArch& arch, std::vector<SimEvent>* log_out = nullptr);

}  // namespace metafed
