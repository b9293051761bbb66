#include "metafed/federation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "metafed/rng.hpp"

namespace metafed {

const char* weight_scheme_name(WeightScheme s) {
    return s == WeightScheme::Uniform ? "uniform" : "data_size";
}

WeightScheme weight_scheme_from_name(const std::string& name) {
    if (name == "uniform") return WeightScheme::Uniform;
    if (name == "data_size") return WeightScheme::DataSize;
    throw std::invalid_argument("unknown weight scheme: " + name);
}

std::vector<double> client_weights(std::span<const ClientDataset> clients, WeightScheme scheme) {
    if (clients.empty()) throw std::invalid_argument("client list must be non-empty");
    std::vector<double> w(clients.size());
    for (std::size_t i = 0; i < clients.size(); ++i) {
        w[i] = scheme == WeightScheme::Uniform ? 1.0 : static_cast<double>(clients[i].n_k());
    }
    return w;
}

double weighted_mean_loss(const ParamVector& theta, std::span<const ClientDataset> clients,
                          std::span<const double> weights) {
    if (clients.size() != weights.size()) {
        throw std::invalid_argument("clients/weights size mismatch");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("weights must sum to a positive value");
    double mean = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        mean += (weights[i] / total) * loss(theta, clients[i].samples);
    }
    return mean;
}

ParamVector local_training(const ClientDataset& dataset, const ParamVector& theta, double eta,
                           int epochs, int batch_size, std::uint64_t seed) {
    if (dataset.samples.empty()) throw std::invalid_argument("client dataset must be non-empty");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");

    const int n = dataset.n_k();
    auto rng = make_rng({seed, seed_tag::local});
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    ParamVector params = theta;
    std::vector<TrafficSample> batch;
    for (int e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int start = 0; start < n; start += batch_size) {
            const int end = std::min(start + batch_size, n);
            batch.clear();
            for (int j = start; j < end; ++j) {
                batch.push_back(dataset.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
            }
            params = sgd_step(params, grad(params, batch), eta);
        }
    }
    return params;
}

ParamVector aggregate(std::span<const ParamVector> params_list, std::span<const double> weights) {
    if (params_list.empty()) throw std::invalid_argument("nothing to aggregate");
    if (params_list.size() != weights.size()) {
        throw std::invalid_argument("params/weights size mismatch");
    }
    const ModelArch arch = params_list.front().arch;
    for (const auto& p : params_list) {
        if (!(p.arch == arch) || p.values.size() != params_list.front().values.size()) {
            throw std::invalid_argument("aggregate inputs must share one architecture");
        }
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("weights must sum to a positive value");

    ParamVector out(arch);
    Eigen::VectorXd lo = params_list.front().values;
    Eigen::VectorXd hi = params_list.front().values;
    for (std::size_t i = 0; i < params_list.size(); ++i) {
        out.values += weights[i] * params_list[i].values;
        lo = lo.cwiseMin(params_list[i].values);
        hi = hi.cwiseMax(params_list[i].values);
    }
    // The exact mean lies inside the coordinate-wise envelope; clamping keeps
    // accumulation rounding from leaking outside it, so averaging identical
    // vectors returns them unchanged.
    out.values = (out.values / total).cwiseMax(lo).cwiseMin(hi);
    return out;
}

std::int64_t local_steps_per_round(int n_samples, int epochs, int batch_size) {
    const std::int64_t batches = (n_samples + batch_size - 1) / batch_size;
    return static_cast<std::int64_t>(epochs) * batches;
}

FedState run_round(FedState state, const HyperParams& hyper, std::uint64_t run_seed,
                   EventLog& log) {
    if (state.clients.empty()) throw std::invalid_argument("no clients in state");
    if (state.weights.size() != state.clients.size()) {
        throw std::invalid_argument("state weights/clients size mismatch");
    }

    const int round = state.round + 1;
    const double loss_before = weighted_mean_loss(state.global_params, state.clients, state.weights);

    // Clients are processed in ascending node_id order; local runs are
    // mutually independent, so the merge stays deterministic even if they
    // were computed concurrently.
    std::vector<ParamVector> locals;
    locals.reserve(state.clients.size());
    std::vector<ClientRoundCost> costs;
    costs.reserve(state.clients.size());
    const std::uint64_t payload = serialized_param_bytes(state.global_params.arch);
    for (const auto& client : state.clients) {
        const std::uint64_t client_seed =
            mix_seed({run_seed, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(client.node_id)});
        locals.push_back(local_training(client, state.global_params, state.eta,
                                        hyper.local_epochs, hyper.batch_size, client_seed));
        costs.push_back({client.node_id, payload, payload,
                         local_steps_per_round(client.n_k(), hyper.local_epochs, hyper.batch_size)});
    }

    state.global_params = aggregate(locals, state.weights);

    RoundRecord rec;
    rec.round = round;
    rec.eta_used = state.eta;
    rec.mean_client_loss_before = loss_before;
    const double total_w = std::accumulate(state.weights.begin(), state.weights.end(), 0.0);
    rec.per_client_losses.reserve(state.clients.size());
    double loss_after = 0.0;
    for (std::size_t i = 0; i < state.clients.size(); ++i) {
        const double l = loss(state.global_params, state.clients[i].samples);
        rec.per_client_losses.push_back(l);
        loss_after += (state.weights[i] / total_w) * l;
    }
    rec.mean_client_loss_after = loss_after;
    rec.delta_loss = compute_delta_loss(loss_before, loss_after);
    rec.round_duration_s = log.record_round(costs);

    state.eta = update_lr(state.eta, rec.delta_loss, hyper.controller);
    state.round = round;
    state.history.push_back(std::move(rec));
    return state;
}

std::pair<ParamVector, std::vector<RoundRecord>> run_training(
    const HyperParams& hyper, std::vector<ClientDataset> clients, const CostModel& cost,
    std::uint64_t seed, const ModelArch& arch, std::vector<SimEvent>* log_out) {
    if (hyper.rounds < 1) throw std::invalid_argument("rounds must be >= 1");

    FedState state;
    state.global_params = init_params(arch, seed);
    state.eta = hyper.eta0;
    state.round = 0;
    state.weights = client_weights(clients, hyper.weight_scheme);
    state.clients = std::move(clients);

    EventLog log(cost);
    for (int r = 0; r < hyper.rounds; ++r) {
        state = run_round(std::move(state), hyper, seed, log);
    }
    if (log_out) *log_out = log.events();
    return {std::move(state.global_params), std::move(state.history)};
}

}  // namespace metafed
