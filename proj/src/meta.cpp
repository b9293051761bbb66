#include "metafed/meta.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "metafed/rng.hpp"

namespace metafed {

namespace {

ParamVector with_values(const ParamVector& like, Eigen::VectorXd values) {
    ParamVector out = like;
    out.values = std::move(values);
    return out;
}

}  // namespace

Eigen::VectorXd fomaml_step(const Eigen::VectorXd& theta, std::span<const TaskGrads> tasks,
                            double alpha, double inner_lr, int inner_steps) {
    if (tasks.empty()) throw std::invalid_argument("task list must be non-empty");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
    if (inner_steps < 0) throw std::invalid_argument("inner_steps must be non-negative");
    if (alpha == 0.0) return theta;

    Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(theta.size());
    for (const auto& task : tasks) {
        Eigen::VectorXd adapted = theta;
        if (inner_lr != 0.0) {
            for (int s = 0; s < inner_steps; ++s) {
                adapted -= inner_lr * task.support_grad(adapted);
            }
        }
        g_sum += task.query_grad(adapted);
    }
    return theta - alpha * g_sum;
}

ParamVector inner_adapt(const ParamVector& theta, const Task& task, double inner_lr, int steps) {
    if (steps < 0) throw std::invalid_argument("steps must be non-negative");
    if (inner_lr < 0.0) throw std::invalid_argument("inner_lr must be non-negative");
    if (steps == 0 || inner_lr == 0.0) return theta;

    ParamVector adapted = theta;
    for (int s = 0; s < steps; ++s) {
        adapted = sgd_step(adapted, grad(adapted, task.support), inner_lr);
    }
    return adapted;
}

ParamVector meta_outer_step(const ParamVector& theta, std::span<const Task> tasks, double alpha,
                            const MetaConfig& cfg) {
    if (tasks.empty()) throw std::invalid_argument("task list must be non-empty");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
    if (alpha == 0.0) return theta;

    Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(theta.values.size());
    for (const auto& task : tasks) {
        const ParamVector adapted = inner_adapt(theta, task, cfg.inner_lr, cfg.inner_steps);
        g_sum += grad(adapted, task.query).values;
    }
    return with_values(theta, theta.values - alpha * g_sum);
}

ParamVector deploy_adapt(const ParamVector& theta_prime, const Task& new_task, double beta,
                         int steps) {
    return inner_adapt(theta_prime, new_task, beta, steps);
}

// Each task also draws its own incident intensity from [0, rate + spread], so
// the task distribution varies along the axis a deployment shift moves.
// Without this spread every task would share one incident mix and the inner
// adaptation would have nothing task-specific to learn.
namespace {
constexpr double kTaskIncidentSpread = 0.5;
}

TaskSource make_regime_task_source(const ScenarioSpec& spec, const MetaConfig& cfg,
                                   std::uint64_t seed) {
    return [spec, cfg, seed](int node_id, int round, int task_index) {
        const std::uint64_t task_seed =
            mix_seed({seed, seed_tag::task, static_cast<std::uint64_t>(node_id),
                      static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(task_index)});
        ScenarioSpec task_spec = spec;
        const double hi = std::min(1.0, spec.incident_rate + kTaskIncidentSpread);
        const double unit =
            static_cast<double>(splitmix64(task_seed ^ 0x496e6369ULL)) / 18446744073709551616.0;
        task_spec.incident_rate = unit * hi;
        return make_task(task_spec, cfg.support_size, cfg.query_size, task_seed);
    };
}

FedState meta_fed_round(FedState state, const HyperParams& hyper, const MetaConfig& meta_cfg,
                        const TaskSource& task_source, EventLog& log) {
    if (state.clients.empty()) throw std::invalid_argument("no clients in state");
    if (meta_cfg.tasks_per_client < 1) {
        throw std::invalid_argument("tasks_per_client must be >= 1");
    }

    const int round = state.round + 1;
    const double loss_before = weighted_mean_loss(state.global_params, state.clients, state.weights);

    std::vector<ParamVector> locals;
    locals.reserve(state.clients.size());
    std::vector<ClientRoundCost> costs;
    costs.reserve(state.clients.size());
    const std::uint64_t payload = serialized_param_bytes(state.global_params.arch);
    const std::int64_t steps_per_client =
        static_cast<std::int64_t>(meta_cfg.tasks_per_client) * (meta_cfg.inner_steps + 1);

    for (const auto& client : state.clients) {
        std::vector<Task> tasks;
        tasks.reserve(static_cast<std::size_t>(meta_cfg.tasks_per_client));
        for (int j = 0; j < meta_cfg.tasks_per_client; ++j) {
            tasks.push_back(task_source(client.node_id, round, j));
        }
        if (hyper.alpha == 0.0) {
            locals.push_back(state.global_params);
        } else {
            locals.push_back(meta_outer_step(state.global_params, tasks, hyper.alpha, meta_cfg));
        }
        costs.push_back({client.node_id, payload, payload, steps_per_client});
    }

    state.global_params = aggregate(locals, state.weights);

    RoundRecord rec;
    rec.round = round;
    rec.eta_used = state.eta;
    rec.mean_client_loss_before = loss_before;
    const double total_w = std::accumulate(state.weights.begin(), state.weights.end(), 0.0);
    double loss_after = 0.0;
    rec.per_client_losses.reserve(state.clients.size());
    for (std::size_t i = 0; i < state.clients.size(); ++i) {
        const double l = loss(state.global_params, state.clients[i].samples);
        rec.per_client_losses.push_back(l);
        loss_after += (state.weights[i] / total_w) * l;
    }
    rec.mean_client_loss_after = loss_after;
    rec.delta_loss = compute_delta_loss(loss_before, loss_after);
    rec.round_duration_s = log.record_round(costs);

    // The controller keeps tracking eta even though the meta step runs on
    // alpha/beta alone; eta feeds only standard local training.
    state.eta = update_lr(state.eta, rec.delta_loss, hyper.controller);
    state.round = round;
    state.history.push_back(std::move(rec));
    return state;
}

std::pair<ParamVector, std::vector<RoundRecord>> run_meta_training(
    const HyperParams& hyper, const MetaConfig& meta_cfg, std::vector<ClientDataset> clients,
    const TaskSource& task_source, const CostModel& cost, std::uint64_t seed,
    const ModelArch& arch, std::vector<SimEvent>* log_out) {
    if (hyper.rounds < 1) throw std::invalid_argument("rounds must be >= 1");

    FedState state;
    state.global_params = init_params(arch, seed);
    state.eta = hyper.eta0;
    state.round = 0;
    state.weights = client_weights(clients, hyper.weight_scheme);
    state.clients = std::move(clients);

    EventLog log(cost);
    for (int r = 0; r < hyper.rounds; ++r) {
        state = meta_fed_round(std::move(state), hyper, meta_cfg, task_source, log);
    }
    if (log_out) *log_out = log.events();
    return {std::move(state.global_params), std::move(state.history)};
}

}  // namespace metafed
