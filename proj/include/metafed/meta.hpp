#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "metafed/federation.hpp"

namespace metafed {

struct MetaConfig {
    int inner_steps = 1;
    double inner_lr = 0.5;    // task-level step size, independent of alpha/beta/eta
    int tasks_per_client = 2;
    int support_size = 24;
    int query_size = 48;
};

// Gradient callback for the generic first-order meta step; lets the update
// rule be exercised against closed-form surrogates as well as the classifier.
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct TaskGrads {
    GradFn support_grad;
    GradFn query_grad;
};

// First-order meta update over a set of tasks: adapt on each task's support
// set with `inner_steps` gradient steps of size inner_lr, evaluate the query
// gradient at the adapted point, and step the shared parameters against the
// summed query gradients: theta' = theta - alpha * sum_i g_query_i.
// Second-order terms are dropped.
Eigen::VectorXd fomaml_step(const Eigen::VectorXd& theta, std::span<const TaskGrads> tasks,
                            double alpha, double inner_lr, int inner_steps);

// `steps` full-batch gradient steps on task.support starting from theta.
ParamVector inner_adapt(const ParamVector& theta, const Task& task, double inner_lr, int steps);

// fomaml_step over traffic tasks with the classifier's gradients.
ParamVector meta_outer_step(const ParamVector& theta, std::span<const Task> tasks, double alpha,
                            const MetaConfig& cfg);

// Few-shot deployment adaptation: gradient steps of size beta on the new
// task's support set only; the query set stays held out for evaluation.
ParamVector deploy_adapt(const ParamVector& theta_prime, const Task& new_task, double beta,
                         int steps);

// Deterministic task supplier: (node_id, round, task_index) -> Task.
using TaskSource = std::function<Task(int node_id, int round, int task_index)>;

// Task source drawing every task fresh from `spec` (per-task bias and day
// offset), seeded so each (node, round, index) triple is an independent
// deterministic stream.
TaskSource make_regime_task_source(const ScenarioSpec& spec, const MetaConfig& cfg,
                                   std::uint64_t seed);

// One meta-federated round: each client draws tasks_per_client tasks from its
// regime, takes a local meta_outer_step from the global params, and the
// server aggregates the results exactly like a standard round (including the
// eta controller, which feeds only standard local training; alpha and beta
// stay constant).
FedState meta_fed_round(FedState state, const HyperParams& hyper, const MetaConfig& meta_cfg,
                        const TaskSource& task_source, EventLog& log);

// Full meta-federated run, mirroring run_training.
std::pair<ParamVector, std::vector<RoundRecord>> run_meta_training(
    const HyperParams& hyper, const MetaConfig& meta_cfg, std::vector<ClientDataset> clients,
    const TaskSource& task_source, const CostModel& cost, std::uint64_t seed,
    const ModelArch& arch, std::vector<SimEvent>* log_out = nullptr);

}  // namespace metafed
