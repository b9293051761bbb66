#include "metafed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "metafed/rng.hpp"

namespace metafed {

namespace {

int argmax_lowest_tie(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

double sample_sd(std::span<const double> xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

struct AdaptationOutcome {
    double adapted_accuracy = 0.0;
    int steps_to_threshold = kMaxAdaptSteps;
};

// Step-by-step adaptation on the shifted task's support set, tracking query
// accuracy. The threshold is kRecoveryFraction of the variant's own pre-shift
// accuracy, capped at kMaxAdaptSteps steps.
AdaptationOutcome adapt_and_track(const ParamVector& theta, const Task& task, double beta,
                                  double pre_shift_accuracy, int adapt_steps) {
    const double threshold = kRecoveryFraction * pre_shift_accuracy;
    AdaptationOutcome out;

    ParamVector current = theta;
    double acc = accuracy(current, task.query);
    out.steps_to_threshold = acc >= threshold ? 0 : kMaxAdaptSteps;
    if (adapt_steps == 0) out.adapted_accuracy = acc;

    for (int t = 1; t <= kMaxAdaptSteps; ++t) {
        current = deploy_adapt(current, task, beta, 1);
        acc = accuracy(current, task.query);
        if (out.steps_to_threshold == kMaxAdaptSteps && acc >= threshold) {
            out.steps_to_threshold = t;
        }
        if (t == adapt_steps) out.adapted_accuracy = acc;
    }
    return out;
}

}  // namespace

double accuracy(const ParamVector& theta, std::span<const TrafficSample> data) {
    if (data.empty()) throw std::invalid_argument("accuracy needs a non-empty dataset");
    int correct = 0;
    for (const auto& s : data) {
        if (argmax_lowest_tie(forward(theta, s.features)) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

CentralizedResult train_centralized(std::span<const TrafficSample> pool,
                                    const HyperParams& config, std::uint64_t seed,
                                    const ModelArch& arch, std::int64_t step_budget) {
    if (pool.empty()) throw std::invalid_argument("pool must be non-empty");
    const int n = static_cast<int>(pool.size());
    if (step_budget < 0) {
        step_budget = static_cast<std::int64_t>(config.rounds) *
                      local_steps_per_round(n, config.local_epochs, config.batch_size);
    }

    CentralizedResult result;
    result.params = init_params(arch, seed);
    if (step_budget == 0) return result;

    auto rng = make_rng({seed, seed_tag::central});
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    std::vector<TrafficSample> batch;
    int epoch = 0;
    while (result.steps_taken < step_budget) {
        std::shuffle(order.begin(), order.end(), rng);
        const double loss_before = loss(result.params, pool);
        for (int start = 0; start < n && result.steps_taken < step_budget;
             start += config.batch_size) {
            const int end = std::min(start + config.batch_size, n);
            batch.clear();
            for (int j = start; j < end; ++j) {
                batch.push_back(pool[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
            }
            result.params = sgd_step(result.params, grad(result.params, batch), config.eta0);
            ++result.steps_taken;
        }
        const double loss_after = loss(result.params, pool);
        RoundRecord rec;
        rec.round = ++epoch;
        rec.mean_client_loss_before = loss_before;
        rec.mean_client_loss_after = loss_after;
        rec.delta_loss = compute_delta_loss(loss_before, loss_after);
        rec.eta_used = config.eta0;
        rec.round_duration_s = 0.0;  // no network in the pooled baseline
        rec.per_client_losses = {loss_after};
        result.history.push_back(std::move(rec));
    }
    return result;
}

std::int64_t fed_step_budget(std::span<const ClientDataset> clients, const HyperParams& hyper) {
    std::int64_t per_round = 0;
    for (const auto& c : clients) {
        per_round += local_steps_per_round(c.n_k(), hyper.local_epochs, hyper.batch_size);
    }
    return per_round * static_cast<std::int64_t>(hyper.rounds);
}

std::int64_t meta_step_budget(int num_clients, const HyperParams& hyper, const MetaConfig& meta) {
    return static_cast<std::int64_t>(hyper.rounds) * num_clients * meta.tasks_per_client *
           (meta.inner_steps + 1);
}

double response_time(Variant variant, const CostModel& cost, const AdaptationTrace& trace) {
    double t = transmit(cost, trace.param_bytes);
    if (variant == Variant::Centralized) t += transmit(cost, trace.support_bytes);
    return t + compute_time(cost, trace.steps_used);
}

CellStats summarize_cells(std::span<const CellResult> cells) {
    CellStats s;
    if (cells.empty()) return s;
    std::vector<double> acc, rt, steps;
    for (const auto& c : cells) {
        acc.push_back(c.accuracy);
        rt.push_back(c.response_time_s);
        steps.push_back(static_cast<double>(c.steps_to_threshold));
    }
    const auto mean = [](std::span<const double> xs) {
        return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    };
    s.accuracy_mean = mean(acc);
    s.accuracy_sd = sample_sd(acc, s.accuracy_mean);
    s.response_time_mean = mean(rt);
    s.response_time_sd = sample_sd(rt, s.response_time_mean);
    s.steps_mean = mean(steps);
    s.steps_sd = sample_sd(steps, s.steps_mean);
    return s;
}

ComparisonReport assemble_report(std::vector<CellResult> cells, std::vector<std::uint64_t> seeds) {
    std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
        if (a.variant != b.variant) return static_cast<int>(a.variant) < static_cast<int>(b.variant);
        if (a.regime != b.regime) return static_cast<int>(a.regime) < static_cast<int>(b.regime);
        return a.seed < b.seed;
    });

    ComparisonReport report;
    report.seeds = std::move(seeds);
    for (auto it = cells.begin(); it != cells.end();) {
        auto end = std::find_if(it, cells.end(), [&](const CellResult& c) {
            return c.variant != it->variant || c.regime != it->regime;
        });
        report.stats[{it->variant, it->regime}] =
            summarize_cells(std::span<const CellResult>(&*it, static_cast<std::size_t>(end - it)));
        it = end;
    }
    report.cells = std::move(cells);
    return report;
}

ComparisonReport run_comparison(const ExperimentConfig& config) {
    validate_config(config);
    const ModelArch arch = config.arch();
    const auto& cmp = config.comparison;

    const bool has_fed = std::find(cmp.variants.begin(), cmp.variants.end(),
                                   Variant::StandardFL) != cmp.variants.end() ||
                         std::find(cmp.variants.begin(), cmp.variants.end(),
                                   Variant::Centralized) != cmp.variants.end();
    const bool has_meta = std::find(cmp.variants.begin(), cmp.variants.end(), Variant::MetaFL) !=
                          cmp.variants.end();

    std::vector<CellResult> cells;
    for (Regime regime : cmp.regimes) {
        ScenarioSpec spec = config.scenario;
        spec.density_regime = regime;

        ScenarioSpec shifted = spec;
        shifted.incident_rate = cmp.shift_incident_rate;

        for (std::uint64_t seed : config.seeds) {
            std::vector<ClientDataset> clients;
            clients.reserve(static_cast<std::size_t>(spec.num_nodes));
            for (int i = 0; i < spec.num_nodes; ++i) {
                clients.push_back(gen_node_stream(spec, i, seed));
            }
            std::vector<TrafficSample> pool;
            for (const auto& c : clients) {
                pool.insert(pool.end(), c.samples.begin(), c.samples.end());
            }

            // Held-out in-regime data for the pre-shift accuracy baseline, and
            // one shifted task shared by every variant of this (regime, seed).
            const std::vector<TrafficSample> pre_eval =
                make_task(spec, 1, cmp.pre_eval_size, mix_seed({seed, seed_tag::eval})).query;
            const Task new_task = make_task(shifted, cmp.shift_support_size, cmp.shift_query_size,
                                            mix_seed({seed, seed_tag::shift}));

            // Fairness precondition: every variant consumes the same number of
            // gradient steps during training.
            const std::int64_t fed_budget = fed_step_budget(clients, config.hyper);
            const std::int64_t meta_budget =
                meta_step_budget(spec.num_nodes, config.hyper, config.meta);
            if (has_fed && has_meta && fed_budget != meta_budget) {
                throw ConfigError(
                    "step budgets differ between variants: hyper.local_epochs/batch_size give " +
                    std::to_string(fed_budget) + " steps, meta.tasks_per_client/inner_steps give " +
                    std::to_string(meta_budget));
            }
            const std::int64_t budget = has_fed ? fed_budget : meta_budget;

            for (Variant variant : cmp.variants) {
                ParamVector theta;
                switch (variant) {
                    case Variant::Centralized: {
                        auto res = train_centralized(pool, config.hyper, seed, arch, budget);
                        if (res.steps_taken != budget) {
                            throw std::logic_error("centralized step budget violated");
                        }
                        theta = std::move(res.params);
                        break;
                    }
                    case Variant::StandardFL: {
                        theta = run_training(config.hyper, clients, config.cost, seed, arch).first;
                        break;
                    }
                    case Variant::MetaFL: {
                        theta = run_meta_training(
                                    config.hyper, config.meta, clients,
                                    make_regime_task_source(spec, config.meta, seed),
                                    config.cost, seed, arch)
                                    .first;
                        break;
                    }
                }

                const double pre_acc = accuracy(theta, pre_eval);
                const AdaptationOutcome outcome =
                    adapt_and_track(theta, new_task, config.hyper.beta, pre_acc, cmp.adapt_steps);

                AdaptationTrace trace;
                trace.steps_used = outcome.steps_to_threshold;
                trace.param_bytes = serialized_param_bytes(arch);
                trace.support_bytes =
                    kSampleWireBytes * static_cast<std::uint64_t>(new_task.support.size());

                CellResult cell;
                cell.variant = variant;
                cell.regime = regime;
                cell.seed = seed;
                cell.accuracy = outcome.adapted_accuracy;
                cell.response_time_s = response_time(variant, config.cost, trace);
                cell.steps_to_threshold = outcome.steps_to_threshold;
                cell.pre_shift_accuracy = pre_acc;
                cells.push_back(cell);
            }
        }
    }
    return assemble_report(std::move(cells), config.seeds);
}

}  // namespace metafed
