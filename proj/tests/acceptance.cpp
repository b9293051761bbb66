// Acceptance suite: one check per release criterion, each printed as a
// PASS/FAIL line. Exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metafed/cli_commands.hpp"
#include "metafed/eval.hpp"
#include "metafed/io.hpp"
#include "metafed/rng.hpp"

using namespace metafed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<TrafficSample> random_batch(int n, int input_dim, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 2);
    std::vector<TrafficSample> batch(static_cast<std::size_t>(n));
    for (auto& s : batch) {
        s.features = Eigen::VectorXd(input_dim);
        for (int i = 0; i < input_dim; ++i) s.features[i] = u(rng);
        s.label = cls(rng);
    }
    return batch;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 1. Analytic gradients match central finite differences on 50 random pairs.
Outcome check_gradients() {
    const ModelArch arch{5, 12, 3};
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> w(-0.6, 0.6);
    double worst = 0.0;

    for (int pair = 0; pair < 50; ++pair) {
        ParamVector params(arch);
        for (Eigen::Index i = 0; i < params.values.size(); ++i) params.values[i] = w(rng);
        const auto batch = random_batch(4 + pair % 9, 5, rng);
        const auto g = grad(params, batch);

        const double h = 1e-6;
        for (Eigen::Index i = 0; i < params.values.size(); ++i) {
            ParamVector plus = params, minus = params;
            plus.values[i] += h;
            minus.values[i] -= h;
            const double fd = (loss(plus, batch) - loss(minus, batch)) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(g.values[i]), 1e-8});
            worst = std::max(worst, std::abs(g.values[i] - fd) / denom);
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst relative error %.3g (tol 1e-5)", worst);
    return {worst < 1e-5, buf};
}

// 2. One full-participation round with full batches equals one pooled step.
Outcome check_fedavg_equivalence() {
    const ModelArch arch{5, 10, 3};
    std::mt19937 rng(7);
    std::vector<ClientDataset> clients(4);
    std::vector<TrafficSample> pool;
    for (int i = 0; i < 4; ++i) {
        clients[static_cast<std::size_t>(i)].node_id = i;
        clients[static_cast<std::size_t>(i)].samples = random_batch(16, 5, rng);
        pool.insert(pool.end(), clients[static_cast<std::size_t>(i)].samples.begin(),
                    clients[static_cast<std::size_t>(i)].samples.end());
    }

    HyperParams hyper;
    hyper.eta0 = 0.25;
    hyper.local_epochs = 1;
    hyper.batch_size = 16;
    hyper.rounds = 1;
    hyper.weight_scheme = WeightScheme::DataSize;

    const std::uint64_t seed = 99;
    const auto [theta_fed, hist] = run_training(hyper, clients, CostModel{}, seed, arch);
    const auto theta0 = init_params(arch, seed);
    const auto theta_pooled = sgd_step(theta0, grad(theta0, pool), hyper.eta0);
    const double err = (theta_fed.values - theta_pooled.values).lpNorm<Eigen::Infinity>();

    char buf[96];
    std::snprintf(buf, sizeof(buf), "max coordinate gap %.3g (tol 1e-9)", err);
    return {err < 1e-9, buf};
}

// 3. alpha=0 / beta=0 are bitwise identities; inner_steps=0 collapses the
// meta step to one plain step on the summed query gradients.
Outcome check_meta_neutrality() {
    const ModelArch arch{5, 10, 3};
    ScenarioSpec spec = default_config().scenario;
    spec.num_nodes = 8;
    spec.intervals_per_node = 16;

    const auto theta = init_params(arch, 5);
    std::vector<Task> tasks = {make_task(spec, 8, 12, 1), make_task(spec, 8, 12, 2)};
    MetaConfig cfg;
    cfg.inner_steps = 2;
    cfg.inner_lr = 0.5;

    bool ok = meta_outer_step(theta, tasks, 0.0, cfg).values == theta.values;
    ok = ok && deploy_adapt(theta, tasks[0], 0.0, 7).values == theta.values;

    // zero-rate neutrality through a whole federated meta round
    std::vector<ClientDataset> clients;
    for (int i = 0; i < spec.num_nodes; ++i) clients.push_back(gen_node_stream(spec, i, 3));
    HyperParams hyper;
    hyper.alpha = 0.0;
    FedState state;
    state.global_params = theta;
    state.eta = hyper.eta0;
    state.clients = clients;
    state.weights = client_weights(clients, WeightScheme::DataSize);
    EventLog log(CostModel{});
    const auto next = meta_fed_round(std::move(state), hyper, cfg,
                                     make_regime_task_source(spec, cfg, 11), log);
    ok = ok && next.global_params.values == theta.values;

    // first-order reduction
    MetaConfig flat = cfg;
    flat.inner_steps = 0;
    const double alpha = 0.3;
    ParamVector g_sum(arch);
    for (const auto& t : tasks) g_sum.values += grad(theta, t.query).values;
    const auto reduced = meta_outer_step(theta, tasks, alpha, flat);
    const auto oracle = sgd_step(theta, g_sum, alpha);
    ok = ok && reduced.values == oracle.values;

    return {ok, ok ? "identities bitwise exact" : "bitwise identity violated"};
}

// 4. The controller never leaves [eta_min, eta_max] and respects the sign
// ordering over 1000 synthetic loss-reduction sequences.
Outcome check_controller_safety() {
    ControllerConfig cfg{1.07, 0.68, 1e-4, 1.0};
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> dl(-0.5, 0.5);
    std::uniform_real_distribution<double> eta0(1e-4, 1.0);

    for (int seq = 0; seq < 1000; ++seq) {
        double eta = eta0(rng);
        for (int t = 0; t < 50; ++t) {
            const double delta = dl(rng);
            const double up = update_lr(eta, std::abs(delta) + 1e-9, cfg);
            const double down = update_lr(eta, -std::abs(delta), cfg);
            if (up < down) return {false, "sign monotonicity violated"};
            eta = update_lr(eta, delta, cfg);
            if (eta < cfg.eta_min || eta > cfg.eta_max) return {false, "eta escaped its bounds"};
        }
    }
    return {true, "1000 sequences stayed in bounds"};
}

// 5 + 6 share one desk-scale comparison run (K=8, R=30, 3 regimes, 5 seeds).
struct ComparisonChecks {
    Outcome accuracy_ordering;
    Outcome response_ordering;
};

ComparisonChecks check_comparison() {
    ExperimentConfig cfg = default_config();  // K=8, R=30, 3 regimes, seeds {1..5}
    const auto report = run_comparison(cfg);

    auto mean_of = [&](Variant v, auto&& proj) {
        double acc = 0.0;
        int n = 0;
        for (const auto& c : report.cells) {
            if (c.variant == v) {
                acc += proj(c);
                ++n;
            }
        }
        return acc / n;
    };

    const double acc_meta = mean_of(Variant::MetaFL, [](const CellResult& c) { return c.accuracy; });
    const double acc_fl =
        mean_of(Variant::StandardFL, [](const CellResult& c) { return c.accuracy; });
    const double gap = acc_meta - acc_fl;

    ComparisonChecks out;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "shifted accuracy MetaFL %.3f vs StandardFL %.3f, gap %+.1f pp (need >= 3)",
                  acc_meta, acc_fl, 100.0 * gap);
    out.accuracy_ordering = {acc_meta > acc_fl && gap >= 0.03, buf};

    const double rt_meta =
        mean_of(Variant::MetaFL, [](const CellResult& c) { return c.response_time_s; });
    const double rt_fl =
        mean_of(Variant::StandardFL, [](const CellResult& c) { return c.response_time_s; });
    const double rt_cen =
        mean_of(Variant::Centralized, [](const CellResult& c) { return c.response_time_s; });
    std::snprintf(buf, sizeof(buf),
                  "response time MetaFL %.3fs vs StandardFL %.3fs, Centralized %.3fs", rt_meta,
                  rt_fl, rt_cen);
    out.response_ordering = {rt_meta < rt_fl && rt_meta < rt_cen, buf};
    return out;
}

// 7. train and compare runs repeated from their manifest are byte-identical.
Outcome check_determinism() {
    const fs::path root = fs::temp_directory_path() / "metafed_acceptance";
    fs::remove_all(root);

    ExperimentConfig train_cfg = default_config();
    train_cfg.seeds = {42};
    train_cfg.output_dir = (root / "train_a").string();
    cmd_train(train_cfg, "metafl");

    std::string mode;
    ExperimentConfig replay =
        parse_config_json(slurp(root / "train_a" / "run_manifest.json"), nullptr, &mode);
    replay.output_dir = (root / "train_b").string();
    cmd_train(replay, mode);

    for (const char* name : {"metafl_checkpoint.bin", "metafl_rounds.csv", "metafl_events.jsonl"}) {
        if (slurp(root / "train_a" / name) != slurp(root / "train_b" / name)) {
            return {false, std::string("train outputs diverged: ") + name};
        }
    }

    ExperimentConfig cmp_cfg = default_config();
    cmp_cfg.scenario.intervals_per_node = 64;
    cmp_cfg.hyper.batch_size = 16;  // 4 steps per client per round, matching the meta schedule
    cmp_cfg.comparison.regimes = {Regime::Low};
    cmp_cfg.seeds = {7, 8};
    cmp_cfg.output_dir = (root / "cmp_a").string();
    cmd_compare(cmp_cfg);

    ExperimentConfig cmp_replay = parse_config_json(slurp(root / "cmp_a" / "run_manifest.json"));
    cmp_replay.output_dir = (root / "cmp_b").string();
    cmd_compare(cmp_replay);

    for (const char* name : {"comparison.csv", "summary.json"}) {
        if (slurp(root / "cmp_a" / name) != slurp(root / "cmp_b" / name)) {
            return {false, std::string("compare outputs diverged: ") + name};
        }
    }
    fs::remove_all(root);
    return {true, "train and compare replays byte-identical"};
}

// 8. Partitions are disjoint covers with no empty client.
Outcome check_partition() {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 500);
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(n, 16)));
        const double skew = (trial % 4 == 0) ? 0.0 : (rng() % 1000) / 125.0;

        std::vector<int> labels(static_cast<std::size_t>(n));
        for (auto& l : labels) l = static_cast<int>(rng() % 3);

        const auto groups = partition_indices(labels, k, skew, rng());
        if (static_cast<int>(groups.size()) != k) return {false, "wrong group count"};
        std::set<int> seen;
        for (const auto& g : groups) {
            if (g.empty()) return {false, "empty client"};
            for (int idx : g) {
                if (idx < 0 || idx >= n) return {false, "index out of range"};
                if (!seen.insert(idx).second) return {false, "duplicate assignment"};
            }
        }
        if (static_cast<int>(seen.size()) != n) return {false, "pool not covered"};
    }
    return {true, "200 random partitions are disjoint covers"};
}

int g_failures = 0;

void report(int id, const char* name, const Outcome& o, double seconds) {
    std::printf("[%s] criterion %d: %s — %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), seconds);
    if (!o.pass) ++g_failures;
}

template <typename F>
void run_check(int id, const char* name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, o, dt);
}

}  // namespace

int main() {
    std::printf("=== acceptance suite ===\n");

    run_check(1, "analytic gradients match finite differences", check_gradients);
    run_check(2, "one federated round equals one pooled step", check_fedavg_equivalence);
    run_check(3, "meta zero-rate neutrality and first-order reduction", check_meta_neutrality);
    run_check(4, "learning-rate controller stays bounded and monotone", check_controller_safety);

    {
        const auto t0 = std::chrono::steady_clock::now();
        ComparisonChecks cmp;
        try {
            cmp = check_comparison();
        } catch (const std::exception& e) {
            cmp.accuracy_ordering = {false, std::string("exception: ") + e.what()};
            cmp.response_ordering = {false, std::string("exception: ") + e.what()};
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report(5, "shifted-regime accuracy ordering (MetaFL ahead by >= 3 pp)",
               cmp.accuracy_ordering, dt);
        report(6, "response-time ordering (MetaFL fastest in mean)", cmp.response_ordering, 0.0);
    }

    run_check(7, "manifest replays are byte-identical", check_determinism);
    run_check(8, "non-IID partitions are disjoint covers", check_partition);

    std::printf("=== %s (%d failure%s) ===\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures;
}
