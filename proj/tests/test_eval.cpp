#include <doctest.h>

#include <cmath>

#include "metafed/eval.hpp"
#include "test_support.hpp"

using namespace metafed;

namespace {

// small but parity-consistent comparison config
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = default_config();
    cfg.scenario.num_nodes = 4;
    cfg.scenario.intervals_per_node = 32;
    cfg.hyper.rounds = 3;
    cfg.hyper.batch_size = 32;  // one batch per client per round
    cfg.meta.tasks_per_client = 1;
    cfg.meta.inner_steps = 0;
    cfg.meta.support_size = 8;
    cfg.meta.query_size = 12;
    cfg.comparison.pre_eval_size = 50;
    cfg.comparison.shift_support_size = 8;
    cfg.comparison.shift_query_size = 60;
    cfg.comparison.adapt_steps = 5;
    cfg.seeds = {1};
    return cfg;
}

}  // namespace

TEST_CASE("accuracy counts argmax hits with ties toward class 0") {
    const ModelArch arch{4, 8, 3};

    // confident class-2 predictor
    ParamVector confident(arch);
    confident.values[param_layout(arch).b2_off + 2] = 50.0;
    auto batch = testsup::random_batch(10, 4, 3, 1);
    for (auto& s : batch) s.label = 2;
    CHECK(accuracy(confident, batch) == 1.0);

    // 3 of 4 correct
    auto four = testsup::random_batch(4, 4, 3, 2);
    for (auto& s : four) s.label = 2;
    four[1].label = 0;
    CHECK(accuracy(confident, four) == 0.75);

    // uniform probabilities break ties toward class 0
    ParamVector zero(arch);
    auto mixed = testsup::random_batch(10, 4, 3, 3);
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i].label = i < 4 ? 0 : (i < 7 ? 1 : 2);
    CHECK(accuracy(zero, mixed) == doctest::Approx(0.4).epsilon(1e-15));

    std::vector<TrafficSample> empty;
    CHECK_THROWS_AS(accuracy(zero, empty), std::invalid_argument);
}

TEST_CASE("centralized training consumes exactly its step budget") {
    const ModelArch arch{kFeatureDim, 8, 3};
    const auto pool = testsup::random_batch(37, kFeatureDim, 3, 5);

    HyperParams hyper;
    hyper.batch_size = 8;
    hyper.local_epochs = 2;
    hyper.rounds = 3;

    // derived budget: 3 * 2 * ceil(37/8) = 30
    const auto res = train_centralized(pool, hyper, 11, arch);
    CHECK(res.steps_taken == 30);

    // odd explicit budget stops mid-epoch
    const auto odd = train_centralized(pool, hyper, 11, arch, 13);
    CHECK(odd.steps_taken == 13);

    // reproducible
    const auto again = train_centralized(pool, hyper, 11, arch, 13);
    CHECK(odd.params.values == again.params.values);
}

TEST_CASE("a one-step budget equals one pooled gradient step") {
    const ModelArch arch{kFeatureDim, 8, 3};
    const auto pool = testsup::random_batch(20, kFeatureDim, 3, 7);

    HyperParams hyper;
    hyper.eta0 = 0.3;
    hyper.batch_size = 64;  // full batch

    const auto res = train_centralized(pool, hyper, 3, arch, 1);
    const auto theta0 = init_params(arch, 3);
    const auto oracle = sgd_step(theta0, grad(theta0, pool), hyper.eta0);
    // same set, shuffled order: identical up to summation order
    CHECK((res.params.values - oracle.values).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("step budgets line up across schedules") {
    HyperParams hyper;
    hyper.rounds = 30;
    hyper.local_epochs = 1;
    hyper.batch_size = 32;
    MetaConfig meta;
    meta.tasks_per_client = 2;
    meta.inner_steps = 1;

    std::vector<ClientDataset> clients(8);
    for (int i = 0; i < 8; ++i) {
        clients[static_cast<std::size_t>(i)].node_id = i;
        clients[static_cast<std::size_t>(i)].samples =
            testsup::random_batch(128, kFeatureDim, 3, static_cast<unsigned>(i));
    }
    CHECK(fed_step_budget(clients, hyper) == 30 * 8 * 4);
    CHECK(meta_step_budget(8, hyper, meta) == 30 * 8 * 4);
}

TEST_CASE("response_time prices the push, the adaptation, and the upload") {
    CHECK(response_time(Variant::StandardFL, CostModel{}, {20, 1000, 800}) == 0.0);
    CHECK(response_time(Variant::Centralized, CostModel{}, {20, 1000, 800}) == 0.0);

    CostModel cost{0.05, 0.002, 0.02, 0, false};
    AdaptationTrace fast{5, 1188, 880};
    AdaptationTrace slow{20, 1188, 880};
    CHECK(response_time(Variant::MetaFL, cost, fast) < response_time(Variant::StandardFL, cost, slow));

    // composition oracle
    const double expected = transmit(cost, 1188) + compute_time(cost, 5);
    CHECK(response_time(Variant::StandardFL, cost, fast) ==
          doctest::Approx(expected).epsilon(1e-15));
    const double with_upload = expected + transmit(cost, 880);
    CHECK(response_time(Variant::Centralized, cost, fast) ==
          doctest::Approx(with_upload).epsilon(1e-15));
}

TEST_CASE("run_comparison covers the configured grid") {
    ExperimentConfig cfg = tiny_config();
    cfg.comparison.variants = {Variant::StandardFL};
    cfg.comparison.regimes = {Regime::Low};

    const auto report = run_comparison(cfg);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].variant == Variant::StandardFL);
    CHECK(report.cells[0].regime == Regime::Low);
    CHECK(report.cells[0].accuracy >= 0.0);
    CHECK(report.cells[0].accuracy <= 1.0);
    CHECK(report.stats.size() == 1);
}

TEST_CASE("run_comparison populates every variant x regime x seed cell") {
    ExperimentConfig cfg = tiny_config();
    cfg.seeds = {1, 2};

    const auto report = run_comparison(cfg);
    CHECK(report.cells.size() == 3 * 3 * 2);
    CHECK(report.stats.size() == 9);
    for (const auto& [key, stats] : report.stats) {
        CHECK(stats.accuracy_mean >= 0.0);
        CHECK(stats.accuracy_mean <= 1.0);
        CHECK(stats.response_time_mean >= 0.0);
    }

    // deterministic across reruns
    const auto again = run_comparison(cfg);
    REQUIRE(again.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        CHECK(report.cells[i].accuracy == again.cells[i].accuracy);
        CHECK(report.cells[i].response_time_s == again.cells[i].response_time_s);
        CHECK(report.cells[i].steps_to_threshold == again.cells[i].steps_to_threshold);
    }
}

TEST_CASE("run_comparison rejects mismatched step budgets") {
    ExperimentConfig cfg = tiny_config();
    cfg.meta.tasks_per_client = 3;  // 3 steps vs 1 for the standard schedule
    CHECK_THROWS_AS(run_comparison(cfg), ConfigError);
}

TEST_CASE("summary stats reproduce hand-computed means and deviations") {
    std::vector<CellResult> cells(3);
    cells[0].accuracy = 0.8;
    cells[1].accuracy = 0.9;
    cells[2].accuracy = 1.0;
    cells[0].response_time_s = 1.0;
    cells[1].response_time_s = 2.0;
    cells[2].response_time_s = 3.0;
    cells[0].steps_to_threshold = 2;
    cells[1].steps_to_threshold = 4;
    cells[2].steps_to_threshold = 6;

    const auto stats = summarize_cells(cells);
    CHECK(stats.accuracy_mean == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(stats.accuracy_sd == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(stats.response_time_mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(stats.response_time_sd == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(stats.steps_mean == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(stats.steps_sd == doctest::Approx(2.0).epsilon(1e-9));
}
